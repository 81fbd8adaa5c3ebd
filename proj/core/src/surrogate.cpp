#include "exitnas/surrogate.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "exitnas/errors.hpp"
#include "exitnas/serialization.hpp"

namespace exitnas {

namespace {

constexpr int kSurrogateStateVersion = 1;

double scale(double v, double lo, double hi) {
  return hi > lo ? (v - lo) / (hi - lo) : 0.0;
}

double unscale(double v, double lo, double hi) {
  return hi > lo ? lo + v * (hi - lo) : lo;
}

} // namespace

void ScaledRegressor::fit(const FeatureMatrix& x, std::span<const double> y,
                          const std::vector<int>& hidden, const TrainOptions& options) {
  if (x.rows == 0 || y.size() != x.rows) {
    throw ContractViolation("regressor: feature/target size mismatch");
  }
  feature_lo_.assign(x.cols, 0.0);
  feature_hi_.assign(x.cols, 0.0);
  for (std::size_t c = 0; c < x.cols; ++c) {
    double lo = x.data[c];
    double hi = x.data[c];
    for (std::size_t r = 1; r < x.rows; ++r) {
      lo = std::min(lo, x.data[r * x.cols + c]);
      hi = std::max(hi, x.data[r * x.cols + c]);
    }
    feature_lo_[c] = lo;
    feature_hi_[c] = hi;
  }
  target_lo_ = *std::min_element(y.begin(), y.end());
  target_hi_ = *std::max_element(y.begin(), y.end());

  FeatureMatrix scaled = x;
  for (std::size_t r = 0; r < x.rows; ++r) {
    for (std::size_t c = 0; c < x.cols; ++c) {
      auto& v = scaled.data[r * x.cols + c];
      v = scale(v, feature_lo_[c], feature_hi_[c]);
    }
  }
  std::vector<double> targets(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    targets[i] = scale(y[i], target_lo_, target_hi_);
  }

  std::vector<int> sizes{static_cast<int>(x.cols)};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(1);
  model_ = Mlp(std::move(sizes), options.seed);
  loss_curve_ = train(model_, scaled, targets, options);
  fitted_ = true;
}

double ScaledRegressor::predict(std::span<const double> features) const {
  if (!fitted_) {
    throw StateError("surrogate: model is not fitted");
  }
  if (features.size() != feature_lo_.size()) {
    throw ContractViolation("surrogate: feature dimension mismatch");
  }
  std::vector<double> scaled(features.size());
  for (std::size_t c = 0; c < features.size(); ++c) {
    scaled[c] = scale(features[c], feature_lo_[c], feature_hi_[c]);
  }
  return unscale(model_.predict(scaled), target_lo_, target_hi_);
}

std::vector<double> genome_features(const Genome& g, const SearchSpace& space, bool one_hot) {
  const auto encoding = encode(g, space);
  if (!one_hot) {
    return std::vector<double>(encoding.begin(), encoding.end());
  }
  const auto card = gene_cardinalities(space);
  std::vector<double> out;
  for (std::size_t i = 0; i < encoding.size(); ++i) {
    for (int k = 0; k < card[i]; ++k) {
      out.push_back(k == encoding[i] ? 1.0 : 0.0);
    }
  }
  return out;
}

SurrogatePrediction clamp_prediction(double raw_error, double raw_macs) {
  SurrogatePrediction p;
  p.error = std::isfinite(raw_error) ? std::clamp(raw_error, 0.0, 1.0) : 1.0;
  p.macs = std::isfinite(raw_macs) ? std::max(raw_macs, 0.0) : 0.0;
  return p;
}

SurrogatePair SurrogatePair::fit(const SearchSpace& space,
                                 std::span<const SurrogateSample> archive,
                                 const SurrogateHyper& hyper) {
  if (archive.size() < 2) {
    throw InsufficientData("surrogate: need at least 2 archive entries, got " +
                           std::to_string(archive.size()));
  }
  SurrogatePair pair;
  pair.space_ = space;
  pair.one_hot_ = hyper.one_hot;

  FeatureMatrix x;
  std::vector<double> errors;
  std::vector<double> log_macs;
  for (const auto& sample : archive) {
    if (!std::isfinite(sample.error) || !std::isfinite(sample.average_macs) ||
        sample.average_macs <= 0.0) {
      throw ContractViolation("surrogate: non-finite or non-positive target");
    }
    const auto f = genome_features(sample.genome, space, hyper.one_hot);
    x.cols = f.size();
    x.data.insert(x.data.end(), f.begin(), f.end());
    ++x.rows;
    errors.push_back(sample.error);
    log_macs.push_back(std::log(sample.average_macs / 1e6));
  }

  TrainOptions options;
  options.epochs = hyper.epochs;
  options.learning_rate = hyper.learning_rate;
  options.full_batch_below = hyper.full_batch_below;
  options.batch_size = hyper.batch_size;
  options.seed = derive_seed(hyper.seed, 1);
  pair.error_model_.fit(x, errors, hyper.hidden_layers, options);
  options.seed = derive_seed(hyper.seed, 2);
  pair.macs_model_.fit(x, log_macs, hyper.hidden_layers, options);
  pair.training_archive_size_ = archive.size();
  pair.fitted_ = true;
  return pair;
}

std::vector<double> SurrogatePair::features(const Genome& g) const {
  return genome_features(g, space_, one_hot_);
}

SurrogatePrediction SurrogatePair::predict_features(std::span<const double> features) const {
  if (!fitted_) {
    throw StateError("surrogate: predict called before fit");
  }
  const double raw_error = error_model_.predict(features);
  const double raw_macs = std::exp(macs_model_.predict(features)) * 1e6;
  return clamp_prediction(raw_error, raw_macs);
}

SurrogatePrediction SurrogatePair::predict(const Genome& g) const {
  if (!fitted_) {
    throw StateError("surrogate: predict called before fit");
  }
  return predict_features(features(g));
}

void to_json(nlohmann::json& j, const ScaledRegressor& r) {
  j = nlohmann::json{{"layer_sizes", r.model_.layer_sizes()},
                     {"parameters", std::vector<double>(r.model_.parameters().begin(),
                                                        r.model_.parameters().end())},
                     {"feature_lo", r.feature_lo_},
                     {"feature_hi", r.feature_hi_},
                     {"target_lo", r.target_lo_},
                     {"target_hi", r.target_hi_},
                     {"fitted", r.fitted_}};
}

void from_json(const nlohmann::json& j, ScaledRegressor& r) {
  r.fitted_ = j.at("fitted").get<bool>();
  r.feature_lo_ = j.at("feature_lo").get<std::vector<double>>();
  r.feature_hi_ = j.at("feature_hi").get<std::vector<double>>();
  r.target_lo_ = j.at("target_lo").get<double>();
  r.target_hi_ = j.at("target_hi").get<double>();
  const auto sizes = j.at("layer_sizes").get<std::vector<int>>();
  r.model_ = sizes.empty() ? Mlp{} : Mlp(sizes, 0);
  if (!sizes.empty()) {
    r.model_.set_parameters(j.at("parameters").get<std::vector<double>>());
  }
  r.loss_curve_.clear();
}

void to_json(nlohmann::json& j, const SurrogatePair& s) {
  j = nlohmann::json{{"version", kSurrogateStateVersion},
                     {"fitted", s.fitted_},
                     {"one_hot", s.one_hot_},
                     {"training_archive_size", s.training_archive_size_},
                     {"space", s.space_},
                     {"error_model", s.error_model_},
                     {"macs_model", s.macs_model_}};
}

void from_json(const nlohmann::json& j, SurrogatePair& s) {
  if (j.at("version").get<int>() != kSurrogateStateVersion) {
    throw StateError("surrogate: unsupported state version");
  }
  s.fitted_ = j.at("fitted").get<bool>();
  s.one_hot_ = j.at("one_hot").get<bool>();
  s.training_archive_size_ = j.at("training_archive_size").get<std::size_t>();
  s.space_ = j.at("space").get<SearchSpace>();
  s.error_model_ = j.at("error_model").get<ScaledRegressor>();
  s.macs_model_ = j.at("macs_model").get<ScaledRegressor>();
}

} // namespace exitnas
