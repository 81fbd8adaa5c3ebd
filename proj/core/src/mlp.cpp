#include "exitnas/mlp.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>

#include "exitnas/errors.hpp"
#include "exitnas/rng.hpp"

namespace exitnas {

namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using WeightMap = Eigen::Map<const RowMatrix>;
using BiasMap = Eigen::Map<const Eigen::VectorXd>;

std::size_t parameter_count(const std::vector<int>& sizes) {
  std::size_t n = 0;
  for (std::size_t l = 1; l < sizes.size(); ++l) {
    n += static_cast<std::size_t>(sizes[l]) * static_cast<std::size_t>(sizes[l - 1] + 1);
  }
  return n;
}

/// Column-per-sample input block for the selected rows.
Eigen::MatrixXd gather(const FeatureMatrix& x, std::span<const std::size_t> rows) {
  const std::size_t n = rows.empty() ? x.rows : rows.size();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(x.cols), static_cast<Eigen::Index>(n));
  for (std::size_t j = 0; j < n; ++j) {
    const std::size_t r = rows.empty() ? j : rows[j];
    for (std::size_t i = 0; i < x.cols; ++i) {
      out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x.data[r * x.cols + i];
    }
  }
  return out;
}

} // namespace

Mlp::Mlp(std::vector<int> layer_sizes, std::uint64_t seed) : sizes_(std::move(layer_sizes)) {
  if (sizes_.size() < 2 || sizes_.back() != 1) {
    throw ContractViolation("Mlp: need at least an input layer and a single output");
  }
  for (int s : sizes_) {
    if (s < 1) {
      throw ContractViolation("Mlp: layer sizes must be >= 1");
    }
  }
  params_.assign(parameter_count(sizes_), 0.0);
  Rng rng(seed);
  std::size_t offset = 0;
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    const std::size_t fan_in = static_cast<std::size_t>(sizes_[l - 1]);
    const std::size_t out = static_cast<std::size_t>(sizes_[l]);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
    for (std::size_t i = 0; i < out * fan_in; ++i) {
      params_[offset + i] = (2.0 * uniform_unit(rng) - 1.0) * limit;
    }
    offset += out * fan_in + out; // biases start at zero
  }
}

void Mlp::set_parameters(std::vector<double> params) {
  if (params.size() != parameter_count(sizes_)) {
    throw ContractViolation("Mlp: parameter vector has the wrong size");
  }
  params_ = std::move(params);
}

double Mlp::predict(std::span<const double> x) const {
  FeatureMatrix m{1, x.size(), std::vector<double>(x.begin(), x.end())};
  return predict(m).front();
}

std::vector<double> Mlp::predict(const FeatureMatrix& x) const {
  if (sizes_.empty()) {
    throw StateError("Mlp: model has no layers");
  }
  if (x.cols != num_inputs()) {
    throw ContractViolation("Mlp: feature dimension mismatch");
  }
  Eigen::MatrixXd a = gather(x, {});
  std::size_t offset = 0;
  for (std::size_t l = 1; l < sizes_.size(); ++l) {
    const auto in = static_cast<Eigen::Index>(sizes_[l - 1]);
    const auto out = static_cast<Eigen::Index>(sizes_[l]);
    WeightMap w(params_.data() + offset, out, in);
    BiasMap b(params_.data() + offset + static_cast<std::size_t>(out * in), out);
    offset += static_cast<std::size_t>(out * in + out);
    Eigen::MatrixXd z = (w * a).colwise() + b;
    a = l + 1 < sizes_.size() ? Eigen::MatrixXd(z.cwiseMax(0.0)) : z;
  }
  return std::vector<double>(a.data(), a.data() + a.size());
}

double Mlp::loss(const FeatureMatrix& x, std::span<const double> targets) const {
  const auto pred = predict(x);
  double sum = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) {
    const double d = pred[i] - targets[i];
    sum += d * d;
  }
  return sum / static_cast<double>(pred.size());
}

double Mlp::loss_and_gradient(const FeatureMatrix& x, std::span<const double> targets,
                              std::span<const std::size_t> rows,
                              std::vector<double>& gradient) const {
  if (x.cols != num_inputs()) {
    throw ContractViolation("Mlp: feature dimension mismatch");
  }
  const std::size_t layers = sizes_.size() - 1;
  std::vector<Eigen::MatrixXd> activations;
  std::vector<Eigen::MatrixXd> preacts;
  std::vector<std::size_t> offsets;
  activations.push_back(gather(x, rows));
  std::size_t offset = 0;
  for (std::size_t l = 1; l <= layers; ++l) {
    const auto in = static_cast<Eigen::Index>(sizes_[l - 1]);
    const auto out = static_cast<Eigen::Index>(sizes_[l]);
    offsets.push_back(offset);
    WeightMap w(params_.data() + offset, out, in);
    BiasMap b(params_.data() + offset + static_cast<std::size_t>(out * in), out);
    offset += static_cast<std::size_t>(out * in + out);
    preacts.push_back((w * activations.back()).colwise() + b);
    activations.push_back(l < layers ? Eigen::MatrixXd(preacts.back().cwiseMax(0.0))
                                     : preacts.back());
  }

  const Eigen::Index n = activations.front().cols();
  Eigen::RowVectorXd y(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    y(j) = targets[rows.empty() ? static_cast<std::size_t>(j) : rows[static_cast<std::size_t>(j)]];
  }
  const Eigen::RowVectorXd residual = activations.back().row(0) - y;
  const double loss = residual.squaredNorm() / static_cast<double>(n);

  gradient.assign(params_.size(), 0.0);
  Eigen::MatrixXd delta = (2.0 / static_cast<double>(n)) * residual;
  for (std::size_t l = layers; l >= 1; --l) {
    const auto in = static_cast<Eigen::Index>(sizes_[l - 1]);
    const auto out = static_cast<Eigen::Index>(sizes_[l]);
    const std::size_t off = offsets[l - 1];
    Eigen::Map<RowMatrix> grad_w(gradient.data() + off, out, in);
    Eigen::Map<Eigen::VectorXd> grad_b(gradient.data() + off + static_cast<std::size_t>(out * in),
                                       out);
    grad_w = delta * activations[l - 1].transpose();
    grad_b = delta.rowwise().sum();
    if (l > 1) {
      WeightMap w(params_.data() + off, out, in);
      delta = (w.transpose() * delta).cwiseProduct(
          (preacts[l - 2].array() > 0.0).cast<double>().matrix());
    }
  }
  return loss;
}

std::vector<double> train(Mlp& model, const FeatureMatrix& x, std::span<const double> targets,
                          const TrainOptions& options) {
  if (x.rows == 0 || targets.size() != x.rows) {
    throw ContractViolation("train: feature/target size mismatch");
  }
  constexpr double beta1 = 0.9;
  constexpr double beta2 = 0.999;
  constexpr double eps = 1e-8;

  auto params = model.parameters();
  std::vector<double> m(params.size(), 0.0);
  std::vector<double> v(params.size(), 0.0);
  std::vector<double> grad;
  std::vector<std::size_t> order(x.rows);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(options.seed);
  const bool full_batch = x.rows < options.full_batch_below;
  const std::size_t batch = full_batch ? x.rows : std::max<std::size_t>(1, options.batch_size);

  std::vector<double> curve{model.loss(x, targets)};
  std::uint64_t step = 0;
  for (int epoch = 0; epoch < options.epochs; ++epoch) {
    if (!full_batch) {
      for (std::size_t i = order.size(); i > 1; --i) {
        std::swap(order[i - 1], order[uniform_index(rng, i)]);
      }
    }
    for (std::size_t start = 0; start < x.rows; start += batch) {
      const std::size_t end = std::min(x.rows, start + batch);
      const std::span<const std::size_t> rows =
          full_batch ? std::span<const std::size_t>{}
                     : std::span<const std::size_t>(order.data() + start, end - start);
      model.loss_and_gradient(x, targets, rows, grad);
      ++step;
      const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
      const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
      for (std::size_t i = 0; i < params.size(); ++i) {
        m[i] = beta1 * m[i] + (1.0 - beta1) * grad[i];
        v[i] = beta2 * v[i] + (1.0 - beta2) * grad[i] * grad[i];
        params[i] -= options.learning_rate * (m[i] / c1) / (std::sqrt(v[i] / c2) + eps);
      }
    }
    curve.push_back(model.loss(x, targets));
  }
  return curve;
}

} // namespace exitnas
