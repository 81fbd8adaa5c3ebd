#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "exitnas/errors.hpp"
#include "exitnas/surrogate.hpp"
#include "oracles.hpp"

using namespace exitnas;

namespace {

FeatureMatrix random_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  FeatureMatrix x{rows, cols, {}};
  for (std::size_t i = 0; i < rows * cols; ++i) x.data.push_back(2.0 * uniform_unit(rng) - 1.0);
  return x;
}

std::vector<SurrogateSample> archive(const SearchSpace& space, std::size_t n, std::uint64_t seed) {
  std::vector<SurrogateSample> out;
  Rng rng(seed);
  for (std::size_t i = 0; i < n; ++i) {
    Genome g = sample_genome(space, rng);
    out.push_back({g, 0.1 + 0.5 * uniform_unit(rng), 1e6 * (1.0 + 4.0 * uniform_unit(rng))});
  }
  return out;
}

} // namespace

TEST_CASE("MLP gradient matches central differences") {
  Rng rng(42);
  for (int trial = 0; trial < 20; ++trial) {
    int in = 1 + static_cast<int>(uniform_index(rng, 8));
    std::vector<int> sizes{in};
    int hidden = 1 + static_cast<int>(uniform_index(rng, 2));
    for (int h = 0; h < hidden; ++h) sizes.push_back(2 + static_cast<int>(uniform_index(rng, 7)));
    sizes.push_back(1);
    Mlp model(sizes, static_cast<std::uint64_t>(trial));
    std::vector<double> params(model.parameters().size());
    for (auto& w : params) w = 2.0 * uniform_unit(rng) - 1.0;
    model.set_parameters(params);
    auto x = random_matrix(rng, 6, static_cast<std::size_t>(in));
    std::vector<double> y;
    for (int i = 0; i < 6; ++i) y.push_back(uniform_unit(rng));
    std::vector<double> grad;
    model.loss_and_gradient(x, y, {}, grad);
    auto numeric = oracle::numeric_gradient(model, x, y, 1e-6);
    REQUIRE(grad.size() == numeric.size());
    for (std::size_t p = 0; p < grad.size(); ++p) {
      double scale = std::max({std::abs(grad[p]), std::abs(numeric[p]), 1e-6});
      CHECK(std::abs(grad[p] - numeric[p]) / scale <= 1e-4);
    }
  }
}

TEST_CASE("training reduces the loss") {
  Rng rng(1);
  auto x = random_matrix(rng, 50, 4);
  std::vector<double> y;
  for (std::size_t i = 0; i < 50; ++i) y.push_back(x.row(i)[0] * x.row(i)[1] + 0.5 * x.row(i)[2]);
  Mlp model({4, 16, 16, 1}, 3);
  TrainOptions opt;
  opt.epochs = 300;
  opt.learning_rate = 1e-2;
  auto curve = train(model, x, y, opt);
  CHECK(curve.size() == 301);
  CHECK(curve.back() <= curve.front());
  CHECK(curve.back() < 0.5 * curve.front());
}

TEST_CASE("surrogate fit") {
  SearchSpace space;
  SurrogateHyper hyper;
  auto data = archive(space, 40, 7);

  SUBCASE("deterministic under a seed") {
    auto a = SurrogatePair::fit(space, data, hyper);
    auto b = SurrogatePair::fit(space, data, hyper);
    for (std::uint64_t s = 100; s < 110; ++s) {
      Genome probe = sample_genome(space, s);
      CHECK(a.predict(probe).error == b.predict(probe).error);
      CHECK(a.predict(probe).macs == b.predict(probe).macs);
    }
  }
  SUBCASE("loss curves do not end above their start") {
    auto s = SurrogatePair::fit(space, data, hyper);
    CHECK(s.error_model().loss_curve().back() <= s.error_model().loss_curve().front());
    CHECK(s.macs_model().loss_curve().back() <= s.macs_model().loss_curve().front());
    CHECK(s.training_archive_size() == 40);
  }
  SUBCASE("constant targets are reproduced") {
    for (auto& d : data) {
      d.error = 0.3;
      d.average_macs = 2e6;
    }
    auto s = SurrogatePair::fit(space, data, hyper);
    auto p = s.predict(sample_genome(space, 999));
    CHECK(std::abs(p.error - 0.3) <= 1e-3);
    CHECK(std::abs(p.macs / 1e6 - 2.0) <= 1e-3);
  }
  SUBCASE("memorizes a tiny archive") {
    auto tiny = archive(space, 5, 11);
    SurrogateHyper big;
    big.hidden_layers = {128, 128};
    big.epochs = 3000;
    big.learning_rate = 3e-3;
    auto s = SurrogatePair::fit(space, tiny, big);
    for (const auto& d : tiny) CHECK(std::abs(s.predict(d.genome).error - d.error) <= 0.05);
  }
  SUBCASE("one-hot features") {
    SurrogateHyper oh = hyper;
    oh.one_hot = true;
    auto s = SurrogatePair::fit(space, data, oh);
    CHECK(s.features(data[0].genome).size() > genome_features(data[0].genome, space, false).size());
    CHECK(std::isfinite(s.predict(data[0].genome).error));
  }
  SUBCASE("errors") {
    CHECK_THROWS_AS(SurrogatePair::fit(space, std::span(data).first(1), hyper), InsufficientData);
    data[3].error = std::nan("");
    CHECK_THROWS_AS(SurrogatePair::fit(space, data, hyper), ContractViolation);
    SurrogatePair unfitted;
    CHECK_THROWS_AS(unfitted.predict(data[0].genome), StateError);
  }
}

TEST_CASE("prediction clamping") {
  CHECK(clamp_prediction(-0.2, 5.0).error == 0.0);
  CHECK(clamp_prediction(1.4, 5.0).error == 1.0);
  CHECK(clamp_prediction(0.5, -3.0).macs == 0.0);
}

TEST_CASE("surrogate state round-trips through JSON") {
  SearchSpace space;
  auto data = archive(space, 30, 3);
  auto s = SurrogatePair::fit(space, data, SurrogateHyper{});
  nlohmann::json j = s;
  auto back = j.get<SurrogatePair>();
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    Genome g = sample_genome(space, seed);
    CHECK(back.predict(g).error == s.predict(g).error);
    CHECK(back.predict(g).macs == s.predict(g).macs);
  }
  j["version"] = 99;
  CHECK_THROWS(j.get<SurrogatePair>());
}
