#include <doctest.h>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "exitnas/errors.hpp"
#include "exitnas/oracle.hpp"
#include "exitnas/serialization.hpp"
#include "exitnas/trace_io.hpp"

using namespace exitnas;
namespace fs = std::filesystem;

namespace {

Genome genome_with_exits(const SearchSpace& space, std::uint64_t seed, std::vector<std::size_t> on) {
  Genome g = sample_genome(space, seed);
  g.thresholds = ThresholdVector{};
  for (auto p : on) g.thresholds.values[p] = 0.5;
  return g;
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("exitnas-test-" + std::to_string(std::chrono::steady_clock::now().time_since_epoch().count()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

/// Shell evaluator that writes `body` (header, rows, footer) to the requested output path.
fs::path fake_evaluator(const fs::path& dir, const std::string& name, const std::string& body,
                        const std::string& extra = "") {
  fs::path script = dir / name;
  std::ofstream out(script);
  out << "#!/bin/sh\n"
      << "out=$(sed -n 's/.*\"output_path\": \"\\(.*\\)\".*/\\1/p' \"$1\")\n"
      << extra << "cat > \"$out\" <<'TRACE'\n"
      << body << "TRACE\n";
  out.close();
  fs::permissions(script, fs::perms::owner_all);
  return script;
}

std::string header(std::size_t n, std::size_t e, const std::string& positions) {
  return R"({"format":"exitnas-trace","version":1,"encoding":"csv","n_samples":)" + std::to_string(n) +
         R"(,"n_exits":)" + std::to_string(e) + R"(,"exit_positions":)" + positions +
         R"(,"genome_id":"g","seed":1})" + "\n";
}

const char* kFooter = R"({"measured_error":0.25,"wall_time_s":0.1,"evaluator_version":"fake/1"})";

} // namespace

TEST_CASE("synthetic oracle") {
  SearchSpace space;
  SyntheticOracleParams params;
  Genome g = genome_with_exits(space, 3, {0, 2, 4});

  SUBCASE("pure function of genome, params and seed") {
    auto a = synthetic_evaluate(g, space, params, 300, 5);
    auto b = synthetic_evaluate(g, space, params, 300, 5);
    CHECK(a.trace == b.trace);
    CHECK(a.measured_error == b.measured_error);
    CHECK_FALSE(synthetic_evaluate(g, space, params, 300, 6).trace == a.trace);
  }
  SUBCASE("trace shape and validity") {
    auto r = synthetic_evaluate(g, space, params, 250, 1);
    CHECK(r.trace.n_samples == 250);
    CHECK(r.trace.n_exits == 4);
    CHECK(r.trace.exit_positions == std::vector<std::size_t>{0, 2, 4});
    CHECK_NOTHROW(r.trace.check());
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < 250; ++i) wrong += r.trace.is_correct(i, 3) ? 0 : 1;
    CHECK(r.measured_error == static_cast<double>(wrong) / 250.0);
  }
  SUBCASE("accuracy structure") {
    for (std::uint64_t s = 0; s < 200; ++s) {
      Genome h = sample_genome(space, s);
      auto acc = synthetic_exit_accuracies(h, space, params);
      double last = 0.0;
      for (std::size_t p = 0; p < kNumExitPositions; ++p) {
        CHECK(acc[p] <= acc[kNumExitPositions]);
        CHECK(acc[p] >= 0.0);
        if (h.thresholds.enabled(p)) {
          CHECK(acc[p] >= last);
          last = acc[p];
        }
      }
      CHECK(acc[kNumExitPositions] <= 1.0);

      for (std::size_t p = 0; p < kNumExitPositions; ++p) {
        Genome off = h, on = h;
        off.exits[p].block2 = ExitBlockConfig{};
        on.exits[p].block2 = {space.exits.interpolation_options.back(), space.exits.kernel_options.back(),
                              space.exits.expansion_options.back(), false};
        CHECK(synthetic_exit_accuracies(on, space, params)[p] >=
              synthetic_exit_accuracies(off, space, params)[p]);
      }
    }
  }
  SUBCASE("correct predictions have larger margins") {
    auto r = synthetic_evaluate(g, space, params, 2000, 2);
    double right = 0, wrong = 0;
    std::size_t nr = 0, nw = 0;
    for (std::size_t i = 0; i < 2000; ++i)
      for (std::size_t c = 0; c < r.trace.n_exits; ++c)
        (r.trace.is_correct(i, c) ? (right += r.trace.margin(i, c), ++nr) : (wrong += r.trace.margin(i, c), ++nw));
    CHECK(right / static_cast<double>(nr) > wrong / static_cast<double>(nw));
  }
  SUBCASE("parameter validation") {
    params.accuracy_ceiling = 1.5;
    CHECK_THROWS_AS(params.validate(), ConfigError);
  }
}

TEST_CASE("trace round trip") {
  SearchSpace space;
  Genome g = genome_with_exits(space, 4, {1, 3});
  auto r = synthetic_evaluate(g, space, SyntheticOracleParams{}, 120, 9);
  for (auto enc : {TraceEncoding::csv, TraceEncoding::binary}) {
    TraceDocument doc{r.trace, "abc", 9, enc, TraceFooter{0.25, 1.5, "v1", nlohmann::json::object()}};
    std::stringstream buf;
    write_trace(buf, doc);
    auto back = read_trace(buf);
    CHECK(back.trace == r.trace);
    CHECK(back.genome_id == "abc");
    CHECK(back.seed == 9);
    REQUIRE(back.footer);
    CHECK(back.footer->measured_error == 0.25);
    CHECK(back.footer->evaluator_version == "v1");
  }
}

TEST_CASE("probability traces derive margins on load") {
  std::stringstream in;
  in << R"({"format":"exitnas-trace","version":1,"encoding":"csv_probs","n_samples":2,"n_exits":2,"exit_positions":[0],"genome_id":"x","seed":0,"n_classes":3})"
     << "\n0.5,0.3,0.2,0.1,0.1,0.8,1,1\n0.2,0.2,0.6,0.4,0.4,0.2,0,1\n";
  auto doc = read_trace(in);
  CHECK(doc.trace.margin(0, 0) == doctest::Approx(0.2));
  CHECK(doc.trace.margin(0, 1) == doctest::Approx(0.7));
  CHECK(doc.trace.margin(1, 1) == 0.0);
}

TEST_CASE("malformed traces name the offending field") {
  auto field_of = [](const std::string& text) {
    std::stringstream in(text);
    try {
      read_trace(in);
    } catch (const MalformedTrace& e) {
      return e.field();
    }
    return std::string("<accepted>");
  };
  CHECK(field_of(header(1, 2, "[0]") + "0.5,1.5,1,1\n") == "margins[0,1]");
  CHECK(field_of(header(2, 2, "[0]") + "0.5,0.5,1,1\n0.5,1\n") == "row 1");
  CHECK(field_of(header(1, 2, "[0]") + "0.5,0.5,1,2\n").find("correct") != std::string::npos);
  CHECK(field_of("not json\n").find("header") != std::string::npos);
  CHECK(field_of(header(2, 2, "[0]") + "0.5,0.5,1,1\n").find("row") != std::string::npos);
}

TEST_CASE("validate_response") {
  SearchSpace space;
  Genome g = genome_with_exits(space, 5, {0, 2});
  std::stringstream ok(header(1, 3, "[0,2]") + "0.1,0.2,0.3,1,1,1\n" + kFooter + "\n");
  auto r = validate_response(read_trace(ok), g);
  CHECK(r.measured_error == 0.25);

  std::stringstream missing_final(header(1, 2, "[0,2]") + "0.1,0.2,1,1\n" + kFooter + "\n");
  try {
    validate_response(read_trace(missing_final), g);
    FAIL("expected MalformedTrace");
  } catch (const MalformedTrace& e) {
    CHECK((e.field() == "n_exits" || e.field().find("exit_positions") != std::string::npos));
  }

  std::stringstream no_footer(header(1, 3, "[0,2]") + "0.1,0.2,0.3,1,1,1\n");
  CHECK_THROWS_AS(validate_response(read_trace(no_footer), g), MalformedTrace);
}

#ifndef _WIN32
TEST_CASE("external evaluator over the file protocol") {
  TempDir tmp;
  SearchSpace space;
  Genome g = genome_with_exits(space, 6, {1, 3});
  EvaluatorRequest req;
  req.genome = g;
  req.space = space;
  req.seed = 3;
  ExternalEndpoint ep;
  ep.work_root = tmp.path;
  ep.timeout = std::chrono::seconds(20);

  SUBCASE("well-formed response") {
    std::string rows;
    for (int i = 0; i < 100; ++i) rows += "0.25,0.5,0.75,0,1,1\n";
    ep.command = fake_evaluator(tmp.path, "ok.sh", header(100, 3, "[1,3]") + rows + kFooter + "\n");
    auto r = external_evaluate(req, ep);
    CHECK(r.trace.n_samples == 100);
    CHECK(r.trace.n_exits == 3);
    CHECK(r.measured_error == 0.25);
    REQUIRE(r.footer);
    CHECK(r.footer->evaluator_version == "fake/1");
    // Working directories are removed afterwards.
    CHECK(std::distance(fs::directory_iterator(tmp.path), fs::directory_iterator{}) == 1);
  }
  SUBCASE("missing final column") {
    ep.command = fake_evaluator(tmp.path, "short.sh", header(1, 2, "[1,3]") + "0.5,0.5,1,1\n" + kFooter + "\n");
    CHECK_THROWS_AS(external_evaluate(req, ep), MalformedTrace);
  }
  SUBCASE("margin out of range") {
    ep.command = fake_evaluator(tmp.path, "range.sh", header(1, 3, "[1,3]") + "0.5,-0.5,0.5,1,1,1\n" + kFooter + "\n");
    try {
      external_evaluate(req, ep);
      FAIL("expected MalformedTrace");
    } catch (const MalformedTrace& e) {
      CHECK(e.field() == "margins[0,1]");
    }
  }
  SUBCASE("non-zero exit status") {
    ep.command = fake_evaluator(tmp.path, "fail.sh", "", "echo boom >&2\nexit 4\n");
    try {
      external_evaluate(req, ep);
      FAIL("expected EvaluatorUnavailable");
    } catch (const EvaluatorUnavailable& e) {
      CHECK(std::string(e.what()).find("boom") != std::string::npos);
    }
  }
  SUBCASE("timeout") {
    ep.timeout = std::chrono::milliseconds(300);
    ep.command = fake_evaluator(tmp.path, "slow.sh", "", "sleep 5\n");
    auto start = std::chrono::steady_clock::now();
    CHECK_THROWS_AS(external_evaluate(req, ep), EvaluatorUnavailable);
    CHECK(std::chrono::steady_clock::now() - start < std::chrono::seconds(4));
  }
  SUBCASE("no output written") {
    ep.command = fake_evaluator(tmp.path, "silent.sh", "", "exit 0\n");
    try {
      external_evaluate(req, ep);
      FAIL("expected MalformedTrace");
    } catch (const MalformedTrace& e) {
      CHECK(e.field() == "output_path");
    }
  }
  SUBCASE("missing executable") {
    ep.command = tmp.path / "does-not-exist";
    CHECK_THROWS_AS(external_evaluate(req, ep), EvaluatorUnavailable);
  }
  SUBCASE("request document") {
    req.output_path = tmp.path / "out.trace";
    auto j = to_request_json(req);
    CHECK(j.at("schema_version") == kEvaluatorSchemaVersion);
    CHECK(j.at("training_epochs") == 5);
    CHECK(j.at("loss_weight") == 1.0);
    CHECK(j.at("genome").get<Genome>() == g);
    req.training_epochs = 0;
    CHECK_THROWS_AS(req.validate(), ContractViolation);
  }
}
#endif
