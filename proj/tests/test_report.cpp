#include <doctest.h>

#include <sstream>

#include <nlohmann/json.hpp>

#include "exitnas/report.hpp"

using namespace exitnas;

namespace {

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, sep)) out.push_back(item);
  return out;
}

ArchiveEntry entry(double err, double macs, std::array<std::optional<double>, 6> util, int iteration = 0) {
  ArchiveEntry e;
  e.measured_error = err;
  e.measured_average_macs = macs;
  e.utilization = util;
  e.iteration = iteration;
  return e;
}

} // namespace

TEST_CASE("utilization table renders disabled exits as '-'") {
  std::vector<ArchiveEntry> archive{
      entry(0.2536, 2.47e6, {std::nullopt, 0.8460, 0.1120, 0.0214, 0.0206, 0.0}),
      entry(0.3, 1.9e6, {1.0 / 3, 1.0 / 3, std::nullopt, std::nullopt, std::nullopt, 1.0 / 3})};
  auto rows = utilization_rows(archive, {0, 1});
  auto table = utilization_table(rows);
  auto lines = split(table, '\n');
  REQUIRE(lines.size() == 4);
  auto cells = split(lines[2], '|');
  CHECK(cells[4] == " - ");
  CHECK(cells[5] == " 84.60 ");
  CHECK(cells[6] == " 11.20 ");
  CHECK(cells[7] == " 2.14 ");
  CHECK(cells[8] == " 2.06 ");
  for (const auto& r : rows) {
    double sum = 0.0;
    for (const auto& u : r.percent) sum += u.value_or(0.0);
    CHECK(std::abs(sum - 100.0) <= 0.01);
  }
}

TEST_CASE("largest-remainder rounding keeps rows at 100") {
  auto r = rounded_utilization({1.0 / 3, 1.0 / 3, std::nullopt, std::nullopt, std::nullopt, 1.0 / 3});
  CHECK(r[0].value() + r[1].value() + r[5].value() == doctest::Approx(100.0));
  CHECK_FALSE(r[2].has_value());
  auto s = rounded_utilization({0.0, std::nullopt, std::nullopt, std::nullopt, std::nullopt, 1.0});
  CHECK(s[0].value() == 0.0);
  CHECK(s[5].value() == 100.0);
}

TEST_CASE("pareto CSV flags a mutually non-dominated set") {
  std::vector<ArchiveEntry> archive{entry(0.2, 3e6, {}, 0), entry(0.3, 2e6, {}, 0), entry(0.25, 3.5e6, {}, 1),
                                    entry(0.1, 5e6, {}, 2), entry(0.3, 2e6, {}, 2)};
  auto lines = split(pareto_csv(archive), '\n');
  REQUIRE(lines.size() == 6);
  CHECK(lines[0] == "iteration,measured_error,measured_average_macs,is_pareto");
  std::vector<std::pair<double, double>> flagged;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    auto f = split(lines[i], ',');
    if (f[3] == "true") flagged.push_back({std::stod(f[1]), std::stod(f[2])});
  }
  CHECK(flagged.size() == 4);
  for (auto a : flagged)
    for (auto b : flagged)
      CHECK_FALSE((a.first <= b.first && a.second <= b.second && (a.first < b.first || a.second < b.second)));
}

TEST_CASE("archive document round trip") {
  ArchiveDocument doc;
  doc.space = SearchSpace{};
  Genome g = sample_genome(doc.space, 1);
  auto e = entry(0.2, 2e6, {0.5, std::nullopt, std::nullopt, std::nullopt, std::nullopt, 0.5}, 3);
  e.genome = g;
  e.genome_id = genome_id(encode(g, doc.space));
  doc.entries = {e};
  auto back = archive_from_json(nlohmann::json::parse(archive_json(doc).dump()));
  REQUIRE(back.entries.size() == 1);
  CHECK(back.entries[0].same_measurement(e));
  CHECK(back.space == doc.space);
}

TEST_CASE("svg and breakdown render") {
  SearchSpace space;
  Genome g = sample_genome(space, 2);
  auto text = macs_breakdown_text(g, space);
  CHECK(text.find("final exit:") != std::string::npos);
  std::vector<ArchiveEntry> archive{entry(0.2, 3e6, {}, 0), entry(0.3, 2e6, {}, 1)};
  auto svg = pareto_svg(archive, 2.0);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("stroke=\"red\"") != std::string::npos);
}
