#include "exitnas/report.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "exitnas/errors.hpp"
#include "exitnas/macmodel.hpp"
#include "exitnas/serialization.hpp"

namespace exitnas {

ArchiveDocument archive_document(const SearchState& state) {
  return {state.config, state.space, state.archive};
}

nlohmann::json archive_json(const ArchiveDocument& doc) {
  nlohmann::json j{{"version", kArchiveVersion},
                   {"config", doc.config},
                   {"space", doc.space},
                   {"entries", doc.entries},
                   {"pareto", pareto_front(doc.entries)}};
  auto best = best_entry(doc.entries);
  j["best"] = best ? nlohmann::json(*best) : nlohmann::json();
  return j;
}

ArchiveDocument archive_from_json(const nlohmann::json& j) {
  try {
    if (j.at("version").get<int>() != kArchiveVersion)
      throw DecodeError("archive: unsupported version " + j.at("version").dump());
    ArchiveDocument doc;
    j.at("config").get_to(doc.config);
    j.at("space").get_to(doc.space);
    j.at("entries").get_to(doc.entries);
    return doc;
  } catch (const DecodeError&) {
    throw;
  } catch (const std::exception& e) {
    throw DecodeError(std::string("archive: ") + e.what());
  }
}

ArchiveDocument load_archive(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw DecodeError("cannot open archive " + path.string());
  auto j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded()) throw DecodeError("archive " + path.string() + " is not valid JSON");
  return archive_from_json(j);
}

std::string pareto_csv(const std::vector<ArchiveEntry>& archive) {
  auto front = pareto_front(archive);
  std::set<std::size_t> on_front(front.begin(), front.end());
  std::ostringstream out;
  out << std::setprecision(17);
  out << "iteration,measured_error,measured_average_macs,is_pareto\n";
  for (std::size_t i = 0; i < archive.size(); ++i)
    out << archive[i].iteration << ',' << archive[i].measured_error << ','
        << archive[i].measured_average_macs << ',' << (on_front.contains(i) ? "true" : "false")
        << '\n';
  return out.str();
}

std::array<std::optional<double>, kNumExitPositions + 1> rounded_utilization(
    const std::array<std::optional<double>, kNumExitPositions + 1>& fractions, int decimals) {
  const double scale = std::pow(10.0, decimals);
  const long long total = std::llround(100.0 * scale);
  std::array<long long, kNumExitPositions + 1> units{};
  std::array<double, kNumExitPositions + 1> remainder{};
  double sum = 0.0;
  for (const auto& f : fractions) sum += f.value_or(0.0);
  long long assigned = 0;
  for (std::size_t i = 0; i < fractions.size(); ++i) {
    if (!fractions[i]) continue;
    double exact = sum > 0.0 ? *fractions[i] / sum * 100.0 * scale : 0.0;
    units[i] = static_cast<long long>(std::floor(exact));
    remainder[i] = exact - static_cast<double>(units[i]);
    assigned += units[i];
  }
  std::vector<std::size_t> order;
  for (std::size_t i = 0; i < fractions.size(); ++i)
    if (fractions[i]) order.push_back(i);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  if (sum > 0.0)
    for (std::size_t k = 0; assigned < total && !order.empty(); k = (k + 1) % order.size()) {
      ++units[order[k]];
      ++assigned;
    }
  std::array<std::optional<double>, kNumExitPositions + 1> out{};
  for (std::size_t i = 0; i < fractions.size(); ++i)
    if (fractions[i]) out[i] = static_cast<double>(units[i]) / scale;
  return out;
}

std::vector<UtilizationRow> utilization_rows(const std::vector<ArchiveEntry>& archive,
                                             const std::vector<std::size_t>& indices) {
  std::vector<UtilizationRow> rows;
  for (std::size_t i : indices) {
    const auto& e = archive.at(i);
    rows.push_back({i, 100.0 * e.measured_error, e.measured_average_macs / 1e6,
                    rounded_utilization(e.utilization)});
  }
  return rows;
}

namespace {

std::string cell(const std::optional<double>& v) {
  if (!v) return "-";
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << *v;
  return s.str();
}

} // namespace

std::string utilization_table(const std::vector<UtilizationRow>& rows) {
  std::ostringstream out;
  out << "| entry | error (%) | MACs (M) |";
  for (std::size_t p = 0; p < kNumExitPositions; ++p) out << " exit " << p + 1 << " (%) |";
  out << " final (%) |\n|---|---|---|";
  for (std::size_t p = 0; p <= kNumExitPositions; ++p) out << "---|";
  out << '\n';
  for (const auto& r : rows) {
    out << "| " << r.archive_index << " | " << cell(r.error_percent) << " | " << std::fixed
        << std::setprecision(3) << r.macs_millions << " |";
    for (const auto& u : r.percent) out << ' ' << cell(u) << " |";
    out << '\n';
  }
  return out.str();
}

std::string utilization_csv(const std::vector<UtilizationRow>& rows) {
  std::ostringstream out;
  out << "entry,error_percent,macs_millions";
  for (std::size_t p = 0; p < kNumExitPositions; ++p) out << ",exit" << p + 1;
  out << ",final\n";
  for (const auto& r : rows) {
    out << r.archive_index << ',' << cell(r.error_percent) << ',' << std::fixed
        << std::setprecision(6) << r.macs_millions;
    for (const auto& u : r.percent) out << ',' << cell(u);
    out << '\n';
  }
  return out.str();
}

std::string macs_breakdown_text(const Genome& g, const SearchSpace& space) {
  std::ostringstream out;
  out << std::left << std::setw(10) << "section" << std::setw(28) << "layer" << std::setw(12)
      << "kind" << std::setw(8) << "kernel" << std::setw(8) << "in" << std::setw(20)
      << "out (c x h x w)"
      << std::right << std::setw(12) << "MACs" << '\n';
  MacCount total = 0;
  for (const auto& row : macs_breakdown(g, space)) {
    const auto& l = row.layer.spec;
    std::string out_shape = std::to_string(l.out_channels) + "x" + std::to_string(l.out_height) +
                            "x" + std::to_string(l.out_width);
    out << std::left << std::setw(10) << row.section << std::setw(28) << row.layer.name
        << std::setw(12) << to_string(l.kind) << std::setw(8) << l.kernel << std::setw(8)
        << l.in_channels << std::setw(20) << out_shape << std::right << std::setw(12)
        << row.macs << '\n';
    total += row.macs;
  }
  auto prof = profile(g, space);
  out << "\nlayer total " << total << " MACs\n";
  for (std::size_t c = 0; c < prof.exit_positions.size(); ++c)
    out << "exit " << prof.exit_positions[c] + 1 << ": branch " << prof.per_branch_macs[c]
        << ", cumulative " << prof.cumulative_exit_macs[c] << '\n';
  out << "final exit: " << prof.final_macs << '\n';
  return out.str();
}

std::string pareto_svg(const std::vector<ArchiveEntry>& archive, double target_macs) {
  const double w = 640, h = 420, left = 70, right = 20, top = 20, bottom = 50;
  double xmin = target_macs, xmax = target_macs, ymin = 1.0, ymax = 0.0;
  int max_iter = 0;
  for (const auto& e : archive) {
    xmin = std::min(xmin, e.measured_average_macs / 1e6);
    xmax = std::max(xmax, e.measured_average_macs / 1e6);
    ymin = std::min(ymin, e.measured_error);
    ymax = std::max(ymax, e.measured_error);
    max_iter = std::max(max_iter, e.iteration);
  }
  if (ymin > ymax) ymin = 0.0, ymax = 1.0;
  if (xmax - xmin < 1e-9) xmax = xmin + 1.0;
  if (ymax - ymin < 1e-9) ymax = ymin + 0.01;
  auto px = [&](double x) { return left + (x - xmin) / (xmax - xmin) * (w - left - right); };
  auto py = [&](double y) { return h - bottom - (y - ymin) / (ymax - ymin) * (h - top - bottom); };

  std::ostringstream out;
  out << std::fixed << std::setprecision(2);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << w << "\" height=\"" << h
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << h - bottom << "\" x2=\"" << w - right << "\" y2=\""
      << h - bottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << h - bottom
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << px(target_macs) << "\" y1=\"" << top << "\" x2=\"" << px(target_macs)
      << "\" y2=\"" << h - bottom << "\" stroke=\"gray\" stroke-dasharray=\"4 3\"/>\n";
  for (int t = 0; t <= 4; ++t) {
    double x = xmin + (xmax - xmin) * t / 4, y = ymin + (ymax - ymin) * t / 4;
    out << "<text x=\"" << px(x) << "\" y=\"" << h - bottom + 16 << "\" text-anchor=\"middle\">"
        << std::setprecision(2) << x << "</text>\n";
    out << "<text x=\"" << left - 6 << "\" y=\"" << py(y) + 4 << "\" text-anchor=\"end\">"
        << std::setprecision(3) << y << "</text>\n";
  }
  out << std::setprecision(2);
  out << "<text x=\"" << (left + w - right) / 2 << "\" y=\"" << h - 12
      << "\" text-anchor=\"middle\">average MACs (M)</text>\n";
  out << "<text x=\"16\" y=\"" << (top + h - bottom) / 2 << "\" transform=\"rotate(-90 16 "
      << (top + h - bottom) / 2 << ")\" text-anchor=\"middle\">error</text>\n";

  auto front = pareto_front(archive);
  std::set<std::size_t> on_front(front.begin(), front.end());
  for (std::size_t i = 0; i < archive.size(); ++i) {
    if (on_front.contains(i)) continue;
    const auto& e = archive[i];
    double shade = max_iter > 0 ? static_cast<double>(e.iteration) / max_iter : 0.0;
    int r = static_cast<int>(40 + 180 * shade), b = static_cast<int>(220 - 180 * shade);
    out << "<circle cx=\"" << px(e.measured_average_macs / 1e6) << "\" cy=\"" << py(e.measured_error)
        << "\" r=\"3\" fill=\"rgb(" << r << ",120," << b << ")\" fill-opacity=\"0.7\"/>\n";
  }
  for (std::size_t i : front) {
    double x = px(archive[i].measured_average_macs / 1e6), y = py(archive[i].measured_error);
    out << "<path d=\"M" << x - 4 << ' ' << y - 4 << " L" << x + 4 << ' ' << y + 4 << " M" << x - 4
        << ' ' << y + 4 << " L" << x + 4 << ' ' << y - 4 << "\" stroke=\"red\" stroke-width=\"2\"/>\n";
  }
  out << "</svg>\n";
  return out.str();
}

} // namespace exitnas
