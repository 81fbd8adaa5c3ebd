#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "exitnas/search.hpp"

namespace exitnas {

/// Archive file: everything reports are regenerated from.
struct ArchiveDocument {
  SearchConfig config;
  SearchSpace space;
  std::vector<ArchiveEntry> entries;
};

inline constexpr int kArchiveVersion = 1;

ArchiveDocument archive_document(const SearchState& state);
nlohmann::json archive_json(const ArchiveDocument& doc);
/// Throws DecodeError.
ArchiveDocument archive_from_json(const nlohmann::json& j);
ArchiveDocument load_archive(const std::filesystem::path& path);

/// Header `iteration,measured_error,measured_average_macs,is_pareto`, one row per entry in
/// archive order.
std::string pareto_csv(const std::vector<ArchiveEntry>& archive);

/// Percentages of one utilization row rounded to `decimals` places such that
/// the rounded values sum to exactly 100 (largest-remainder rounding).
/// Disabled exits stay empty.
std::array<std::optional<double>, kNumExitPositions + 1> rounded_utilization(
    const std::array<std::optional<double>, kNumExitPositions + 1>& fractions, int decimals = 2);

struct UtilizationRow {
  std::size_t archive_index = 0;
  double error_percent = 0.0;
  double macs_millions = 0.0;
  std::array<std::optional<double>, kNumExitPositions + 1> percent{};
};

std::vector<UtilizationRow> utilization_rows(const std::vector<ArchiveEntry>& archive,
                                             const std::vector<std::size_t>& indices);

/// Markdown table; disabled exits render as "-".
std::string utilization_table(const std::vector<UtilizationRow>& rows);
std::string utilization_csv(const std::vector<UtilizationRow>& rows);

/// Per-layer MAC audit of one genome as text.
std::string macs_breakdown_text(const Genome& g, const SearchSpace& space);

/// Error vs. average MACs scatter colored by iteration, Pareto points as crosses.
std::string pareto_svg(const std::vector<ArchiveEntry>& archive, double target_macs);

inline constexpr const char* kEmptyArchiveNotice = "archive is empty: no architectures to report";

} // namespace exitnas
