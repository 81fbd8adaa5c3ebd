#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>

#include <nlohmann/json.hpp>

#include "exitnas/exitsim.hpp"

namespace exitnas {

// Trace file format, version 1.
//
// Line 1 is a single-line JSON header:
//   {"format": "exitnas-trace", "version": 1, "encoding": "csv" | "binary" | "csv_probs",
//    "n_samples": N, "n_exits": E, "exit_positions": [p_1, ..., p_{E-1}],
//    "genome_id": "<string>", "seed": S, "n_classes": C (csv_probs only)}
// Columns are ordered exit 1 ... exit E, the last one being the final classifier;
// exit_positions gives the zero-based backbone block each early column follows.
//
// Body:
//   csv        N lines "m_1,...,m_E,c_1,...,c_E" (margins, then 0/1 correctness flags)
//   csv_probs  N lines of E*C softmax probabilities (exit-major) then E flags;
//              margins are derived on load as top-1 minus top-2
//   binary     N*E little-endian IEEE-754 float64 margins (row-major), then N*E
//              uint8 flags, then a single '\n'
//
// Evaluator responses append one more single-line JSON object, the footer:
//   {"measured_error": x, "wall_time_s": t, "evaluator_version": "..."}

enum class TraceEncoding { csv, binary, csv_probs };

std::string to_string(TraceEncoding e);
TraceEncoding trace_encoding_from_string(const std::string& s);

struct TraceFooter {
  double measured_error = 0.0;
  double wall_time_s = 0.0;
  std::string evaluator_version;
  /// Any further footer fields, preserved verbatim.
  nlohmann::json extra = nlohmann::json::object();
};

struct TraceDocument {
  EvalTrace trace;
  std::string genome_id;
  std::uint64_t seed = 0;
  TraceEncoding encoding = TraceEncoding::csv;
  std::optional<TraceFooter> footer;
};

/// csv_probs cannot be written (the engine only holds margins).
void write_trace(std::ostream& out, const TraceDocument& doc);
void write_trace(const std::filesystem::path& path, const TraceDocument& doc);

/// Throws MalformedTrace naming the first offending field or cell.
TraceDocument read_trace(std::istream& in);
TraceDocument read_trace(const std::filesystem::path& path);

} // namespace exitnas
