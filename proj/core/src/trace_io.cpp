#include "exitnas/trace_io.hpp"

#include <array>
#include <charconv>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "exitnas/errors.hpp"

namespace exitnas {

namespace {

constexpr const char* kFormatName = "exitnas-trace";
constexpr int kFormatVersion = 1;

std::string format_double(double v) {
  std::array<char, 32> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

double parse_double(std::string_view token, const std::string& field) {
  double v = 0.0;
  const auto* first = token.data();
  const auto* last = token.data() + token.size();
  while (first < last && *first == ' ') {
    ++first;
  }
  while (last > first && (last[-1] == ' ' || last[-1] == '\r')) {
    --last;
  }
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc{} || res.ptr != last) {
    throw MalformedTrace(field, "not a number: '" + std::string(token) + "'");
  }
  return v;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    out.push_back(line.substr(start, comma == std::string_view::npos ? line.npos : comma - start));
    if (comma == std::string_view::npos) {
      break;
    }
    start = comma + 1;
  }
  return out;
}

std::string cell(std::size_t row, std::size_t column) {
  return "[" + std::to_string(row) + "," + std::to_string(column) + "]";
}

std::uint8_t parse_flag(std::string_view token, std::size_t row, std::size_t column) {
  const double v = parse_double(token, "correct" + cell(row, column));
  if (v != 0.0 && v != 1.0) {
    throw MalformedTrace("correct" + cell(row, column), "flag must be 0 or 1");
  }
  return static_cast<std::uint8_t>(v);
}

TraceFooter parse_footer(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedTrace("footer", e.what());
  }
  if (!j.is_object()) {
    throw MalformedTrace("footer", "not a JSON object");
  }
  TraceFooter f;
  try {
    f.measured_error = j.at("measured_error").get<double>();
    f.wall_time_s = j.value("wall_time_s", 0.0);
    f.evaluator_version = j.value("evaluator_version", std::string{});
  } catch (const nlohmann::json::exception& e) {
    throw MalformedTrace("footer.measured_error", e.what());
  }
  if (!(f.measured_error >= 0.0 && f.measured_error <= 1.0)) {
    throw MalformedTrace("footer.measured_error", "outside [0, 1]");
  }
  for (const auto& [key, value] : j.items()) {
    if (key != "measured_error" && key != "wall_time_s" && key != "evaluator_version") {
      f.extra[key] = value;
    }
  }
  return f;
}

template <typename T>
T header_field(const nlohmann::json& header, const char* name) {
  try {
    return header.at(name).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw MalformedTrace(std::string("header.") + name, e.what());
  }
}

} // namespace

std::string to_string(TraceEncoding e) {
  switch (e) {
  case TraceEncoding::csv:
    return "csv";
  case TraceEncoding::binary:
    return "binary";
  case TraceEncoding::csv_probs:
    return "csv_probs";
  }
  return "csv";
}

TraceEncoding trace_encoding_from_string(const std::string& s) {
  if (s == "csv") {
    return TraceEncoding::csv;
  }
  if (s == "binary") {
    return TraceEncoding::binary;
  }
  if (s == "csv_probs") {
    return TraceEncoding::csv_probs;
  }
  throw MalformedTrace("header.encoding", "unknown encoding '" + s + "'");
}

void write_trace(std::ostream& out, const TraceDocument& doc) {
  const auto& t = doc.trace;
  t.check();
  if (doc.encoding == TraceEncoding::csv_probs) {
    throw ContractViolation("write_trace: csv_probs traces cannot be written from margins");
  }
  const nlohmann::json header{{"format", kFormatName},
                              {"version", kFormatVersion},
                              {"encoding", to_string(doc.encoding)},
                              {"n_samples", t.n_samples},
                              {"n_exits", t.n_exits},
                              {"exit_positions", t.exit_positions},
                              {"genome_id", doc.genome_id},
                              {"seed", doc.seed}};
  out << header.dump() << '\n';

  if (doc.encoding == TraceEncoding::csv) {
    std::string line;
    for (std::size_t i = 0; i < t.n_samples; ++i) {
      line.clear();
      for (std::size_t c = 0; c < t.n_exits; ++c) {
        line += format_double(t.margin(i, c));
        line += ',';
      }
      for (std::size_t c = 0; c < t.n_exits; ++c) {
        line += t.is_correct(i, c) ? '1' : '0';
        line += c + 1 < t.n_exits ? ',' : '\n';
      }
      out << line;
    }
  } else {
    std::vector<char> bytes;
    bytes.reserve(t.margins.size() * 8 + t.correct.size() + 1);
    for (double m : t.margins) {
      std::uint64_t bits = 0;
      std::memcpy(&bits, &m, sizeof bits);
      for (int b = 0; b < 8; ++b) {
        bytes.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
      }
    }
    for (std::uint8_t c : t.correct) {
      bytes.push_back(static_cast<char>(c));
    }
    bytes.push_back('\n');
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  }

  if (doc.footer) {
    nlohmann::json footer = doc.footer->extra;
    footer["measured_error"] = doc.footer->measured_error;
    footer["wall_time_s"] = doc.footer->wall_time_s;
    footer["evaluator_version"] = doc.footer->evaluator_version;
    out << footer.dump() << '\n';
  }
}

void write_trace(const std::filesystem::path& path, const TraceDocument& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw Error("cannot open " + path.string() + " for writing");
  }
  write_trace(out, doc);
}

TraceDocument read_trace(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw MalformedTrace("header", "empty input");
  }
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw MalformedTrace("header", e.what());
  }
  if (!header.is_object()) {
    throw MalformedTrace("header", "not a JSON object");
  }
  if (header.value("format", std::string{}) != kFormatName) {
    throw MalformedTrace("header.format", "expected '" + std::string(kFormatName) + "'");
  }
  if (header.value("version", 0) != kFormatVersion) {
    throw MalformedTrace("header.version", "unsupported version");
  }

  TraceDocument doc;
  doc.encoding = trace_encoding_from_string(header_field<std::string>(header, "encoding"));
  doc.genome_id = header.value("genome_id", std::string{});
  doc.seed = header.value("seed", std::uint64_t{0});
  auto& t = doc.trace;
  const auto n_samples = header_field<long long>(header, "n_samples");
  const auto n_exits = header_field<long long>(header, "n_exits");
  if (n_samples < 1) {
    throw MalformedTrace("header.n_samples", "must be >= 1");
  }
  if (n_exits < 1) {
    throw MalformedTrace("header.n_exits", "final-exit column missing");
  }
  t.n_samples = static_cast<std::size_t>(n_samples);
  t.n_exits = static_cast<std::size_t>(n_exits);
  t.exit_positions = header_field<std::vector<std::size_t>>(header, "exit_positions");
  if (t.exit_positions.size() + 1 != t.n_exits) {
    throw MalformedTrace("header.exit_positions",
                         "expected " + std::to_string(t.n_exits - 1) + " early-exit positions");
  }
  const std::size_t cells = t.n_samples * t.n_exits;
  t.margins.resize(cells);
  t.correct.resize(cells);

  if (doc.encoding == TraceEncoding::binary) {
    std::vector<char> bytes(cells * 9);
    in.read(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (static_cast<std::size_t>(in.gcount()) != bytes.size()) {
      throw MalformedTrace("body", "truncated binary body");
    }
    for (std::size_t i = 0; i < cells; ++i) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b) {
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
      }
      std::memcpy(&t.margins[i], &bits, sizeof bits);
      t.correct[i] = static_cast<std::uint8_t>(bytes[cells * 8 + i]);
    }
    std::getline(in, line); // terminator of the binary body
  } else {
    const std::size_t n_classes =
        doc.encoding == TraceEncoding::csv_probs ? header_field<std::size_t>(header, "n_classes") : 0;
    if (doc.encoding == TraceEncoding::csv_probs && n_classes < 2) {
      throw MalformedTrace("header.n_classes", "must be >= 2");
    }
    const std::size_t values_per_exit = doc.encoding == TraceEncoding::csv_probs ? n_classes : 1;
    const std::size_t expected = t.n_exits * values_per_exit + t.n_exits;
    for (std::size_t i = 0; i < t.n_samples; ++i) {
      if (!std::getline(in, line) || line.empty() || line.front() == '{') {
        throw MalformedTrace("row " + std::to_string(i), "missing body row");
      }
      const auto tokens = split_commas(line);
      if (tokens.size() != expected) {
        // The usual cause is a missing final-exit column.
        throw MalformedTrace("row " + std::to_string(i),
                             "expected " + std::to_string(expected) + " columns, got " +
                                 std::to_string(tokens.size()));
      }
      for (std::size_t c = 0; c < t.n_exits; ++c) {
        double m = 0.0;
        if (doc.encoding == TraceEncoding::csv) {
          m = parse_double(tokens[c], "margins" + cell(i, c));
        } else {
          std::vector<double> probs(n_classes);
          for (std::size_t k = 0; k < n_classes; ++k) {
            probs[k] = parse_double(tokens[c * n_classes + k], "probabilities" + cell(i, c));
          }
          try {
            m = score_margin(probs);
          } catch (const ContractViolation& e) {
            throw MalformedTrace("probabilities" + cell(i, c), e.what());
          }
        }
        t.margins[i * t.n_exits + c] = m;
        t.correct[i * t.n_exits + c] =
            parse_flag(tokens[t.n_exits * values_per_exit + c], i, c);
      }
    }
  }

  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") {
      continue;
    }
    if (line.front() != '{') {
      throw MalformedTrace("body", "unexpected extra row after " + std::to_string(t.n_samples) +
                                       " samples");
    }
    if (doc.footer) {
      throw MalformedTrace("footer", "more than one footer");
    }
    doc.footer = parse_footer(line);
  }

  t.check();
  return doc;
}

TraceDocument read_trace(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw MalformedTrace("file", "cannot open " + path.string());
  }
  return read_trace(in);
}

} // namespace exitnas
