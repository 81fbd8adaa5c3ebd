#include "exitnas/config.hpp"

#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "exitnas/errors.hpp"
#include "exitnas/serialization.hpp"

namespace exitnas {

namespace {

using nlohmann::json;

const char* type_name(const json& v) {
  if (v.is_boolean()) return "boolean";
  if (v.is_number_integer()) return "integer";
  if (v.is_number()) return "number";
  if (v.is_string()) return "string";
  if (v.is_array()) return "list";
  return v.type_name();
}

/// Checks `value` against the default's type; returns the value to store.
json coerce(const std::string& key, const json& def, const json& value) {
  auto fail = [&](const std::string& what) { throw ConfigError(key + ": " + what); };
  if (def.is_boolean()) {
    if (!value.is_boolean()) fail(std::string("expected boolean, got ") + type_name(value));
    return value;
  }
  if (def.is_number_unsigned()) {
    if (!value.is_number_integer() || (value.is_number_integer() && value.get<std::int64_t>() < 0 &&
                                       !value.is_number_unsigned()))
      fail(std::string("expected non-negative integer, got ") + value.dump());
    return value;
  }
  if (def.is_number_integer()) {
    if (!value.is_number_integer()) fail(std::string("expected integer, got ") + value.dump());
    return value;
  }
  if (def.is_number()) {
    if (!value.is_number()) fail(std::string("expected number, got ") + value.dump());
    return json(value.get<double>());
  }
  if (def.is_string()) {
    if (!value.is_string()) fail(std::string("expected string, got ") + value.dump());
    return value;
  }
  if (def.is_array()) {
    if (!value.is_array()) fail(std::string("expected list, got ") + value.dump());
    if (!def.empty()) {
      json out = json::array();
      for (std::size_t i = 0; i < value.size(); ++i)
        out.push_back(coerce(key + "[" + std::to_string(i) + "]", def[0], value[i]));
      return out;
    }
    return value;
  }
  return value;
}

std::string strip_comment(std::string_view line) {
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) quoted = !quoted;
    if (line[i] == '#' && !quoted) return std::string(line.substr(0, i));
  }
  return std::string(line);
}

std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

} // namespace

void EngineConfig::validate() const {
  search.validate();
  space.validate();
  evaluator.synthetic.validate();
  if (evaluator.kind != "synthetic" && !evaluator.is_external())
    throw ConfigError("evaluator: expected \"synthetic\" or \"external:<path>\", got \"" +
                      evaluator.kind + "\"");
  if (evaluator.is_external() && evaluator.external_command().empty())
    throw ConfigError("evaluator: external evaluator path is empty");
  if (evaluator.n_samples < 1) throw ConfigError("n_samples: must be >= 1");
  if (!(evaluator.timeout_s > 0.0)) throw ConfigError("evaluator_timeout_s: must be > 0");
}

json to_flat_json(const EngineConfig& cfg) {
  json flat = cfg.search;
  const auto& b = cfg.space.backbone;
  const auto& e = cfg.space.exits;
  flat["depth_options"] = b.depth_options;
  flat["kernel_options"] = b.kernel_options;
  flat["expansion_options"] = b.expansion_options;
  flat["resolution_options"] = b.resolution_options;
  flat["stem_channels"] = b.stem_channels;
  flat["block_widths"] = b.block_widths;
  flat["head_channels"] = b.head_channels;
  flat["exit_interpolation_options"] = e.interpolation_options;
  flat["exit_kernel_options"] = e.kernel_options;
  flat["exit_expansion_options"] = e.expansion_options;
  flat["exit_base_channels"] = e.base_channels;
  flat["threshold_grid"] = cfg.space.threshold_grid;
  flat["num_classes"] = cfg.space.num_classes;
  flat["input_channels"] = cfg.space.input_channels;
  flat["evaluator"] = cfg.evaluator.kind;
  flat["n_samples"] = cfg.evaluator.n_samples;
  flat["evaluator_timeout_s"] = cfg.evaluator.timeout_s;
  flat["trace_encoding"] = std::string(to_string(cfg.evaluator.trace_encoding));
  flat["keep_workdir"] = cfg.evaluator.keep_workdir;
  json synthetic = cfg.evaluator.synthetic;
  for (auto it = synthetic.begin(); it != synthetic.end(); ++it)
    flat["synthetic." + it.key()] = it.value();
  return flat;
}

EngineConfig from_flat_json(const json& flat) {
  EngineConfig cfg;
  flat.get_to(cfg.search);
  auto& b = cfg.space.backbone;
  auto& e = cfg.space.exits;
  flat.at("depth_options").get_to(b.depth_options);
  flat.at("kernel_options").get_to(b.kernel_options);
  flat.at("expansion_options").get_to(b.expansion_options);
  flat.at("resolution_options").get_to(b.resolution_options);
  flat.at("stem_channels").get_to(b.stem_channels);
  const auto& widths = flat.at("block_widths");
  if (widths.size() != b.block_widths.size())
    throw ConfigError("block_widths: expected " + std::to_string(b.block_widths.size()) +
                      " entries, got " + std::to_string(widths.size()));
  widths.get_to(b.block_widths);
  flat.at("head_channels").get_to(b.head_channels);
  flat.at("exit_interpolation_options").get_to(e.interpolation_options);
  flat.at("exit_kernel_options").get_to(e.kernel_options);
  flat.at("exit_expansion_options").get_to(e.expansion_options);
  flat.at("exit_base_channels").get_to(e.base_channels);
  flat.at("threshold_grid").get_to(cfg.space.threshold_grid);
  flat.at("num_classes").get_to(cfg.space.num_classes);
  flat.at("input_channels").get_to(cfg.space.input_channels);
  flat.at("evaluator").get_to(cfg.evaluator.kind);
  flat.at("n_samples").get_to(cfg.evaluator.n_samples);
  flat.at("evaluator_timeout_s").get_to(cfg.evaluator.timeout_s);
  try {
    cfg.evaluator.trace_encoding = trace_encoding_from_string(flat.at("trace_encoding").get<std::string>());
  } catch (const std::exception& ex) {
    throw ConfigError(std::string("trace_encoding: ") + ex.what());
  }
  flat.at("keep_workdir").get_to(cfg.evaluator.keep_workdir);
  json synthetic = cfg.evaluator.synthetic;
  for (auto it = synthetic.begin(); it != synthetic.end(); ++it)
    if (auto f = flat.find("synthetic." + it.key()); f != flat.end()) it.value() = *f;
  synthetic.get_to(cfg.evaluator.synthetic);
  return cfg;
}

void apply_setting(EngineConfig& cfg, const std::string& key, const json& value) {
  json flat = to_flat_json(cfg);
  auto it = flat.find(key);
  if (it == flat.end()) throw ConfigError(key + ": unknown key");
  *it = coerce(key, *it, value);
  cfg = from_flat_json(flat);
}

EngineConfig parse_config(std::string_view text, const std::string& source) {
  EngineConfig cfg;
  std::istringstream in{std::string(text)};
  std::string raw;
  std::set<std::string> seen;
  for (int lineno = 1; std::getline(in, raw); ++lineno) {
    std::string line = trim(strip_comment(raw));
    if (line.empty()) continue;
    auto where = source + ":" + std::to_string(lineno) + ": ";
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError(where + "expected `key = value`, got \"" + line + "\"");
    std::string key = trim(std::string_view(line).substr(0, eq));
    std::string value_text = trim(std::string_view(line).substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "missing key");
    if (!seen.insert(key).second) throw ConfigError(where + key + ": duplicate key");
    json value = json::parse(value_text, nullptr, false);
    if (value.is_discarded() || value_text.empty())
      throw ConfigError(where + key + ": cannot parse value \"" + value_text + "\"");
    try {
      apply_setting(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  try {
    cfg.validate();
  } catch (const ConfigError& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return cfg;
}

EngineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string() + ": cannot open config file");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path.string());
}

void apply_override(EngineConfig& cfg, std::string_view assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string_view::npos)
    throw ConfigError("override \"" + std::string(assignment) + "\": expected key=value");
  std::string key = trim(assignment.substr(0, eq));
  std::string value_text = trim(assignment.substr(eq + 1));
  json value = json::parse(value_text, nullptr, false);
  if (value.is_discarded()) value = value_text;
  apply_setting(cfg, key, value);
}

std::string to_config_text(const EngineConfig& cfg) {
  std::ostringstream out;
  json flat = to_flat_json(cfg);
  for (auto it = flat.begin(); it != flat.end(); ++it) out << it.key() << " = " << it.value().dump() << '\n';
  return out.str();
}

std::unique_ptr<Evaluator> make_evaluator(const EngineConfig& cfg,
                                          const std::filesystem::path& work_root) {
  if (!cfg.evaluator.is_external())
    return std::make_unique<SyntheticEvaluator>(cfg.space, cfg.evaluator.synthetic,
                                                cfg.evaluator.n_samples);
  ExternalEndpoint ep;
  ep.command = cfg.evaluator.external_command();
  ep.timeout = std::chrono::milliseconds(static_cast<long long>(cfg.evaluator.timeout_s * 1000.0));
  ep.work_root = work_root;
  ep.keep_workdir = cfg.evaluator.keep_workdir;
  return std::make_unique<ExternalEvaluator>(ep, cfg.space, cfg.search.dataset,
                                             cfg.search.training_epochs, cfg.search.loss_weight);
}

} // namespace exitnas
