#pragma once

#include <cstddef>
#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "exitnas/oracle.hpp"
#include "exitnas/search.hpp"

namespace exitnas {

struct EvaluatorSpec {
  /// "synthetic" or "external:<path>".
  std::string kind = "synthetic";
  /// Validation samples per synthetic evaluation.
  std::size_t n_samples = 2000;
  double timeout_s = 1800.0;
  TraceEncoding trace_encoding = TraceEncoding::csv;
  bool keep_workdir = false;
  SyntheticOracleParams synthetic;

  bool is_external() const { return kind.rfind("external:", 0) == 0; }
  std::filesystem::path external_command() const { return kind.substr(9); }
};

struct EngineConfig {
  SearchConfig search;
  SearchSpace space;
  EvaluatorSpec evaluator;

  /// Throws ConfigError naming the offending key.
  void validate() const;
};

/// Effective configuration as a flat key -> value object; the keys are the
/// ones accepted in config files.
nlohmann::json to_flat_json(const EngineConfig& cfg);
EngineConfig from_flat_json(const nlohmann::json& flat);

/// Parses a config document of `key = value` lines. Values are JSON scalars
/// or lists (`beta = 0.2`, `dataset = "svhn"`, `threshold_grid = [0.0, 0.5, 1.0]`);
/// `#` starts a comment. Keys not set keep their defaults. Throws ConfigError
/// with "<source>:<line>: <key>: ..." diagnostics.
EngineConfig parse_config(std::string_view text, const std::string& source = "<config>");
EngineConfig load_config(const std::filesystem::path& path);

/// Sets one key; `value` is checked against the key's type. Throws ConfigError.
void apply_setting(EngineConfig& cfg, const std::string& key, const nlohmann::json& value);

/// Parses "key=value" (value in config-file syntax; bare words are strings).
void apply_override(EngineConfig& cfg, std::string_view assignment);

/// Renders `cfg` as a config document that parse_config reads back unchanged.
std::string to_config_text(const EngineConfig& cfg);

std::unique_ptr<Evaluator> make_evaluator(const EngineConfig& cfg,
                                          const std::filesystem::path& work_root);

} // namespace exitnas
