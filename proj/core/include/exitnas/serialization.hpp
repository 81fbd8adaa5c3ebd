#pragma once

#include <nlohmann/json.hpp>

#include "exitnas/genome.hpp"
#include "exitnas/macmodel.hpp"
#include "exitnas/search_space.hpp"

// JSON forms of the domain types. Genomes serialize as:
//
//   {"backbone": {"block_depths": [..5], "kernel_sizes": [..], "expansion_rates": [..],
//                 "input_resolution": 32},
//    "thresholds": [..5],
//    "exits": [{"block1": {"interpolation_size": 8, "kernel_size": 3,
//                          "expansion_width": 1, "maxpool_enabled": false},
//               "block2": {...}}, ..5]}

namespace exitnas {

void to_json(nlohmann::json& j, const BackboneOptions& o);
void from_json(const nlohmann::json& j, BackboneOptions& o);
void to_json(nlohmann::json& j, const ExitOptions& o);
void from_json(const nlohmann::json& j, ExitOptions& o);
void to_json(nlohmann::json& j, const SearchSpace& s);
void from_json(const nlohmann::json& j, SearchSpace& s);

void to_json(nlohmann::json& j, const ExitBlockConfig& b);
void from_json(const nlohmann::json& j, ExitBlockConfig& b);
void to_json(nlohmann::json& j, const ExitBranchConfig& b);
void from_json(const nlohmann::json& j, ExitBranchConfig& b);
void to_json(nlohmann::json& j, const BackboneGenes& b);
void from_json(const nlohmann::json& j, BackboneGenes& b);
void to_json(nlohmann::json& j, const Genome& g);
void from_json(const nlohmann::json& j, Genome& g);

void to_json(nlohmann::json& j, const MacProfile& p);

/// Audit report: {"genome": ..., "profile": ..., "layers": [{section, name, kind,
/// kernel, in_channels, out_channels, out_height, out_width, groups, convention, macs}]}
nlohmann::json macs_breakdown_json(const Genome& g, const SearchSpace& space);

} // namespace exitnas
