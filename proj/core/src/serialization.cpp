#include "exitnas/serialization.hpp"

namespace exitnas {

void to_json(nlohmann::json& j, const BackboneOptions& o) {
  j = nlohmann::json{{"depth_options", o.depth_options},
                     {"kernel_options", o.kernel_options},
                     {"expansion_options", o.expansion_options},
                     {"resolution_options", o.resolution_options},
                     {"stem_channels", o.stem_channels},
                     {"block_widths", o.block_widths},
                     {"head_channels", o.head_channels}};
}

void from_json(const nlohmann::json& j, BackboneOptions& o) {
  j.at("depth_options").get_to(o.depth_options);
  j.at("kernel_options").get_to(o.kernel_options);
  j.at("expansion_options").get_to(o.expansion_options);
  j.at("resolution_options").get_to(o.resolution_options);
  j.at("stem_channels").get_to(o.stem_channels);
  j.at("block_widths").get_to(o.block_widths);
  j.at("head_channels").get_to(o.head_channels);
}

void to_json(nlohmann::json& j, const ExitOptions& o) {
  j = nlohmann::json{{"interpolation_options", o.interpolation_options},
                     {"kernel_options", o.kernel_options},
                     {"expansion_options", o.expansion_options},
                     {"base_channels", o.base_channels}};
}

void from_json(const nlohmann::json& j, ExitOptions& o) {
  j.at("interpolation_options").get_to(o.interpolation_options);
  j.at("kernel_options").get_to(o.kernel_options);
  j.at("expansion_options").get_to(o.expansion_options);
  j.at("base_channels").get_to(o.base_channels);
}

void to_json(nlohmann::json& j, const SearchSpace& s) {
  j = nlohmann::json{{"backbone", s.backbone},
                     {"exits", s.exits},
                     {"threshold_grid", s.threshold_grid},
                     {"num_classes", s.num_classes},
                     {"input_channels", s.input_channels}};
}

void from_json(const nlohmann::json& j, SearchSpace& s) {
  j.at("backbone").get_to(s.backbone);
  j.at("exits").get_to(s.exits);
  j.at("threshold_grid").get_to(s.threshold_grid);
  j.at("num_classes").get_to(s.num_classes);
  j.at("input_channels").get_to(s.input_channels);
}

void to_json(nlohmann::json& j, const ExitBlockConfig& b) {
  j = nlohmann::json{{"interpolation_size", b.interpolation_size},
                     {"kernel_size", b.kernel_size},
                     {"expansion_width", b.expansion_width},
                     {"maxpool_enabled", b.maxpool_enabled}};
}

void from_json(const nlohmann::json& j, ExitBlockConfig& b) {
  j.at("interpolation_size").get_to(b.interpolation_size);
  j.at("kernel_size").get_to(b.kernel_size);
  j.at("expansion_width").get_to(b.expansion_width);
  j.at("maxpool_enabled").get_to(b.maxpool_enabled);
}

void to_json(nlohmann::json& j, const ExitBranchConfig& b) {
  j = nlohmann::json{{"block1", b.block1}, {"block2", b.block2}};
}

void from_json(const nlohmann::json& j, ExitBranchConfig& b) {
  j.at("block1").get_to(b.block1);
  j.at("block2").get_to(b.block2);
}

void to_json(nlohmann::json& j, const BackboneGenes& b) {
  j = nlohmann::json{{"block_depths", b.block_depths},
                     {"kernel_sizes", b.kernel_sizes},
                     {"expansion_rates", b.expansion_rates},
                     {"input_resolution", b.input_resolution}};
}

void from_json(const nlohmann::json& j, BackboneGenes& b) {
  j.at("block_depths").get_to(b.block_depths);
  j.at("kernel_sizes").get_to(b.kernel_sizes);
  j.at("expansion_rates").get_to(b.expansion_rates);
  j.at("input_resolution").get_to(b.input_resolution);
}

void to_json(nlohmann::json& j, const Genome& g) {
  j = nlohmann::json{{"backbone", g.backbone},
                     {"thresholds", g.thresholds.values},
                     {"exits", g.exits}};
}

void from_json(const nlohmann::json& j, Genome& g) {
  j.at("backbone").get_to(g.backbone);
  j.at("thresholds").get_to(g.thresholds.values);
  j.at("exits").get_to(g.exits);
}

void to_json(nlohmann::json& j, const MacProfile& p) {
  j = nlohmann::json{{"exit_positions", p.exit_positions},
                     {"cumulative_exit_macs", p.cumulative_exit_macs},
                     {"per_branch_macs", p.per_branch_macs},
                     {"final_macs", p.final_macs}};
}

nlohmann::json macs_breakdown_json(const Genome& g, const SearchSpace& space) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : macs_breakdown(g, space)) {
    const auto& l = row.layer.spec;
    rows.push_back({{"section", row.section},
                    {"name", row.layer.name},
                    {"kind", std::string(to_string(l.kind))},
                    {"kernel", l.kernel},
                    {"in_channels", l.in_channels},
                    {"out_channels", l.out_channels},
                    {"out_height", l.out_height},
                    {"out_width", l.out_width},
                    {"groups", l.groups},
                    {"convention", std::string(to_string(row.layer.convention))},
                    {"macs", row.macs}});
  }
  return nlohmann::json{{"genome", g}, {"profile", profile(g, space)}, {"layers", rows}};
}

} // namespace exitnas
