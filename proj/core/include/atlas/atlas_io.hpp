#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "atlas/graph.hpp"

namespace atlas {

// {"nodes": [ModelNode...], "edges": [{"parent","child","kind"}...]}
std::string atlas_to_json(const Atlas& atlas, int indent = 2);
Atlas atlas_from_json(std::string_view text);

void save_atlas(const Atlas& atlas, const std::filesystem::path& path);
Atlas load_atlas(const std::filesystem::path& path);

std::string node_to_json_line(const ModelNode& node);
ModelNode node_from_json_line(std::string_view line);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view text);

}  // namespace atlas
