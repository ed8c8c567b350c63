#pragma once

#include <optional>
#include <string>

#include "atlas/graph.hpp"

namespace atlas {

enum class ExportFormat { Gexf, Dot, Json };

ExportFormat export_format_from_string(const std::string& name);  // gexf | dot | json

// GEXF 1.3 with the viz extension. Node size grows with log10 of subtree
// downloads; node colour follows the kind of the node's incoming edge.
std::string export_gexf(const Atlas& atlas);
std::string export_dot(const Atlas& atlas);
std::string export_json(const Atlas& atlas);
std::string export_atlas(const Atlas& atlas, ExportFormat format);

struct Rgb {
    int r = 0, g = 0, b = 0;
};
// Colour of a node whose incoming edges have this kind; sources are black.
Rgb kind_color(const std::optional<EdgeKind>& incoming);

}  // namespace atlas
