#pragma once

#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "atlas/graph.hpp"
#include "atlas/model.hpp"

namespace th {

inline atlas::ModelNode node(const std::string& id, std::int64_t t, std::uint64_t downloads = 0) {
    atlas::ModelNode n;
    n.id = atlas::ModelId(id);
    n.created_at = t;
    n.downloads = downloads;
    return n;
}

// Nodes "a", "b", ... at times 10, 20, ...; edges as (parent, child) letters.
inline atlas::Atlas letters(std::size_t n, std::initializer_list<std::pair<char, char>> edges,
                            atlas::EdgeKind kind = atlas::EdgeKind::FineTune) {
    atlas::Atlas g;
    for (std::size_t i = 0; i < n; ++i) {
        g.add_node(node(std::string(1, static_cast<char>('a' + i)), 10 * static_cast<std::int64_t>(i + 1), i + 1));
    }
    for (auto [p, c] : edges) g.add_edge(atlas::ModelId(std::string(1, p)), atlas::ModelId(std::string(1, c)), kind);
    return g;
}

inline std::vector<std::string> strs(const std::vector<atlas::ModelId>& ids) {
    std::vector<std::string> out;
    for (const auto& id : ids) out.push_back(id.str());
    return out;
}

}  // namespace th
