#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "atlas/graph.hpp"

namespace atlas {

// Every edge (u,v) has u before v; ties by (created_at, id).
std::vector<ModelId> topological_order(const Atlas& atlas);
std::vector<std::size_t> topological_indices(const Atlas& atlas);

// Reachable nodes excluding id, sorted by (created_at, id).
std::vector<ModelId> descendants(const Atlas& atlas, const ModelId& id);

std::uint64_t subtree_downloads(const Atlas& atlas, const ModelId& id);

enum class DepthMode { LongestPath, ShortestPath };

// Per-node depth indexed like atlas.nodes(); sources have depth 0.
std::vector<std::size_t> node_depths(const Atlas& atlas, DepthMode mode = DepthMode::LongestPath);
std::map<std::size_t, std::size_t> depth_histogram(const Atlas& atlas,
                                                   DepthMode mode = DepthMode::LongestPath);

struct Hub {
    std::vector<ModelId> parents;
    std::vector<ModelId> members;
};

// Leaves grouped by their exact nonempty parent set; groups of one are dropped.
std::vector<Hub> hubs(const Atlas& atlas);

std::optional<std::size_t> undirected_hop_distance(const Atlas& atlas, const ModelId& a, const ModelId& b);

// Hop distances from one node to every node; nullopt where unreachable.
std::vector<std::optional<std::size_t>> undirected_hops_from(const Atlas& atlas, std::size_t source);

std::vector<ModelId> sources(const Atlas& atlas);
std::vector<ModelId> leaves(const Atlas& atlas);

// Reconstructs a deleted model as a placeholder parent of the given children.
// created_at is one second before the earliest child.
void add_placeholder_parent(Atlas& atlas, const ModelId& id, const std::vector<ModelId>& children,
                            EdgeKind kind = EdgeKind::Unknown);

struct AtlasStats {
    std::size_t nodes = 0;
    std::size_t edges = 0;
    std::size_t sources = 0;
    std::map<std::size_t, std::size_t> depth_histogram;
    std::size_t hub_count = 0;
    double hub_coverage = 0.0;             // share of all nodes inside some hub
    std::size_t quantized_nodes = 0;
    double quantized_leaf_fraction = 1.0;  // 1 when there are no quantized nodes
    double temporal_consistency = 1.0;     // share of edges with parent time <= child time
};

AtlasStats compute_stats(const Atlas& atlas);

}  // namespace atlas
