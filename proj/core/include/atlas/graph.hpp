#pragma once

#include <cstddef>
#include <optional>
#include <unordered_map>
#include <vector>

#include "atlas/model.hpp"

namespace atlas {

// The model DAG. Nodes are stored in insertion order and addressed either by
// ModelId or by a dense index; edges are checked for acyclicity and the
// Merge-only multi-parent rule as they are inserted.
class Atlas {
public:
    Atlas() = default;

    void add_node(ModelNode node);
    void add_edge(Edge edge);
    void add_edge(const ModelId& parent, const ModelId& child, EdgeKind kind) {
        add_edge(Edge{parent, child, kind});
    }

    // True when inserting parent->child would close a directed cycle.
    bool would_create_cycle(std::size_t parent, std::size_t child) const;

    std::size_t size() const noexcept { return nodes_.size(); }
    std::size_t edge_count() const noexcept { return edges_.size(); }
    bool empty() const noexcept { return nodes_.empty(); }

    bool contains(const ModelId& id) const { return index_.count(id) != 0; }
    std::size_t index_of(const ModelId& id) const;
    std::optional<std::size_t> find(const ModelId& id) const;

    const ModelNode& node(const ModelId& id) const { return nodes_[index_of(id)]; }
    const ModelNode& node_at(std::size_t i) const { return nodes_[i]; }
    ModelNode& mutable_node_at(std::size_t i) { return nodes_[i]; }
    const std::vector<ModelNode>& nodes() const noexcept { return nodes_; }
    const std::vector<Edge>& edges() const noexcept { return edges_; }

    // Dense adjacency: each entry is (neighbour index, edge index).
    struct Link {
        std::size_t node;
        std::size_t edge;
    };
    const std::vector<Link>& out_links(std::size_t i) const { return out_[i]; }
    const std::vector<Link>& in_links(std::size_t i) const { return in_[i]; }
    std::size_t in_degree(std::size_t i) const { return in_[i].size(); }
    std::size_t out_degree(std::size_t i) const { return out_[i].size(); }

    // Parents / children sorted by (created_at, id).
    std::vector<ModelId> parents(const ModelId& id) const;
    std::vector<ModelId> children(const ModelId& id) const;
    std::vector<std::size_t> parent_indices(std::size_t i) const;

    std::optional<EdgeKind> edge_kind(const ModelId& parent, const ModelId& child) const;

    // Node indices sorted by (created_at, id).
    std::vector<std::size_t> time_order() const;

    bool same_structure(const Atlas& other) const;
    bool operator==(const Atlas& other) const;

private:
    std::vector<ModelNode> nodes_;
    std::unordered_map<ModelId, std::size_t> index_;
    std::vector<Edge> edges_;
    std::vector<std::vector<Link>> out_;
    std::vector<std::vector<Link>> in_;
};

}  // namespace atlas
