#include "atlas/graph.hpp"

#include <algorithm>
#include <numeric>
#include <set>

#include "atlas/error.hpp"

namespace atlas {

void Atlas::add_node(ModelNode node) {
    validate_node(node);
    if (index_.count(node.id)) fail(ErrorCode::DuplicateId, "node '" + node.id.str() + "' already present");
    index_.emplace(node.id, nodes_.size());
    nodes_.push_back(std::move(node));
    out_.emplace_back();
    in_.emplace_back();
}

std::size_t Atlas::index_of(const ModelId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) fail(ErrorCode::UnknownId, "no node '" + id.str() + "'");
    return it->second;
}

std::optional<std::size_t> Atlas::find(const ModelId& id) const {
    auto it = index_.find(id);
    if (it == index_.end()) return std::nullopt;
    return it->second;
}

bool Atlas::would_create_cycle(std::size_t parent, std::size_t child) const {
    if (parent == child) return true;
    // Search forward from child; reaching parent means the new edge closes a loop.
    std::vector<char> seen(nodes_.size(), 0);
    std::vector<std::size_t> stack{child};
    seen[child] = 1;
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        for (const auto& link : out_[v]) {
            if (link.node == parent) return true;
            if (!seen[link.node]) {
                seen[link.node] = 1;
                stack.push_back(link.node);
            }
        }
    }
    return false;
}

void Atlas::add_edge(Edge edge) {
    auto p = find(edge.parent);
    auto c = find(edge.child);
    if (!p || !c) {
        fail(ErrorCode::UnknownEndpoint,
             "edge " + edge.parent.str() + " -> " + edge.child.str() + " has an unknown endpoint");
    }
    for (const auto& link : in_[*c]) {
        if (link.node == *p) {
            fail(ErrorCode::DuplicateEdge, "edge " + edge.parent.str() + " -> " + edge.child.str() + " exists");
        }
    }
    if (edge.kind != EdgeKind::Merge) {
        for (const auto& link : in_[*c]) {
            if (edges_[link.edge].kind != EdgeKind::Merge) {
                fail(ErrorCode::IllegalMultiParent,
                     "node '" + edge.child.str() + "' already has a non-merge parent");
            }
        }
    }
    if (would_create_cycle(*p, *c)) {
        fail(ErrorCode::CycleCreated, "edge " + edge.parent.str() + " -> " + edge.child.str() + " closes a cycle");
    }
    auto e = edges_.size();
    edges_.push_back(std::move(edge));
    out_[*p].push_back({*c, e});
    in_[*c].push_back({*p, e});
}

namespace {

std::vector<ModelId> sorted_ids(const std::vector<ModelNode>& nodes, std::vector<std::size_t> idx) {
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return earlier(nodes[a], nodes[b]); });
    std::vector<ModelId> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(nodes[i].id);
    return out;
}

}  // namespace

std::vector<std::size_t> Atlas::parent_indices(std::size_t i) const {
    std::vector<std::size_t> out;
    for (const auto& link : in_[i]) out.push_back(link.node);
    std::sort(out.begin(), out.end(),
              [&](std::size_t a, std::size_t b) { return earlier(nodes_[a], nodes_[b]); });
    return out;
}

std::vector<ModelId> Atlas::parents(const ModelId& id) const {
    std::vector<std::size_t> idx;
    for (const auto& link : in_[index_of(id)]) idx.push_back(link.node);
    return sorted_ids(nodes_, std::move(idx));
}

std::vector<ModelId> Atlas::children(const ModelId& id) const {
    std::vector<std::size_t> idx;
    for (const auto& link : out_[index_of(id)]) idx.push_back(link.node);
    return sorted_ids(nodes_, std::move(idx));
}

std::optional<EdgeKind> Atlas::edge_kind(const ModelId& parent, const ModelId& child) const {
    auto p = find(parent);
    auto c = find(child);
    if (!p || !c) return std::nullopt;
    for (const auto& link : in_[*c]) {
        if (link.node == *p) return edges_[link.edge].kind;
    }
    return std::nullopt;
}

std::vector<std::size_t> Atlas::time_order() const {
    std::vector<std::size_t> order(nodes_.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return earlier(nodes_[a], nodes_[b]); });
    return order;
}

bool Atlas::same_structure(const Atlas& other) const {
    if (size() != other.size() || edge_count() != other.edge_count()) return false;
    for (const auto& n : nodes_) {
        if (!other.contains(n.id)) return false;
    }
    for (const auto& e : edges_) {
        auto kind = other.edge_kind(e.parent, e.child);
        if (!kind || *kind != e.kind) return false;
    }
    return true;
}

bool Atlas::operator==(const Atlas& other) const {
    if (!same_structure(other)) return false;
    for (const auto& n : nodes_) {
        if (!(other.node(n.id) == n)) return false;
    }
    return true;
}

}  // namespace atlas
