#include "atlas/analytics.hpp"

#include <algorithm>
#include <deque>
#include <limits>
#include <queue>

#include "atlas/error.hpp"

namespace atlas {

std::vector<std::size_t> topological_indices(const Atlas& atlas) {
    const auto n = atlas.size();
    const auto& nodes = atlas.nodes();
    auto later = [&](std::size_t a, std::size_t b) { return earlier(nodes[b], nodes[a]); };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(later)> ready(later);
    std::vector<std::size_t> pending(n);
    for (std::size_t i = 0; i < n; ++i) {
        pending[i] = atlas.in_degree(i);
        if (pending[i] == 0) ready.push(i);
    }
    std::vector<std::size_t> order;
    order.reserve(n);
    while (!ready.empty()) {
        auto v = ready.top();
        ready.pop();
        order.push_back(v);
        for (const auto& link : atlas.out_links(v)) {
            if (--pending[link.node] == 0) ready.push(link.node);
        }
    }
    return order;
}

std::vector<ModelId> topological_order(const Atlas& atlas) {
    std::vector<ModelId> out;
    for (auto i : topological_indices(atlas)) out.push_back(atlas.node_at(i).id);
    return out;
}

namespace {

std::vector<char> reach_mask(const Atlas& atlas, std::size_t start) {
    std::vector<char> seen(atlas.size(), 0);
    std::vector<std::size_t> stack{start};
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        for (const auto& link : atlas.out_links(v)) {
            if (!seen[link.node]) {
                seen[link.node] = 1;
                stack.push_back(link.node);
            }
        }
    }
    return seen;
}

}  // namespace

std::vector<ModelId> descendants(const Atlas& atlas, const ModelId& id) {
    auto seen = reach_mask(atlas, atlas.index_of(id));
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (seen[i]) idx.push_back(i);
    }
    std::sort(idx.begin(), idx.end(),
              [&](std::size_t a, std::size_t b) { return earlier(atlas.node_at(a), atlas.node_at(b)); });
    std::vector<ModelId> out;
    for (auto i : idx) out.push_back(atlas.node_at(i).id);
    return out;
}

std::uint64_t subtree_downloads(const Atlas& atlas, const ModelId& id) {
    auto root = atlas.index_of(id);
    auto seen = reach_mask(atlas, root);
    std::uint64_t total = atlas.node_at(root).downloads;
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (seen[i]) total += atlas.node_at(i).downloads;
    }
    return total;
}

std::vector<std::size_t> node_depths(const Atlas& atlas, DepthMode mode) {
    const auto n = atlas.size();
    std::vector<std::size_t> depth(n, 0);
    if (mode == DepthMode::LongestPath) {
        for (auto v : topological_indices(atlas)) {
            for (const auto& link : atlas.out_links(v)) {
                depth[link.node] = std::max(depth[link.node], depth[v] + 1);
            }
        }
        return depth;
    }
    // Multi-source BFS from all sources along directed edges.
    constexpr auto kUnset = std::numeric_limits<std::size_t>::max();
    std::fill(depth.begin(), depth.end(), kUnset);
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < n; ++i) {
        if (atlas.in_degree(i) == 0) {
            depth[i] = 0;
            queue.push_back(i);
        }
    }
    while (!queue.empty()) {
        auto v = queue.front();
        queue.pop_front();
        for (const auto& link : atlas.out_links(v)) {
            if (depth[link.node] == kUnset) {
                depth[link.node] = depth[v] + 1;
                queue.push_back(link.node);
            }
        }
    }
    return depth;
}

std::map<std::size_t, std::size_t> depth_histogram(const Atlas& atlas, DepthMode mode) {
    std::map<std::size_t, std::size_t> hist;
    for (auto d : node_depths(atlas, mode)) ++hist[d];
    return hist;
}

std::vector<Hub> hubs(const Atlas& atlas) {
    std::map<std::vector<std::size_t>, std::vector<std::size_t>> groups;
    for (auto i : atlas.time_order()) {
        if (atlas.out_degree(i) != 0 || atlas.in_degree(i) == 0) continue;
        auto key = atlas.parent_indices(i);
        std::sort(key.begin(), key.end());
        groups[key].push_back(i);
    }
    std::vector<Hub> out;
    for (const auto& [key, members] : groups) {
        if (members.size() < 2) continue;
        Hub hub;
        for (auto p : atlas.parent_indices(members.front())) hub.parents.push_back(atlas.node_at(p).id);
        for (auto m : members) hub.members.push_back(atlas.node_at(m).id);
        out.push_back(std::move(hub));
    }
    std::sort(out.begin(), out.end(), [&](const Hub& a, const Hub& b) {
        return earlier(atlas.node(a.members.front()), atlas.node(b.members.front()));
    });
    return out;
}

std::vector<std::optional<std::size_t>> undirected_hops_from(const Atlas& atlas, std::size_t source) {
    std::vector<std::optional<std::size_t>> dist(atlas.size());
    std::deque<std::size_t> queue{source};
    dist[source] = 0;
    while (!queue.empty()) {
        auto v = queue.front();
        queue.pop_front();
        auto visit = [&](std::size_t w) {
            if (!dist[w]) {
                dist[w] = *dist[v] + 1;
                queue.push_back(w);
            }
        };
        for (const auto& link : atlas.out_links(v)) visit(link.node);
        for (const auto& link : atlas.in_links(v)) visit(link.node);
    }
    return dist;
}

std::optional<std::size_t> undirected_hop_distance(const Atlas& atlas, const ModelId& a, const ModelId& b) {
    auto ia = atlas.index_of(a);
    auto ib = atlas.index_of(b);
    return undirected_hops_from(atlas, ia)[ib];
}

std::vector<ModelId> sources(const Atlas& atlas) {
    std::vector<ModelId> out;
    for (auto i : atlas.time_order()) {
        if (atlas.in_degree(i) == 0) out.push_back(atlas.node_at(i).id);
    }
    return out;
}

std::vector<ModelId> leaves(const Atlas& atlas) {
    std::vector<ModelId> out;
    for (auto i : atlas.time_order()) {
        if (atlas.out_degree(i) == 0) out.push_back(atlas.node_at(i).id);
    }
    return out;
}

void add_placeholder_parent(Atlas& atlas, const ModelId& id, const std::vector<ModelId>& children, EdgeKind kind) {
    if (children.empty()) fail(ErrorCode::InvalidArgument, "placeholder needs at least one child");
    auto first = std::numeric_limits<std::int64_t>::max();
    for (const auto& c : children) first = std::min(first, atlas.node(c).created_at);
    ModelNode node;
    node.id = id;
    node.placeholder = true;
    node.created_at = first - 1;
    atlas.add_node(std::move(node));
    for (const auto& c : children) atlas.add_edge(id, c, kind);
}

AtlasStats compute_stats(const Atlas& atlas) {
    AtlasStats s;
    s.nodes = atlas.size();
    s.edges = atlas.edge_count();
    s.depth_histogram = depth_histogram(atlas);
    for (std::size_t i = 0; i < atlas.size(); ++i) {
        if (atlas.in_degree(i) == 0) ++s.sources;
    }
    auto hs = hubs(atlas);
    s.hub_count = hs.size();
    std::size_t in_hub = 0;
    for (const auto& h : hs) in_hub += h.members.size();
    s.hub_coverage = s.nodes ? static_cast<double>(in_hub) / static_cast<double>(s.nodes) : 0.0;

    std::size_t quantized_leaves = 0;
    for (std::size_t i = 0; i < atlas.size(); ++i) {
        if (!atlas.node_at(i).quantized) continue;
        ++s.quantized_nodes;
        if (atlas.out_degree(i) == 0) ++quantized_leaves;
    }
    if (s.quantized_nodes) {
        s.quantized_leaf_fraction = static_cast<double>(quantized_leaves) / static_cast<double>(s.quantized_nodes);
    }
    if (s.edges) {
        std::size_t ok = 0;
        for (const auto& e : atlas.edges()) {
            if (atlas.node(e.parent).created_at <= atlas.node(e.child).created_at) ++ok;
        }
        s.temporal_consistency = static_cast<double>(ok) / static_cast<double>(s.edges);
    }
    return s;
}

}  // namespace atlas
