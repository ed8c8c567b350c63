#pragma once

// Brute-force reference implementations. They share no code with the library
// beyond the data types, so agreement means something.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <utility>
#include <vector>

#include "atlas/distance.hpp"
#include "atlas/fingerprint.hpp"
#include "atlas/graph.hpp"
#include "atlas/rng.hpp"

namespace oracle {

inline std::vector<double> unit(std::vector<double> v) {
    double sq = 0.0;
    for (std::size_t k = 0; k < v.size(); ++k) sq += v[k] * v[k];
    if (sq > 0.0) {
        const double inv = 1.0 / std::sqrt(sq);
        for (auto& x : v) x *= inv;
    }
    return v;
}

// Plain double loop over fingerprint pairs, keyed by id pair (smaller id first).
inline std::map<std::pair<std::string, std::string>, double> pairwise(const std::vector<atlas::Fingerprint>& fps,
                                                                       bool unit_norm) {
    std::map<std::pair<std::string, std::string>, double> out;
    for (std::size_t a = 0; a < fps.size(); ++a) {
        for (std::size_t b = 0; b < fps.size(); ++b) {
            if (a == b) continue;
            auto x = unit_norm ? unit(fps[a].values) : fps[a].values;
            auto y = unit_norm ? unit(fps[b].values) : fps[b].values;
            double s = 0.0;
            for (std::size_t k = 0; k < x.size(); ++k) s += (x[k] - y[k]) * (x[k] - y[k]);
            out[{fps[a].id.str(), fps[b].id.str()}] = s;
        }
    }
    return out;
}

// Transitive closure by repeated relaxation, then a downloads sum per node.
inline std::vector<std::uint64_t> subtree_downloads(const atlas::Atlas& g) {
    const auto n = g.size();
    std::vector<std::vector<char>> reach(n, std::vector<char>(n, 0));
    for (std::size_t i = 0; i < n; ++i) reach[i][i] = 1;
    for (const auto& e : g.edges()) reach[g.index_of(e.parent)][g.index_of(e.child)] = 1;
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            if (reach[i][k])
                for (std::size_t j = 0; j < n; ++j)
                    if (reach[k][j]) reach[i][j] = 1;
    std::vector<std::uint64_t> out(n, 0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j)
            if (reach[i][j]) out[i] += g.node_at(j).downloads;
    return out;
}

// Every candidate sorted by (distance, index), first K kept.
inline std::vector<std::size_t> knn(const atlas::DistanceMatrix& m, std::size_t q, std::size_t K, bool earlier_only) {
    std::vector<std::pair<double, std::size_t>> all;
    for (std::size_t j = 0; j < m.size(); ++j) {
        if (j == q || m.masked(j)) continue;
        if (earlier_only && j >= q) continue;
        all.emplace_back(m(q, j), j);
    }
    std::sort(all.begin(), all.end());
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < all.size() && i < K; ++i) out.push_back(all[i].second);
    return out;
}

// Random DAG: node i draws parents among earlier nodes; extra parents come in as Merge edges.
inline atlas::Atlas random_dag(std::size_t n, std::uint64_t seed, double merge_chance = 0.1) {
    atlas::Rng rng(seed);
    atlas::Atlas g;
    for (std::size_t i = 0; i < n; ++i) {
        atlas::ModelNode node;
        node.id = atlas::ModelId("n" + std::to_string(1000 + i));
        node.created_at = 1000 + static_cast<std::int64_t>(i) * 10;
        node.downloads = rng.uniform_index(1000);
        g.add_node(node);
        if (i == 0 || rng.bernoulli(0.1)) continue;
        const bool merge = i >= 2 && rng.bernoulli(merge_chance);
        if (merge) {
            auto ps = rng.sample_without_replacement(i, 2);
            for (auto p : ps) g.add_edge(g.node_at(p).id, node.id, atlas::EdgeKind::Merge);
        } else {
            g.add_edge(g.node_at(rng.uniform_index(i)).id, node.id, atlas::EdgeKind::FineTune);
        }
    }
    return g;
}

}  // namespace oracle
