#include "atlas/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <unordered_map>

#include "atlas/analytics.hpp"
#include "atlas/error.hpp"
#include "atlas/rng.hpp"

namespace atlas {

namespace {

Atlas nodes_only(const Atlas& source) {
    Atlas out;
    for (const auto& n : source.nodes()) out.add_node(n);
    return out;
}

void close_under_ancestors(const Atlas& truth, std::vector<char>& in_stem) {
    std::vector<std::size_t> stack;
    for (std::size_t i = 0; i < in_stem.size(); ++i) {
        if (in_stem[i]) stack.push_back(i);
    }
    while (!stack.empty()) {
        auto v = stack.back();
        stack.pop_back();
        for (const auto& link : truth.in_links(v)) {
            if (!in_stem[link.node]) {
                in_stem[link.node] = 1;
                stack.push_back(link.node);
            }
        }
    }
}

}  // namespace

StemSplit make_split(const Atlas& truth, double fraction, SplitPolicy policy) {
    if (!(fraction > 0.0 && fraction < 1.0)) fail(ErrorCode::InvalidArgument, "split fraction must lie in (0, 1)");
    const auto n = truth.size();
    std::vector<char> in_stem(n, 0);
    auto target = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
    if (n > 1) target = std::min(target, n - 1);
    for (std::size_t i = 0; i < n; ++i) {
        if (truth.in_degree(i) == 0) in_stem[i] = 1;
    }
    const auto order = truth.time_order();
    if (policy.kind == SplitPolicy::Kind::Earliest) {
        for (std::size_t k = 0; k < target && k < n; ++k) in_stem[order[k]] = 1;
        close_under_ancestors(truth, in_stem);
    } else {
        // Grow from the sources: a node joins once all its parents are in, so the stem stays ancestor-closed.
        Rng rng(policy.seed);
        auto count = static_cast<std::size_t>(std::count(in_stem.begin(), in_stem.end(), 1));
        while (count < target) {
            std::vector<std::size_t> frontier;
            for (auto i : order) {
                if (in_stem[i]) continue;
                bool ready = true;
                for (const auto& link : truth.in_links(i)) ready = ready && in_stem[link.node];
                if (ready) frontier.push_back(i);
            }
            if (frontier.empty()) break;
            in_stem[frontier[rng.uniform_index(frontier.size())]] = 1;
            ++count;
        }
    }

    StemSplit split;
    split.stem_atlas = nodes_only(truth);
    split.in_stem.assign(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        // Index spaces agree because nodes_only preserves insertion order.
        split.in_stem[i] = in_stem[i];
    }
    for (auto i : order) (in_stem[i] ? split.stem : split.eval).push_back(truth.node_at(i).id);
    for (const auto& e : truth.edges()) {
        if (in_stem[truth.index_of(e.child)]) split.stem_atlas.add_edge(e);
    }
    return split;
}

namespace {

std::vector<std::size_t> eval_indices(const StemSplit& split) {
    std::vector<std::size_t> out;
    for (const auto& id : split.eval) out.push_back(split.stem_atlas.index_of(id));
    return out;
}

std::size_t root_of(const StemSplit& split) {
    const auto& a = split.stem_atlas;
    for (const auto& id : split.stem) {
        auto i = a.index_of(id);
        if (a.in_degree(i) == 0) return i;
    }
    fail(ErrorCode::EmptyInput, "stem has no source");
}

}  // namespace

Atlas baseline_random(const StemSplit& split, std::uint64_t seed) {
    Atlas out = split.stem_atlas;
    Rng rng(seed);
    const auto order = out.time_order();
    std::vector<std::size_t> rank(out.size());
    for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
    for (auto v : eval_indices(split)) {
        if (rank[v] == 0) continue;
        auto parent = order[rng.uniform_index(rank[v])];
        out.add_edge(out.node_at(parent).id, out.node_at(v).id, EdgeKind::Unknown);
    }
    return out;
}

Atlas baseline_random_root(const StemSplit& split) {
    Atlas out = split.stem_atlas;
    const auto root = root_of(split);
    for (auto v : eval_indices(split)) {
        if (v != root) out.add_edge(out.node_at(root).id, out.node_at(v).id, EdgeKind::Unknown);
    }
    return out;
}

Atlas baseline_majority(const StemSplit& split) {
    Atlas out = split.stem_atlas;
    std::size_t hub = root_of(split);
    for (const auto& id : split.stem) {
        auto i = out.index_of(id);
        // Stem ids are time ordered, so strict '>' keeps the earlier hub on ties.
        if (out.out_degree(i) > out.out_degree(hub)) hub = i;
    }
    for (auto v : eval_indices(split)) {
        if (v != hub) out.add_edge(out.node_at(hub).id, out.node_at(v).id, EdgeKind::Unknown);
    }
    return out;
}

Atlas baseline_price(const StemSplit& split, std::uint64_t seed, double c) {
    if (!(c > 0.0)) fail(ErrorCode::InvalidArgument, "Price constant c must be positive");
    Atlas out = split.stem_atlas;
    Rng rng(seed);
    const auto order = out.time_order();
    std::vector<std::size_t> rank(out.size());
    for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
    auto evals = eval_indices(split);
    std::sort(evals.begin(), evals.end(), [&](std::size_t a, std::size_t b) { return rank[a] < rank[b]; });
    std::vector<double> weights;
    for (auto v : evals) {
        if (rank[v] == 0) continue;
        weights.assign(rank[v], 0.0);
        for (std::size_t r = 0; r < rank[v]; ++r) weights[r] = static_cast<double>(out.out_degree(order[r])) + c;
        auto parent = order[rng.categorical(weights)];
        out.add_edge(out.node_at(parent).id, out.node_at(v).id, EdgeKind::Unknown);
    }
    return out;
}

double kurtosis(const std::vector<double>& values) {
    if (values.size() < 2) return 0.0;
    const auto n = static_cast<double>(values.size());
    double mean = 0.0;
    for (auto v : values) mean += v;
    mean /= n;
    double m2 = 0.0, m4 = 0.0;
    for (auto v : values) {
        double d = (v - mean) * (v - mean);
        m2 += d;
        m4 += d * d;
    }
    m2 /= n;
    m4 /= n;
    if (m2 <= 0.0) return 0.0;
    return m4 / (m2 * m2) - 3.0;
}

Atlas baseline_mst_kurtosis(const std::vector<Fingerprint>& fingerprints, const DistanceMatrix& matrix,
                            const StemSplit& split) {
    const auto& base = split.stem_atlas;
    const auto n = base.size();
    Atlas out = nodes_only(base);
    if (n == 0) return out;
    std::vector<std::size_t> mi(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto m = matrix.find(base.node_at(i).id);
        if (!m) fail(ErrorCode::MissingFingerprint, "no matrix row for '" + base.node_at(i).id.str() + "'");
        mi[i] = *m;
    }
    std::unordered_map<ModelId, const Fingerprint*> fp;
    for (const auto& f : fingerprints) fp[f.id] = &f;

    // Root: highest kurtosis among stem sources, falling back to the earliest stem node.
    std::size_t root = base.index_of(split.stem.front());
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& id : split.stem) {
        auto i = base.index_of(id);
        if (base.in_degree(i) != 0) continue;
        auto it = fp.find(id);
        if (it == fp.end()) continue;
        auto k = kurtosis(it->second->values);
        if (k > best) {
            best = k;
            root = i;
        }
    }

    // Prim's algorithm on the dense matrix, O(n^2).
    constexpr auto inf = std::numeric_limits<double>::infinity();
    std::vector<double> key(n, inf);
    std::vector<std::size_t> link(n, n);
    std::vector<char> done(n, 0);
    key[root] = 0.0;
    for (std::size_t step = 0; step < n; ++step) {
        std::size_t u = n;
        for (std::size_t v = 0; v < n; ++v) {
            if (!done[v] && (u == n || key[v] < key[u])) u = v;
        }
        if (!std::isfinite(key[u])) fail(ErrorCode::DisconnectedInput, "MST input is not connected");
        done[u] = 1;
        if (link[u] != n) out.add_edge(out.node_at(link[u]).id, out.node_at(u).id, EdgeKind::Unknown);
        const double* row = matrix.row(mi[u]);
        for (std::size_t v = 0; v < n; ++v) {
            if (done[v]) continue;
            double d = row[mi[v]];
            if (std::isfinite(d) && d < key[v]) {
                key[v] = d;
                link[v] = u;
            }
        }
    }
    return out;
}

}  // namespace atlas
