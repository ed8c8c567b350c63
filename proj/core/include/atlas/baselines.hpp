#pragma once

#include <cstdint>
#include <vector>

#include "atlas/distance.hpp"
#include "atlas/graph.hpp"

namespace atlas {

// Nodes whose true edges are given to every method, and the rest on which
// methods are scored. stem_atlas holds every node plus the true edges into
// stem nodes.
struct StemSplit {
    Atlas stem_atlas;
    std::vector<ModelId> stem;  // (created_at, id) order
    std::vector<ModelId> eval;  // (created_at, id) order
    std::vector<char> in_stem;  // indexed like stem_atlas.nodes()
};

struct SplitPolicy {
    enum class Kind { Earliest, RandomConnected } kind = Kind::Earliest;
    std::uint64_t seed = 0;

    static SplitPolicy earliest() { return {}; }
    static SplitPolicy random_connected(std::uint64_t seed) { return {Kind::RandomConnected, seed}; }
};

// Stem = earliest ceil(fraction * n) nodes (capped so eval keeps at least one
// node), plus every source, closed under ancestors so each stem node reaches a
// source inside the stem.
StemSplit make_split(const Atlas& truth, double fraction, SplitPolicy policy = {});

Atlas baseline_random(const StemSplit& split, std::uint64_t seed);
Atlas baseline_random_root(const StemSplit& split);
Atlas baseline_majority(const StemSplit& split);
Atlas baseline_price(const StemSplit& split, std::uint64_t seed, double c = 1.0);

// Excess kurtosis of the fingerprint values.
double kurtosis(const std::vector<double>& values);

// Undirected minimum spanning tree over D, rooted at the stem source with the
// highest fingerprint kurtosis and oriented away from it. Every node of the
// split must have a fingerprint and a matrix row.
Atlas baseline_mst_kurtosis(const std::vector<Fingerprint>& fingerprints, const DistanceMatrix& matrix,
                            const StemSplit& split);

}  // namespace atlas
