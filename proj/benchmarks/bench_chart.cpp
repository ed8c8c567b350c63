#include <benchmark/benchmark.h>

#include "atlas/baselines.hpp"
#include "atlas/charting.hpp"
#include "atlas/syngen.hpp"

namespace {

struct Prepared {
    std::vector<atlas::ModelNode> nodes;
    atlas::DistanceMatrix matrix;
};

Prepared prepare(std::size_t n) {
    atlas::SyntheticSpec spec;
    spec.component_size = {static_cast<std::int64_t>(n), static_cast<std::int64_t>(n)};
    spec.seed = 1;
    auto corpus = atlas::generate(spec);
    Prepared p{atlas::observed_metadata(corpus), {}};
    atlas::apply_quantization_detection(p.nodes, corpus.fingerprints);
    std::unordered_map<atlas::ModelId, std::int64_t> times;
    for (const auto& node : p.nodes) times[node.id] = node.created_at;
    atlas::DistanceOptions opt;
    opt.normalization = atlas::Normalization::UnitNorm;
    p.matrix = atlas::compute_distance_matrix(corpus.fingerprints, times, opt);
    return p;
}

// Charting alone, on a precomputed matrix.
void BM_Chart(benchmark::State& state) {
    const auto p = prepare(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        auto atlas = atlas::chart(p.nodes, p.matrix);
        benchmark::DoNotOptimize(atlas.edge_count());
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Chart)->Arg(500)->Arg(1000)->Arg(2000)->Arg(4000)->Unit(benchmark::kMillisecond)->Complexity();

void BM_MstBaseline(benchmark::State& state) {
    atlas::SyntheticSpec spec;
    spec.component_size = {state.range(0), state.range(0)};
    spec.seed = 1;
    auto corpus = atlas::generate(spec);
    auto split = atlas::make_split(corpus.truth, 0.1);
    auto matrix = atlas::compute_distance_matrix(corpus.fingerprints);
    for (auto _ : state) {
        auto a = atlas::baseline_mst_kurtosis(corpus.fingerprints, matrix, split);
        benchmark::DoNotOptimize(a.edge_count());
    }
}
BENCHMARK(BM_MstBaseline)->Arg(1000)->Arg(2000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
