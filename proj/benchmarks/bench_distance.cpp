#include <benchmark/benchmark.h>

#include "atlas/distance.hpp"
#include "atlas/rng.hpp"

namespace {

std::vector<atlas::Fingerprint> random_fingerprints(std::size_t n, std::size_t dim) {
    atlas::Rng rng(42);
    std::vector<atlas::Fingerprint> fps(n);
    for (std::size_t i = 0; i < n; ++i) {
        fps[i].id = atlas::ModelId("m" + std::to_string(i));
        fps[i].dim = dim;
        fps[i].selector = "*";
        fps[i].values.resize(dim);
        for (auto& v : fps[i].values) v = rng.normal();
    }
    return fps;
}

void BM_DistanceMatrix(benchmark::State& state) {
    const auto fps = random_fingerprints(static_cast<std::size_t>(state.range(0)), 100);
    atlas::DistanceOptions opt;
    opt.threads = static_cast<std::size_t>(state.range(1));
    for (auto _ : state) {
        auto m = atlas::compute_distance_matrix(fps, {}, opt);
        benchmark::DoNotOptimize(m.row(0));
    }
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DistanceMatrix)
    ->ArgsProduct({{500, 1000, 2000, 4000}, {1, 0}})
    ->ArgNames({"n", "threads"})
    ->Unit(benchmark::kMillisecond);

void BM_Knn(benchmark::State& state) {
    const auto fps = random_fingerprints(static_cast<std::size_t>(state.range(0)), 100);
    auto m = atlas::compute_distance_matrix(fps);
    std::size_t q = 0;
    for (auto _ : state) {
        auto nb = atlas::knn_indices(m, q, 5);
        benchmark::DoNotOptimize(nb.data());
        q = (q + 1) % m.size();
    }
}
BENCHMARK(BM_Knn)->Arg(1000)->Arg(4000)->ArgName("n");

}  // namespace

BENCHMARK_MAIN();
