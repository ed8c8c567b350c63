#include <benchmark/benchmark.h>

#include "atlas/imputation.hpp"
#include "atlas/rng.hpp"
#include "atlas/syngen.hpp"

namespace {

void BM_MetricKnn(benchmark::State& state) {
    atlas::SyntheticSpec spec;
    spec.component_size = {state.range(0), state.range(0)};
    spec.seed = 3;
    auto corpus = atlas::generate(spec);
    atlas::Rng rng(9);
    auto labels = atlas::labels_from_atlas(corpus.truth, "score");
    // Keep one node in five labelled.
    for (auto it = labels.labels.begin(); it != labels.labels.end();) {
        it = rng.uniform01() < 0.8 ? labels.labels.erase(it) : std::next(it);
    }
    for (auto _ : state) {
        auto preds = atlas::impute_metric_knn(corpus.truth, labels, 5);
        benchmark::DoNotOptimize(preds.data());
    }
}
BENCHMARK(BM_MetricKnn)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

void BM_HubVote(benchmark::State& state) {
    atlas::SyntheticSpec spec;
    spec.component_size = {state.range(0), state.range(0)};
    spec.seed = 3;
    auto corpus = atlas::generate(spec);
    for (auto _ : state) {
        auto preds = atlas::impute_attribute_hub(corpus.truth, "license");
        benchmark::DoNotOptimize(preds.data());
    }
}
BENCHMARK(BM_HubVote)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
