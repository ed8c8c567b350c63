#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "atlas/analytics.hpp"
#include "atlas/baselines.hpp"
#include "atlas/distance.hpp"
#include "atlas/error.hpp"
#include "atlas/syngen.hpp"
#include "helpers.hpp"

using namespace atlas;

namespace {

Fingerprint point(const std::string& id, double x, double y) {
    Fingerprint f;
    f.id = ModelId(id);
    f.dim = 2;
    f.values = {x, y};
    f.selector = "*";
    return f;
}

DistanceMatrix raw_matrix(const Atlas& g, const std::vector<Fingerprint>& fps) {
    std::unordered_map<ModelId, std::int64_t> t;
    for (const auto& n : g.nodes()) t[n.id] = n.created_at;
    return compute_distance_matrix(fps, t);
}

SyntheticCorpus small_corpus(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.component_size = {120, 120};
    spec.dim = 20;
    spec.seed = seed;
    return generate(spec);
}

// Every eval node gets exactly one parent that comes strictly earlier; stem
// edges are untouched.
void check_valid_baseline(const Atlas& predicted, const StemSplit& split) {
    REQUIRE(predicted.size() == split.stem_atlas.size());
    for (const auto& id : split.stem) CHECK(predicted.parents(id) == split.stem_atlas.parents(id));
    for (const auto& id : split.eval) {
        auto ps = predicted.parents(id);
        REQUIRE(ps.size() == 1);
        CHECK(earlier(predicted.node(ps.front()), predicted.node(id)));
    }
    CHECK(topological_order(predicted).size() == predicted.size());
}

}  // namespace

TEST_CASE("earliest split of a ten-node chain keeps only the source") {
    auto g = th::letters(10, {{'a', 'b'}, {'b', 'c'}, {'c', 'd'}, {'d', 'e'}, {'e', 'f'},
                              {'f', 'g'}, {'g', 'h'}, {'h', 'i'}, {'i', 'j'}});
    auto split = make_split(g, 0.1);
    CHECK(th::strs(split.stem) == std::vector<std::string>{"a"});
    CHECK(split.eval.size() == 9);
    CHECK(split.stem_atlas.edge_count() == 0);
}

TEST_CASE("split closes the stem under ancestors and keeps late sources") {
    // a -> c -> d, b -> d (merge), e is a late source.
    auto g = th::letters(5, {{'a', 'c'}, {'c', 'd'}, {'b', 'd'}}, EdgeKind::Merge);
    auto split = make_split(g, 0.2);
    std::set<std::string> stem;
    for (const auto& id : split.stem) stem.insert(id.str());
    CHECK(stem == std::set<std::string>{"a", "b", "e"});
    CHECK(split.stem.size() + split.eval.size() == 5);
}

TEST_CASE("a split fraction near one still leaves something to score") {
    auto g = th::letters(6, {{'a', 'b'}, {'b', 'c'}, {'c', 'd'}, {'d', 'e'}, {'e', 'f'}});
    auto split = make_split(g, 0.999);
    CHECK(split.eval.size() >= 1);
    CHECK_THROWS_AS(make_split(g, 0.0), Error);
    CHECK_THROWS_AS(make_split(g, 1.0), Error);
}

TEST_CASE("random connected split is ancestor closed") {
    auto c = small_corpus(3);
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto split = make_split(c.truth, 0.3, SplitPolicy::random_connected(seed));
        CHECK(split.stem.size() >= static_cast<std::size_t>(std::ceil(0.3 * 120.0)));
        for (const auto& id : split.stem) {
            for (const auto& p : c.truth.parents(id)) CHECK(split.in_stem[c.truth.index_of(p)]);
        }
        // Different seeds differ somewhere, the same seed does not.
        auto again = make_split(c.truth, 0.3, SplitPolicy::random_connected(seed));
        CHECK(again.stem == split.stem);
    }
}

TEST_CASE("baselines give every eval node one earlier parent") {
    auto c = small_corpus(11);
    auto split = make_split(c.truth, 0.1);
    check_valid_baseline(baseline_random(split, 5), split);
    check_valid_baseline(baseline_price(split, 5), split);
    check_valid_baseline(baseline_majority(split), split);
    check_valid_baseline(baseline_random_root(split), split);
    CHECK(baseline_random(split, 5) == baseline_random(split, 5));
    CHECK_THROWS_AS(baseline_price(split, 5, 0.0), Error);
}

TEST_CASE("majority and random-root attach to the expected hub") {
    // Stem: a with two children b, c; d and e follow.
    auto g = th::letters(5, {{'a', 'b'}, {'a', 'c'}, {'c', 'd'}, {'c', 'e'}});
    auto split = make_split(g, 0.6);
    REQUIRE(th::strs(split.stem) == std::vector<std::string>{"a", "b", "c"});
    auto maj = baseline_majority(split);
    CHECK(th::strs(maj.parents(ModelId("d"))) == std::vector<std::string>{"a"});
    auto rr = baseline_random_root(split);
    CHECK(th::strs(rr.parents(ModelId("e"))) == std::vector<std::string>{"a"});
}

TEST_CASE("excess kurtosis") {
    CHECK(kurtosis({1, 2, 3, 4, 5}) == doctest::Approx(-1.3));
    CHECK(kurtosis({7, 7, 7}) == 0.0);
    CHECK(kurtosis({1}) == 0.0);
    // Two-point symmetric distribution: m4 / m2^2 = 1.
    CHECK(kurtosis({-1, 1, -1, 1}) == doctest::Approx(-2.0));
}

TEST_CASE("MST baseline on points along a line recovers the chain") {
    auto g = th::letters(6, {{'a', 'b'}, {'b', 'c'}, {'c', 'd'}, {'d', 'e'}, {'e', 'f'}});
    std::vector<Fingerprint> fps;
    for (std::size_t i = 0; i < 6; ++i) {
        fps.push_back(point(std::string(1, static_cast<char>('a' + i)), static_cast<double>(i * i), 0.0));
    }
    auto split = make_split(g, 0.1);
    auto m = raw_matrix(g, fps);
    auto mst = baseline_mst_kurtosis(fps, m, split);
    CHECK(mst.edge_count() == 5);
    for (std::size_t i = 1; i < 6; ++i) {
        std::string child(1, static_cast<char>('a' + i));
        std::string parent(1, static_cast<char>('a' + i - 1));
        CHECK(th::strs(mst.parents(ModelId(child))) == std::vector<std::string>{parent});
    }
}

TEST_CASE("MST baseline needs a matrix row for every node") {
    auto g = th::letters(3, {});
    std::vector<Fingerprint> fps{point("a", 0, 0), point("b", 1, 0)};
    auto split = make_split(g, 0.1);
    auto m = raw_matrix(g, fps);
    CHECK_THROWS_AS(baseline_mst_kurtosis(fps, m, split), Error);
}
