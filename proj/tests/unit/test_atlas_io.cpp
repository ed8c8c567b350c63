#include <doctest.h>

#include <filesystem>

#include "atlas/atlas_io.hpp"
#include "atlas/error.hpp"
#include "atlas/syngen.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace atlas;

TEST_CASE("atlas JSON round-trip") {
    auto g = oracle::random_dag(40, 3, 0.2);
    g.mutable_node_at(2).attributes["license"] = "mit";
    g.mutable_node_at(2).attributes["pipeline_tag"] = std::nullopt;
    g.mutable_node_at(3).metrics["score"] = 0.125;
    g.mutable_node_at(4).quantized = true;
    g.mutable_node_at(5).known_parents = std::vector<ModelId>{ModelId("n1000")};
    auto back = atlas_from_json(atlas_to_json(g));
    CHECK(back == g);
    CHECK(atlas_to_json(back) == atlas_to_json(g));

    const auto path = std::filesystem::temp_directory_path() / "atlas_unit_roundtrip.json";
    save_atlas(g, path);
    CHECK(load_atlas(path) == g);
    std::filesystem::remove(path);
}

TEST_CASE("generator truth round-trips") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
        SyntheticSpec spec;
        spec.seed = seed;
        spec.component_size = {200, 200};
        auto corpus = generate(spec);
        CHECK(atlas_from_json(atlas_to_json(corpus.truth)) == corpus.truth);
    }
}

TEST_CASE("empty atlas") {
    Atlas empty;
    CHECK(atlas_from_json(atlas_to_json(empty)).empty());
}

TEST_CASE("bad atlas documents") {
    CHECK_THROWS_AS(atlas_from_json("{"), Error);
    CHECK_THROWS_AS(atlas_from_json(R"({"nodes":[],"edges":[{"parent":"a","child":"b","kind":"FineTune"}]})"), Error);
    CHECK_THROWS_AS(load_atlas("/nonexistent/atlas.json"), Error);
    try {
        load_atlas("/nonexistent/atlas.json");
    } catch (const Error& e) {
        CHECK(e.code() == ErrorCode::IoError);
    }
}

TEST_CASE("node lines") {
    auto n = th::node("org/x", 77, 9);
    n.attributes["license"] = "apache-2.0";
    n.metrics["acc"] = std::nullopt;
    CHECK(node_from_json_line(node_to_json_line(n)) == n);
}
