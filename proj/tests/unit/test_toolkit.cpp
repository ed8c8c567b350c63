#include <doctest.h>

#include <cmath>
#include <regex>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>
#include <json.hpp>

#include "atlas/atlas_io.hpp"
#include "atlas/error.hpp"
#include "atlas/evaluation.hpp"
#include "atlas/export.hpp"
#include "gexf_check.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace atlas;
namespace pt = boost::property_tree;

namespace {

ErrorCode code_of_eval(const Atlas& predicted, const Atlas& truth, const StemSplit& split) {
    try {
        evaluate_charting(predicted, truth, split);
    } catch (const Error& e) {
        return e.code();
    }
    return ErrorCode::InvalidArgument;
}

std::size_t count(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
    return n;
}

}  // namespace

TEST_CASE("scoring the truth against itself is perfect") {
    auto g = th::letters(6, {{'a', 'b'}, {'a', 'c'}, {'b', 'd'}, {'c', 'e'}, {'d', 'f'}});
    auto split = make_split(g, 0.2);
    auto r = evaluate_charting(g, g, split);
    CHECK(r.accuracy == 1.0);
    CHECK(r.edge_recall == 1.0);
    CHECK(r.correct == r.eval_nodes);
    CHECK(r.stem_nodes + r.eval_nodes == r.nodes);
    CHECK(r.per_kind.at("FineTune").total == r.eval_nodes);
}

TEST_CASE("an atlas with every eval edge wrong scores zero") {
    auto g = th::letters(4, {{'a', 'b'}, {'b', 'c'}, {'c', 'd'}});
    auto split = make_split(g, 0.25);
    // Everything hangs off d's grandparent instead, apart from b which has no other option.
    Atlas wrong = split.stem_atlas;
    wrong.add_edge(ModelId("a"), ModelId("c"), EdgeKind::Unknown);
    wrong.add_edge(ModelId("a"), ModelId("d"), EdgeKind::Unknown);
    auto r = evaluate_charting(wrong, g, split);
    CHECK(r.eval_nodes == 3);
    CHECK(r.correct == 0);
    CHECK(r.accuracy == 0.0);
    CHECK(r.edge_recall == 0.0);
}

TEST_CASE("scoring rejects atlases over different node sets") {
    auto g = th::letters(3, {{'a', 'b'}, {'b', 'c'}});
    auto split = make_split(g, 0.3);
    CHECK(code_of_eval(th::letters(2, {{'a', 'b'}}), g, split) == ErrorCode::NodeSetMismatch);
    Atlas other;
    for (const char* id : {"a", "b", "x"}) other.add_node(th::node(id, 1));
    CHECK(code_of_eval(other, g, split) == ErrorCode::NodeSetMismatch);
}

TEST_CASE("method names round trip") {
    for (auto m : {Method::Ours, Method::Random, Method::RandomRoot, Method::Majority, Method::Price, Method::Mst}) {
        CHECK(method_from_string(to_string(m)) == m);
    }
    CHECK_THROWS_AS(method_from_string("oracle"), Error);
}

TEST_CASE("run config JSON round trip and validation") {
    RunConfig rc;
    rc.charting.K = 7;
    rc.charting.K_th = 0.2;
    rc.charting.rho_policy = RhoPolicy::fixed(0.45);
    rc.charting.duplicate_policy = DuplicatePolicy::SameParentAsRepresentative;
    rc.charting.pattern_scope = PatternScope::EarlierOnly;
    rc.charting.fan_origin = FanOrigin::EarliestCandidate;
    rc.charting.quantized_attach_nearest = false;
    rc.charting.duplicate_epsilon = 1e-6;
    rc.split_fraction = 0.25;
    rc.seed = 31;
    rc.format = "csv";
    const auto text = run_config_to_json(rc);
    const auto back = run_config_from_json(text);
    CHECK(run_config_to_json(back) == text);
    CHECK(back.charting.K == 7);
    CHECK(back.charting.pattern_scope == PatternScope::EarlierOnly);
    CHECK(back.charting.fan_origin == FanOrigin::EarliestCandidate);

    CHECK_THROWS_AS(run_config_from_json("{not json"), Error);
    CHECK_THROWS_AS(run_config_from_json(R"({"split_fraction": 1.5})"), Error);
    CHECK_THROWS_AS(run_config_from_json(R"({"format": "xml"})"), Error);
}

TEST_CASE("report formats carry the same rows") {
    auto g = th::letters(5, {{'a', 'b'}, {'b', 'c'}, {'c', 'd'}, {'d', 'e'}});
    auto split = make_split(g, 0.2);
    auto perfect = evaluate_charting(g, g, split);
    perfect.method = "ours";
    auto root = evaluate_charting(baseline_random_root(split), g, split);
    root.method = "random-root";
    std::vector<EvalReport> rs{perfect, root};
    auto j = nlohmann::json::parse(reports_to_json(rs));
    REQUIRE(j.is_array());
    REQUIRE(j.size() == 2);
    CHECK(j[0]["method"] == "ours");
    CHECK(j[0]["accuracy"] == 1.0);
    CHECK(j[1]["accuracy"].get<double>() == doctest::Approx(0.25));
    auto csv = reports_to_csv(rs);
    CHECK(count(csv, "\n") == 3);
    CHECK(csv.find("random-root") != std::string::npos);
    CHECK(reports_to_table(rs).find("random-root") != std::string::npos);
    rs[0].wall_seconds = 0.5;
    CHECK_FALSE(nlohmann::json::parse(reports_to_json(rs, false))[0].contains("wall_seconds"));
    CHECK(nlohmann::json::parse(reports_to_json(rs, true))[0]["wall_seconds"] == 0.5);
}

TEST_CASE("GEXF of a single node is valid") {
    Atlas g;
    g.add_node(th::node("org/solo", 100, 7));
    std::string err;
    CHECK_MESSAGE(gexf_check::validate(export_gexf(g), &err), err);
}

TEST_CASE("GEXF of an empty atlas is valid") {
    std::string err;
    CHECK_MESSAGE(gexf_check::validate(export_gexf(Atlas{}), &err), err);
    CHECK(export_dot(Atlas{}).find("->") == std::string::npos);
    CHECK(atlas_from_json(export_json(Atlas{})).empty());
}

TEST_CASE("GEXF of a merge carries colours, sizes and escaped names") {
    auto g = th::letters(3, {{'a', 'c'}, {'b', 'c'}}, EdgeKind::Merge);
    g.add_node(th::node("q<&\"'>", 50, 1000));
    g.add_edge(ModelId("c"), ModelId("q<&\"'>"), EdgeKind::Quantization);
    auto& c = g.mutable_node_at(g.index_of(ModelId("c")));
    c.attributes["license"] = "mit";
    c.metrics["score"] = 0.5;
    const auto doc = export_gexf(g);
    std::string err;
    REQUIRE_MESSAGE(gexf_check::validate(doc, &err), err);

    std::istringstream in(doc);
    pt::ptree tree;
    pt::read_xml(in, tree);
    const auto subtree = oracle::subtree_downloads(g);
    std::map<std::string, std::pair<Rgb, double>> seen;
    for (const auto& [tag, node] : tree.get_child("gexf.graph.nodes")) {
        if (tag != "node") continue;
        Rgb rgb{node.get<int>("viz:color.<xmlattr>.r"), node.get<int>("viz:color.<xmlattr>.g"),
                node.get<int>("viz:color.<xmlattr>.b")};
        seen[node.get<std::string>("<xmlattr>.id")] = {rgb, node.get<double>("viz:size.<xmlattr>.value")};
    }
    REQUIRE(seen.size() == 4);
    auto colour = [](Rgb x) { return std::tuple(x.r, x.g, x.b); };
    CHECK(colour(seen.at("a").first) == colour(kind_color(std::nullopt)));
    CHECK(colour(seen.at("c").first) == colour(kind_color(EdgeKind::Merge)));
    CHECK(colour(seen.at("q<&\"'>").first) == colour(kind_color(EdgeKind::Quantization)));
    for (std::size_t i = 0; i < g.size(); ++i) {
        const auto& id = g.node_at(i).id.str();
        CHECK(seen.at(id).second == doctest::Approx(std::log10(1.0 + static_cast<double>(subtree[i]))));
    }
    CHECK(count(doc, "<edge ") == 3);
}

TEST_CASE("DOT of a chain has one arrow per edge") {
    auto g = th::letters(3, {{'a', 'b'}, {'b', 'c'}});
    const auto dot = export_dot(g);
    CHECK(count(dot, "->") == 2);
    CHECK(dot.rfind("digraph", 0) == 0);
    CHECK(std::regex_search(dot, std::regex("\"a\" -> \"b\"")));
    CHECK(export_atlas(g, export_format_from_string("json")) == atlas_to_json(g));
    CHECK_THROWS_AS(export_format_from_string("svg"), Error);
}
