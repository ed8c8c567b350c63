#include <doctest.h>

#include <cmath>
#include <map>
#include <queue>

#include "atlas/error.hpp"
#include "atlas/imputation.hpp"
#include "atlas/rng.hpp"
#include "helpers.hpp"

using namespace atlas;

namespace {

MetricLabelSet labels_of(std::initializer_list<std::pair<const char*, double>> items) {
    MetricLabelSet s{"score", {}};
    for (auto [id, v] : items) s.labels[ModelId(id)] = v;
    return s;
}

std::map<std::string, double> by_id(const std::vector<MetricPrediction>& ps) {
    std::map<std::string, double> out;
    for (const auto& p : ps) out[p.id.str()] = p.value;
    return out;
}

// Separate reference: BFS per target over an undirected adjacency list, then
// take whole hop levels until k labels are in.
std::map<std::string, double> knn_oracle(const Atlas& g, const std::map<ModelId, double>& labels, std::size_t k) {
    std::map<std::string, std::vector<std::string>> adj;
    for (const auto& n : g.nodes()) adj[n.id.str()];
    for (const auto& e : g.edges()) {
        adj[e.parent.str()].push_back(e.child.str());
        adj[e.child.str()].push_back(e.parent.str());
    }
    double global = 0.0;
    for (const auto& [id, v] : labels) global += v;
    global /= static_cast<double>(labels.size());
    std::map<std::string, double> out;
    for (const auto& n : g.nodes()) {
        if (labels.count(n.id)) continue;
        std::map<std::string, int> dist{{n.id.str(), 0}};
        std::queue<std::string> q;
        q.push(n.id.str());
        while (!q.empty()) {
            auto u = q.front();
            q.pop();
            for (const auto& v : adj[u]) {
                if (!dist.count(v)) {
                    dist[v] = dist[u] + 1;
                    q.push(v);
                }
            }
        }
        double sum = 0.0;
        std::size_t count = 0;
        for (int level = 1; count < k; ++level) {
            bool any = false;
            for (const auto& [id, d] : dist) {
                if (d < level) continue;
                any = true;
                if (d == level) {
                    auto it = labels.find(ModelId(id));
                    if (it != labels.end()) {
                        sum += it->second;
                        ++count;
                    }
                }
            }
            if (!any) break;
        }
        out[n.id.str()] = count ? sum / static_cast<double>(count) : global;
    }
    return out;
}

}  // namespace

TEST_CASE("graph kNN on a chain, computed by hand") {
    auto g = th::letters(5, {{'a', 'b'}, {'b', 'c'}, {'c', 'd'}, {'d', 'e'}});
    auto labels = labels_of({{"a", 1.0}, {"c", 3.0}, {"e", 5.0}});
    auto k1 = by_id(impute_metric_knn(g, labels, 1));
    CHECK(k1 == std::map<std::string, double>{{"b", 2.0}, {"d", 4.0}});
    // b: hop 1 gives a and c, hop 3 adds e.
    auto k3 = by_id(impute_metric_knn(g, labels, 3));
    CHECK(k3.at("b") == doctest::Approx(3.0));
    CHECK(k3.at("d") == doctest::Approx(3.0));
}

TEST_CASE("graph kNN falls back to the global mean for unreachable nodes") {
    auto g = th::letters(4, {{'a', 'b'}});
    auto labels = labels_of({{"a", 2.0}, {"b", 6.0}});
    auto ps = impute_metric_knn(g, labels, 2);
    REQUIRE(ps.size() == 2);
    for (const auto& p : ps) {
        CHECK(p.fallback);
        CHECK(p.value == doctest::Approx(4.0));
    }
    CHECK_THROWS_AS(impute_metric_knn(g, MetricLabelSet{"score", {}}, 1), Error);
    CHECK_THROWS_AS(impute_metric_knn(g, labels, 0), Error);
    CHECK_THROWS_AS(impute_metric_knn(g, labels_of({{"zz", 1.0}}), 1), Error);
}

TEST_CASE("graph kNN agrees with a BFS reference on random forests") {
    Rng rng(17);
    for (int trial = 0; trial < 60; ++trial) {
        const auto n = 2 + rng.uniform_index(11);
        Atlas g = th::letters(n, {});
        for (std::size_t i = 1; i < n; ++i) {
            if (rng.bernoulli(0.85)) {
                g.add_edge(g.node_at(rng.uniform_index(i)).id, g.node_at(i).id, EdgeKind::FineTune);
            }
        }
        MetricLabelSet labels{"score", {}};
        for (std::size_t i = 0; i < n; ++i) {
            if (rng.bernoulli(0.5)) labels.labels[g.node_at(i).id] = rng.normal();
        }
        if (labels.labels.empty()) labels.labels[g.node_at(0).id] = 1.0;
        for (std::size_t k = 1; k <= 4; ++k) {
            auto got = by_id(impute_metric_knn(g, labels, k));
            auto want = knn_oracle(g, labels.labels, k);
            REQUIRE(got.size() == want.size());
            for (const auto& [id, v] : want) CHECK(got.at(id) == doctest::Approx(v));
        }
    }
}

TEST_CASE("imputation does not depend on node names") {
    Rng rng(5);
    for (int trial = 0; trial < 30; ++trial) {
        const auto n = 3 + rng.uniform_index(10);
        Atlas g = th::letters(n, {});
        for (std::size_t i = 1; i < n; ++i) {
            g.add_edge(g.node_at(rng.uniform_index(i)).id, g.node_at(i).id, EdgeKind::FineTune);
        }
        // Same structure and times, names drawn from a shuffled pool.
        std::vector<std::string> names;
        for (std::size_t i = 0; i < n; ++i) names.push_back("m" + std::to_string(i));
        rng.shuffle(names);
        Atlas h;
        for (std::size_t i = 0; i < n; ++i) {
            auto node = g.node_at(i);
            node.id = ModelId(names[i]);
            h.add_node(node);
        }
        std::map<std::string, std::string> rename;
        for (std::size_t i = 0; i < n; ++i) rename[g.node_at(i).id.str()] = names[i];
        for (const auto& e : g.edges()) {
            h.add_edge(ModelId(rename[e.parent.str()]), ModelId(rename[e.child.str()]), e.kind);
        }
        MetricLabelSet lg{"score", {}}, lh{"score", {}};
        for (std::size_t i = 0; i < n; i += 2) {
            lg.labels[g.node_at(i).id] = static_cast<double>(i);
            lh.labels[ModelId(names[i])] = static_cast<double>(i);
        }
        auto pg = by_id(impute_metric_knn(g, lg, 2));
        auto ph = by_id(impute_metric_knn(h, lh, 2));
        REQUIRE(pg.size() == ph.size());
        for (const auto& [id, v] : pg) CHECK(ph.at(rename[id]) == doctest::Approx(v));
    }
}

TEST_CASE("pearson") {
    CHECK(*pearson({1, 2, 3}, {2, 4, 6}) == doctest::Approx(1.0));
    CHECK(*pearson({1, 2, 3}, {3, 2, 1}) == doctest::Approx(-1.0));
    // x = {1,2,3,4}, y = {1,3,2,4}: sxy = 4, sxx = syy = 5.
    CHECK(*pearson({1, 2, 3, 4}, {1, 3, 2, 4}) == doctest::Approx(0.8));
    CHECK_FALSE(pearson({1, 1, 1}, {1, 2, 3}));
    CHECK_FALSE(pearson({1}, {2}));
    CHECK_THROWS_AS(pearson({1, 2}, {1}), Error);
}

TEST_CASE("a constant offset scores MSE 1 and correlation 1") {
    std::vector<MetricPrediction> ps;
    std::map<ModelId, double> truth;
    for (int i = 0; i < 10; ++i) {
        ModelId id("m" + std::to_string(i));
        truth[id] = i * 0.5;
        ps.push_back({id, i * 0.5 + 1.0, false});
    }
    auto s = evaluate_metric(ps, truth);
    CHECK(s.n == 10);
    CHECK(s.mse == doctest::Approx(1.0));
    CHECK(s.mae == doctest::Approx(1.0));
    REQUIRE(s.pearson);
    CHECK(*s.pearson == doctest::Approx(1.0));

    truth.erase(ModelId("m3"));
    CHECK_THROWS_AS(evaluate_metric(ps, truth), Error);
    truth[ModelId("other")] = 0.0;
    CHECK_THROWS_AS(evaluate_metric(ps, truth), Error);
}

TEST_CASE("hub vote predicts from siblings and falls back to the global majority") {
    // Hub under a: leaves b, c, d. e is a lone leaf under f.
    auto g = th::letters(6, {{'a', 'b'}, {'a', 'c'}, {'a', 'd'}, {'f', 'e'}, {'a', 'f'}});
    auto set = [&](char id, std::optional<std::string> v) {
        g.mutable_node_at(g.index_of(ModelId(std::string(1, id)))).attributes["license"] = std::move(v);
    };
    set('a', "apache");
    set('f', "apache");
    set('b', "mit");
    set('c', "mit");
    set('d', std::nullopt);
    auto ps = impute_attribute_hub(g, "license");
    std::map<std::string, std::pair<std::string, AttributeSource>> got;
    for (const auto& p : ps) got[p.id.str()] = {p.value, p.source};
    REQUIRE(got.size() == 2);
    CHECK(got.at("d") == std::pair<std::string, AttributeSource>{"mit", AttributeSource::Hub});
    // Global counts tie 2-2; the smaller label wins.
    CHECK(got.at("e") == std::pair<std::string, AttributeSource>{"apache", AttributeSource::GlobalFallback});

    auto base = baseline_attribute_majority(g, "license");
    REQUIRE(base.size() == 2);
    for (const auto& p : base) CHECK(p.value == "apache");

    std::map<ModelId, std::string> truth{{ModelId("d"), "mit"}, {ModelId("e"), "mit"}};
    auto s = evaluate_attribute(ps, truth);
    CHECK(s.correct == 1);
    CHECK(s.accuracy == doctest::Approx(0.5));
}

TEST_CASE("imputation report lists every k and the baseline") {
    auto g = th::letters(5, {{'a', 'b'}, {'b', 'c'}, {'c', 'd'}, {'d', 'e'}});
    auto labels = labels_of({{"a", 1.0}, {"c", 3.0}, {"e", 5.0}});
    std::map<ModelId, double> held{{ModelId("b"), 2.0}, {ModelId("d"), 4.0}};
    auto r = metric_imputation_report(g, labels, held, {1, 3});
    REQUIRE(r.rows.size() == 3);
    CHECK(r.rows[0].label == "k=1");
    CHECK(r.rows[0].scores.mse == doctest::Approx(0.0));
    CHECK(r.rows[2].label == "baseline-mean");
    CHECK(r.rows[2].scores.mse == doctest::Approx(1.0));
    CHECK(imputation_report_to_json(r).find("\"baseline-mean\"") != std::string::npos);
    CHECK(imputation_report_to_csv(r).rfind("metric,label,n,mse,mae,pearson\n", 0) == 0);
    CHECK(imputation_report_to_table(r).find("k=3") != std::string::npos);
}
