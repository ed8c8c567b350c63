#include "atlas/evaluation.hpp"

#include <algorithm>
#include <iomanip>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "atlas/error.hpp"

namespace atlas {

using json = nlohmann::json;

namespace {

std::string true_kind_key(const Atlas& truth, std::size_t i) {
    const auto& links = truth.in_links(i);
    if (links.empty()) return "None";
    for (const auto& l : links) {
        if (truth.edges()[l.edge].kind == EdgeKind::Merge) return "Merge";
    }
    return std::string(to_string(truth.edges()[links.front().edge].kind));
}

}  // namespace

EvalReport evaluate_charting(const Atlas& predicted, const Atlas& truth, const StemSplit& split) {
    if (predicted.size() != truth.size()) fail(ErrorCode::NodeSetMismatch, "predicted and true atlases differ in size");
    for (const auto& n : truth.nodes()) {
        if (!predicted.contains(n.id)) fail(ErrorCode::NodeSetMismatch, "predicted atlas lacks '" + n.id.str() + "'");
    }
    EvalReport r;
    r.nodes = truth.size();
    r.stem_nodes = split.stem.size();
    r.eval_nodes = split.eval.size();
    std::size_t true_edges = 0, found_edges = 0;
    for (const auto& id : split.eval) {
        auto ti = truth.index_of(id);
        auto tp = truth.parents(id);
        auto pp = predicted.parents(id);
        std::sort(tp.begin(), tp.end());
        std::sort(pp.begin(), pp.end());
        const bool ok = tp == pp;
        auto& kind = r.per_kind[true_kind_key(truth, ti)];
        ++kind.total;
        if (ok) {
            ++kind.correct;
            ++r.correct;
        }
        true_edges += tp.size();
        for (const auto& p : tp) {
            if (std::binary_search(pp.begin(), pp.end(), p)) ++found_edges;
        }
    }
    r.accuracy = r.eval_nodes ? static_cast<double>(r.correct) / static_cast<double>(r.eval_nodes) : 1.0;
    r.edge_recall = true_edges ? static_cast<double>(found_edges) / static_cast<double>(true_edges) : 1.0;
    return r;
}

std::string_view to_string(Method method) {
    switch (method) {
        case Method::Ours: return "ours";
        case Method::Random: return "random";
        case Method::RandomRoot: return "random-root";
        case Method::Majority: return "majority";
        case Method::Price: return "price";
        case Method::Mst: return "mst";
    }
    return "ours";
}

Method method_from_string(std::string_view text) {
    for (auto m : {Method::Ours, Method::Random, Method::RandomRoot, Method::Majority, Method::Price, Method::Mst}) {
        if (to_string(m) == text) return m;
    }
    fail(ErrorCode::InvalidArgument, "unknown method '" + std::string(text) + "'");
}

Atlas run_method(Method method, const CorpusView& corpus, const StemSplit& split, const ChartingConfig& config,
                 std::uint64_t seed, const DistanceMatrix* matrix) {
    switch (method) {
        case Method::Random: return baseline_random(split, seed);
        case Method::RandomRoot: return baseline_random_root(split);
        case Method::Majority: return baseline_majority(split);
        case Method::Price: return baseline_price(split, seed);
        case Method::Ours:
        case Method::Mst: break;
    }
    if (!corpus.nodes || !corpus.fingerprints) fail(ErrorCode::InvalidArgument, "method needs nodes and fingerprints");
    std::optional<DistanceMatrix> owned;
    if (!matrix || matrix->normalization() != config.distance_normalization) {
        std::unordered_map<ModelId, std::int64_t> times;
        for (const auto& n : *corpus.nodes) times[n.id] = n.created_at;
        DistanceOptions options;
        options.normalization = config.distance_normalization;
        owned = compute_distance_matrix(*corpus.fingerprints, times, options);
        matrix = &*owned;
    }
    if (method == Method::Mst) return baseline_mst_kurtosis(*corpus.fingerprints, *matrix, split);

    std::vector<ModelNode> nodes = *corpus.nodes;
    for (auto& n : nodes) {
        auto i = split.stem_atlas.find(n.id);
        if (i && split.in_stem[*i]) {
            // Stem edges are given; sources get an empty list and stay sources.
            n.known_parents = split.stem_atlas.parents(n.id);
        } else if (!config.honor_known_parents) {
            n.known_parents.reset();
        }
    }
    apply_quantization_detection(nodes, *corpus.fingerprints);
    auto cfg = config;
    cfg.honor_known_parents = true;
    return chart(nodes, *matrix, cfg);
}

void RunConfig::validate() const {
    charting.validate();
    if (!(split_fraction > 0.0 && split_fraction < 1.0)) fail(ErrorCode::InvalidArgument, "split fraction must lie in (0, 1)");
    if (format != "json" && format != "csv" && format != "table") {
        fail(ErrorCode::InvalidArgument, "format must be json, csv or table");
    }
}

RunConfig run_config_from_json(const std::string& text) {
    RunConfig rc;
    try {
        const json j = json::parse(text);
        auto& c = rc.charting;
        if (j.contains("charting")) {
            const auto& cj = j["charting"];
            if (cj.contains("K")) c.K = cj["K"].get<std::size_t>();
            if (cj.contains("K_th")) c.K_th = cj["K_th"].get<double>();
            if (cj.contains("rho_policy")) c.rho_policy = RhoPolicy::parse(cj["rho_policy"].get<std::string>());
            if (cj.contains("distance_normalization")) {
                auto v = cj["distance_normalization"].get<std::string>();
                c.distance_normalization = v == "None" ? Normalization::None : Normalization::UnitNorm;
            }
            if (cj.contains("duplicate_policy")) {
                auto v = cj["duplicate_policy"].get<std::string>();
                c.duplicate_policy = v == "SameParentAsRepresentative" ? DuplicatePolicy::SameParentAsRepresentative
                                                                       : DuplicatePolicy::LeafUnderRepresentative;
            }
            if (cj.contains("quantized_are_leaves")) c.quantized_are_leaves = cj["quantized_are_leaves"].get<bool>();
            if (cj.contains("honor_known_parents")) c.honor_known_parents = cj["honor_known_parents"].get<bool>();
            if (cj.contains("deduplicate")) c.deduplicate = cj["deduplicate"].get<bool>();
            if (cj.contains("temporal_filter")) c.temporal_filter = cj["temporal_filter"].get<bool>();
            if (cj.contains("snake_fan")) c.snake_fan = cj["snake_fan"].get<bool>();
            if (cj.contains("pattern_scope")) {
                c.pattern_scope = cj["pattern_scope"].get<std::string>() == "EarlierOnly" ? PatternScope::EarlierOnly
                                                                                         : PatternScope::AllNodes;
            }
            if (cj.contains("fan_origin")) {
                c.fan_origin = cj["fan_origin"].get<std::string>() == "EarliestCandidate" ? FanOrigin::EarliestCandidate
                                                                                          : FanOrigin::Extended;
            }
            if (cj.contains("quantized_attach_nearest")) {
                c.quantized_attach_nearest = cj["quantized_attach_nearest"].get<bool>();
            }
            if (cj.contains("duplicate_epsilon")) c.duplicate_epsilon = cj["duplicate_epsilon"].get<double>();
        }
        if (j.contains("split_fraction")) rc.split_fraction = j["split_fraction"].get<double>();
        if (j.contains("seed")) rc.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("format")) rc.format = j["format"].get<std::string>();
    } catch (const json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("run config: ") + e.what());
    }
    rc.validate();
    return rc;
}

std::string run_config_to_json(const RunConfig& rc) {
    const auto& c = rc.charting;
    json j;
    j["charting"] = {
        {"K", c.K},
        {"K_th", c.K_th},
        {"rho_policy", c.rho_policy.to_string()},
        {"distance_normalization", c.distance_normalization == Normalization::None ? "None" : "UnitNormFingerprints"},
        {"duplicate_policy", c.duplicate_policy == DuplicatePolicy::SameParentAsRepresentative
                                 ? "SameParentAsRepresentative"
                                 : "LeafUnderRepresentative"},
        {"quantized_are_leaves", c.quantized_are_leaves},
        {"honor_known_parents", c.honor_known_parents},
        {"deduplicate", c.deduplicate},
        {"temporal_filter", c.temporal_filter},
        {"snake_fan", c.snake_fan},
        {"pattern_scope", c.pattern_scope == PatternScope::EarlierOnly ? "EarlierOnly" : "AllNodes"},
        {"fan_origin", c.fan_origin == FanOrigin::EarliestCandidate ? "EarliestCandidate" : "Extended"},
        {"quantized_attach_nearest", c.quantized_attach_nearest},
        {"duplicate_epsilon", c.duplicate_epsilon},
    };
    j["split_fraction"] = rc.split_fraction;
    j["seed"] = rc.seed;
    j["format"] = rc.format;
    return j.dump(2) + "\n";
}

namespace {

json report_json(const EvalReport& r, bool timing) {
    json j;
    j["method"] = r.method;
    j["accuracy"] = r.accuracy;
    j["edge_recall"] = r.edge_recall;
    j["nodes"] = r.nodes;
    j["stem_nodes"] = r.stem_nodes;
    j["eval_nodes"] = r.eval_nodes;
    j["correct"] = r.correct;
    json kinds = json::object();
    for (const auto& [k, v] : r.per_kind) {
        kinds[k] = {{"total", v.total},
                    {"correct", v.correct},
                    {"accuracy", v.total ? static_cast<double>(v.correct) / static_cast<double>(v.total) : 0.0}};
    }
    j["per_kind"] = kinds;
    if (timing && r.wall_seconds) j["wall_seconds"] = *r.wall_seconds;
    return j;
}

}  // namespace

std::string report_to_json(const EvalReport& report, bool include_timing) {
    return report_json(report, include_timing).dump(2) + "\n";
}

std::string reports_to_json(const std::vector<EvalReport>& reports, bool include_timing) {
    json arr = json::array();
    for (const auto& r : reports) arr.push_back(report_json(r, include_timing));
    return arr.dump(2) + "\n";
}

std::string reports_to_csv(const std::vector<EvalReport>& reports, bool include_timing) {
    std::ostringstream out;
    out << "method,accuracy,edge_recall,nodes,stem_nodes,eval_nodes,correct";
    if (include_timing) out << ",wall_seconds";
    out << '\n';
    out << std::setprecision(6) << std::fixed;
    for (const auto& r : reports) {
        out << r.method << ',' << r.accuracy << ',' << r.edge_recall << ',' << r.nodes << ',' << r.stem_nodes << ','
            << r.eval_nodes << ',' << r.correct;
        if (include_timing) out << ',' << r.wall_seconds.value_or(0.0);
        out << '\n';
    }
    return out.str();
}

std::string reports_to_table(const std::vector<EvalReport>& reports, bool include_timing) {
    std::ostringstream out;
    out << std::left << std::setw(14) << "method" << std::right << std::setw(10) << "accuracy" << std::setw(10)
        << "recall" << std::setw(8) << "eval";
    if (include_timing) out << std::setw(10) << "seconds";
    out << '\n';
    out << std::fixed;
    for (const auto& r : reports) {
        out << std::left << std::setw(14) << r.method << std::right << std::setw(10) << std::setprecision(4)
            << r.accuracy << std::setw(10) << r.edge_recall << std::setw(8) << r.eval_nodes;
        if (include_timing) out << std::setw(10) << std::setprecision(3) << r.wall_seconds.value_or(0.0);
        out << '\n';
    }
    return out.str();
}

}  // namespace atlas
