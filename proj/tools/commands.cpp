#include "commands.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "atlas/analytics.hpp"
#include "atlas/atlas_io.hpp"
#include "atlas/baselines.hpp"
#include "atlas/charting.hpp"
#include "atlas/distance.hpp"
#include "atlas/error.hpp"
#include "atlas/evaluation.hpp"
#include "atlas/export.hpp"
#include "atlas/fetch.hpp"
#include "atlas/fingerprint.hpp"
#include "atlas/imputation.hpp"
#include "atlas/metadata.hpp"
#include "atlas/safetensors.hpp"
#include "atlas/syngen.hpp"

namespace atlas::cli {

namespace fs = std::filesystem;
using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void warn_records(const std::string& path, const std::vector<RecordError>& errors) {
    for (const auto& e : errors) {
        std::cerr << "warning: " << path << ":" << e.line << ": " << (e.id.empty() ? "" : e.id + ": ") << e.message
                  << "\n";
    }
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) fail(ErrorCode::IoError, "cannot create directory '" + dir.string() + "': " + ec.message());
}

// Writes to the file, or to stdout when path is empty.
void emit(const std::string& path, const std::string& text) {
    if (path.empty()) {
        std::cout << text;
        std::cout.flush();
    } else {
        write_text_file(path, text);
    }
}

std::vector<std::string> read_lines(const std::string& path) {
    std::istringstream in(read_text_file(path));
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") != std::string::npos) lines.push_back(line);
    }
    return lines;
}

json parse_record(const std::string& path, std::size_t line_no, const std::string& line) {
    try {
        return json::parse(line);
    } catch (const json::exception& e) {
        fail(ErrorCode::MalformedRecord, path + ":" + std::to_string(line_no) + ": " + e.what());
    }
}

// JSONL {"id", "value"} with numeric values.
std::map<ModelId, double> read_metric_labels(const std::string& path) {
    std::map<ModelId, double> out;
    std::size_t n = 0;
    for (const auto& line : read_lines(path)) {
        auto j = parse_record(path, ++n, line);
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("value") ||
            !j["value"].is_number()) {
            fail(ErrorCode::MalformedRecord, path + ":" + std::to_string(n) + ": need string id and numeric value");
        }
        out[ModelId(j["id"].get<std::string>())] = j["value"].get<double>();
    }
    return out;
}

std::map<ModelId, std::string> read_attribute_labels(const std::string& path) {
    std::map<ModelId, std::string> out;
    std::size_t n = 0;
    for (const auto& line : read_lines(path)) {
        auto j = parse_record(path, ++n, line);
        if (!j.is_object() || !j.contains("id") || !j["id"].is_string() || !j.contains("value") ||
            !j["value"].is_string()) {
            fail(ErrorCode::MalformedRecord, path + ":" + std::to_string(n) + ": need string id and string value");
        }
        out[ModelId(j["id"].get<std::string>())] = j["value"].get<std::string>();
    }
    return out;
}

ChartingConfig charting_config(const ChartFlags& f, RunConfig* run = nullptr) {
    RunConfig rc;
    if (!f.config_path.empty()) rc = run_config_from_json(read_text_file(f.config_path));
    auto& c = rc.charting;
    if (f.k) c.K = *f.k;
    if (f.kth) c.K_th = *f.kth;
    if (f.rho) c.rho_policy = RhoPolicy::parse(*f.rho);
    if (f.duplicate_policy) {
        c.duplicate_policy = *f.duplicate_policy == "sibling" ? DuplicatePolicy::SameParentAsRepresentative
                                                              : DuplicatePolicy::LeafUnderRepresentative;
    }
    if (f.normalization) c.distance_normalization = *f.normalization == "none" ? Normalization::None : Normalization::UnitNorm;
    c.validate();
    if (run) *run = rc;
    return c;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// FNV-1a over the serialized fingerprints and the normalization: a stable
// cache key for a fingerprint set.
std::string cache_key(const std::vector<Fingerprint>& fps, Normalization norm) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&](const std::string& s) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
    };
    for (const auto& fp : fps) mix(fingerprint_to_json_line(fp));
    mix(norm == Normalization::UnitNorm ? "unit" : "none");
    return hex64(h);
}

bool covers(const DistanceMatrix& m, const std::vector<Fingerprint>& fps) {
    if (m.size() != fps.size()) return false;
    for (const auto& fp : fps) {
        if (!m.find(fp.id)) return false;
    }
    return true;
}

// Pairs metadata with fingerprints. Nodes without a fingerprint are an error;
// fingerprints without metadata are dropped with a warning.
std::vector<Fingerprint> fingerprints_for(const std::vector<ModelNode>& nodes, std::vector<Fingerprint> fps) {
    std::set<ModelId> wanted;
    for (const auto& n : nodes) wanted.insert(n.id);
    std::vector<Fingerprint> used;
    std::set<ModelId> have;
    for (auto& fp : fps) {
        if (!wanted.count(fp.id)) {
            std::cerr << "warning: fingerprint for " << fp.id.str() << " has no metadata; ignored\n";
            continue;
        }
        if (!have.insert(fp.id).second) fail(ErrorCode::DuplicateId, "two fingerprints for " + fp.id.str());
        used.push_back(std::move(fp));
    }
    for (const auto& n : nodes) {
        if (!have.count(n.id)) fail(ErrorCode::MissingFingerprint, "no fingerprint for " + n.id.str());
    }
    return used;
}

std::string format_number(double v) {
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
}

}  // namespace

int run_gen(const GenOptions& o) {
    SyntheticSpec spec;
    if (!o.spec_path.empty()) spec = spec_from_json(read_text_file(o.spec_path));
    spec.seed = o.seed;
    if (o.nodes) spec.component_size = {static_cast<std::int64_t>(*o.nodes), static_cast<std::int64_t>(*o.nodes)};
    if (o.components) spec.n_components = *o.components;
    spec.validate();
    auto corpus = generate(spec);

    const fs::path dir(o.out_dir);
    ensure_dir(dir);
    save_fingerprints_file((dir / "fingerprints.jsonl").string(), corpus.fingerprints);
    save_metadata_file((dir / "metadata.jsonl").string(), o.full_metadata ? corpus.metadata : observed_metadata(corpus));
    save_atlas(corpus.truth, dir / "truth.json");
    write_text_file(dir / "spec.json", spec_to_json(spec));
    std::cerr << "generated " << corpus.truth.size() << " models, " << corpus.truth.edge_count() << " edges in "
              << dir.string() << "\n";
    return 0;
}

int run_fingerprint(const FingerprintOptions& o) {
    if (o.inputs.empty()) fail(ErrorCode::InvalidArgument, "no weight containers given");
    const auto selector = o.selector == "attention" ? Selector::attention() : Selector::parse(o.selector);
    std::vector<Fingerprint> fps;
    for (const auto& input : o.inputs) {
        std::string id, path = input;
        if (auto eq = input.find('='); eq != std::string::npos) {
            id = input.substr(0, eq);
            path = input.substr(eq + 1);
        } else {
            id = fs::path(input).stem().string();
        }
        auto container = WeightContainer::load(path);
        auto fp = extract_fingerprint(ModelId(id), container, selector, o.dim, o.seed);
        auto verdict = detect_quantization(fp, o.unique_threshold);
        if (verdict.quantized) {
            std::cerr << id << ": quantized (" << to_string(verdict.reason) << ")\n";
        }
        fps.push_back(std::move(fp));
    }
    std::sort(fps.begin(), fps.end(), [](const Fingerprint& a, const Fingerprint& b) { return a.id < b.id; });
    std::ostringstream out;
    save_fingerprints(out, fps);
    emit(o.out, out.str());
    return 0;
}

int run_fetch(const FetchOptions& o) {
    std::vector<ModelId> ids;
    for (const auto& id : o.ids) ids.emplace_back(id);
    if (!o.ids_path.empty()) {
        for (const auto& line : read_lines(o.ids_path)) ids.emplace_back(line);
    }
    if (ids.empty()) fail(ErrorCode::InvalidArgument, "no ids to fetch");
    atlas::FetchOptions fo;
    fo.attempts = o.attempts;
    fo.timeout = std::chrono::milliseconds(o.timeout_ms);
    fo.initial_backoff = std::chrono::milliseconds(o.backoff_ms);
    auto result = fetch_metadata(o.endpoint, ids, fo);
    std::ostringstream out;
    save_metadata(out, result.nodes);
    emit(o.out, out.str());
    for (const auto& e : result.errors) std::cerr << "error: " << e.id << ": " << e.message << "\n";
    std::cerr << "fetched " << result.nodes.size() << " of " << ids.size() << " records\n";
    // Partial results are still written; failed ids make the run an I/O failure.
    return result.errors.empty() ? 0 : 2;
}

int run_chart(const ChartOptions& o) {
    const auto config = charting_config(o.flags);
    auto meta = load_metadata_file(o.meta);
    warn_records(o.meta, meta.errors);
    auto fp_load = load_fingerprints_file(o.fingerprints);
    warn_records(o.fingerprints, fp_load.errors);
    auto& nodes = meta.nodes;
    if (nodes.empty()) fail(ErrorCode::EmptyInput, "no models in " + o.meta);
    auto fps = fingerprints_for(nodes, std::move(fp_load.fingerprints));
    if (!o.no_quantization_detection) apply_quantization_detection(nodes, fps);

    std::unordered_map<ModelId, std::int64_t> times;
    for (const auto& n : nodes) times[n.id] = n.created_at;
    DistanceOptions dopt;
    dopt.normalization = config.distance_normalization;

    fs::path cache = o.matrix_cache;
    if (cache.empty()) {
        if (const char* dir = std::getenv("ATLAS_CACHE_DIR"); dir && *dir) {
            cache = fs::path(dir) / ("matrix-" + cache_key(fps, config.distance_normalization) + ".bin");
        }
    }
    auto t0 = Clock::now();
    DistanceMatrix matrix;
    bool loaded = false;
    if (!cache.empty() && fs::exists(cache)) {
        matrix = load_matrix_cache(cache, times, config.distance_normalization, dopt);
        loaded = covers(matrix, fps);
        if (!loaded) std::cerr << "warning: matrix cache " << cache.string() << " does not match; recomputing\n";
    }
    if (!loaded) {
        matrix = compute_distance_matrix(fps, times, dopt);
        if (!cache.empty()) {
            if (cache.has_parent_path()) ensure_dir(cache.parent_path());
            save_matrix_cache(matrix, cache);
        }
    }
    const double matrix_seconds = seconds_since(t0);

    t0 = Clock::now();
    std::vector<ChartResult> results;
    if (!o.linkage) {
        results.push_back(chart_detailed(nodes, matrix, config));
    } else {
        std::unordered_map<ModelId, const ModelNode*> node_of;
        std::unordered_map<ModelId, const Fingerprint*> fp_of;
        for (const auto& n : nodes) node_of[n.id] = &n;
        for (const auto& f : fps) fp_of[f.id] = &f;
        for (const auto& comp : find_components(matrix, *o.linkage)) {
            std::vector<ModelNode> sub;
            std::vector<Fingerprint> sub_fps;
            std::unordered_map<ModelId, std::int64_t> sub_times;
            for (const auto& id : comp) {
                sub.push_back(*node_of.at(id));
                sub_fps.push_back(*fp_of.at(id));
                sub_times[id] = node_of.at(id)->created_at;
            }
            auto sub_matrix = compute_distance_matrix(sub_fps, sub_times, dopt);
            results.push_back(chart_detailed(sub, sub_matrix, config));
        }
    }
    const double chart_seconds = seconds_since(t0);

    Atlas combined;
    if (results.size() == 1) {
        combined = results.front().atlas;
    } else {
        for (const auto& r : results)
            for (const auto& n : r.atlas.nodes()) combined.add_node(n);
        for (const auto& r : results)
            for (const auto& e : r.atlas.edges()) combined.add_edge(e);
    }
    save_atlas(combined, o.out);

    if (!o.decisions_out.empty()) {
        std::ostringstream out;
        for (const auto& r : results) {
            for (auto i : r.atlas.time_order()) {
                const auto& id = r.atlas.node_at(i).id;
                json j;
                j["id"] = id.str();
                j["decision"] = std::string(to_string(r.decisions.at(id)));
                json parents = json::array();
                for (const auto& p : r.atlas.parents(id)) parents.push_back(p.str());
                j["parents"] = parents;
                j["rho_threshold"] = r.rho_threshold;
                out << j.dump() << "\n";
            }
        }
        write_text_file(o.decisions_out, out.str());
    }
    if (o.timing) {
        std::cerr << "matrix " << std::fixed << std::setprecision(3) << matrix_seconds << " s"
                  << (loaded ? " (cached)" : "") << ", chart " << chart_seconds << " s, " << results.size()
                  << " component(s)\n";
    }
    return 0;
}

int run_impute(const ImputeOptions& o) {
    if (o.metric.empty() == o.attribute.empty()) {
        fail(ErrorCode::InvalidArgument, "give exactly one of --metric and --attribute");
    }
    const auto atlas = load_atlas(o.atlas);
    const bool report = !o.truth.empty();

    if (!o.metric.empty()) {
        MetricLabelSet labels = o.labels.empty() ? labels_from_atlas(atlas, o.metric)
                                                 : MetricLabelSet{o.metric, read_metric_labels(o.labels)};
        auto preds = impute_metric_knn(atlas, labels, o.k);
        if (!report || !o.out.empty()) {
            std::ostringstream out;
            for (const auto& p : preds) {
                out << json{{"id", p.id.str()}, {"value", p.value}, {"fallback", p.fallback}}.dump() << "\n";
            }
            emit(o.out, out.str());
        }
        if (report) {
            std::vector<std::size_t> ks{1, 2, 3, 5};
            if (std::find(ks.begin(), ks.end(), o.k) == ks.end()) ks.push_back(o.k);
            auto r = metric_imputation_report(atlas, labels, read_metric_labels(o.truth), ks);
            if (o.format == "csv") std::cout << imputation_report_to_csv(r);
            else if (o.format == "table") std::cout << imputation_report_to_table(r);
            else std::cout << imputation_report_to_json(r);
        }
        return 0;
    }

    auto preds = impute_attribute_hub(atlas, o.attribute);
    if (!report || !o.out.empty()) {
        std::ostringstream out;
        for (const auto& p : preds) {
            out << json{{"id", p.id.str()}, {"value", p.value}, {"source", std::string(to_string(p.source))}}.dump()
                << "\n";
        }
        emit(o.out, out.str());
    }
    if (report) {
        const auto truth = read_attribute_labels(o.truth);
        auto restrict = [&](std::vector<AttributePrediction> v) {
            std::erase_if(v, [&](const AttributePrediction& p) { return !truth.count(p.id); });
            return v;
        };
        std::map<ModelId, std::string> scored;
        for (const auto& p : preds) {
            if (auto it = truth.find(p.id); it != truth.end()) scored.insert(*it);
        }
        const auto hub = evaluate_attribute(restrict(preds), scored);
        const auto base = evaluate_attribute(restrict(baseline_attribute_majority(atlas, o.attribute)), scored);
        if (o.format == "csv") {
            std::cout << "method,n,correct,accuracy\n"
                      << "hub," << hub.n << ',' << hub.correct << ',' << format_number(hub.accuracy) << "\n"
                      << "global-majority," << base.n << ',' << base.correct << ',' << format_number(base.accuracy)
                      << "\n";
        } else if (o.format == "table") {
            std::cout << std::left << std::setw(18) << "method" << std::right << std::setw(8) << "n" << std::setw(10)
                      << "accuracy\n";
            std::cout << std::left << std::setw(18) << "hub" << std::right << std::setw(8) << hub.n << std::setw(10)
                      << std::fixed << std::setprecision(4) << hub.accuracy << "\n";
            std::cout << std::left << std::setw(18) << "global-majority" << std::right << std::setw(8) << base.n
                      << std::setw(10) << base.accuracy << "\n";
        } else {
            json j;
            j["attribute"] = o.attribute;
            j["rows"] = json::array({
                json{{"method", "hub"}, {"n", hub.n}, {"correct", hub.correct}, {"accuracy", hub.accuracy}},
                json{{"method", "global-majority"}, {"n", base.n}, {"correct", base.correct}, {"accuracy", base.accuracy}},
            });
            std::cout << j.dump(2) << "\n";
        }
    }
    return 0;
}

int run_eval(const EvalOptions& o) {
    RunConfig rc;
    auto config = charting_config(o.flags, &rc);
    rc.charting = config;
    if (o.split) rc.split_fraction = *o.split;
    if (o.seed) rc.seed = *o.seed;
    rc.format = o.format;
    rc.validate();

    const auto truth = load_atlas(o.truth);
    const auto policy =
        o.split_policy == "random" ? SplitPolicy::random_connected(rc.seed) : SplitPolicy::earliest();
    const auto split = make_split(truth, rc.split_fraction, policy);

    std::vector<EvalReport> reports;
    if (!o.predicted.empty()) {
        auto report = evaluate_charting(load_atlas(o.predicted), truth, split);
        report.method = "predicted";
        reports.push_back(report);
    }
    std::vector<std::string> methods = o.methods;
    if (methods.empty() && o.predicted.empty()) methods = {"random", "price", "majority", "mst", "ours"};
    if (!methods.empty()) {
        if (o.meta.empty() || o.fingerprints.empty()) {
            fail(ErrorCode::InvalidArgument, "--meta and --fingerprints are needed to run methods");
        }
        auto meta = load_metadata_file(o.meta);
        warn_records(o.meta, meta.errors);
        auto fp_load = load_fingerprints_file(o.fingerprints);
        warn_records(o.fingerprints, fp_load.errors);
        const auto fps = fingerprints_for(meta.nodes, std::move(fp_load.fingerprints));
        CorpusView view{&meta.nodes, &fps, &truth};
        for (const auto& name : methods) {
            const auto method = method_from_string(name);
            const auto t0 = Clock::now();
            auto predicted = run_method(method, view, split, config, rc.seed);
            const double wall = seconds_since(t0);
            auto report = evaluate_charting(predicted, truth, split);
            report.method = std::string(to_string(method));
            if (o.timing) report.wall_seconds = wall;
            reports.push_back(report);
        }
    }
    if (o.format == "csv") std::cout << reports_to_csv(reports, o.timing);
    else if (o.format == "table") std::cout << reports_to_table(reports, o.timing);
    else std::cout << reports_to_json(reports, o.timing);
    return 0;
}

int run_export(const ExportOptions& o) {
    const auto format = export_format_from_string(o.to);
    emit(o.out, export_atlas(load_atlas(o.atlas), format));
    return 0;
}

int run_stats(const StatsOptions& o) {
    const auto atlas = load_atlas(o.atlas);
    auto s = compute_stats(atlas);
    if (o.depth == "shortest") s.depth_histogram = depth_histogram(atlas, DepthMode::ShortestPath);

    if (o.format == "csv") {
        std::cout << "statistic,value\n"
                  << "nodes," << s.nodes << "\nedges," << s.edges << "\nsources," << s.sources << "\nhubs,"
                  << s.hub_count << "\nhub_coverage," << format_number(s.hub_coverage) << "\nquantized_nodes,"
                  << s.quantized_nodes << "\nquantized_leaf_fraction," << format_number(s.quantized_leaf_fraction)
                  << "\ntemporal_consistency," << format_number(s.temporal_consistency) << "\n";
        for (const auto& [d, c] : s.depth_histogram) std::cout << "depth_" << d << ',' << c << "\n";
    } else if (o.format == "table") {
        auto row = [](const std::string& k, const std::string& v) {
            std::cout << std::left << std::setw(26) << k << std::right << std::setw(12) << v << "\n";
        };
        row("nodes", std::to_string(s.nodes));
        row("edges", std::to_string(s.edges));
        row("sources", std::to_string(s.sources));
        row("hubs", std::to_string(s.hub_count));
        row("hub coverage", format_number(s.hub_coverage));
        row("quantized nodes", std::to_string(s.quantized_nodes));
        row("quantized leaf fraction", format_number(s.quantized_leaf_fraction));
        row("temporal consistency", format_number(s.temporal_consistency));
        std::cout << o.depth << "-path depth histogram\n";
        for (const auto& [d, c] : s.depth_histogram) row("  depth " + std::to_string(d), std::to_string(c));
    } else {
        json hist = json::object();
        for (const auto& [d, c] : s.depth_histogram) hist[std::to_string(d)] = c;
        json j{{"nodes", s.nodes},
               {"edges", s.edges},
               {"sources", s.sources},
               {"depth_mode", o.depth},
               {"depth_histogram", hist},
               {"hub_count", s.hub_count},
               {"hub_coverage", s.hub_coverage},
               {"quantized_nodes", s.quantized_nodes},
               {"quantized_leaf_fraction", s.quantized_leaf_fraction},
               {"temporal_consistency", s.temporal_consistency}};
        std::cout << j.dump(2) << "\n";
    }
    return 0;
}

}  // namespace atlas::cli
