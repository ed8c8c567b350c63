#include "atlas/syngen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include <json.hpp>

#include "atlas/analytics.hpp"
#include "atlas/error.hpp"
#include "atlas/rng.hpp"

namespace atlas {

using json = nlohmann::json;

namespace {

void check_rate(double r, const char* name) {
    if (!(r >= 0.0 && r <= 1.0)) fail(ErrorCode::InfeasibleSpec, std::string(name) + " must lie in [0, 1]");
}

void check_range(const IntRange& r, std::int64_t lowest, const char* name) {
    if (r.min < lowest || r.max < r.min) fail(ErrorCode::InfeasibleSpec, std::string(name) + " range is invalid");
}

}  // namespace

void SyntheticSpec::validate() const {
    if (n_components == 0) fail(ErrorCode::InfeasibleSpec, "n_components must be positive");
    check_range(component_size, 1, "component_size");
    check_range(snake_length, 2, "snake_length");
    check_range(fan_width, 1, "fan_width");
    check_rate(fan_rate, "fan_rate");
    check_rate(snake_rate, "snake_rate");
    check_rate(merge_rate, "merge_rate");
    check_rate(duplicate_rate, "duplicate_rate");
    check_rate(quantize_rate, "quantize_rate");
    check_rate(fan_confusion_rate, "fan_confusion_rate");
    if (fan_rate + snake_rate + merge_rate + duplicate_rate + quantize_rate > 1.0 + 1e-12) {
        fail(ErrorCode::InfeasibleSpec, "expansion rates sum to more than 1");
    }
    if (snake_rate > 0.0 && snake_length.min > component_size.max) {
        fail(ErrorCode::InfeasibleSpec, "snakes are longer than any component");
    }
    if (!(attachment_power >= 0.0)) fail(ErrorCode::InfeasibleSpec, "attachment_power must be non-negative");
    if (dim == 0) fail(ErrorCode::InfeasibleSpec, "dim must be positive");
    if (child_sigma < 0 || sweep_drift < 0 || sweep_sigma < 0 || snake_sigma < 0 || root_separation < 0) {
        fail(ErrorCode::InfeasibleSpec, "scales must be non-negative");
    }
    if (!(time_step > 0.0) || time_jitter < 0.0 || quantize_delay < 0.0) {
        fail(ErrorCode::InfeasibleSpec, "time parameters must be positive");
    }
    if (start_time <= 0) fail(ErrorCode::InfeasibleSpec, "start_time must be positive");
    if (weights_per_model < 256) fail(ErrorCode::InfeasibleSpec, "weights_per_model must be at least 256");
    if (attributes.vocabulary == 0) fail(ErrorCode::InfeasibleSpec, "attribute vocabulary must be positive");
    for (const auto& k : attributes.keys) {
        if (!is_valid_attribute_key(k)) fail(ErrorCode::InfeasibleSpec, "unknown attribute key '" + k + "'");
    }
    check_rate(attributes.hub_consistency, "hub_consistency");
}

namespace {

json range_json(const IntRange& r) { return {{"min", r.min}, {"max", r.max}}; }

IntRange range_from(const json& j, IntRange fallback) {
    if (j.is_number_integer()) return {j.get<std::int64_t>(), j.get<std::int64_t>()};
    if (j.contains("min")) fallback.min = j["min"].get<std::int64_t>();
    if (j.contains("max")) fallback.max = j["max"].get<std::int64_t>();
    return fallback;
}

}  // namespace

std::string spec_to_json(const SyntheticSpec& s) {
    json j;
    j["n_components"] = s.n_components;
    j["component_size"] = range_json(s.component_size);
    j["fan_rate"] = s.fan_rate;
    j["snake_rate"] = s.snake_rate;
    j["merge_rate"] = s.merge_rate;
    j["duplicate_rate"] = s.duplicate_rate;
    j["quantize_rate"] = s.quantize_rate;
    j["fan_confusion_rate"] = s.fan_confusion_rate;
    j["snake_length"] = range_json(s.snake_length);
    j["fan_width"] = range_json(s.fan_width);
    j["attachment_power"] = s.attachment_power;
    j["snake_tail_anchor"] = s.snake_tail_anchor;
    j["checkpoints_are_anchors"] = s.checkpoints_are_anchors;
    j["dim"] = s.dim;
    j["child_sigma"] = s.child_sigma;
    j["sweep_drift"] = s.sweep_drift;
    j["sweep_sigma"] = s.sweep_sigma;
    j["snake_sigma"] = s.snake_sigma;
    j["root_separation"] = s.root_separation;
    j["time_step"] = s.time_step;
    j["time_jitter"] = s.time_jitter;
    j["quantize_delay"] = s.quantize_delay;
    j["start_time"] = s.start_time;
    j["weights_per_model"] = s.weights_per_model;
    j["attribute_scheme"] = {{"keys", s.attributes.keys},
                             {"vocabulary", s.attributes.vocabulary},
                             {"zipf_exponent", s.attributes.zipf_exponent},
                             {"hub_consistency", s.attributes.hub_consistency}};
    j["metric_scheme"] = {{"kind", s.metric.kind == MetricScheme::Kind::Constant ? "Constant" : "DepthPlusNoise"},
                          {"name", s.metric.name},
                          {"sigma", s.metric.sigma},
                          {"constant", s.metric.constant}};
    j["seed"] = s.seed;
    return j.dump(2) + "\n";
}

SyntheticSpec spec_from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("spec JSON: ") + e.what());
    }
    if (!j.is_object()) fail(ErrorCode::InvalidArgument, "spec must be a JSON object");
    SyntheticSpec s;
    try {
        auto num = [&](const char* key, auto& field) {
            if (j.contains(key)) field = j[key].get<std::decay_t<decltype(field)>>();
        };
        num("n_components", s.n_components);
        if (j.contains("component_size")) s.component_size = range_from(j["component_size"], s.component_size);
        num("fan_rate", s.fan_rate);
        num("snake_rate", s.snake_rate);
        num("merge_rate", s.merge_rate);
        num("duplicate_rate", s.duplicate_rate);
        num("quantize_rate", s.quantize_rate);
        num("fan_confusion_rate", s.fan_confusion_rate);
        if (j.contains("snake_length")) s.snake_length = range_from(j["snake_length"], s.snake_length);
        if (j.contains("fan_width")) s.fan_width = range_from(j["fan_width"], s.fan_width);
        num("attachment_power", s.attachment_power);
        num("snake_tail_anchor", s.snake_tail_anchor);
        num("checkpoints_are_anchors", s.checkpoints_are_anchors);
        num("dim", s.dim);
        num("child_sigma", s.child_sigma);
        num("sweep_drift", s.sweep_drift);
        num("sweep_sigma", s.sweep_sigma);
        num("snake_sigma", s.snake_sigma);
        num("root_separation", s.root_separation);
        num("time_step", s.time_step);
        num("time_jitter", s.time_jitter);
        num("quantize_delay", s.quantize_delay);
        num("start_time", s.start_time);
        num("weights_per_model", s.weights_per_model);
        num("seed", s.seed);
        if (j.contains("attribute_scheme")) {
            const auto& a = j["attribute_scheme"];
            if (a.contains("keys")) s.attributes.keys = a["keys"].get<std::vector<std::string>>();
            if (a.contains("vocabulary")) s.attributes.vocabulary = a["vocabulary"].get<std::size_t>();
            if (a.contains("zipf_exponent")) s.attributes.zipf_exponent = a["zipf_exponent"].get<double>();
            if (a.contains("hub_consistency")) s.attributes.hub_consistency = a["hub_consistency"].get<double>();
        }
        if (j.contains("metric_scheme")) {
            const auto& m = j["metric_scheme"];
            if (m.contains("kind")) {
                auto k = m["kind"].get<std::string>();
                if (k == "Constant") s.metric.kind = MetricScheme::Kind::Constant;
                else if (k == "DepthPlusNoise") s.metric.kind = MetricScheme::Kind::DepthPlusNoise;
                else fail(ErrorCode::InvalidArgument, "unknown metric scheme '" + k + "'");
            }
            if (m.contains("name")) s.metric.name = m["name"].get<std::string>();
            if (m.contains("sigma")) s.metric.sigma = m["sigma"].get<double>();
            if (m.contains("constant")) s.metric.constant = m["constant"].get<double>();
        }
    } catch (const json::exception& e) {
        fail(ErrorCode::InvalidArgument, std::string("spec field has the wrong type: ") + e.what());
    }
    s.validate();
    return s;
}

std::string_view to_string(NodeRole role) {
    switch (role) {
        case NodeRole::Root: return "Root";
        case NodeRole::FineTune: return "FineTune";
        case NodeRole::FanChild: return "FanChild";
        case NodeRole::SweepChild: return "SweepChild";
        case NodeRole::SnakeStep: return "SnakeStep";
        case NodeRole::Quantized: return "Quantized";
        case NodeRole::Duplicate: return "Duplicate";
        case NodeRole::Merge: return "Merge";
    }
    return "FineTune";
}

namespace {

const std::vector<std::string>& vocabulary_for(const std::string& key) {
    static const std::vector<std::string> license{"apache-2.0", "mit",     "cc-by-nc-4.0", "openrail",
                                                  "llama2",     "cc-by-4.0", "gpl-3.0",    "bsd-3-clause"};
    static const std::vector<std::string> pipeline{"text-generation",     "text2text-generation", "text-classification",
                                                   "feature-extraction",  "text-to-image",        "token-classification",
                                                   "question-answering", "summarization"};
    static const std::vector<std::string> none;
    if (key == "license") return license;
    if (key == "pipeline_tag") return pipeline;
    return none;
}

std::string label_name(const std::string& key, std::size_t i) {
    const auto& vocab = vocabulary_for(key);
    if (i < vocab.size()) return vocab[i];
    return key + "-" + std::to_string(i);
}

std::vector<double> perturb(Rng& rng, const std::vector<double>& base, double sigma) {
    std::vector<double> w(base.size());
    for (std::size_t k = 0; k < base.size(); ++k) w[k] = base[k] + sigma * rng.normal();
    return w;
}

// 256-level grid over [min, max]; each value lands at a random offset inside
// its bin, so two quantizations of the same parent differ.
std::vector<double> quantize_256(Rng& rng, const std::vector<double>& base) {
    auto [lo_it, hi_it] = std::minmax_element(base.begin(), base.end());
    const double lo = *lo_it, hi = *hi_it;
    const double step = (hi - lo) / 256.0;
    const double offset = rng.uniform01();
    std::vector<double> w(base.size());
    for (std::size_t k = 0; k < base.size(); ++k) {
        if (step <= 0.0) {
            w[k] = base[k];
            continue;
        }
        auto bin = std::clamp(std::floor((base[k] - lo) / step), 0.0, 255.0);
        w[k] = lo + (bin + offset) * step;
    }
    return w;
}

struct Builder {
    const SyntheticSpec& spec;
    Rng& rng;

    struct Proto {
        std::string id;
        std::vector<double> w;
        std::int64_t t = 0;
        std::vector<std::size_t> parents;
        NodeRole role = NodeRole::Root;
        bool quantized = false;
    };
    std::vector<Proto> nodes;
    std::vector<PlantedFan> fans;
    std::vector<PlantedSnake> snakes;
    std::vector<std::vector<std::size_t>> dup_groups;  // indices, original first
    double sweep_credit = 0.0;  // sweeps are spread evenly over fans so every corpus gets its share

    std::size_t add(std::size_t comp, std::vector<double> w, double t, std::vector<std::size_t> parents, NodeRole role) {
        std::int64_t ti = std::llround(t);
        for (auto p : parents) ti = std::max(ti, nodes[p].t + 1);  // strictly after every parent
        char buf[64];
        std::snprintf(buf, sizeof buf, "c%zu/m%05zu", comp, nodes.size());
        nodes.push_back({buf, std::move(w), ti, std::move(parents), role, role == NodeRole::Quantized});
        return nodes.size() - 1;
    }

    void grow_component(std::size_t comp, std::size_t target) {
        const double root_scale =
            spec.root_separation > 0.0 ? spec.root_separation / std::sqrt(2.0 * static_cast<double>(spec.dim)) : 1.0;
        const double ts = spec.time_step;
        std::vector<double> root(spec.dim);
        for (auto& x : root) x = root_scale * rng.normal();
        const auto first = nodes.size();
        auto root_time = static_cast<double>(spec.start_time) + static_cast<double>(comp) * ts;
        std::vector<std::size_t> anchors{add(comp, root, root_time, {}, NodeRole::Root)};
        std::vector<std::size_t> leafy;
        std::vector<double> children(1, 0.0);  // per node of this component, by offset from first
        std::vector<std::size_t> dup_of;      // original index for each duplicate group

        auto room = [&] { return nodes.size() - first < target; };
        auto note_child = [&](std::size_t idx) {
            children.resize(idx - first + 1, 0.0);
            for (auto p : nodes[idx].parents) children[p - first] += 1.0;
        };

        while (room()) {
            const double u = rng.uniform01();
            const double cum[] = {spec.fan_rate, spec.fan_rate + spec.snake_rate,
                                  spec.fan_rate + spec.snake_rate + spec.merge_rate,
                                  spec.fan_rate + spec.snake_rate + spec.merge_rate + spec.duplicate_rate,
                                  spec.fan_rate + spec.snake_rate + spec.merge_rate + spec.duplicate_rate +
                                      spec.quantize_rate};
            int action = 5;  // single fine-tune
            for (int a = 0; a < 5; ++a) {
                if (u < cum[a]) {
                    action = a;
                    break;
                }
            }
            std::vector<std::size_t> pool = anchors;
            if (action == 3 || action == 4) pool.insert(pool.end(), leafy.begin(), leafy.end());
            std::vector<double> weights;
            for (auto e : pool) weights.push_back(std::pow(children[e - first] + 1.0, spec.attachment_power));
            const auto p = pool[rng.categorical(weights)];
            const double t0 = static_cast<double>(nodes[p].t);

            if (action == 0) {
                const auto width = rng.uniform_int(spec.fan_width.min, spec.fan_width.max);
                const double base = t0 + rng.exponential(ts);
                sweep_credit += spec.fan_confusion_rate;
                const bool sweep = sweep_credit >= 1.0;
                if (sweep) sweep_credit -= 1.0;
                std::vector<double> drift(spec.dim, 0.0);
                if (sweep) {
                    for (auto& x : drift) x = spec.sweep_drift * rng.normal();
                }
                PlantedFan fan{ModelId(nodes[p].id), {}, sweep};
                for (std::int64_t i = 0; i < width && room(); ++i) {
                    const double t = base + rng.uniform(0.0, spec.time_jitter * ts);
                    std::vector<double> w;
                    if (sweep) {
                        w = nodes[p].w;
                        for (std::size_t k = 0; k < spec.dim; ++k) w[k] += drift[k] + spec.sweep_sigma * rng.normal();
                    } else {
                        w = perturb(rng, nodes[p].w, spec.child_sigma);
                    }
                    auto c = add(comp, std::move(w), t, {p}, sweep ? NodeRole::SweepChild : NodeRole::FanChild);
                    note_child(c);
                    (sweep ? leafy : anchors).push_back(c);
                    fan.children.emplace_back(nodes[c].id);
                }
                fans.push_back(std::move(fan));
            } else if (action == 1) {
                const auto length = rng.uniform_int(spec.snake_length.min, spec.snake_length.max);
                PlantedSnake snake{{ModelId(nodes[p].id)}};
                auto prev = p;
                double t = t0;
                for (std::int64_t i = 1; i < length && room(); ++i) {
                    t += ts * rng.uniform(0.5, 1.5);
                    // The first step leaves the anchor like a regular fine-tune; later checkpoints drift slowly.
                    auto w = perturb(rng, nodes[prev].w, i == 1 ? spec.child_sigma : spec.snake_sigma);
                    auto c = add(comp, std::move(w), t, {prev}, NodeRole::SnakeStep);
                    note_child(c);
                    (spec.checkpoints_are_anchors ? anchors : leafy).push_back(c);
                    snake.chain.emplace_back(nodes[c].id);
                    prev = c;
                    t = static_cast<double>(nodes[c].t);
                }
                if (spec.snake_tail_anchor && !spec.checkpoints_are_anchors && prev != p) {
                    // The final checkpoint is the released model; it can be built on like any fine-tune.
                    leafy.pop_back();
                    anchors.push_back(prev);
                }
                snakes.push_back(std::move(snake));
            } else if (action == 2 && anchors.size() > 1) {
                std::size_t p2 = p;
                while (p2 == p) p2 = anchors[rng.uniform_index(anchors.size())];
                std::vector<double> w(spec.dim);
                for (std::size_t k = 0; k < spec.dim; ++k) {
                    w[k] = 0.5 * (nodes[p].w[k] + nodes[p2].w[k]) + spec.sweep_sigma * rng.normal();
                }
                const double t = std::max(t0, static_cast<double>(nodes[p2].t)) + rng.exponential(ts);
                auto c = add(comp, std::move(w), t, {std::min(p, p2), std::max(p, p2)}, NodeRole::Merge);
                note_child(c);
                anchors.push_back(c);
            } else if (action == 3) {
                auto c = add(comp, nodes[p].w, t0 + rng.exponential(ts), {p}, NodeRole::Duplicate);
                note_child(c);
                auto it = std::find(dup_of.begin(), dup_of.end(), p);
                if (it == dup_of.end()) {
                    dup_of.push_back(p);
                    dup_groups.push_back({p, c});
                } else {
                    dup_groups[dup_groups.size() - dup_of.size() + static_cast<std::size_t>(it - dup_of.begin())]
                        .push_back(c);
                }
            } else if (action == 4) {
                auto w = quantize_256(rng, nodes[p].w);
                auto c = add(comp, std::move(w), t0 + rng.exponential(ts * spec.quantize_delay), {p}, NodeRole::Quantized);
                note_child(c);
            } else {
                auto c = add(comp, perturb(rng, nodes[p].w, spec.child_sigma), t0 + rng.exponential(ts), {p},
                             NodeRole::FineTune);
                note_child(c);
                anchors.push_back(c);
            }
        }
    }
};

EdgeKind kind_for(NodeRole role) {
    switch (role) {
        case NodeRole::Quantized: return EdgeKind::Quantization;
        case NodeRole::Duplicate: return EdgeKind::Duplicate;
        case NodeRole::Merge: return EdgeKind::Merge;
        default: return EdgeKind::FineTune;
    }
}

std::vector<double> zipf_weights(std::size_t n, double s) {
    std::vector<double> w(n);
    for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / std::pow(static_cast<double>(i + 1), s);
    return w;
}

}  // namespace

SyntheticCorpus generate(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);
    Builder b{spec, rng, {}, {}, {}, {}, rng.uniform01()};
    std::vector<std::pair<std::size_t, std::size_t>> comp_ranges;
    for (std::size_t c = 0; c < spec.n_components; ++c) {
        const auto size = static_cast<std::size_t>(rng.uniform_int(spec.component_size.min, spec.component_size.max));
        const auto first = b.nodes.size();
        b.grow_component(c, size);
        comp_ranges.emplace_back(first, b.nodes.size());
    }

    SyntheticCorpus corpus;
    Rng meta_rng(derive_seed(spec.seed, 7));
    for (const auto& p : b.nodes) {
        ModelNode n;
        n.id = ModelId(p.id);
        n.created_at = p.t;
        n.downloads = static_cast<std::uint64_t>(std::floor(std::exp(meta_rng.normal(4.0, 2.0))));
        n.quantized = p.quantized;
        std::vector<ModelId> parents;
        for (auto q : p.parents) parents.emplace_back(b.nodes[q].id);
        n.known_parents = std::move(parents);
        corpus.truth.add_node(std::move(n));
        corpus.roles[ModelId(p.id)] = p.role;
    }
    for (const auto& p : b.nodes) {
        for (auto q : p.parents) corpus.truth.add_edge(ModelId(b.nodes[q].id), ModelId(p.id), kind_for(p.role));
    }

    // Attributes: each hub draws one label per key; members keep it with probability hub_consistency.
    const auto hub_list = hubs(corpus.truth);
    for (const auto& key : spec.attributes.keys) {
        const auto weights = zipf_weights(spec.attributes.vocabulary, spec.attributes.zipf_exponent);
        std::vector<std::string> label(corpus.truth.size());
        for (std::size_t i = 0; i < label.size(); ++i) label[i] = label_name(key, meta_rng.categorical(weights));
        for (const auto& hub : hub_list) {
            const auto hub_label = label_name(key, meta_rng.categorical(weights));
            for (const auto& m : hub.members) {
                if (meta_rng.bernoulli(spec.attributes.hub_consistency)) label[corpus.truth.index_of(m)] = hub_label;
            }
        }
        for (std::size_t i = 0; i < label.size(); ++i) corpus.truth.mutable_node_at(i).attributes[key] = label[i];
    }
    const auto depth = node_depths(corpus.truth);
    for (std::size_t i = 0; i < corpus.truth.size(); ++i) {
        double v = spec.metric.kind == MetricScheme::Kind::Constant
                       ? spec.metric.constant
                       : static_cast<double>(depth[i]) + spec.metric.sigma * meta_rng.normal();
        corpus.truth.mutable_node_at(i).metrics[spec.metric.name] = v;
    }

    const std::string selector = "*|" + std::to_string(spec.weights_per_model);
    const double quantized_ratio = 256.0 / static_cast<double>(spec.weights_per_model);
    for (std::size_t i = 0; i < b.nodes.size(); ++i) {
        const auto& p = b.nodes[i];
        corpus.metadata.push_back(corpus.truth.node_at(i));
        Fingerprint fp;
        fp.id = ModelId(p.id);
        fp.dim = spec.dim;
        fp.values = p.w;
        fp.dtype_tag = DTypeTag::F32;
        // Stands in for the ratio a full-weight scan would report.
        fp.unique_ratio = p.quantized ? std::min(1.0, quantized_ratio) : 1.0;
        fp.selector = selector;
        fp.seed = spec.seed;
        corpus.fingerprints.push_back(std::move(fp));
    }
    for (const auto& [first, last] : comp_ranges) {
        std::vector<ModelId> ids;
        for (auto i = first; i < last; ++i) ids.emplace_back(b.nodes[i].id);
        corpus.components.push_back(std::move(ids));
    }
    corpus.fans = std::move(b.fans);
    corpus.snakes = std::move(b.snakes);
    for (const auto& g : b.dup_groups) {
        std::vector<ModelId> ids;
        for (auto i : g) ids.emplace_back(b.nodes[i].id);
        corpus.duplicate_groups.push_back(std::move(ids));
    }
    return corpus;
}

std::vector<ModelNode> corrupt(const std::vector<ModelNode>& metadata, const DropRates& rates, std::uint64_t seed) {
    check_rate(rates.known_parents, "known_parents drop rate");
    for (const auto& [k, r] : rates.fields) check_rate(r, k.c_str());
    Rng rng(seed);
    std::vector<ModelNode> out = metadata;
    for (auto& n : out) {
        const bool merge = n.known_parents && n.known_parents->size() >= 2;
        const bool drop_parents = rng.bernoulli(rates.known_parents);
        if (!merge && drop_parents) n.known_parents.reset();
        for (const auto& [field, rate] : rates.fields) {
            const bool drop = rng.bernoulli(rate);
            if (!drop) continue;
            if (field == "downloads") {
                n.downloads = 0;
            } else if (field.rfind("metric:", 0) == 0) {
                n.metrics.erase(field.substr(7));
            } else {
                n.attributes.erase(field);
            }
        }
    }
    return out;
}

std::vector<ModelNode> observed_metadata(const SyntheticCorpus& corpus) {
    auto nodes = corrupt(corpus.metadata, DropRates{1.0, {}}, 0);
    // Quantization has to be recovered from the fingerprints.
    for (auto& n : nodes) n.quantized = false;
    return nodes;
}

PlantedPattern generate_pattern(PatternLabel label, const SyntheticSpec& spec, std::size_t K, std::uint64_t seed) {
    Rng rng(seed);
    const double ts = spec.time_step;
    PlantedPattern out;
    out.label = label;
    std::vector<std::vector<double>> ws;
    std::vector<std::int64_t> ts_;
    std::vector<double> root(spec.dim);
    for (auto& x : root) x = rng.normal();
    ws.push_back(root);
    ts_.push_back(spec.start_time);
    std::size_t query = 0;
    if (label == PatternLabel::Snake) {
        const auto length = std::max<std::int64_t>(spec.snake_length.max, static_cast<std::int64_t>(K) + 2);
        double t = static_cast<double>(spec.start_time);
        for (std::int64_t i = 1; i < length; ++i) {
            t += ts * rng.uniform(0.5, 1.5);
            ws.push_back(perturb(rng, ws.back(), i == 1 ? spec.child_sigma : spec.snake_sigma));
            ts_.push_back(std::llround(t));
        }
        // Any checkpoint past the first two keeps the regular first step out of its neighbourhood.
        query = 2 + rng.uniform_index(ws.size() - 2);
    } else {
        const auto width = std::max<std::int64_t>(rng.uniform_int(spec.fan_width.min, spec.fan_width.max),
                                                  static_cast<std::int64_t>(K) + 1);
        std::vector<double> drift(spec.dim);
        for (auto& x : drift) x = spec.sweep_drift * rng.normal();
        const double base = static_cast<double>(spec.start_time) + rng.exponential(ts);
        for (std::int64_t i = 0; i < width; ++i) {
            std::vector<double> w = root;
            for (std::size_t k = 0; k < spec.dim; ++k) w[k] += drift[k] + spec.sweep_sigma * rng.normal();
            ws.push_back(std::move(w));
            ts_.push_back(std::llround(base + rng.uniform(0.0, spec.time_jitter * ts)));
        }
        query = 1 + rng.uniform_index(ws.size() - 1);
    }
    for (std::size_t i = 0; i < ws.size(); ++i) {
        ModelNode n;
        n.id = ModelId("p/" + std::to_string(i));
        n.created_at = ts_[i];
        out.nodes.push_back(n);
        Fingerprint fp;
        fp.id = n.id;
        fp.dim = spec.dim;
        fp.values = ws[i];
        fp.selector = "*";
        out.fingerprints.push_back(std::move(fp));
    }
    out.query = out.nodes[query].id;
    return out;
}

WeightContainer random_container(std::size_t n_weights, std::uint64_t seed) {
    Rng rng(seed);
    WeightContainer c;
    const std::size_t parts = std::max<std::size_t>(1, std::min<std::size_t>(4, n_weights / 64));
    std::size_t left = n_weights;
    for (std::size_t t = 0; t < parts; ++t) {
        const std::size_t count = t + 1 == parts ? left : n_weights / parts;
        left -= count;
        std::vector<float> v(count);
        for (auto& x : v) x = static_cast<float>(0.02 * rng.normal());
        const char* names[] = {"layers.0.attn.q_proj.weight", "layers.0.mlp.fc1.weight", "layers.1.attn.k_proj.weight",
                               "layers.1.mlp.fc2.weight"};
        c.add_f32(names[t], {static_cast<std::int64_t>(count)}, v);
    }
    return c;
}

WeightContainer quantize_b_bits(const WeightContainer& container, int bits) {
    if (bits < 1 || bits > 16) fail(ErrorCode::InvalidArgument, "bits must lie in [1, 16]");
    const double levels = std::ldexp(1.0, bits);
    WeightContainer out;
    for (const auto& t : container.tensors()) {
        std::vector<float> v(t.numel());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = static_cast<float>(t.value_at(i));
        if (!v.empty()) {
            auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
            const double lo = *lo_it, hi = *hi_it;
            const double step = (hi - lo) / (levels - 1.0);
            if (step > 0.0) {
                for (auto& x : v) x = static_cast<float>(lo + std::round((x - lo) / step) * step);
            }
        }
        out.add_f32(t.name, t.shape, v);
    }
    return out;
}

}  // namespace atlas
