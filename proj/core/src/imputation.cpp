#include "atlas/imputation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <iomanip>
#include <sstream>

#include <json.hpp>

#include "atlas/analytics.hpp"
#include "atlas/error.hpp"

namespace atlas {

MetricLabelSet labels_from_atlas(const Atlas& atlas, const std::string& metric_name) {
    MetricLabelSet set{metric_name, {}};
    for (const auto& n : atlas.nodes()) {
        auto it = n.metrics.find(metric_name);
        if (it != n.metrics.end() && it->second) set.labels[n.id] = *it->second;
    }
    return set;
}

namespace {

double labelled_mean(const MetricLabelSet& labels) {
    double sum = 0.0;
    for (const auto& [id, v] : labels.labels) sum += v;
    return sum / static_cast<double>(labels.labels.size());
}

}  // namespace

std::vector<MetricPrediction> impute_metric_knn(const Atlas& atlas, const MetricLabelSet& labels, std::size_t k) {
    if (labels.labels.empty()) fail(ErrorCode::EmptyLabelSet, "no labelled nodes for '" + labels.metric_name + "'");
    if (k == 0) fail(ErrorCode::InvalidArgument, "k must be at least 1");
    const auto n = atlas.size();
    std::vector<char> labelled(n, 0);
    std::vector<double> value(n, 0.0);
    for (const auto& [id, v] : labels.labels) {
        auto i = atlas.find(id);
        if (!i) fail(ErrorCode::UnknownId, "labelled node '" + id.str() + "' is not in the atlas");
        labelled[*i] = 1;
        value[*i] = v;
    }
    const double global = labelled_mean(labels);

    std::vector<MetricPrediction> out;
    std::vector<std::size_t> seen_at(n, static_cast<std::size_t>(-1));
    std::vector<std::size_t> frontier, next;
    for (auto target : atlas.time_order()) {
        if (labelled[target]) continue;
        // Level-synchronous BFS; stop after the level that brings the count to k.
        frontier.assign(1, target);
        seen_at[target] = target;
        double sum = 0.0;
        std::size_t count = 0;
        while (!frontier.empty() && count < k) {
            next.clear();
            for (auto v : frontier) {
                auto visit = [&](std::size_t w) {
                    if (seen_at[w] == target) return;
                    seen_at[w] = target;
                    next.push_back(w);
                    if (labelled[w]) {
                        sum += value[w];
                        ++count;
                    }
                };
                for (const auto& l : atlas.out_links(v)) visit(l.node);
                for (const auto& l : atlas.in_links(v)) visit(l.node);
            }
            frontier.swap(next);
        }
        MetricPrediction p{atlas.node_at(target).id, global, count == 0};
        if (count) p.value = sum / static_cast<double>(count);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<MetricPrediction> baseline_metric_mean(const MetricLabelSet& labels, const std::vector<ModelId>& targets) {
    if (labels.labels.empty()) fail(ErrorCode::EmptyLabelSet, "no labelled nodes for '" + labels.metric_name + "'");
    const double mean = labelled_mean(labels);
    std::vector<MetricPrediction> out;
    for (const auto& id : targets) out.push_back({id, mean, true});
    return out;
}

std::string_view to_string(AttributeSource source) {
    return source == AttributeSource::Hub ? "hub" : "global-fallback";
}

namespace {

std::optional<std::string> label_of(const ModelNode& n, const std::string& key) {
    auto it = n.attributes.find(key);
    if (it == n.attributes.end()) return std::nullopt;
    return it->second;
}

// Most frequent label; ties go to the lexicographically smallest.
std::string majority(const std::map<std::string, std::size_t>& counts) {
    std::string best;
    std::size_t best_count = 0;
    for (const auto& [label, c] : counts) {
        if (c > best_count) {
            best = label;
            best_count = c;
        }
    }
    return best;
}

std::string global_majority(const Atlas& atlas, const std::string& key) {
    if (!is_valid_attribute_key(key)) fail(ErrorCode::InvalidArgument, "unknown attribute key '" + key + "'");
    std::map<std::string, std::size_t> counts;
    for (const auto& n : atlas.nodes()) {
        if (auto l = label_of(n, key)) ++counts[*l];
    }
    if (counts.empty()) fail(ErrorCode::NoLabeledNodes, "no node carries attribute '" + key + "'");
    return majority(counts);
}

}  // namespace

std::vector<AttributePrediction> impute_attribute_hub(const Atlas& atlas, const std::string& key) {
    const auto fallback = global_majority(atlas, key);
    std::map<ModelId, std::string> hub_label;
    for (const auto& hub : hubs(atlas)) {
        std::map<std::string, std::size_t> counts;
        for (const auto& m : hub.members) {
            if (auto l = label_of(atlas.node(m), key)) ++counts[*l];
        }
        if (counts.empty()) continue;
        auto label = majority(counts);
        for (const auto& m : hub.members) hub_label[m] = label;
    }
    std::vector<AttributePrediction> out;
    for (auto i : atlas.time_order()) {
        const auto& n = atlas.node_at(i);
        if (label_of(n, key)) continue;
        auto it = hub_label.find(n.id);
        if (it != hub_label.end()) {
            out.push_back({n.id, it->second, AttributeSource::Hub});
        } else {
            out.push_back({n.id, fallback, AttributeSource::GlobalFallback});
        }
    }
    return out;
}

std::vector<AttributePrediction> baseline_attribute_majority(const Atlas& atlas, const std::string& key) {
    const auto label = global_majority(atlas, key);
    std::vector<AttributePrediction> out;
    for (auto i : atlas.time_order()) {
        const auto& n = atlas.node_at(i);
        if (!label_of(n, key)) out.push_back({n.id, label, AttributeSource::GlobalFallback});
    }
    return out;
}

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) fail(ErrorCode::InvalidArgument, "pearson needs equal-length series");
    if (x.size() < 2) return std::nullopt;
    const auto n = static_cast<double>(x.size());
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx <= 0.0 || syy <= 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

MetricScores evaluate_metric(const std::vector<MetricPrediction>& predictions, const std::map<ModelId, double>& truth) {
    if (predictions.size() != truth.size()) fail(ErrorCode::KeyMismatch, "predictions and truth differ in size");
    MetricScores s;
    std::vector<double> pv, tv;
    for (const auto& p : predictions) {
        auto it = truth.find(p.id);
        if (it == truth.end()) fail(ErrorCode::KeyMismatch, "no truth for '" + p.id.str() + "'");
        pv.push_back(p.value);
        tv.push_back(it->second);
    }
    s.n = pv.size();
    for (std::size_t i = 0; i < pv.size(); ++i) {
        double e = pv[i] - tv[i];
        s.mse += e * e;
        s.mae += std::abs(e);
    }
    if (s.n) {
        s.mse /= static_cast<double>(s.n);
        s.mae /= static_cast<double>(s.n);
    }
    s.pearson = pearson(pv, tv);
    return s;
}

AttributeScores evaluate_attribute(const std::vector<AttributePrediction>& predictions,
                                   const std::map<ModelId, std::string>& truth) {
    if (predictions.size() != truth.size()) fail(ErrorCode::KeyMismatch, "predictions and truth differ in size");
    AttributeScores s;
    for (const auto& p : predictions) {
        auto it = truth.find(p.id);
        if (it == truth.end()) fail(ErrorCode::KeyMismatch, "no truth for '" + p.id.str() + "'");
        ++s.n;
        if (it->second == p.value) ++s.correct;
    }
    s.accuracy = s.n ? static_cast<double>(s.correct) / static_cast<double>(s.n) : 0.0;
    return s;
}

ImputationReport metric_imputation_report(const Atlas& atlas, const MetricLabelSet& labels,
                                          const std::map<ModelId, double>& held_out_truth,
                                          const std::vector<std::size_t>& ks) {
    ImputationReport report{labels.metric_name, {}};
    auto restrict = [&](const std::vector<MetricPrediction>& preds) {
        std::vector<MetricPrediction> out;
        for (const auto& p : preds) {
            if (held_out_truth.count(p.id)) out.push_back(p);
        }
        return out;
    };
    for (auto k : ks) {
        report.rows.push_back({"k=" + std::to_string(k),
                               evaluate_metric(restrict(impute_metric_knn(atlas, labels, k)), held_out_truth)});
    }
    std::vector<ModelId> targets;
    for (const auto& [id, v] : held_out_truth) targets.push_back(id);
    report.rows.push_back({"baseline-mean", evaluate_metric(baseline_metric_mean(labels, targets), held_out_truth)});
    return report;
}

std::string imputation_report_to_json(const ImputationReport& report) {
    nlohmann::json j;
    j["metric"] = report.metric_name;
    j["rows"] = nlohmann::json::array();
    for (const auto& r : report.rows) {
        nlohmann::json row = {{"label", r.label}, {"n", r.scores.n}, {"mse", r.scores.mse}, {"mae", r.scores.mae}};
        row["pearson"] = r.scores.pearson ? nlohmann::json(*r.scores.pearson) : nlohmann::json("undefined");
        j["rows"].push_back(row);
    }
    return j.dump(2) + "\n";
}

std::string imputation_report_to_csv(const ImputationReport& report) {
    std::ostringstream out;
    out << "metric,label,n,mse,mae,pearson\n" << std::setprecision(6) << std::fixed;
    for (const auto& r : report.rows) {
        out << report.metric_name << ',' << r.label << ',' << r.scores.n << ',' << r.scores.mse << ',' << r.scores.mae
            << ',';
        if (r.scores.pearson) out << *r.scores.pearson;
        else out << "undefined";
        out << '\n';
    }
    return out.str();
}

std::string imputation_report_to_table(const ImputationReport& report) {
    std::ostringstream out;
    out << report.metric_name << '\n';
    out << std::left << std::setw(16) << "method" << std::right << std::setw(12) << "MSE" << std::setw(12) << "MAE"
        << std::setw(10) << "Corr" << '\n'
        << std::fixed;
    for (const auto& r : report.rows) {
        out << std::left << std::setw(16) << r.label << std::right << std::setprecision(4) << std::setw(12)
            << r.scores.mse << std::setw(12) << r.scores.mae << std::setw(10);
        if (r.scores.pearson) out << std::setprecision(3) << *r.scores.pearson;
        else out << "undefined";
        out << '\n';
    }
    return out.str();
}

}  // namespace atlas
