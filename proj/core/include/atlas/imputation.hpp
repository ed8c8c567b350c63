#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "atlas/graph.hpp"

namespace atlas {

struct MetricLabelSet {
    std::string metric_name;
    std::map<ModelId, double> labels;
};

// Labels taken from the atlas' own metric values.
MetricLabelSet labels_from_atlas(const Atlas& atlas, const std::string& metric_name);

struct MetricPrediction {
    ModelId id;
    double value = 0.0;
    bool fallback = false;  // no labelled node reachable; global mean used
};

// Averages labelled nodes in increasing undirected hop distance until at
// least k are collected; the last hop level is taken whole. Predictions cover
// every unlabelled node, in (created_at, id) order.
std::vector<MetricPrediction> impute_metric_knn(const Atlas& atlas, const MetricLabelSet& labels, std::size_t k);

std::vector<MetricPrediction> baseline_metric_mean(const MetricLabelSet& labels, const std::vector<ModelId>& targets);

enum class AttributeSource { Hub, GlobalFallback };
std::string_view to_string(AttributeSource source);

struct AttributePrediction {
    ModelId id;
    std::string value;
    AttributeSource source = AttributeSource::GlobalFallback;
};

// Majority label among labelled members of the node's hub (ties to the
// lexicographically smallest); otherwise the global majority.
std::vector<AttributePrediction> impute_attribute_hub(const Atlas& atlas, const std::string& attribute_key);
std::vector<AttributePrediction> baseline_attribute_majority(const Atlas& atlas, const std::string& attribute_key);

std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y);

struct MetricScores {
    std::size_t n = 0;
    double mse = 0.0;
    double mae = 0.0;
    std::optional<double> pearson;  // nullopt when either side has zero variance
};

struct AttributeScores {
    std::size_t n = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;
};

// Prediction and truth must cover the same ids (KeyMismatch otherwise).
MetricScores evaluate_metric(const std::vector<MetricPrediction>& predictions, const std::map<ModelId, double>& truth);
AttributeScores evaluate_attribute(const std::vector<AttributePrediction>& predictions,
                                   const std::map<ModelId, std::string>& truth);

struct ImputationRow {
    std::string label;  // "k=1" ... or "baseline-mean"
    MetricScores scores;
};

struct ImputationReport {
    std::string metric_name;
    std::vector<ImputationRow> rows;
};

// Scores graph kNN for each k against the global-mean baseline over the
// held-out ids in truth.
ImputationReport metric_imputation_report(const Atlas& atlas, const MetricLabelSet& labels,
                                          const std::map<ModelId, double>& held_out_truth,
                                          const std::vector<std::size_t>& ks = {1, 2, 3, 5});

std::string imputation_report_to_json(const ImputationReport& report);
std::string imputation_report_to_csv(const ImputationReport& report);
std::string imputation_report_to_table(const ImputationReport& report);

}  // namespace atlas
