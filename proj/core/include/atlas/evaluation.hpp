#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "atlas/baselines.hpp"
#include "atlas/charting.hpp"
#include "atlas/graph.hpp"

namespace atlas {

struct KindAccuracy {
    std::size_t total = 0;
    std::size_t correct = 0;
};

struct EvalReport {
    std::string method;
    double accuracy = 0.0;       // exact parent-set match over eval nodes
    double edge_recall = 0.0;    // true eval in-edges that were predicted
    std::size_t nodes = 0;
    std::size_t stem_nodes = 0;
    std::size_t eval_nodes = 0;
    std::size_t correct = 0;
    std::map<std::string, KindAccuracy> per_kind;  // keyed by the true incoming edge kind, "None" for sources
    std::optional<double> wall_seconds;
};

EvalReport evaluate_charting(const Atlas& predicted, const Atlas& truth, const StemSplit& split);

enum class Method { Ours, Random, RandomRoot, Majority, Price, Mst };
std::string_view to_string(Method method);
Method method_from_string(std::string_view text);

// Everything needed to chart one corpus and score it.
struct CorpusView {
    const std::vector<ModelNode>* nodes = nullptr;  // observed metadata
    const std::vector<Fingerprint>* fingerprints = nullptr;
    const Atlas* truth = nullptr;
};

// Runs one method. "ours" charts with the stem's true parents supplied as
// known parents; the matrix is built internally unless one is passed in.
Atlas run_method(Method method, const CorpusView& corpus, const StemSplit& split, const ChartingConfig& config,
                 std::uint64_t seed, const DistanceMatrix* matrix = nullptr);

// RunConfig gathers CLI-level settings.
struct RunConfig {
    ChartingConfig charting;
    double split_fraction = 0.10;
    std::uint64_t seed = 0;
    std::string format = "json";  // json | csv | table

    void validate() const;
};

RunConfig run_config_from_json(const std::string& text);
std::string run_config_to_json(const RunConfig& config);

std::string report_to_json(const EvalReport& report, bool include_timing = false);
std::string reports_to_json(const std::vector<EvalReport>& reports, bool include_timing = false);
std::string reports_to_csv(const std::vector<EvalReport>& reports, bool include_timing = false);
std::string reports_to_table(const std::vector<EvalReport>& reports, bool include_timing = false);

}  // namespace atlas
