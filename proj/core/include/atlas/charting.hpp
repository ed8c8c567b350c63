#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "atlas/distance.hpp"
#include "atlas/graph.hpp"

namespace atlas {

struct RhoPolicy {
    enum class Kind { Fixed, Percentile } kind = Kind::Percentile;
    double value = 60.0;  // threshold for Fixed, percentile in (0,100) for Percentile

    static RhoPolicy fixed(double v) { return {Kind::Fixed, v}; }
    static RhoPolicy percentile(double p) { return {Kind::Percentile, p}; }
    static RhoPolicy parse(const std::string& text);  // "p60" or "0.6"
    std::string to_string() const;
};

enum class DuplicatePolicy { LeafUnderRepresentative, SameParentAsRepresentative };

// Where the snake/fan test draws its neighbourhood from.
enum class PatternScope {
    AllNodes,     // K nearest unmasked nodes of the component, either side in time
    EarlierOnly,  // the parent candidates themselves
};

// How a Fan picks its parent.
enum class FanOrigin {
    Extended,  // earliest of the candidates and their charted parents within d1 + K_th
    EarliestCandidate,
};

struct ChartingConfig {
    std::size_t K = 5;
    double K_th = 0.05;
    RhoPolicy rho_policy = RhoPolicy::percentile(60.0);
    Normalization distance_normalization = Normalization::UnitNorm;
    DuplicatePolicy duplicate_policy = DuplicatePolicy::LeafUnderRepresentative;
    bool quantized_are_leaves = true;
    bool honor_known_parents = true;

    bool deduplicate = true;
    bool temporal_filter = true;
    bool snake_fan = true;
    PatternScope pattern_scope = PatternScope::AllNodes;
    FanOrigin fan_origin = FanOrigin::Extended;
    bool quantized_attach_nearest = true;
    double duplicate_epsilon = 0.0;

    void validate() const;
};

enum class PatternLabel { Snake, Fan };
std::string_view to_string(PatternLabel label);

// Pearson r between the distances and |t - query_time|; zero variance on
// either side gives r = 0.
double pattern_correlation(const std::vector<double>& knn_distances, const std::vector<double>& knn_times,
                           double query_time);
PatternLabel classify_pattern(const std::vector<double>& knn_distances, const std::vector<double>& knn_times,
                              double query_time, double rho_th);

double rho_threshold(std::vector<double> correlations, const RhoPolicy& policy);

// Single-linkage components under D < threshold, each in matrix order, ordered
// by their first member.
std::vector<std::vector<ModelId>> find_components(const DistanceMatrix& matrix, double linkage_threshold);

enum class Decision {
    Source,
    Duplicate,
    KnownParents,
    QuantizedNearest,
    Spread,
    Nearest,
    Snake,
    Fan,
    TooFewNeighbors,
};
std::string_view to_string(Decision decision);

struct ChartResult {
    Atlas atlas;
    double rho_threshold = 0.0;
    std::map<ModelId, Decision> decisions;
};

// Recovers edges for one component. The matrix must cover every node and be
// built with config.distance_normalization.
Atlas chart(const std::vector<ModelNode>& nodes, const DistanceMatrix& matrix, const ChartingConfig& config = {});
ChartResult chart_detailed(const std::vector<ModelNode>& nodes, const DistanceMatrix& matrix,
                           const ChartingConfig& config = {});

// Builds the matrix from fingerprints first. Errors with MissingFingerprint
// when a node has none.
Atlas chart(const std::vector<ModelNode>& nodes, const std::vector<Fingerprint>& fingerprints,
            const ChartingConfig& config = {});

// Marks nodes quantized when their fingerprint says so (dtype or unique ratio).
void apply_quantization_detection(std::vector<ModelNode>& nodes, const std::vector<Fingerprint>& fingerprints,
                                  double threshold = kDefaultUniqueRatioThreshold);

}  // namespace atlas
