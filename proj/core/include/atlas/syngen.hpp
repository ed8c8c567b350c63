#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "atlas/charting.hpp"
#include "atlas/fingerprint.hpp"
#include "atlas/graph.hpp"
#include "atlas/safetensors.hpp"

namespace atlas {

// Inclusive uniform integer range.
struct IntRange {
    std::int64_t min = 1;
    std::int64_t max = 1;
};

struct AttributeScheme {
    std::vector<std::string> keys{"license", "pipeline_tag"};
    std::size_t vocabulary = 6;    // labels per key, Zipf distributed
    double zipf_exponent = 1.0;
    double hub_consistency = 0.95;  // chance a hub member carries its hub's label
};

struct MetricScheme {
    enum class Kind { DepthPlusNoise, Constant } kind = Kind::DepthPlusNoise;
    std::string name = "score";
    double sigma = 1.0;
    double constant = 0.0;
};

// Expansion step: pick an action by rate (the remainder is a single
// fine-tune), pick a parent by preferential attachment (children + 1), and
// grow. Fan children, snake steps and merges perturb their parent; sweeps
// (the confused share of fans) share a drift and differ by sweep_sigma, so
// siblings sit closer to each other than to the parent. Sweep members and
// snake steps only take quantized or duplicate children; new fans, snakes and
// merges start from roots, regular fine-tunes and merges.
struct SyntheticSpec {
    std::size_t n_components = 1;
    IntRange component_size{1000, 1000};

    double fan_rate = 0.20;
    double snake_rate = 0.25;
    double merge_rate = 0.08;
    double duplicate_rate = 0.15;
    double quantize_rate = 0.20;
    double fan_confusion_rate = 0.25;

    IntRange snake_length{4, 9};  // checkpoints including the anchor
    IntRange fan_width{5, 12};
    double attachment_power = 1.0;  // parent weight (children + 1)^power; 0 is uniform
    bool snake_tail_anchor = false;  // the last checkpoint of a snake can start fans, snakes and merges
    bool checkpoints_are_anchors = false;  // every snake checkpoint can

    std::size_t dim = kDefaultFingerprintDim;
    double child_sigma = 0.4;
    double sweep_drift = 0.15;
    double sweep_sigma = 0.03;
    double snake_sigma = 0.07;
    double root_separation = 0.0;  // 0 = sqrt(2 * dim), i.e. unit-variance root coordinates

    double time_step = 86400.0;   // mean seconds between a parent and its child
    double time_jitter = 0.3;     // fan upload window as a fraction of time_step
    double quantize_delay = 0.25;  // mean quantization lag as a fraction of time_step
    std::int64_t start_time = 1600000000;
    std::size_t weights_per_model = 100000;

    AttributeScheme attributes;
    MetricScheme metric;
    std::uint64_t seed = 0;

    void validate() const;  // InfeasibleSpec
};

std::string spec_to_json(const SyntheticSpec& spec);
SyntheticSpec spec_from_json(const std::string& text);  // missing fields keep defaults

enum class NodeRole { Root, FineTune, FanChild, SweepChild, SnakeStep, Quantized, Duplicate, Merge };
std::string_view to_string(NodeRole role);

struct PlantedFan {
    ModelId parent;
    std::vector<ModelId> children;
    bool sweep = false;
};

struct PlantedSnake {
    std::vector<ModelId> chain;  // anchor first
};

struct SyntheticCorpus {
    Atlas truth;                      // nodes carry complete metadata
    std::vector<ModelNode> metadata;  // truth node records, every parent list documented
    std::vector<Fingerprint> fingerprints;
    std::vector<std::vector<ModelId>> components;
    std::map<ModelId, NodeRole> roles;
    std::vector<PlantedFan> fans;
    std::vector<PlantedSnake> snakes;
    std::vector<std::vector<ModelId>> duplicate_groups;  // original first
};

SyntheticCorpus generate(const SyntheticSpec& spec);

struct DropRates {
    double known_parents = 0.0;            // applied to nodes without merge parents
    std::map<std::string, double> fields;  // attribute keys, "metric:<name>", "downloads"
};

std::vector<ModelNode> corrupt(const std::vector<ModelNode>& metadata, const DropRates& rates, std::uint64_t seed);

// Metadata as a charting run sees it: only merge parents documented and no
// quantization flags.
std::vector<ModelNode> observed_metadata(const SyntheticCorpus& corpus);

struct PlantedPattern {
    PatternLabel label = PatternLabel::Fan;
    std::vector<ModelNode> nodes;
    std::vector<Fingerprint> fingerprints;
    ModelId query;
};

// One isolated snake or sweep built with the corpus parameters; the query is a
// chain interior/end checkpoint or one sweep child.
PlantedPattern generate_pattern(PatternLabel label, const SyntheticSpec& spec, std::size_t K, std::uint64_t seed);

// Random F32 container with Gaussian weights split over a few tensors.
WeightContainer random_container(std::size_t n_weights, std::uint64_t seed);

// Rounds every tensor to 2^bits levels over its [min, max] range, stored as F32.
WeightContainer quantize_b_bits(const WeightContainer& container, int bits);

}  // namespace atlas
