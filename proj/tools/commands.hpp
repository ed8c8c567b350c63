#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

// Options and entry points for each model-atlas subcommand. Each run_*
// returns the process exit status; library errors propagate as atlas::Error.
namespace atlas::cli {

struct GenOptions {
    std::string spec_path;
    std::uint64_t seed = 0;
    std::string out_dir;
    std::optional<std::size_t> nodes;
    std::optional<std::size_t> components;
    bool full_metadata = false;
};
int run_gen(const GenOptions& o);

struct FingerprintOptions {
    std::vector<std::string> inputs;  // "path" or "id=path"
    std::string out;
    std::size_t dim = 100;
    std::uint64_t seed = 0;
    std::string selector = "*";
    double unique_threshold = 0.05;
};
int run_fingerprint(const FingerprintOptions& o);

struct FetchOptions {
    std::string endpoint;
    std::string ids_path;
    std::vector<std::string> ids;
    std::string out;
    int attempts = 3;
    int timeout_ms = 10000;
    int backoff_ms = 200;
};
int run_fetch(const FetchOptions& o);

// Charting flags shared by chart and eval. Unset values fall back to the
// config file, then to the library defaults.
struct ChartFlags {
    std::string config_path;
    std::optional<std::size_t> k;
    std::optional<double> kth;
    std::optional<std::string> rho;
    std::optional<std::string> duplicate_policy;  // leaf | sibling
    std::optional<std::string> normalization;     // unit | none
};

struct ChartOptions {
    ChartFlags flags;
    std::string fingerprints;
    std::string meta;
    std::string matrix_cache;
    std::string out;
    std::string decisions_out;
    std::optional<double> linkage;
    bool no_quantization_detection = false;
    bool timing = false;
};
int run_chart(const ChartOptions& o);

struct ImputeOptions {
    std::string atlas;
    std::string metric;
    std::string attribute;
    std::size_t k = 5;
    std::string labels;
    std::string truth;
    std::string out;
    std::string format = "json";
};
int run_impute(const ImputeOptions& o);

struct EvalOptions {
    ChartFlags flags;
    std::string truth;
    std::string fingerprints;
    std::string meta;
    std::string predicted;
    std::vector<std::string> methods;
    std::optional<double> split;
    std::string split_policy = "earliest";
    std::optional<std::uint64_t> seed;
    std::string format = "json";
    bool timing = false;
};
int run_eval(const EvalOptions& o);

struct ExportOptions {
    std::string atlas;
    std::string to = "gexf";
    std::string out;
};
int run_export(const ExportOptions& o);

struct StatsOptions {
    std::string atlas;
    std::string depth = "longest";
    std::string format = "json";
};
int run_stats(const StatsOptions& o);

}  // namespace atlas::cli
