#include <exception>
#include <iostream>

#include <CLI11.hpp>

#include "atlas/error.hpp"
#include "commands.hpp"

namespace {

void add_chart_flags(CLI::App* cmd, atlas::cli::ChartFlags& f) {
    cmd->add_option("--config", f.config_path, "Run config JSON (charting block, split_fraction, seed)");
    cmd->add_option("--k", f.k, "Neighbours per decision (K)");
    cmd->add_option("--kth", f.kth, "Spread threshold K_th");
    cmd->add_option("--rho", f.rho, "Snake threshold: p<percentile> or a fixed value");
    cmd->add_option("--duplicate-policy", f.duplicate_policy, "leaf | sibling")
        ->check(CLI::IsMember({"leaf", "sibling"}));
    cmd->add_option("--normalization", f.normalization, "Fingerprint normalization before distances: unit | none")
        ->check(CLI::IsMember({"unit", "none"}));
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"model-atlas: chart model lineages from weight fingerprints and upload times"};
    app.require_subcommand(1);
    app.set_version_flag("--version", "model-atlas 0.1.0");
    const auto format_check = CLI::IsMember({"json", "csv", "table"});

    atlas::cli::GenOptions gen;
    auto* c_gen = app.add_subcommand("gen", "Generate a synthetic corpus with ground truth");
    c_gen->add_option("--spec", gen.spec_path, "Generator spec JSON; missing fields keep defaults");
    c_gen->add_option("--seed", gen.seed, "Generator seed")->required();
    c_gen->add_option("--out", gen.out_dir, "Output directory")->required();
    c_gen->add_option("--nodes", gen.nodes, "Models per component");
    c_gen->add_option("--components", gen.components, "Number of components");
    c_gen->add_flag("--full-metadata", gen.full_metadata, "Write every true parent into metadata.jsonl");

    atlas::cli::FingerprintOptions fp;
    auto* c_fp = app.add_subcommand("fingerprint", "Sample fingerprints from safetensors files");
    c_fp->add_option("inputs", fp.inputs, "Files as PATH or ID=PATH")->required();
    c_fp->add_option("--out", fp.out, "Fingerprint JSONL (default stdout)");
    c_fp->add_option("--dim", fp.dim, "Sampled weights per model")->check(CLI::PositiveNumber);
    c_fp->add_option("--seed", fp.seed, "Index sampling seed");
    c_fp->add_option("--selector", fp.selector, "Tensor name patterns, comma-separated; * for all; attention");
    c_fp->add_option("--unique-threshold", fp.unique_threshold, "Unique-ratio threshold for the quantization note");

    atlas::cli::FetchOptions fetch;
    auto* c_fetch = app.add_subcommand("fetch", "Fetch metadata records over HTTP");
    c_fetch->add_option("--endpoint", fetch.endpoint, "Base URL; records are read from <endpoint>/<id>")->required();
    c_fetch->add_option("--ids", fetch.ids_path, "File with one id per line");
    c_fetch->add_option("--id", fetch.ids, "Id to fetch (repeatable)");
    c_fetch->add_option("--out", fetch.out, "Metadata JSONL (default stdout)");
    c_fetch->add_option("--attempts", fetch.attempts, "Attempts per id")->check(CLI::PositiveNumber);
    c_fetch->add_option("--timeout-ms", fetch.timeout_ms, "Per-request timeout")->check(CLI::PositiveNumber);
    c_fetch->add_option("--backoff-ms", fetch.backoff_ms, "First retry delay, doubled after each failure")
        ->check(CLI::NonNegativeNumber);

    atlas::cli::ChartOptions chart;
    auto* c_chart = app.add_subcommand("chart", "Recover parent edges from fingerprints and metadata");
    c_chart->add_option("--fingerprints", chart.fingerprints, "Fingerprint JSONL")->required();
    c_chart->add_option("--meta", chart.meta, "Metadata JSONL or CSV")->required();
    c_chart->add_option("--out", chart.out, "Atlas JSON")->required();
    c_chart->add_option("--matrix-cache", chart.matrix_cache,
                        "Distance matrix cache file; defaults to a keyed file under $ATLAS_CACHE_DIR when set");
    c_chart->add_option("--decisions", chart.decisions_out, "Per-node decision JSONL");
    c_chart->add_option("--linkage", chart.linkage,
                        "Split into single-linkage components under this distance and chart each separately");
    c_chart->add_flag("--no-quantization-detection", chart.no_quantization_detection,
                      "Trust the metadata quantized flags only");
    c_chart->add_flag("--timing", chart.timing, "Print wall times to stderr");
    add_chart_flags(c_chart, chart.flags);

    atlas::cli::ImputeOptions impute;
    auto* c_impute = app.add_subcommand("impute", "Impute a metric (graph kNN) or an attribute (hub vote)");
    c_impute->add_option("--atlas", impute.atlas, "Atlas JSON")->required();
    c_impute->add_option("--metric", impute.metric, "Metric name");
    c_impute->add_option("--attribute", impute.attribute, "Attribute key");
    c_impute->add_option("--k", impute.k, "Labelled neighbours per metric prediction")->check(CLI::PositiveNumber);
    c_impute->add_option("--labels", impute.labels, "Metric labels JSONL {id, value}; default: the atlas' own values");
    c_impute->add_option("--truth", impute.truth, "Held-out truth JSONL {id, value}; prints a scored report");
    c_impute->add_option("--out", impute.out, "Predictions JSONL (default stdout unless --truth)");
    c_impute->add_option("--format", impute.format, "Report format")->check(format_check);

    atlas::cli::EvalOptions eval;
    auto* c_eval = app.add_subcommand("eval", "Score charting methods against a true atlas");
    c_eval->add_option("--truth", eval.truth, "True atlas JSON")->required();
    c_eval->add_option("--fingerprints", eval.fingerprints, "Fingerprint JSONL");
    c_eval->add_option("--meta", eval.meta, "Observed metadata JSONL or CSV");
    c_eval->add_option("--predicted", eval.predicted, "Score this atlas as well");
    c_eval->add_option("--method", eval.methods, "ours, random, random-root, majority, price, mst")->delimiter(',');
    c_eval->add_option("--split", eval.split, "Stem fraction with known edges");
    c_eval->add_option("--split-policy", eval.split_policy, "earliest | random")
        ->check(CLI::IsMember({"earliest", "random"}));
    c_eval->add_option("--seed", eval.seed, "Seed for randomized baselines and the random split");
    c_eval->add_option("--format", eval.format, "Report format")->check(format_check);
    c_eval->add_flag("--timing", eval.timing, "Include wall time per method");
    add_chart_flags(c_eval, eval.flags);

    atlas::cli::ExportOptions exp;
    auto* c_export = app.add_subcommand("export", "Write an atlas as GEXF, DOT or JSON");
    c_export->add_option("--atlas", exp.atlas, "Atlas JSON")->required();
    c_export->add_option("--to", exp.to, "gexf | dot | json")->check(CLI::IsMember({"gexf", "dot", "json"}));
    c_export->add_option("--out", exp.out, "Output file (default stdout)");

    atlas::cli::StatsOptions stats;
    auto* c_stats = app.add_subcommand("stats", "Summary statistics of an atlas");
    c_stats->add_option("--atlas", stats.atlas, "Atlas JSON")->required();
    c_stats->add_option("--depth", stats.depth, "longest | shortest")->check(CLI::IsMember({"longest", "shortest"}));
    c_stats->add_option("--format", stats.format, "Report format")->check(format_check);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // Help and version exit 0; every flag problem is a validation error.
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (*c_gen) return atlas::cli::run_gen(gen);
        if (*c_fp) return atlas::cli::run_fingerprint(fp);
        if (*c_fetch) return atlas::cli::run_fetch(fetch);
        if (*c_chart) return atlas::cli::run_chart(chart);
        if (*c_impute) return atlas::cli::run_impute(impute);
        if (*c_eval) return atlas::cli::run_eval(eval);
        if (*c_export) return atlas::cli::run_export(exp);
        if (*c_stats) return atlas::cli::run_stats(stats);
    } catch (const atlas::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.code() == atlas::ErrorCode::IoError ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 1;
}
