#include "atlas/fingerprint.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include <json.hpp>

#include "atlas/error.hpp"
#include "atlas/rng.hpp"

namespace atlas {

using json = nlohmann::json;

Selector Selector::parse(const std::string& comma_separated) {
    Selector s;
    if (comma_separated.empty() || comma_separated == "*") return s;
    std::stringstream ss(comma_separated);
    std::string part;
    while (std::getline(ss, part, ',')) {
        if (!part.empty()) s.patterns.push_back(part);
    }
    return s;
}

bool Selector::matches(const std::string& tensor_name) const {
    if (patterns.empty()) return true;
    return std::any_of(patterns.begin(), patterns.end(),
                       [&](const std::string& p) { return tensor_name.find(p) != std::string::npos; });
}

std::string Selector::filter_string() const {
    if (patterns.empty()) return "*";
    std::string out;
    for (const auto& p : patterns) {
        if (!out.empty()) out += ',';
        out += p;
    }
    return out;
}

namespace {

// Flat view over the selected tensors in name order.
struct FlatView {
    std::vector<const Tensor*> tensors;
    std::vector<std::size_t> starts;
    std::size_t total = 0;

    FlatView(const WeightContainer& c, const Selector& s) {
        for (const auto& t : c.tensors()) {
            if (!s.matches(t.name)) continue;
            if (t.element_size() == 0) {
                fail(ErrorCode::MalformedContainer, "tensor '" + t.name + "' has undecodable dtype " + t.dtype);
            }
            tensors.push_back(&t);
            starts.push_back(total);
            total += t.numel();
        }
    }

    double at(std::size_t flat) const {
        auto it = std::upper_bound(starts.begin(), starts.end(), flat);
        auto k = static_cast<std::size_t>(it - starts.begin()) - 1;
        return tensors[k]->value_at(flat - starts[k]);
    }
};

double unique_ratio_of(const FlatView& view, std::uint64_t seed) {
    if (view.total == 0) return 1.0;
    const auto count = std::min<std::size_t>(kUniqueRatioSample, view.total);
    Rng rng(derive_seed(seed, 1));
    std::vector<std::uint64_t> idx;
    if (count == view.total) {
        idx.resize(count);
        for (std::size_t i = 0; i < count; ++i) idx[i] = i;
    } else {
        idx = rng.sample_without_replacement(view.total, count);
    }
    std::unordered_set<double> distinct;
    distinct.reserve(count);
    for (auto i : idx) distinct.insert(view.at(i));
    return static_cast<double>(distinct.size()) / static_cast<double>(count);
}

}  // namespace

DTypeTag dominant_dtype(const WeightContainer& container, const Selector& selector) {
    std::map<DTypeTag, std::size_t> counts;
    for (const auto& t : container.tensors()) {
        if (selector.matches(t.name)) counts[tag_for_storage_dtype(t.dtype)] += t.numel();
    }
    DTypeTag best = DTypeTag::Other;
    std::size_t best_count = 0;
    for (const auto& [tag, n] : counts) {
        if (n > best_count) {
            best = tag;
            best_count = n;
        }
    }
    return best;
}

Fingerprint extract_fingerprint(const ModelId& id, const WeightContainer& container, const Selector& selector,
                                std::size_t dim, std::uint64_t seed) {
    if (dim == 0) fail(ErrorCode::InvalidArgument, "fingerprint dim must be at least 1");
    FlatView view(container, selector);
    if (view.total < dim) {
        fail(ErrorCode::SelectorTooNarrow, "selector '" + selector.filter_string() + "' matched " +
                                               std::to_string(view.total) + " weights, need " + std::to_string(dim));
    }
    Fingerprint fp;
    fp.id = id;
    fp.dim = dim;
    fp.seed = seed;
    fp.selector = selector.filter_string() + "|" + std::to_string(view.total);
    Rng rng(derive_seed(seed, 0));
    for (auto i : rng.sample_without_replacement(view.total, dim)) {
        auto v = view.at(i);
        if (!std::isfinite(v)) fail(ErrorCode::MalformedContainer, "non-finite weight in container");
        fp.values.push_back(v);
    }
    fp.dtype_tag = dominant_dtype(container, selector);
    fp.unique_ratio = unique_ratio_of(view, seed);
    return fp;
}

double unique_ratio(const WeightContainer& container, const Selector& selector, std::uint64_t seed) {
    return unique_ratio_of(FlatView(container, selector), seed);
}

std::string_view to_string(QuantizationReason reason) {
    switch (reason) {
        case QuantizationReason::LowPrecisionDtype: return "LowPrecisionDtype";
        case QuantizationReason::LowUniqueRatio: return "LowUniqueRatio";
        case QuantizationReason::None: return "None";
    }
    return "None";
}

QuantizationVerdict detect_quantization(DTypeTag tag, double ratio, double threshold) {
    if (tag == DTypeTag::I8 || tag == DTypeTag::I4) return {true, QuantizationReason::LowPrecisionDtype};
    if (ratio < threshold) return {true, QuantizationReason::LowUniqueRatio};
    return {false, QuantizationReason::None};
}

QuantizationVerdict detect_quantization(const Fingerprint& fp, double threshold) {
    return detect_quantization(fp.dtype_tag, fp.unique_ratio, threshold);
}

QuantizationVerdict detect_quantization(const WeightContainer& container, double threshold, std::uint64_t seed) {
    auto all = Selector::all();
    return detect_quantization(dominant_dtype(container, all), unique_ratio(container, all, seed), threshold);
}

std::string fingerprint_to_json_line(const Fingerprint& fp) {
    json j;
    j["id"] = fp.id.str();
    j["dim"] = fp.dim;
    j["values"] = fp.values;
    j["dtype_tag"] = to_string(fp.dtype_tag);
    j["unique_ratio"] = fp.unique_ratio;
    j["selector"] = fp.selector;
    j["seed"] = fp.seed;
    return j.dump();
}

Fingerprint fingerprint_from_json_line(const std::string& line) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::exception& e) {
        fail(ErrorCode::MalformedRecord, std::string("invalid JSON: ") + e.what());
    }
    if (!j.is_object()) fail(ErrorCode::MalformedRecord, "fingerprint record is not an object");
    Fingerprint fp;
    if (!j.contains("id") || !j["id"].is_string() || j["id"].get<std::string>().empty()) {
        fail(ErrorCode::MalformedRecord, "fingerprint without id");
    }
    fp.id = ModelId(j["id"].get<std::string>());
    if (!j.contains("values") || !j["values"].is_array()) fail(ErrorCode::MalformedRecord, "fingerprint without values");
    for (const auto& v : j["values"]) {
        if (!v.is_number()) fail(ErrorCode::MalformedRecord, "fingerprint values must be numbers");
        fp.values.push_back(v.get<double>());
    }
    fp.dim = fp.values.size();
    if (j.contains("dim")) {
        if (!j["dim"].is_number_unsigned() || j["dim"].get<std::size_t>() != fp.values.size()) {
            fail(ErrorCode::MalformedRecord, "fingerprint dim does not match values length");
        }
    }
    if (fp.dim == 0) fail(ErrorCode::MalformedRecord, "fingerprint has no values");
    if (j.contains("dtype_tag")) {
        if (!j["dtype_tag"].is_string()) fail(ErrorCode::MalformedRecord, "dtype_tag must be a string");
        fp.dtype_tag = dtype_tag_from_string(j["dtype_tag"].get<std::string>());
    }
    if (j.contains("unique_ratio")) {
        if (!j["unique_ratio"].is_number()) fail(ErrorCode::MalformedRecord, "unique_ratio must be a number");
        fp.unique_ratio = j["unique_ratio"].get<double>();
        if (fp.unique_ratio < 0.0 || fp.unique_ratio > 1.0) fail(ErrorCode::MalformedRecord, "unique_ratio outside [0,1]");
    }
    if (j.contains("selector")) {
        if (!j["selector"].is_string()) fail(ErrorCode::MalformedRecord, "selector must be a string");
        fp.selector = j["selector"].get<std::string>();
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) fail(ErrorCode::MalformedRecord, "seed must be a non-negative integer");
        fp.seed = j["seed"].get<std::uint64_t>();
    }
    return fp;
}

FingerprintLoad load_fingerprints(std::istream& in) {
    FingerprintLoad out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.fingerprints.push_back(fingerprint_from_json_line(line));
        } catch (const Error& e) {
            out.errors.push_back({lineno, "", e.what()});
        }
    }
    return out;
}

FingerprintLoad load_fingerprints_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
    return load_fingerprints(in);
}

void save_fingerprints(std::ostream& out, const std::vector<Fingerprint>& fps) {
    for (const auto& fp : fps) out << fingerprint_to_json_line(fp) << '\n';
}

void save_fingerprints_file(const std::string& path, const std::vector<Fingerprint>& fps) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write '" + path + "'");
    save_fingerprints(out, fps);
    if (!out) fail(ErrorCode::IoError, "write failed for '" + path + "'");
}

}  // namespace atlas
