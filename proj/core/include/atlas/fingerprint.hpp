#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "atlas/model.hpp"
#include "atlas/safetensors.hpp"

namespace atlas {

struct Fingerprint {
    ModelId id;
    std::size_t dim = 0;
    std::vector<double> values;
    DTypeTag dtype_tag = DTypeTag::F32;
    double unique_ratio = 1.0;
    std::string selector;
    std::uint64_t seed = 0;

    bool operator==(const Fingerprint&) const = default;
};

// Tensor-name filter: a tensor is selected when its name contains any of the
// patterns. No patterns selects everything.
struct Selector {
    std::vector<std::string> patterns;

    static Selector all() { return {}; }
    static Selector attention() { return {{"attn"}}; }
    static Selector parse(const std::string& comma_separated);  // "" or "*" selects all

    bool matches(const std::string& tensor_name) const;
    std::string filter_string() const;  // "*" or the patterns joined by ','
};

inline constexpr std::size_t kDefaultFingerprintDim = 100;
inline constexpr std::size_t kUniqueRatioSample = 100000;
inline constexpr double kDefaultUniqueRatioThreshold = 0.05;

// Picks dim flat indices without replacement over the name-sorted
// concatenation of selected tensors. The descriptor records the filter and the
// matched element count ("attn|4096"): together with dim and seed it pins the
// exact indices, so equal descriptors mean comparable fingerprints.
Fingerprint extract_fingerprint(const ModelId& id, const WeightContainer& container, const Selector& selector,
                                std::size_t dim = kDefaultFingerprintDim, std::uint64_t seed = 0);

// Distinct values / sampled count over a seeded sample of min(100000, total)
// selected weights.
double unique_ratio(const WeightContainer& container, const Selector& selector, std::uint64_t seed = 0);

enum class QuantizationReason { LowPrecisionDtype, LowUniqueRatio, None };
std::string_view to_string(QuantizationReason reason);

struct QuantizationVerdict {
    bool quantized = false;
    QuantizationReason reason = QuantizationReason::None;
};

QuantizationVerdict detect_quantization(DTypeTag tag, double unique_ratio,
                                        double threshold = kDefaultUniqueRatioThreshold);
QuantizationVerdict detect_quantization(const Fingerprint& fp, double threshold = kDefaultUniqueRatioThreshold);
QuantizationVerdict detect_quantization(const WeightContainer& container,
                                        double threshold = kDefaultUniqueRatioThreshold, std::uint64_t seed = 0);

// Element-weighted majority storage tag over the selected tensors.
DTypeTag dominant_dtype(const WeightContainer& container, const Selector& selector);

struct RecordError {
    std::size_t line = 0;  // 1-based; 0 when not line-oriented
    std::string id;
    std::string message;
};

struct FingerprintLoad {
    std::vector<Fingerprint> fingerprints;
    std::vector<RecordError> errors;
};

std::string fingerprint_to_json_line(const Fingerprint& fp);
Fingerprint fingerprint_from_json_line(const std::string& line);  // throws MalformedRecord
FingerprintLoad load_fingerprints(std::istream& in);
FingerprintLoad load_fingerprints_file(const std::string& path);
void save_fingerprints(std::ostream& out, const std::vector<Fingerprint>& fps);
void save_fingerprints_file(const std::string& path, const std::vector<Fingerprint>& fps);

}  // namespace atlas
