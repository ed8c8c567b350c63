#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace atlas {

// Repository-style model identifier, e.g. "org/name". Never empty.
class ModelId {
public:
    ModelId() = default;
    explicit ModelId(std::string value);

    const std::string& str() const noexcept { return value_; }
    bool empty() const noexcept { return value_.empty(); }

    auto operator<=>(const ModelId&) const = default;
    bool operator==(const ModelId&) const = default;

private:
    std::string value_;
};

enum class EdgeKind { FineTune, Adapter, Quantization, Merge, Duplicate, Unknown };

std::string_view to_string(EdgeKind kind);
EdgeKind edge_kind_from_string(std::string_view text);

// Attribute keys recognised on ModelNode; anything else must carry the "x-" prefix.
inline constexpr std::string_view kAttributeKeys[] = {
    "pipeline_tag", "library_name", "model_type", "license", "relation_type"};

bool is_valid_attribute_key(std::string_view key);

struct ModelNode {
    ModelId id;
    std::int64_t created_at = 0;
    std::uint64_t downloads = 0;
    bool quantized = false;
    bool placeholder = false;
    std::optional<std::vector<ModelId>> known_parents;
    std::map<std::string, std::optional<std::string>> attributes;
    std::map<std::string, std::optional<double>> metrics;

    bool operator==(const ModelNode&) const = default;
};

// Throws InvalidArgument when a field breaks the node invariants.
void validate_node(const ModelNode& node);

// Total order used wherever the library needs a deterministic node order.
inline bool earlier(const ModelNode& a, const ModelNode& b) {
    if (a.created_at != b.created_at) return a.created_at < b.created_at;
    return a.id < b.id;
}

struct Edge {
    ModelId parent;
    ModelId child;
    EdgeKind kind = EdgeKind::Unknown;

    bool operator==(const Edge&) const = default;
};

}  // namespace atlas

template <>
struct std::hash<atlas::ModelId> {
    std::size_t operator()(const atlas::ModelId& id) const noexcept {
        return std::hash<std::string>{}(id.str());
    }
};
