#include "atlas/model.hpp"

#include <cmath>

#include "atlas/error.hpp"

namespace atlas {

ModelId::ModelId(std::string value) : value_(std::move(value)) {
    if (value_.empty()) fail(ErrorCode::InvalidArgument, "model id must be nonempty");
}

std::string_view to_string(EdgeKind kind) {
    switch (kind) {
        case EdgeKind::FineTune: return "FineTune";
        case EdgeKind::Adapter: return "Adapter";
        case EdgeKind::Quantization: return "Quantization";
        case EdgeKind::Merge: return "Merge";
        case EdgeKind::Duplicate: return "Duplicate";
        case EdgeKind::Unknown: return "Unknown";
    }
    return "Unknown";
}

EdgeKind edge_kind_from_string(std::string_view text) {
    for (auto kind : {EdgeKind::FineTune, EdgeKind::Adapter, EdgeKind::Quantization, EdgeKind::Merge,
                      EdgeKind::Duplicate, EdgeKind::Unknown}) {
        if (to_string(kind) == text) return kind;
    }
    fail(ErrorCode::InvalidArgument, "unknown edge kind '" + std::string(text) + "'");
}

bool is_valid_attribute_key(std::string_view key) {
    for (auto k : kAttributeKeys) {
        if (k == key) return true;
    }
    return key.size() > 2 && key.substr(0, 2) == "x-";
}

void validate_node(const ModelNode& node) {
    if (node.id.empty()) fail(ErrorCode::InvalidArgument, "node id must be nonempty");
    if (node.created_at <= 0 && !node.placeholder) {
        fail(ErrorCode::InvalidArgument, "node '" + node.id.str() + "' needs created_at > 0");
    }
    for (const auto& [key, value] : node.attributes) {
        if (!is_valid_attribute_key(key)) {
            fail(ErrorCode::InvalidArgument,
                 "node '" + node.id.str() + "' has unknown attribute key '" + key + "'");
        }
    }
    for (const auto& [name, value] : node.metrics) {
        if (value && !std::isfinite(*value)) {
            fail(ErrorCode::InvalidArgument,
                 "node '" + node.id.str() + "' metric '" + name + "' is not finite");
        }
    }
}

}  // namespace atlas
