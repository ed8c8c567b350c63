#pragma once

// Shared nlohmann-based encoders for ModelNode records. Private to the library
// so the public headers stay free of the JSON dependency.

#include <json.hpp>

#include "atlas/model.hpp"

namespace atlas::detail {

using json = nlohmann::json;

json node_to_json(const ModelNode& node);

// Lenient record decoding used by metadata loaders: accepts created_at as an
// integer or an ISO-8601 string, "createdAt"/"modelId" aliases and top-level
// attribute keys. Throws MalformedRecord.
ModelNode node_from_json(const json& record);

std::int64_t parse_timestamp(const json& value);
std::int64_t parse_iso8601(const std::string& text);

}  // namespace atlas::detail
