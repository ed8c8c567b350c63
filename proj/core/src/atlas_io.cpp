#include "atlas/atlas_io.hpp"

#include <algorithm>
#include <cctype>
#include <chrono>
#include <cstdio>
#include <cmath>
#include <fstream>
#include <sstream>

#include "atlas/error.hpp"
#include "json_codec.hpp"

namespace atlas {
namespace detail {

json node_to_json(const ModelNode& node) {
    json j = json::object();
    j["id"] = node.id.str();
    j["created_at"] = node.created_at;
    j["downloads"] = node.downloads;
    j["quantized"] = node.quantized;
    j["placeholder"] = node.placeholder;
    if (node.known_parents) {
        json parents = json::array();
        for (const auto& p : *node.known_parents) parents.push_back(p.str());
        j["known_parents"] = std::move(parents);
    }
    json attrs = json::object();
    for (const auto& [k, v] : node.attributes) attrs[k] = v ? json(*v) : json(nullptr);
    j["attributes"] = std::move(attrs);
    json metrics = json::object();
    for (const auto& [k, v] : node.metrics) metrics[k] = v ? json(*v) : json(nullptr);
    j["metrics"] = std::move(metrics);
    return j;
}

std::int64_t parse_iso8601(const std::string& text) {
    int y = 0, mo = 0, d = 0, h = 0, mi = 0, s = 0;
    int consumed = 0;
    if (std::sscanf(text.c_str(), "%4d-%2d-%2d%n", &y, &mo, &d, &consumed) != 3) {
        fail(ErrorCode::MalformedRecord, "bad timestamp '" + text + "'");
    }
    std::size_t pos = static_cast<std::size_t>(consumed);
    if (pos < text.size() && (text[pos] == 'T' || text[pos] == ' ')) {
        int more = 0;
        if (std::sscanf(text.c_str() + pos + 1, "%2d:%2d:%2d%n", &h, &mi, &s, &more) != 3) {
            fail(ErrorCode::MalformedRecord, "bad timestamp '" + text + "'");
        }
        pos += 1 + static_cast<std::size_t>(more);
        if (pos < text.size() && text[pos] == '.') {
            ++pos;
            while (pos < text.size() && std::isdigit(static_cast<unsigned char>(text[pos]))) ++pos;
        }
    }
    std::int64_t offset = 0;
    if (pos < text.size()) {
        if (text[pos] == 'Z') {
            ++pos;
        } else if (text[pos] == '+' || text[pos] == '-') {
            int oh = 0, om = 0;
            if (std::sscanf(text.c_str() + pos + 1, "%2d:%2d", &oh, &om) != 2) {
                fail(ErrorCode::MalformedRecord, "bad timezone in '" + text + "'");
            }
            offset = (text[pos] == '+' ? 1 : -1) * (oh * 3600 + om * 60);
            pos += 6;
        }
    }
    if (pos != text.size()) fail(ErrorCode::MalformedRecord, "trailing characters in timestamp '" + text + "'");
    using namespace std::chrono;
    year_month_day ymd{year{y}, month{static_cast<unsigned>(mo)}, day{static_cast<unsigned>(d)}};
    if (!ymd.ok() || h > 23 || mi > 59 || s > 60) {
        fail(ErrorCode::MalformedRecord, "invalid calendar timestamp '" + text + "'");
    }
    auto days = sys_days{ymd}.time_since_epoch().count();
    return static_cast<std::int64_t>(days) * 86400 + h * 3600 + mi * 60 + s - offset;
}

std::int64_t parse_timestamp(const json& value) {
    if (value.is_number_integer()) return value.get<std::int64_t>();
    if (value.is_number_float()) {
        auto v = value.get<double>();
        if (!std::isfinite(v)) fail(ErrorCode::MalformedRecord, "non-finite timestamp");
        return static_cast<std::int64_t>(std::floor(v));
    }
    if (value.is_string()) return parse_iso8601(value.get<std::string>());
    fail(ErrorCode::MalformedRecord, "created_at must be an integer or ISO-8601 string");
}

namespace {

const json* field(const json& record, std::initializer_list<const char*> names) {
    for (auto name : names) {
        auto it = record.find(name);
        if (it != record.end()) return &*it;
    }
    return nullptr;
}

std::optional<std::string> optional_string(const json& v, const std::string& what) {
    if (v.is_null()) return std::nullopt;
    if (!v.is_string()) fail(ErrorCode::MalformedRecord, what + " must be a string or null");
    return v.get<std::string>();
}

}  // namespace

ModelNode node_from_json(const json& record) {
    if (!record.is_object()) fail(ErrorCode::MalformedRecord, "record is not a JSON object");
    ModelNode node;
    auto id = field(record, {"id", "modelId"});
    if (!id || !id->is_string() || id->get<std::string>().empty()) {
        fail(ErrorCode::MalformedRecord, "missing id");
    }
    node.id = ModelId(id->get<std::string>());

    if (auto p = field(record, {"placeholder"}); p && !p->is_null()) {
        if (!p->is_boolean()) fail(ErrorCode::MalformedRecord, "placeholder must be boolean");
        node.placeholder = p->get<bool>();
    }
    auto created = field(record, {"created_at", "createdAt"});
    if (!created || created->is_null()) fail(ErrorCode::MalformedRecord, "missing created_at");
    node.created_at = parse_timestamp(*created);
    if (node.created_at <= 0 && !node.placeholder) fail(ErrorCode::MalformedRecord, "created_at must be positive");

    if (auto d = field(record, {"downloads"}); d && !d->is_null()) {
        if (d->is_number_unsigned()) {
            node.downloads = d->get<std::uint64_t>();
        } else if (d->is_number_integer() && d->get<std::int64_t>() >= 0) {
            node.downloads = static_cast<std::uint64_t>(d->get<std::int64_t>());
        } else {
            fail(ErrorCode::MalformedRecord, "downloads must be a non-negative integer");
        }
    }
    if (auto q = field(record, {"quantized"}); q && !q->is_null()) {
        if (!q->is_boolean()) fail(ErrorCode::MalformedRecord, "quantized must be boolean");
        node.quantized = q->get<bool>();
    }
    if (auto kp = field(record, {"known_parents"}); kp && !kp->is_null()) {
        if (!kp->is_array()) fail(ErrorCode::MalformedRecord, "known_parents must be an array");
        std::vector<ModelId> parents;
        for (const auto& p : *kp) {
            if (!p.is_string() || p.get<std::string>().empty()) {
                fail(ErrorCode::MalformedRecord, "known_parents entries must be nonempty strings");
            }
            parents.emplace_back(p.get<std::string>());
        }
        node.known_parents = std::move(parents);
    }
    if (auto attrs = field(record, {"attributes"}); attrs && !attrs->is_null()) {
        if (!attrs->is_object()) fail(ErrorCode::MalformedRecord, "attributes must be an object");
        for (const auto& [k, v] : attrs->items()) {
            if (!is_valid_attribute_key(k)) fail(ErrorCode::MalformedRecord, "unknown attribute key '" + k + "'");
            node.attributes[k] = optional_string(v, "attribute '" + k + "'");
        }
    }
    // Hub-stats style dumps carry attributes at the top level.
    for (auto key : kAttributeKeys) {
        std::string k(key);
        if (node.attributes.count(k)) continue;
        if (auto v = field(record, {k.c_str()})) node.attributes[k] = optional_string(*v, "attribute '" + k + "'");
    }
    if (auto metrics = field(record, {"metrics"}); metrics && !metrics->is_null()) {
        if (!metrics->is_object()) fail(ErrorCode::MalformedRecord, "metrics must be an object");
        for (const auto& [k, v] : metrics->items()) {
            if (v.is_null()) {
                node.metrics[k] = std::nullopt;
            } else if (v.is_number()) {
                node.metrics[k] = v.get<double>();
            } else {
                fail(ErrorCode::MalformedRecord, "metric '" + k + "' must be a number or null");
            }
        }
    }
    return node;
}

}  // namespace detail

using detail::json;

std::string atlas_to_json(const Atlas& atlas, int indent) {
    json doc;
    doc["nodes"] = json::array();
    for (auto i : atlas.time_order()) doc["nodes"].push_back(detail::node_to_json(atlas.node_at(i)));
    // Edges sorted by (child order, parent order) so output is independent of insertion order.
    std::vector<const Edge*> edges;
    for (const auto& e : atlas.edges()) edges.push_back(&e);
    std::sort(edges.begin(), edges.end(), [&](const Edge* a, const Edge* b) {
        if (a->child != b->child) return earlier(atlas.node(a->child), atlas.node(b->child));
        return earlier(atlas.node(a->parent), atlas.node(b->parent));
    });
    doc["edges"] = json::array();
    for (const auto* e : edges) {
        doc["edges"].push_back({{"parent", e->parent.str()}, {"child", e->child.str()}, {"kind", to_string(e->kind)}});
    }
    return doc.dump(indent) + "\n";
}

Atlas atlas_from_json(std::string_view text) {
    json doc;
    try {
        doc = json::parse(text.begin(), text.end());
    } catch (const json::exception& e) {
        fail(ErrorCode::MalformedRecord, std::string("atlas JSON: ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("nodes") || !doc["nodes"].is_array()) {
        fail(ErrorCode::MalformedRecord, "atlas JSON needs a \"nodes\" array");
    }
    Atlas atlas;
    for (const auto& n : doc["nodes"]) atlas.add_node(detail::node_from_json(n));
    if (doc.contains("edges")) {
        if (!doc["edges"].is_array()) fail(ErrorCode::MalformedRecord, "\"edges\" must be an array");
        for (const auto& e : doc["edges"]) {
            if (!e.is_object() || !e.contains("parent") || !e.contains("child") || !e["parent"].is_string() ||
                !e["child"].is_string()) {
                fail(ErrorCode::MalformedRecord, "edge records need string parent and child");
            }
            auto kind = EdgeKind::Unknown;
            if (e.contains("kind")) kind = edge_kind_from_string(e["kind"].get<std::string>());
            atlas.add_edge(ModelId(e["parent"].get<std::string>()), ModelId(e["child"].get<std::string>()), kind);
        }
    }
    return atlas;
}

std::string node_to_json_line(const ModelNode& node) { return detail::node_to_json(node).dump(); }

ModelNode node_from_json_line(std::string_view line) {
    json j;
    try {
        j = json::parse(line.begin(), line.end());
    } catch (const json::exception& e) {
        fail(ErrorCode::MalformedRecord, std::string("invalid JSON: ") + e.what());
    }
    return detail::node_from_json(j);
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    if (in.bad()) fail(ErrorCode::IoError, "read failed for '" + path.string() + "'");
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view text) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write '" + path.string() + "'");
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) fail(ErrorCode::IoError, "write failed for '" + path.string() + "'");
}

void save_atlas(const Atlas& atlas, const std::filesystem::path& path) { write_text_file(path, atlas_to_json(atlas)); }

Atlas load_atlas(const std::filesystem::path& path) { return atlas_from_json(read_text_file(path)); }

}  // namespace atlas
