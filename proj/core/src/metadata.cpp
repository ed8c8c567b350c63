#include "atlas/metadata.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>

#include "atlas/atlas_io.hpp"
#include "atlas/error.hpp"
#include "json_codec.hpp"

namespace atlas {

MetadataLoad load_metadata(std::istream& in) {
    MetadataLoad out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            out.nodes.push_back(node_from_json_line(line));
        } catch (const Error& e) {
            std::string id;
            try {
                auto j = detail::json::parse(line);
                if (j.is_object() && j.contains("id") && j["id"].is_string()) id = j["id"].get<std::string>();
            } catch (...) {
            }
            out.errors.push_back({lineno, id, e.what()});
        }
    }
    return out;
}

namespace {

// RFC 4180 fields: quoted cells may contain commas and doubled quotes.
std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> cells(1);
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cells.back() += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cells.back() += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.emplace_back();
        } else {
            cells.back() += c;
        }
    }
    if (quoted) fail(ErrorCode::MalformedRecord, "unterminated quoted cell");
    return cells;
}

bool parse_bool_cell(const std::string& v) {
    if (v == "true" || v == "True" || v == "1") return true;
    if (v == "false" || v == "False" || v == "0") return false;
    fail(ErrorCode::MalformedRecord, "expected a boolean, got '" + v + "'");
}

}  // namespace

MetadataLoad load_metadata_csv(std::istream& in) {
    MetadataLoad out;
    std::string line;
    if (!std::getline(in, line)) return out;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    auto header = split_csv(line);
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        std::string id;
        try {
            auto cells = split_csv(line);
            if (cells.size() != header.size()) {
                fail(ErrorCode::MalformedRecord, "expected " + std::to_string(header.size()) + " cells, got " +
                                                     std::to_string(cells.size()));
            }
            detail::json record = detail::json::object();
            detail::json attrs = detail::json::object();
            detail::json metrics = detail::json::object();
            for (std::size_t c = 0; c < header.size(); ++c) {
                const auto& col = header[c];
                const auto& v = cells[c];
                if (col == "id" || col == "modelId") {
                    id = v;
                    if (!v.empty()) record["id"] = v;
                } else if (col == "created_at" || col == "createdAt") {
                    if (v.empty()) continue;
                    if (v.find_first_not_of("0123456789") == std::string::npos) {
                        record["created_at"] = std::stoll(v);
                    } else {
                        record["created_at"] = v;
                    }
                } else if (col == "downloads") {
                    if (v.empty()) continue;
                    if (v.find_first_not_of("0123456789") != std::string::npos) {
                        fail(ErrorCode::MalformedRecord, "downloads must be a non-negative integer");
                    }
                    record["downloads"] = std::stoull(v);
                } else if (col == "quantized" || col == "placeholder") {
                    if (!v.empty()) record[col] = parse_bool_cell(v);
                } else if (col == "known_parents") {
                    if (v.empty()) continue;
                    detail::json parents = detail::json::array();
                    std::stringstream ss(v);
                    std::string p;
                    while (std::getline(ss, p, ';')) {
                        if (!p.empty()) parents.push_back(p);
                    }
                    record["known_parents"] = parents;
                } else if (col.rfind("metric:", 0) == 0) {
                    auto name = col.substr(7);
                    if (v.empty()) {
                        metrics[name] = nullptr;
                        continue;
                    }
                    std::size_t used = 0;
                    double x = 0;
                    try {
                        x = std::stod(v, &used);
                    } catch (const std::exception&) {
                        used = 0;
                    }
                    if (used != v.size() || !std::isfinite(x)) {
                        fail(ErrorCode::MalformedRecord, "metric '" + name + "' is not a finite number");
                    }
                    metrics[name] = x;
                } else if (is_valid_attribute_key(col)) {
                    attrs[col] = v.empty() ? detail::json(nullptr) : detail::json(v);
                }
            }
            record["attributes"] = attrs;
            record["metrics"] = metrics;
            out.nodes.push_back(detail::node_from_json(record));
        } catch (const Error& e) {
            out.errors.push_back({lineno, id, e.what()});
        } catch (const std::exception& e) {
            out.errors.push_back({lineno, id, std::string("MalformedRecord: ") + e.what()});
        }
    }
    return out;
}

MetadataLoad load_metadata_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail(ErrorCode::IoError, "cannot open '" + path + "'");
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") return load_metadata_csv(in);
    return load_metadata(in);
}

void save_metadata(std::ostream& out, const std::vector<ModelNode>& nodes) {
    for (const auto& n : nodes) out << node_to_json_line(n) << '\n';
}

namespace {

std::string csv_quote(const std::string& v) {
    if (v.find_first_of(",\"\n") == std::string::npos) return v;
    std::string q = "\"";
    for (char c : v) {
        if (c == '"') q += "\"\"";
        else q += c;
    }
    return q + "\"";
}

std::string format_real(double x) {
    std::ostringstream ss;
    ss.precision(17);
    ss << x;
    return ss.str();
}

}  // namespace

void save_metadata_csv(std::ostream& out, const std::vector<ModelNode>& nodes) {
    std::set<std::string> attr_keys, metric_keys;
    for (const auto& n : nodes) {
        for (const auto& [k, v] : n.attributes) attr_keys.insert(k);
        for (const auto& [k, v] : n.metrics) metric_keys.insert(k);
    }
    out << "id,created_at,downloads,quantized,placeholder,known_parents";
    for (const auto& k : attr_keys) out << ',' << csv_quote(k);
    for (const auto& k : metric_keys) out << ',' << csv_quote("metric:" + k);
    out << '\n';
    for (const auto& n : nodes) {
        std::string parents;
        if (n.known_parents) {
            for (const auto& p : *n.known_parents) {
                if (!parents.empty()) parents += ';';
                parents += p.str();
            }
        }
        out << csv_quote(n.id.str()) << ',' << n.created_at << ',' << n.downloads << ','
            << (n.quantized ? "true" : "false") << ',' << (n.placeholder ? "true" : "false") << ','
            << csv_quote(parents);
        for (const auto& k : attr_keys) {
            auto it = n.attributes.find(k);
            out << ',' << (it != n.attributes.end() && it->second ? csv_quote(*it->second) : "");
        }
        for (const auto& k : metric_keys) {
            auto it = n.metrics.find(k);
            out << ',' << (it != n.metrics.end() && it->second ? format_real(*it->second) : "");
        }
        out << '\n';
    }
}

void save_metadata_file(const std::string& path, const std::vector<ModelNode>& nodes) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) fail(ErrorCode::IoError, "cannot write '" + path + "'");
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv") {
        save_metadata_csv(out, nodes);
    } else {
        save_metadata(out, nodes);
    }
    if (!out) fail(ErrorCode::IoError, "write failed for '" + path + "'");
}

}  // namespace atlas
