#include "atlas/export.hpp"

#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>

#include "atlas/analytics.hpp"
#include "atlas/atlas_io.hpp"
#include "atlas/error.hpp"

namespace atlas {

ExportFormat export_format_from_string(const std::string& name) {
    if (name == "gexf") return ExportFormat::Gexf;
    if (name == "dot") return ExportFormat::Dot;
    if (name == "json") return ExportFormat::Json;
    fail(ErrorCode::InvalidArgument, "unknown export format '" + name + "'");
}

Rgb kind_color(const std::optional<EdgeKind>& incoming) {
    if (!incoming) return {0, 0, 0};
    switch (*incoming) {
        case EdgeKind::FineTune: return {31, 119, 180};
        case EdgeKind::Adapter: return {44, 160, 44};
        case EdgeKind::Quantization: return {214, 39, 160};
        case EdgeKind::Merge: return {255, 127, 14};
        case EdgeKind::Duplicate: return {127, 127, 127};
        case EdgeKind::Unknown: return {158, 202, 225};
    }
    return {0, 0, 0};
}

namespace {

std::string xml_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            case '"': out += "&quot;"; break;
            case '\'': out += "&apos;"; break;
            default:
                // XML 1.0 forbids most control characters outright.
                if (static_cast<unsigned char>(c) < 0x20 && c != '\t' && c != '\n' && c != '\r') {
                    out += ' ';
                } else {
                    out += c;
                }
        }
    }
    return out;
}

std::string dot_escape(std::string_view s) {
    std::string out;
    for (char c : s) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out += c;
    }
    return out;
}

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::optional<EdgeKind> incoming_kind(const Atlas& atlas, std::size_t i) {
    const auto& in = atlas.in_links(i);
    if (in.empty()) return std::nullopt;
    return atlas.edges()[in.front().edge].kind;
}

std::string join_ids(const std::vector<ModelId>& ids) {
    std::string out;
    for (const auto& id : ids) {
        if (!out.empty()) out += ';';
        out += id.str();
    }
    return out;
}

// Subtree download totals for every node, one reach pass per node.
std::vector<std::uint64_t> all_subtree_downloads(const Atlas& atlas) {
    std::vector<std::uint64_t> out(atlas.size());
    for (std::size_t i = 0; i < atlas.size(); ++i) out[i] = subtree_downloads(atlas, atlas.node_at(i).id);
    return out;
}

}  // namespace

std::string export_gexf(const Atlas& atlas) {
    // Collect the attribute and metric columns that occur anywhere.
    std::set<std::string> attr_keys, metric_keys;
    for (const auto& n : atlas.nodes()) {
        for (const auto& [k, v] : n.attributes) attr_keys.insert(k);
        for (const auto& [k, v] : n.metrics) metric_keys.insert(k);
    }
    const auto subtree = all_subtree_downloads(atlas);

    std::ostringstream os;
    os << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
       << "<gexf xmlns=\"http://gexf.net/1.3\" xmlns:viz=\"http://gexf.net/1.3/viz\" "
          "xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\" "
          "xsi:schemaLocation=\"http://gexf.net/1.3 http://gexf.net/1.3/gexf.xsd\" version=\"1.3\">\n"
       << "  <meta>\n    <creator>model-atlas</creator>\n    <description>Model atlas</description>\n  </meta>\n"
       << "  <graph defaultedgetype=\"directed\" mode=\"static\">\n"
       << "    <attributes class=\"node\">\n"
       << "      <attribute id=\"created_at\" title=\"created_at\" type=\"long\"/>\n"
       << "      <attribute id=\"downloads\" title=\"downloads\" type=\"long\"/>\n"
       << "      <attribute id=\"subtree_downloads\" title=\"subtree_downloads\" type=\"long\"/>\n"
       << "      <attribute id=\"quantized\" title=\"quantized\" type=\"boolean\"/>\n"
       << "      <attribute id=\"placeholder\" title=\"placeholder\" type=\"boolean\"/>\n"
       << "      <attribute id=\"known_parents\" title=\"known_parents\" type=\"string\"/>\n";
    for (const auto& k : attr_keys) {
        os << "      <attribute id=\"attr:" << xml_escape(k) << "\" title=\"" << xml_escape(k) << "\" type=\"string\"/>\n";
    }
    for (const auto& k : metric_keys) {
        os << "      <attribute id=\"metric:" << xml_escape(k) << "\" title=\"" << xml_escape(k)
           << "\" type=\"double\"/>\n";
    }
    os << "    </attributes>\n"
       << "    <attributes class=\"edge\">\n"
       << "      <attribute id=\"kind\" title=\"kind\" type=\"string\"/>\n"
       << "    </attributes>\n"
       << "    <nodes>\n";
    for (auto i : atlas.time_order()) {
        const auto& n = atlas.node_at(i);
        const auto c = kind_color(incoming_kind(atlas, i));
        const double size = std::log10(1.0 + static_cast<double>(subtree[i]));
        os << "      <node id=\"" << xml_escape(n.id.str()) << "\" label=\"" << xml_escape(n.id.str()) << "\">\n"
           << "        <attvalues>\n"
           << "          <attvalue for=\"created_at\" value=\"" << n.created_at << "\"/>\n"
           << "          <attvalue for=\"downloads\" value=\"" << n.downloads << "\"/>\n"
           << "          <attvalue for=\"subtree_downloads\" value=\"" << subtree[i] << "\"/>\n"
           << "          <attvalue for=\"quantized\" value=\"" << (n.quantized ? "true" : "false") << "\"/>\n"
           << "          <attvalue for=\"placeholder\" value=\"" << (n.placeholder ? "true" : "false") << "\"/>\n";
        if (n.known_parents) {
            os << "          <attvalue for=\"known_parents\" value=\"" << xml_escape(join_ids(*n.known_parents))
               << "\"/>\n";
        }
        for (const auto& [k, v] : n.attributes) {
            if (v) os << "          <attvalue for=\"attr:" << xml_escape(k) << "\" value=\"" << xml_escape(*v) << "\"/>\n";
        }
        for (const auto& [k, v] : n.metrics) {
            if (v && std::isfinite(*v)) {
                os << "          <attvalue for=\"metric:" << xml_escape(k) << "\" value=\"" << fmt_double(*v)
                   << "\"/>\n";
            }
        }
        os << "        </attvalues>\n"
           << "        <viz:color r=\"" << c.r << "\" g=\"" << c.g << "\" b=\"" << c.b << "\"/>\n"
           << "        <viz:size value=\"" << fmt_double(size) << "\"/>\n"
           << "      </node>\n";
    }
    os << "    </nodes>\n    <edges>\n";
    std::size_t e = 0;
    for (const auto& edge : atlas.edges()) {
        os << "      <edge id=\"e" << e++ << "\" source=\"" << xml_escape(edge.parent.str()) << "\" target=\""
           << xml_escape(edge.child.str()) << "\">\n"
           << "        <attvalues>\n"
           << "          <attvalue for=\"kind\" value=\"" << to_string(edge.kind) << "\"/>\n"
           << "        </attvalues>\n"
           << "      </edge>\n";
    }
    os << "    </edges>\n  </graph>\n</gexf>\n";
    return os.str();
}

std::string export_dot(const Atlas& atlas) {
    std::ostringstream os;
    os << "digraph atlas {\n  node [style=filled, fontcolor=white];\n";
    for (auto i : atlas.time_order()) {
        const auto& n = atlas.node_at(i);
        const auto c = kind_color(incoming_kind(atlas, i));
        char color[8];
        std::snprintf(color, sizeof color, "#%02x%02x%02x", c.r, c.g, c.b);
        os << "  \"" << dot_escape(n.id.str()) << "\" [created_at=" << n.created_at << ", downloads=" << n.downloads
           << ", fillcolor=\"" << color << "\"" << (n.quantized ? ", quantized=true" : "")
           << (n.placeholder ? ", shape=box" : "") << "];\n";
    }
    for (const auto& edge : atlas.edges()) {
        os << "  \"" << dot_escape(edge.parent.str()) << "\" -> \"" << dot_escape(edge.child.str())
           << "\" [kind=\"" << to_string(edge.kind) << "\"];\n";
    }
    os << "}\n";
    return os.str();
}

std::string export_json(const Atlas& atlas) { return atlas_to_json(atlas); }

std::string export_atlas(const Atlas& atlas, ExportFormat format) {
    switch (format) {
        case ExportFormat::Gexf: return export_gexf(atlas);
        case ExportFormat::Dot: return export_dot(atlas);
        case ExportFormat::Json: return export_json(atlas);
    }
    return export_json(atlas);
}

}  // namespace atlas
