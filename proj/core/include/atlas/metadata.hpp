#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "atlas/fingerprint.hpp"
#include "atlas/model.hpp"

namespace atlas {

struct MetadataLoad {
    std::vector<ModelNode> nodes;
    std::vector<RecordError> errors;  // one entry per rejected line
};

// JSON-lines dump, one record per line. Bad records are collected with their
// line numbers and skipped; the rest still load.
MetadataLoad load_metadata(std::istream& in);

// CSV with a header row. Recognised columns: id, created_at (or createdAt),
// downloads, quantized, placeholder, known_parents (';'-separated), any
// attribute key, and "metric:<name>". Empty cells are absent values; other
// columns are ignored.
MetadataLoad load_metadata_csv(std::istream& in);

// Dispatches on the extension: ".csv" reads CSV, anything else JSONL.
MetadataLoad load_metadata_file(const std::string& path);

void save_metadata(std::ostream& out, const std::vector<ModelNode>& nodes);
void save_metadata_csv(std::ostream& out, const std::vector<ModelNode>& nodes);
void save_metadata_file(const std::string& path, const std::vector<ModelNode>& nodes);

}  // namespace atlas
