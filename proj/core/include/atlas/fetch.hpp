#pragma once

#include <chrono>
#include <string>
#include <vector>

#include "atlas/fingerprint.hpp"
#include "atlas/model.hpp"

namespace atlas {

struct FetchOptions {
    int attempts = 3;
    std::chrono::milliseconds initial_backoff{200};
    double backoff_multiplier = 2.0;
    std::chrono::milliseconds timeout{10000};
};

struct FetchResult {
    std::vector<ModelNode> nodes;     // in request order, failures omitted
    std::vector<RecordError> errors;  // one per failed id
};

// GET {endpoint_url}/{id} for each id. Connection failures, 5xx and 429 are
// retried with exponential backoff; other statuses fail that id at once.
FetchResult fetch_metadata(const std::string& endpoint_url, const std::vector<ModelId>& ids,
                           const FetchOptions& options = {});

}  // namespace atlas
