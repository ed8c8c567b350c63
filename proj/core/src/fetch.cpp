#include "atlas/fetch.hpp"

#include <cctype>
#include <thread>

#include <httplib.h>

#include "atlas/error.hpp"
#include "json_codec.hpp"

namespace atlas {

namespace {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string base_path;
};

Endpoint split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) fail(ErrorCode::InvalidArgument, "endpoint URL needs a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    Endpoint ep;
    if (path_start == std::string::npos) {
        ep.origin = url;
    } else {
        ep.origin = url.substr(0, path_start);
        ep.base_path = url.substr(path_start);
    }
    while (!ep.base_path.empty() && ep.base_path.back() == '/') ep.base_path.pop_back();
    return ep;
}

// Percent-encodes everything outside the unreserved set, keeping '/' so that
// "org/name" ids map onto nested paths.
std::string encode_id(const std::string& id) {
    static const char* hex = "0123456789ABCDEF";
    std::string out;
    for (unsigned char c : id) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.' || c == '~' || c == '/') {
            out += static_cast<char>(c);
        } else {
            out += '%';
            out += hex[c >> 4];
            out += hex[c & 15];
        }
    }
    return out;
}

bool retryable(int status) { return status == 429 || status >= 500; }

}  // namespace

FetchResult fetch_metadata(const std::string& endpoint_url, const std::vector<ModelId>& ids,
                           const FetchOptions& options) {
    auto ep = split_url(endpoint_url);
    httplib::Client client(ep.origin);
    auto secs = options.timeout.count() / 1000;
    auto usecs = (options.timeout.count() % 1000) * 1000;
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);

    FetchResult result;
    for (const auto& id : ids) {
        const auto path = ep.base_path + "/" + encode_id(id.str());
        auto backoff = options.initial_backoff;
        std::string last_error;
        std::string body;
        bool ok = false;
        for (int attempt = 1; attempt <= options.attempts; ++attempt) {
            auto res = client.Get(path);
            if (res && res->status == 200) {
                body = res->body;
                ok = true;
                break;
            }
            if (res) {
                last_error = "HTTP " + std::to_string(res->status);
                if (!retryable(res->status)) break;
            } else {
                last_error = "transport error: " + httplib::to_string(res.error());
            }
            if (attempt < options.attempts) {
                std::this_thread::sleep_for(backoff);
                backoff = std::chrono::milliseconds(
                    static_cast<std::int64_t>(static_cast<double>(backoff.count()) * options.backoff_multiplier));
            }
        }
        if (!ok) {
            result.errors.push_back({0, id.str(), std::string(to_string(ErrorCode::HttpError)) + ": " + last_error});
            continue;
        }
        try {
            auto record = detail::json::parse(body);
            if (record.is_object() && !record.contains("id") && !record.contains("modelId")) record["id"] = id.str();
            auto node = detail::node_from_json(record);
            if (node.id != id) {
                fail(ErrorCode::MalformedRecord, "response id '" + node.id.str() + "' does not match request");
            }
            result.nodes.push_back(std::move(node));
        } catch (const detail::json::exception& e) {
            result.errors.push_back({0, id.str(), std::string("MalformedRecord: invalid JSON: ") + e.what()});
        } catch (const Error& e) {
            result.errors.push_back({0, id.str(), e.what()});
        }
    }
    return result;
}

}  // namespace atlas
