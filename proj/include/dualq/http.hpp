#pragma once

#include <map>
#include <string>

#include <json.hpp>

namespace dualq::http {

/// "https://api.example.com:8443/v1" -> origin "https://api.example.com:8443", path "/v1".
struct Url {
    std::string origin;
    std::string path;
};

/// Accepts http and https URLs; anything else is an ArgumentError.
Url parse_url(const std::string& url);

struct Response {
    int status = 0;
    std::string body;
};

/// One POST with a JSON body. Connection failures and timeouts become TransportError;
/// HTTP error statuses are returned to the caller.
Response post_json(const std::string& url, const nlohmann::json& body, const std::string& bearer_token,
                   double timeout_seconds);

/// Value of an environment variable, or empty.
std::string env_or_empty(const std::string& name);

} // namespace dualq::http
