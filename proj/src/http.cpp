#include <httplib.h>

#include "dualq/http.hpp"

#include <cmath>
#include <cstdlib>

#include "dualq/errors.hpp"

namespace dualq::http {

Url parse_url(const std::string& url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw ArgumentError("URL has no scheme: " + url);
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") throw ArgumentError("unsupported URL scheme: " + scheme);
    const auto path_start = url.find('/', scheme_end + 3);
    Url out;
    out.origin = url.substr(0, path_start);
    out.path = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!out.path.empty() && out.path.back() == '/') out.path.pop_back();
    if (out.origin.size() == scheme_end + 3) throw ArgumentError("URL has no host: " + url);
    return out;
}

Response post_json(const std::string& url, const nlohmann::json& body, const std::string& bearer_token,
                   double timeout_seconds) {
    const auto u = parse_url(url);
    httplib::Client client(u.origin);
    const auto secs = static_cast<time_t>(std::floor(timeout_seconds));
    const auto usecs = static_cast<time_t>((timeout_seconds - static_cast<double>(secs)) * 1e6);
    client.set_connection_timeout(secs, usecs);
    client.set_read_timeout(secs, usecs);
    client.set_write_timeout(secs, usecs);
    httplib::Headers headers;
    if (!bearer_token.empty()) headers.emplace("Authorization", "Bearer " + bearer_token);
    auto res = client.Post(u.path.empty() ? "/" : u.path, headers, body.dump(), "application/json");
    if (!res) throw TransportError("POST " + url + " failed: " + httplib::to_string(res.error()));
    return {res->status, res->body};
}

std::string env_or_empty(const std::string& name) {
    const char* v = std::getenv(name.c_str());
    return v ? std::string(v) : std::string();
}

} // namespace dualq::http
