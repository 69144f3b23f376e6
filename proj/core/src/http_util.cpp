#include "http_util.hpp"

#include "mdca/error.hpp"

namespace mdca::detail {

Endpoint parse_endpoint(std::string_view url) {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string_view::npos) {
        throw Error(ErrorCode::kInvalidArgument, "endpoint needs a scheme: " + std::string(url));
    }
    const auto scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw Error(ErrorCode::kInvalidArgument, "unsupported scheme: " + std::string(url));
    }
    const auto path_start = url.find('/', scheme_end + 3);
    Endpoint ep;
    ep.origin = std::string(url.substr(0, path_start));
    ep.path = path_start == std::string_view::npos ? "/" : std::string(url.substr(path_start));
    if (ep.origin.size() <= scheme_end + 3) {
        throw Error(ErrorCode::kInvalidArgument, "endpoint has no host: " + std::string(url));
    }
    return ep;
}

std::unique_ptr<httplib::Client> make_client(const Endpoint& endpoint, std::chrono::milliseconds timeout) {
    auto client = std::make_unique<httplib::Client>(endpoint.origin);
    client->set_connection_timeout(timeout);
    client->set_read_timeout(timeout);
    client->set_write_timeout(timeout);
    return client;
}

}  // namespace mdca::detail
