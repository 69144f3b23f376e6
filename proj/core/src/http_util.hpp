// Internal: endpoint URL parsing and client construction over cpp-httplib.
#pragma once

#include <chrono>
#include <memory>
#include <string>
#include <string_view>

#include <httplib.h>

namespace mdca::detail {

struct Endpoint {
    std::string origin;  // scheme://host[:port]
    std::string path;    // always begins with '/'
};

/// Splits "https://host:port/v1/chat/completions". Throws InvalidArgument.
Endpoint parse_endpoint(std::string_view url);

std::unique_ptr<httplib::Client> make_client(const Endpoint& endpoint, std::chrono::milliseconds timeout);

}  // namespace mdca::detail
