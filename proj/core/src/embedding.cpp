#include "mdca/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

#include "http_util.hpp"
#include "mdca/error.hpp"
#include "mdca/hashing.hpp"
#include "mdca/text.hpp"

namespace mdca {

bool EmbeddingVector::is_zero() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return v == 0.0; });
}

std::size_t BigramHashEmbedder::bucket(std::u32string_view feature) {
    return static_cast<std::size_t>(fnv1a64(text::encode_utf8(feature)) % kDim);
}

EmbeddingVector BigramHashEmbedder::embed(std::string_view input) const {
    EmbeddingVector v{std::vector<double>(kDim, 0.0), std::string(kId)};
    const std::u32string key = text::match_key(input);
    if (key.size() == 1) {
        v.values[bucket(key)] += 1.0;
        return v;
    }
    for (std::size_t i = 0; i + 1 < key.size(); ++i) {
        v.values[bucket(std::u32string_view(key).substr(i, 2))] += 1.0;
    }
    return v;
}

HttpEmbeddingProvider::HttpEmbeddingProvider(HttpEmbeddingConfig config) : config_(std::move(config)) {
    detail::parse_endpoint(config_.endpoint);
}

EmbeddingVector HttpEmbeddingProvider::embed(std::string_view input) const {
    const char* key = config_.auth_env_var.empty() ? nullptr : std::getenv(config_.auth_env_var.c_str());
    if (!config_.auth_env_var.empty() && (key == nullptr || *key == '\0')) {
        throw Error(ErrorCode::kProviderUnavailable, "environment variable " + config_.auth_env_var + " is not set");
    }
    const auto ep = detail::parse_endpoint(config_.endpoint);
    auto client = detail::make_client(ep, std::chrono::seconds(config_.timeout_seconds));
    httplib::Headers headers;
    if (key) headers.emplace("Authorization", std::string("Bearer ") + key);
    const Json body{{"model", config_.model}, {"input", Json::array({std::string(input)})}};
    auto res = client->Post(ep.path, headers, dump_line(body), "application/json");
    if (!res) {
        throw Error(ErrorCode::kProviderUnavailable, "embedding request failed: " + httplib::to_string(res.error()));
    }
    if (res->status != 200) {
        throw Error(ErrorCode::kProviderUnavailable,
                    "embedding endpoint returned " + std::to_string(res->status) + ": " + res->body.substr(0, 200));
    }
    try {
        const auto doc = Json::parse(res->body);
        EmbeddingVector v{doc.at("data").at(0).at("embedding").get<std::vector<double>>(), config_.id};
        for (double x : v.values) {
            if (!std::isfinite(x)) throw Error(ErrorCode::kProviderUnavailable, "non-finite embedding component");
        }
        return v;
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::kProviderUnavailable, std::string("malformed embedding response: ") + e.what());
    }
}

std::shared_ptr<const EmbeddingProvider> make_embedding_provider(const Json& config) {
    if (config.is_null()) return std::make_shared<BigramHashEmbedder>();
    if (config.is_string()) {
        const auto name = config.get<std::string>();
        if (name == "fallback" || name == BigramHashEmbedder::kId) return std::make_shared<BigramHashEmbedder>();
        throw Error(ErrorCode::kProviderUnavailable, "unknown embedding provider '" + name + "'");
    }
    const auto kind = config.value("kind", std::string("fallback"));
    if (kind == "fallback") return std::make_shared<BigramHashEmbedder>();
    if (kind == "http") {
        HttpEmbeddingConfig c;
        c.id = config.value("id", std::string("http-embedding"));
        c.endpoint = config.value("endpoint", std::string());
        c.model = config.value("model", std::string());
        c.auth_env_var = config.value("auth_env_var", std::string());
        c.timeout_seconds = config.value("timeout_seconds", 30);
        return std::make_shared<HttpEmbeddingProvider>(std::move(c));
    }
    throw Error(ErrorCode::kProviderUnavailable, "unknown embedding provider kind '" + kind + "'");
}

EmbeddingVector embed(std::string_view text, const EmbeddingProvider& provider) {
    return provider.embed(text);
}

double cosine(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dim() != b.dim()) {
        throw Error(ErrorCode::kInvalidArgument, "embedding dimensions differ");
    }
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return dot / (std::sqrt(na) * std::sqrt(nb));
}

}  // namespace mdca
