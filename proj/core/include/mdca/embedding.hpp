/// @file embedding.hpp
/// @brief Sentence embedding providers used by the semantic coherence metric.

#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

#include "mdca/structured_io.hpp"

namespace mdca {

struct EmbeddingVector {
    std::vector<double> values;
    std::string provider_id;

    std::size_t dim() const { return values.size(); }
    bool is_zero() const;
};

/// Implementations must be safe to call from several threads at once.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string id() const = 0;
    virtual EmbeddingVector embed(std::string_view text) const = 0;
};

/// Offline fallback: hashed code-point bigram term frequencies.
///
/// Text is case/width folded and stripped of whitespace, then every adjacent
/// code-point pair is hashed (FNV-1a 64 over its UTF-8 bytes) into one of
/// 4096 buckets. A one-code-point text contributes its single code point.
class BigramHashEmbedder final : public EmbeddingProvider {
public:
    static constexpr std::size_t kDim = 4096;
    static constexpr std::string_view kId = "bigram-hash-4096";

    std::string id() const override { return std::string(kId); }
    EmbeddingVector embed(std::string_view text) const override;

    static std::size_t bucket(std::u32string_view feature);
};

/// OpenAI-compatible embeddings endpoint: POST {"model", "input": [text]},
/// reads data[0].embedding. The bearer key comes from auth_env_var.
struct HttpEmbeddingConfig {
    std::string id;
    std::string endpoint;
    std::string model;
    std::string auth_env_var;
    int timeout_seconds = 30;
};

class HttpEmbeddingProvider final : public EmbeddingProvider {
public:
    explicit HttpEmbeddingProvider(HttpEmbeddingConfig config);

    std::string id() const override { return config_.id; }
    EmbeddingVector embed(std::string_view text) const override;

private:
    HttpEmbeddingConfig config_;
};

/// {"kind": "fallback"} or {"kind": "http", "id", "endpoint", "model", "auth_env_var"}.
/// A bare string "fallback" / "bigram-hash-4096" is accepted too.
std::shared_ptr<const EmbeddingProvider> make_embedding_provider(const Json& config);

EmbeddingVector embed(std::string_view text, const EmbeddingProvider& provider);

/// Cosine similarity; 0 when either vector is all zeros.
double cosine(const EmbeddingVector& a, const EmbeddingVector& b);

}  // namespace mdca
