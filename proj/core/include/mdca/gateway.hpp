/// @file gateway.hpp
/// @brief Chat-completion access over the OpenAI-compatible wire protocol and a
/// deterministic mock provider.

#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mdca/structured_io.hpp"
#include "mdca/taxonomy.hpp"

namespace mdca {

struct GenerationParams {
    double temperature = 0.5;
    double top_p = 0.95;
    int max_tokens = 1024;
    bool enable_thinking = false;

    /// Throws InvalidArgument.
    void validate() const;
    bool operator==(const GenerationParams&) const = default;
};

Json to_json(const GenerationParams& params);
/// Missing fields take the defaults.
GenerationParams params_from_json(const Json& doc);

enum class ProviderKind { kHttpChat, kMock };

std::string_view to_string(ProviderKind kind);
ProviderKind parse_provider_kind(std::string_view name);

struct ProviderProfile {
    std::string id;
    ProviderKind kind = ProviderKind::kMock;
    std::string model_name;

    // http_chat
    std::string endpoint;
    std::string auth_env_var;
    double rate_limit = 0.0;  // requests per second, 0 = unlimited
    int max_retries = 3;
    std::chrono::milliseconds backoff_base{500};
    std::chrono::milliseconds timeout{120000};
    bool thinking_applicable = false;
    Json extra_body = Json::object();

    // mock
    double fidelity = 1.0;
    std::optional<std::uint64_t> seed;  // a run fills a missing seed from its own
    std::set<std::string> fail_report_ids;  // injected ProviderError

    /// Throws InvalidArgument.
    void validate() const;
};

ProviderProfile profile_from_json(const Json& doc);
Json to_json(const ProviderProfile& profile);

/// A JSON/YAML list of profiles, or an object with a "providers" list.
std::vector<ProviderProfile> load_profiles(const std::filesystem::path& path);
std::vector<ProviderProfile> profiles_from_json(const Json& doc);

struct ChatRequest {
    std::string report_id;
    std::string prompt_config_id;
    std::string system_text;
    std::string user_text;             // findings only
    std::string reference_conclusion;  // read by the mock provider only
};

struct Transcript {
    std::string report_id;
    std::string prompt_config_id;
    std::string provider_id;
    GenerationParams params;
    std::string system_text;
    std::string user_text;
    std::string output_text;
    double latency_ms = 0.0;
    int attempt_count = 0;
    std::string cache_key;
    std::string created_at;  // ISO-8601 UTC
};

Json to_json(const Transcript& transcript);
Transcript transcript_from_json(const Json& doc);

/// SHA-256 over the canonical JSON of (provider id, model name, params,
/// system text, user text). Mock profiles also hash fidelity and seed, since
/// those determine their output.
std::string cache_key(const ProviderProfile& profile, const GenerationParams& params,
                      std::string_view system_text, std::string_view user_text);

/// Shared per-provider request pacing. Each acquire() reserves the next slot
/// 1/rate seconds after the previous one and sleeps until it.
class RateLimiter {
public:
    explicit RateLimiter(double requests_per_second);
    void acquire();

private:
    std::mutex mutex_;
    std::chrono::steady_clock::duration interval_{};
    std::chrono::steady_clock::time_point next_{};
};

using EnvLookup = std::function<std::optional<std::string>(const std::string&)>;

/// Reads the process environment.
std::optional<std::string> process_env(const std::string& name);

struct GenerateOptions {
    RateLimiter* limiter = nullptr;
    const Lexicon* lexicon = nullptr;  // mock segmentation; nullptr = default_lexicon()
    EnvLookup env = process_env;
};

/// One chat session. http_chat sends a single POST per attempt with
/// messages [system, user]; 429, 5xx and transport failures are retried up
/// to max_retries times with jittered exponential backoff. Throws
/// AuthMissing (before any network call), RateLimited, ProviderError or
/// Timeout.
Transcript generate(const ProviderProfile& profile, const GenerationParams& params,
                    const ChatRequest& request, const GenerateOptions& options = {});

enum class MockEditKind { kDrop, kSwap, kSubstitute };

struct MockEdit {
    MockEditKind kind;
    std::size_t item_index;  // 1-based index in the input list
};

struct MockOutput {
    std::string text;
    std::vector<MockEdit> edits;
};

/// Each input item is edited with probability 1 - fidelity by one of: drop
/// it, swap it with a neighbor, or replace it with a lexicon concept that
/// matches no input item. The result is re-serialized as a numbered list.
/// Deterministic per (seed, report_id).
MockOutput mock_degrade(const std::vector<DiagnosisItem>& items, double fidelity, std::uint64_t seed,
                        std::string_view report_id, const Lexicon& lexicon);

/// Profiles by id with one shared RateLimiter each. generate() is safe to
/// call from many threads.
class Gateway {
public:
    explicit Gateway(std::vector<ProviderProfile> profiles, const Lexicon* lexicon = nullptr,
                     EnvLookup env = process_env);

    /// Throws InvalidArgument for an unknown id.
    const ProviderProfile& profile(std::string_view id) const;
    bool has(std::string_view id) const;

    Transcript generate(std::string_view provider_id, const GenerationParams& params,
                        const ChatRequest& request) const;

private:
    struct Slot {
        ProviderProfile profile;
        std::unique_ptr<RateLimiter> limiter;
    };
    std::map<std::string, Slot, std::less<>> slots_;
    const Lexicon* lexicon_;
    EnvLookup env_;
};

}  // namespace mdca
