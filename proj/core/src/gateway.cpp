#include "mdca/gateway.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <ctime>
#include <thread>

#include "http_util.hpp"
#include "mdca/error.hpp"
#include "mdca/hashing.hpp"
#include "mdca/random.hpp"
#include "mdca/segmenter.hpp"

namespace mdca {
namespace {

std::string utc_now_iso() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(now.time_since_epoch()).count() % 1000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[64];
    std::snprintf(buf, sizeof buf, "%04d-%02d-%02dT%02d:%02d:%02d.%03dZ", tm.tm_year + 1900, tm.tm_mon + 1,
                  tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec, static_cast<int>(ms));
    return buf;
}

std::string excerpt(std::string_view body) {
    constexpr std::size_t kMax = 200;
    if (body.size() <= kMax) return std::string(body);
    std::size_t cut = kMax;
    while (cut > 0 && (static_cast<unsigned char>(body[cut]) & 0xC0) == 0x80) --cut;
    return std::string(body.substr(0, cut)) + "...";
}

Transcript base_transcript(const ProviderProfile& profile, const GenerationParams& params,
                           const ChatRequest& request) {
    Transcript t;
    t.report_id = request.report_id;
    t.prompt_config_id = request.prompt_config_id;
    t.provider_id = profile.id;
    t.params = params;
    t.system_text = request.system_text;
    t.user_text = request.user_text;
    t.cache_key = cache_key(profile, params, request.system_text, request.user_text);
    return t;
}

std::string generate_mock(const ProviderProfile& profile, const ChatRequest& request, const Lexicon& lexicon) {
    if (profile.fail_report_ids.count(request.report_id) != 0) {
        throw Error(ErrorCode::kProviderError, "500: injected mock failure for " + request.report_id);
    }
    if (profile.fidelity >= 1.0) return request.reference_conclusion;
    const auto items = segment_conclusion(request.reference_conclusion, lexicon);
    auto out = mock_degrade(items, profile.fidelity, profile.seed.value_or(0), request.report_id, lexicon);
    return out.edits.empty() ? request.reference_conclusion : std::move(out.text);
}

std::string parse_chat_content(const std::string& body, int status) {
    try {
        const auto doc = Json::parse(body);
        const auto& content = doc.at("choices").at(0).at("message").at("content");
        return content.is_null() ? std::string() : content.get<std::string>();
    } catch (const Json::exception&) {
        throw Error(ErrorCode::kProviderError, std::to_string(status) + ": unreadable response: " + excerpt(body));
    }
}

std::string generate_http(const ProviderProfile& profile, const GenerationParams& params,
                          const ChatRequest& request, const GenerateOptions& options, const std::string& key,
                          int& attempts) {
    const auto api_key = options.env ? options.env(profile.auth_env_var) : std::nullopt;
    if (!api_key || api_key->empty()) throw Error(ErrorCode::kAuthMissing, profile.auth_env_var);

    Json body = profile.extra_body.is_object() ? profile.extra_body : Json::object();
    body["model"] = profile.model_name;
    body["messages"] = Json::array({{{"role", "system"}, {"content", request.system_text}},
                                    {{"role", "user"}, {"content", request.user_text}}});
    body["temperature"] = params.temperature;
    body["top_p"] = params.top_p;
    body["max_tokens"] = params.max_tokens;
    if (profile.thinking_applicable) body["enable_thinking"] = params.enable_thinking;
    const std::string payload = body.dump();

    const auto endpoint = detail::parse_endpoint(profile.endpoint);
    const httplib::Headers headers{{"Authorization", "Bearer " + *api_key}};
    SeededRng jitter(derive_seed(fnv1a64(key), request.report_id));

    std::optional<Error> last;
    for (int attempt = 1; attempt <= profile.max_retries + 1; ++attempt) {
        attempts = attempt;
        if (options.limiter != nullptr) options.limiter->acquire();
        auto client = detail::make_client(endpoint, profile.timeout);
        auto res = client->Post(endpoint.path, headers, payload, "application/json");
        if (!res) {
            const auto err = res.error();
            const bool timed_out = err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read;
            last.emplace(timed_out ? ErrorCode::kTimeout : ErrorCode::kProviderError,
                         "transport: " + httplib::to_string(err));
        } else if (res->status == 200) {
            return parse_chat_content(res->body, res->status);
        } else if (res->status == 429) {
            last.emplace(ErrorCode::kRateLimited, "429 after " + std::to_string(attempt) + " attempts");
        } else if (res->status >= 500) {
            last.emplace(ErrorCode::kProviderError, std::to_string(res->status) + ": " + excerpt(res->body));
        } else {
            throw Error(ErrorCode::kProviderError, std::to_string(res->status) + ": " + excerpt(res->body));
        }
        if (attempt <= profile.max_retries) {
            // base * 2^(attempt-1), scaled by a factor in [0.5, 1)
            const double scale = std::ldexp(1.0, attempt - 1) * (0.5 + 0.5 * jitter.unit());
            std::this_thread::sleep_for(std::chrono::duration<double, std::milli>(
                static_cast<double>(profile.backoff_base.count()) * scale));
        }
    }
    throw *last;
}

double require_number(const Json& doc, const char* key, double fallback) {
    if (!doc.contains(key)) return fallback;
    if (!doc[key].is_number()) throw Error(ErrorCode::kInvalidArgument, std::string(key) + " must be a number");
    return doc[key].get<double>();
}

}  // namespace

void GenerationParams::validate() const {
    if (!(temperature >= 0.0)) throw Error(ErrorCode::kInvalidArgument, "temperature must be >= 0");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw Error(ErrorCode::kInvalidArgument, "top_p must lie in (0,1]");
    if (max_tokens <= 0) throw Error(ErrorCode::kInvalidArgument, "max_tokens must be positive");
}

Json to_json(const GenerationParams& p) {
    return {{"temperature", p.temperature},
            {"top_p", p.top_p},
            {"max_tokens", p.max_tokens},
            {"enable_thinking", p.enable_thinking}};
}

GenerationParams params_from_json(const Json& doc) {
    GenerationParams p;
    if (doc.is_null()) return p;
    p.temperature = require_number(doc, "temperature", p.temperature);
    p.top_p = require_number(doc, "top_p", p.top_p);
    p.max_tokens = doc.value("max_tokens", p.max_tokens);
    p.enable_thinking = doc.value("enable_thinking", p.enable_thinking);
    p.validate();
    return p;
}

std::string_view to_string(ProviderKind kind) { return kind == ProviderKind::kMock ? "mock" : "http_chat"; }

ProviderKind parse_provider_kind(std::string_view name) {
    if (name == "mock") return ProviderKind::kMock;
    if (name == "http_chat") return ProviderKind::kHttpChat;
    throw Error(ErrorCode::kInvalidArgument, "provider kind must be http_chat or mock, got '" + std::string(name) + "'");
}

void ProviderProfile::validate() const {
    if (id.empty()) throw Error(ErrorCode::kInvalidArgument, "provider profile needs an id");
    if (kind == ProviderKind::kHttpChat) {
        if (endpoint.empty()) throw Error(ErrorCode::kInvalidArgument, id + ": http_chat needs an endpoint");
        if (auth_env_var.empty()) throw Error(ErrorCode::kInvalidArgument, id + ": http_chat needs auth_env_var");
        detail::parse_endpoint(endpoint);
        if (rate_limit < 0.0) throw Error(ErrorCode::kInvalidArgument, id + ": rate_limit must be >= 0");
        if (max_retries < 0) throw Error(ErrorCode::kInvalidArgument, id + ": max_retries must be >= 0");
    } else {
        if (!(fidelity >= 0.0 && fidelity <= 1.0)) {
            throw Error(ErrorCode::kInvalidArgument, id + ": mock fidelity must lie in [0,1]");
        }
        if (!seed) throw Error(ErrorCode::kInvalidArgument, id + ": mock profile needs a seed");
    }
}

ProviderProfile profile_from_json(const Json& doc) {
    if (!doc.is_object()) throw Error(ErrorCode::kParse, "provider profile must be an object");
    ProviderProfile p;
    try {
        p.id = doc.at("id").get<std::string>();
        p.kind = parse_provider_kind(doc.at("kind").get<std::string>());
        p.model_name = doc.value("model_name", p.kind == ProviderKind::kMock ? "mock" : "");
        p.endpoint = doc.value("endpoint", "");
        p.auth_env_var = doc.value("auth_env_var", "");
        p.rate_limit = require_number(doc, "rate_limit", p.rate_limit);
        p.max_retries = doc.value("max_retries", p.max_retries);
        p.backoff_base = std::chrono::milliseconds(doc.value("backoff_base_ms", p.backoff_base.count()));
        p.timeout = std::chrono::milliseconds(doc.value("timeout_ms", p.timeout.count()));
        p.thinking_applicable = doc.value("thinking_applicable", false);
        if (doc.contains("extra_body")) p.extra_body = doc["extra_body"];
        if (p.kind == ProviderKind::kMock) {
            if (!doc.contains("fidelity")) {
                throw Error(ErrorCode::kInvalidArgument, p.id + ": mock profiles need a fidelity");
            }
            p.fidelity = require_number(doc, "fidelity", 1.0);
            if (doc.contains("seed")) p.seed = doc["seed"].get<std::uint64_t>();
            if (doc.contains("fail_report_ids")) {
                for (const auto& r : doc["fail_report_ids"]) p.fail_report_ids.insert(r.get<std::string>());
            }
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::kParse, std::string("provider profile: ") + e.what());
    }
    if (p.kind == ProviderKind::kHttpChat || p.seed) p.validate();
    return p;
}

Json to_json(const ProviderProfile& p) {
    Json doc{{"id", p.id}, {"kind", to_string(p.kind)}, {"model_name", p.model_name}};
    if (p.kind == ProviderKind::kHttpChat) {
        doc["endpoint"] = p.endpoint;
        doc["auth_env_var"] = p.auth_env_var;
        doc["rate_limit"] = p.rate_limit;
        doc["max_retries"] = p.max_retries;
        doc["backoff_base_ms"] = p.backoff_base.count();
        doc["timeout_ms"] = p.timeout.count();
        doc["thinking_applicable"] = p.thinking_applicable;
        doc["extra_body"] = p.extra_body;
    } else {
        doc["fidelity"] = p.fidelity;
        if (p.seed) doc["seed"] = *p.seed;
        doc["fail_report_ids"] = p.fail_report_ids;
    }
    return doc;
}

std::vector<ProviderProfile> profiles_from_json(const Json& doc) {
    const Json& list = doc.is_object() && doc.contains("providers") ? doc["providers"] : doc;
    if (!list.is_array()) throw Error(ErrorCode::kParse, "provider profiles must be a list");
    std::vector<ProviderProfile> out;
    std::set<std::string> seen;
    for (const auto& entry : list) {
        auto p = profile_from_json(entry);
        if (!seen.insert(p.id).second) throw Error(ErrorCode::kInvalidArgument, "duplicate provider id " + p.id);
        out.push_back(std::move(p));
    }
    return out;
}

std::vector<ProviderProfile> load_profiles(const std::filesystem::path& path) {
    return profiles_from_json(load_structured_file(path));
}

Json to_json(const Transcript& t) {
    return {{"report_id", t.report_id},
            {"prompt_config_id", t.prompt_config_id},
            {"provider_id", t.provider_id},
            {"params", to_json(t.params)},
            {"system_text", t.system_text},
            {"user_text", t.user_text},
            {"output_text", t.output_text},
            {"latency_ms", t.latency_ms},
            {"attempt_count", t.attempt_count},
            {"cache_key", t.cache_key},
            {"created_at", t.created_at}};
}

Transcript transcript_from_json(const Json& doc) {
    Transcript t;
    t.report_id = doc.at("report_id").get<std::string>();
    t.prompt_config_id = doc.at("prompt_config_id").get<std::string>();
    t.provider_id = doc.at("provider_id").get<std::string>();
    t.params = params_from_json(doc.at("params"));
    t.system_text = doc.at("system_text").get<std::string>();
    t.user_text = doc.at("user_text").get<std::string>();
    t.output_text = doc.at("output_text").get<std::string>();
    t.latency_ms = doc.value("latency_ms", 0.0);
    t.attempt_count = doc.value("attempt_count", 0);
    t.cache_key = doc.at("cache_key").get<std::string>();
    t.created_at = doc.value("created_at", "");
    return t;
}

std::string cache_key(const ProviderProfile& profile, const GenerationParams& params,
                      std::string_view system_text, std::string_view user_text) {
    // nlohmann::json objects are key-sorted, so dump() is canonical.
    Json doc{{"provider_id", profile.id},
             {"model_name", profile.model_name},
             {"params", to_json(params)},
             {"system_text", system_text},
             {"user_text", user_text}};
    if (profile.kind == ProviderKind::kMock) doc["mock"] = {{"fidelity", profile.fidelity}, {"seed", profile.seed.value_or(0)}};
    return sha256_hex(doc.dump());
}

RateLimiter::RateLimiter(double requests_per_second) {
    if (requests_per_second > 0.0) {
        interval_ = std::chrono::duration_cast<std::chrono::steady_clock::duration>(
            std::chrono::duration<double>(1.0 / requests_per_second));
    }
}

void RateLimiter::acquire() {
    if (interval_ == std::chrono::steady_clock::duration::zero()) return;
    std::chrono::steady_clock::time_point slot;
    {
        std::lock_guard lock(mutex_);
        slot = std::max(std::chrono::steady_clock::now(), next_);
        next_ = slot + interval_;
    }
    std::this_thread::sleep_until(slot);
}

std::optional<std::string> process_env(const std::string& name) {
    if (const char* v = std::getenv(name.c_str())) return std::string(v);
    return std::nullopt;
}

Transcript generate(const ProviderProfile& profile, const GenerationParams& params, const ChatRequest& request,
                    const GenerateOptions& options) {
    params.validate();
    Transcript t = base_transcript(profile, params, request);
    const auto start = std::chrono::steady_clock::now();
    if (profile.kind == ProviderKind::kMock) {
        t.attempt_count = 1;
        t.output_text = generate_mock(profile, request, options.lexicon ? *options.lexicon : default_lexicon());
    } else {
        t.output_text = generate_http(profile, params, request, options, t.cache_key, t.attempt_count);
    }
    t.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
    t.created_at = utc_now_iso();
    return t;
}

MockOutput mock_degrade(const std::vector<DiagnosisItem>& items, double fidelity, std::uint64_t seed,
                        std::string_view report_id, const Lexicon& lexicon) {
    struct Slot {
        std::size_t origin;
        std::string raw;
    };
    std::vector<Slot> cur;
    std::set<std::string> used_concepts;
    for (std::size_t i = 0; i < items.size(); ++i) {
        cur.push_back({i, items[i].raw});
        used_concepts.insert(items[i].concepts.begin(), items[i].concepts.end());
    }
    std::vector<const Concept*> replacements;
    for (const auto& c : lexicon.concepts()) {
        if (used_concepts.count(c.id) == 0) replacements.push_back(&c);
    }

    SeededRng rng(derive_seed(seed, report_id));
    MockOutput out;
    std::set<std::pair<std::size_t, std::size_t>> swapped;
    const double p_edit = 1.0 - std::clamp(fidelity, 0.0, 1.0);
    for (std::size_t k = 0; k < items.size(); ++k) {
        if (!(rng.unit() < p_edit)) continue;
        auto pos = static_cast<std::size_t>(
            std::find_if(cur.begin(), cur.end(), [&](const Slot& s) { return s.origin == k; }) - cur.begin());
        auto kind = static_cast<MockEditKind>(rng.below(3));
        if (kind == MockEditKind::kSwap) {
            kind = MockEditKind::kSubstitute;
            if (cur.size() >= 2) {
                const std::size_t other = pos + 1 < cur.size() ? pos + 1 : pos - 1;
                const auto pair = std::minmax(cur[pos].origin, cur[other].origin);
                if (swapped.insert(pair).second) {
                    std::swap(cur[pos], cur[other]);
                    kind = MockEditKind::kSwap;
                }
            }
        }
        if (kind == MockEditKind::kSubstitute) {
            if (replacements.empty()) {
                kind = MockEditKind::kDrop;
            } else {
                cur[pos].raw = replacements[rng.below(replacements.size())]->synonyms.front();
            }
        }
        if (kind == MockEditKind::kDrop) cur.erase(cur.begin() + static_cast<std::ptrdiff_t>(pos));
        out.edits.push_back({kind, k + 1});
    }
    std::vector<std::string> raws;
    for (auto& s : cur) raws.push_back(std::move(s.raw));
    out.text = serialize_items(raws);
    return out;
}

Gateway::Gateway(std::vector<ProviderProfile> profiles, const Lexicon* lexicon, EnvLookup env)
    : lexicon_(lexicon), env_(std::move(env)) {
    for (auto& p : profiles) {
        p.validate();
        auto limiter = std::make_unique<RateLimiter>(p.kind == ProviderKind::kHttpChat ? p.rate_limit : 0.0);
        const std::string id = p.id;
        if (!slots_.emplace(id, Slot{std::move(p), std::move(limiter)}).second) {
            throw Error(ErrorCode::kInvalidArgument, "duplicate provider id " + id);
        }
    }
}

bool Gateway::has(std::string_view id) const { return slots_.find(id) != slots_.end(); }

const ProviderProfile& Gateway::profile(std::string_view id) const {
    auto it = slots_.find(id);
    if (it == slots_.end()) throw Error(ErrorCode::kInvalidArgument, "unknown provider " + std::string(id));
    return it->second.profile;
}

Transcript Gateway::generate(std::string_view provider_id, const GenerationParams& params,
                             const ChatRequest& request) const {
    auto it = slots_.find(provider_id);
    if (it == slots_.end()) throw Error(ErrorCode::kInvalidArgument, "unknown provider " + std::string(provider_id));
    GenerateOptions options{it->second.limiter.get(), lexicon_, env_};
    return mdca::generate(it->second.profile, params, request, options);
}

}  // namespace mdca
