/// @file runner.hpp
/// @brief Corpus x prompt-config x provider sweeps with an append-only,
/// resumable result store.
///
/// Store layout:
///   <root>/<run_id>/spec.json          the RunSpec, written once
///   <root>/<run_id>/transcripts.jsonl  one Transcript per new cache key
///   <root>/<run_id>/scores.jsonl       one ScoreRow per scored triple
///   <root>/<run_id>/failures.jsonl     one FailureRow per failed attempt

#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "mdca/gateway.hpp"
#include "mdca/metrics.hpp"
#include "mdca/promptkit.hpp"

namespace mdca {

struct RunSpec {
    std::string run_id;
    std::string corpus_path;
    std::string corpus_checksum;  // filled from the corpus when empty
    std::vector<std::string> prompt_config_ids;
    std::vector<std::string> provider_ids;
    std::vector<ProviderProfile> providers;  // must resolve every provider id
    std::uint64_t seed = 0;                  // seed for mock profiles that declare none
    Weights weights;
    ItemMatchPolicy policy;
    Json embedding = "fallback";  // see make_embedding_provider
    std::size_t concurrency_limit = 1;
    GenerationParams params;
    Language language = Language::kZh;
    std::string lexicon_path;       // empty = built-in lexicon
    std::string registry_path;      // empty = built-in component texts
    std::string example_pool_path;  // empty = built-in example pool

    /// Throws InvalidArgument / UnknownConfig.
    void validate() const;
};

Json to_json(const RunSpec& spec);
RunSpec run_spec_from_json(const Json& doc);

/// Identity of one scored cell of a sweep.
struct TripleKey {
    std::string report_id;
    std::string prompt_config_id;
    std::string provider_id;

    auto operator<=>(const TripleKey&) const = default;
};

struct ScoreRow {
    std::string run_id;
    TripleKey key;
    std::string cache_key;
    MetricBundle metrics;

    bool operator==(const ScoreRow&) const = default;
};

Json to_json(const ScoreRow& row);
ScoreRow score_row_from_json(const Json& doc);

struct FailureRow {
    std::string run_id;
    TripleKey key;
    std::string error_code;
    std::string message;
};

Json to_json(const FailureRow& row);

/// Append-only store. Opening rebuilds the index from disk: a torn final
/// line (from a crash mid-append) is truncated away; any other unreadable
/// line raises StoreCorrupt. All writes go through one serialized appender;
/// reads may run concurrently with it.
class RunStore {
public:
    explicit RunStore(std::filesystem::path root);

    const std::filesystem::path& root() const { return root_; }
    std::filesystem::path run_dir(const std::string& run_id) const { return root_ / run_id; }

    bool has_run(const std::string& run_id) const;
    std::vector<std::string> run_ids() const;

    /// Throws UnknownRun.
    RunSpec load_spec(const std::string& run_id) const;

    /// Writes spec.json for a new run. If the run exists with an identical
    /// spec nothing happens; a different spec raises RunExists.
    void create_run(const RunSpec& spec);

    /// Output text of any transcript in the store with this cache key.
    std::optional<std::string> cached_output(const std::string& cache_key) const;

    /// Appends the transcript unless its cache key is already stored.
    /// Returns false when it was already present.
    bool append_transcript(const std::string& run_id, const Transcript& transcript);
    void append_score(const ScoreRow& row);
    void append_failure(const FailureRow& row);

    /// Score rows in file order. Throws UnknownRun.
    std::vector<ScoreRow> scores(const std::string& run_id) const;
    std::vector<Transcript> transcripts(const std::string& run_id) const;
    std::vector<FailureRow> failures(const std::string& run_id) const;

    std::size_t transcript_count() const;

private:
    void index_run(const std::string& run_id);

    std::filesystem::path root_;
    mutable std::mutex mutex_;
    std::map<std::string, std::string> outputs_;            // cache_key -> output_text
    std::map<std::string, std::set<TripleKey>> scored_;      // run_id -> scored triples
};

/// Test hook to simulate interruption: stop scheduling new work once this
/// many triples have finished in the current invocation.
struct RunControl {
    std::optional<std::size_t> stop_after;
};

struct RunSummary {
    std::string run_id;
    std::size_t total = 0;     // |corpus| x |configs| x |providers|
    std::size_t executed = 0;  // scored from a fresh provider call
    std::size_t cached = 0;    // already scored, or scored from a stored transcript
    std::size_t failed = 0;
    std::size_t pending = 0;   // not attempted because the run was interrupted
    bool interrupted = false;
    std::vector<FailureRow> failures;
};

Json to_json(const RunSummary& summary);

/// Runs every (report, config, provider) triple that has no score row yet:
/// compose, generate (skipped on a cache hit), segment, score, persist.
/// Triple failures are recorded and counted, never thrown. Throws
/// ChecksumMismatch when the corpus file changed since the spec was made,
/// RunExists for a conflicting spec under the same id, StoreCorrupt.
RunSummary execute_run(RunSpec spec, RunStore& store, const RunControl& control = {},
                       EnvLookup env = process_env);

/// Re-executes the stored spec, completing only missing triples.
/// Throws UnknownRun.
RunSummary resume_run(const std::string& run_id, RunStore& store, const RunControl& control = {},
                      EnvLookup env = process_env);

/// Rows sorted by (report, config, provider), for order-independent comparison.
std::vector<ScoreRow> sorted_scores(std::vector<ScoreRow> rows);

}  // namespace mdca
