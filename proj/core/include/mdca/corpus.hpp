/// @file corpus.hpp
/// @brief Report corpus loading, validation, sampling and serialization.
///
/// Canonical on-disk form is UTF-8 JSONL, one record per line:
///   {"id": str, "findings": str, "conclusion": str, "meta": {str: str}}
/// CSV with the same column names is also accepted; a "meta" column holds a
/// JSON object and any other unknown column becomes a meta entry.

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mdca/error.hpp"
#include "mdca/structured_io.hpp"
#include "mdca/taxonomy.hpp"

namespace mdca {

struct ReportRecord {
    std::string id;
    std::string findings;
    std::string ground_truth_conclusion;
    std::map<std::string, std::string> meta;

    bool operator==(const ReportRecord&) const = default;
};

struct Corpus {
    std::vector<ReportRecord> records;
    std::string source;
    std::string checksum;

    const ReportRecord* find(std::string_view id) const;
    std::size_t size() const { return records.size(); }
};

enum class CorpusFormat { kJsonl, kCsv };

/// "jsonl" or "csv"; throws InvalidArgument otherwise.
CorpusFormat parse_corpus_format(std::string_view name);

/// Meta keys that mark a record as not de-identified.
const std::vector<std::string>& default_deny_list();

struct LoadOptions {
    const Lexicon* lexicon = nullptr;  // nullptr selects default_lexicon()
    std::vector<std::string> deny_list = default_deny_list();
};

struct RecordIssue {
    std::size_t line = 0;
    ErrorCode code = ErrorCode::kMalformedRecord;
    std::string reason;
};

/// Raised by load_corpus. code() is the code of the first issue; issues()
/// lists every rejected record with its line number.
class CorpusLoadError : public Error {
public:
    CorpusLoadError(ErrorCode code, const std::string& message, std::vector<RecordIssue> issues)
        : Error(code, message), issues_(std::move(issues)) {}

    const std::vector<RecordIssue>& issues() const { return issues_; }

private:
    std::vector<RecordIssue> issues_;
};

/// All-or-nothing load: any invalid record rejects the whole file.
Corpus load_corpus(const std::filesystem::path& path, CorpusFormat format,
                   const LoadOptions& options = {});

/// Builds a corpus from in-memory records, computing the checksum.
Corpus make_corpus(std::vector<ReportRecord> records, std::string source);

Json to_json(const ReportRecord& record);
std::string to_jsonl(const std::vector<ReportRecord>& records);

/// SHA-256 over the canonical JSONL bytes.
std::string corpus_checksum(const std::vector<ReportRecord>& records);

void write_corpus(const Corpus& corpus, const std::filesystem::path& path);

/// Seeded Fisher-Yates over [0, size), first n taken, re-sorted ascending.
/// Throws SampleTooLarge when n > size.
std::vector<std::size_t> sample_indices(std::size_t size, std::size_t n, std::uint64_t seed);

/// Deterministic sample that keeps source order.
Corpus sample_corpus(const Corpus& corpus, std::size_t n, std::uint64_t seed);

/// Cohort exclusion criteria, modeled as optional boolean meta flags.
struct ExclusionFlag {
    std::string key;
    std::string description;
};
const std::vector<ExclusionFlag>& exclusion_flags();

struct ExclusionViolation {
    std::string record_id;
    std::vector<std::string> flags;
};

/// Records whose meta sets any exclusion flag to a truthy value
/// ("true", "1", "yes").
std::vector<ExclusionViolation> check_exclusions(const Corpus& corpus);

/// Seeded synthetic liver MRI reports (Chinese findings + numbered
/// conclusions drawn from the default lexicon, ordered by tier).
std::vector<ReportRecord> synthesize_reports(std::size_t n, std::uint64_t seed,
                                             std::string_view id_prefix = "syn");

}  // namespace mdca
