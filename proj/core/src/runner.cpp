#include "mdca/runner.hpp"

#include <algorithm>
#include <fstream>
#include <memory>
#include <thread>

#include "mdca/corpus.hpp"
#include "mdca/error.hpp"

namespace mdca {
namespace {

namespace fs = std::filesystem;

constexpr const char* kSpecFile = "spec.json";
constexpr const char* kTranscriptsFile = "transcripts.jsonl";
constexpr const char* kScoresFile = "scores.jsonl";
constexpr const char* kFailuresFile = "failures.jsonl";

// Names under the store root that are not runs.
bool reserved_name(const std::string& name) { return name == "sessions" || name.empty() || name[0] == '.'; }

/// Parses every complete line; any unparsable one is corruption. A torn
/// trailing line is skipped, and with repair set it is also cut from the file.
void read_log(const fs::path& path, const std::function<void(const Json&)>& fn, bool repair = false) {
    if (!fs::exists(path)) return;
    const std::string bytes = read_text_file(path);
    if (repair && !bytes.empty() && bytes.back() != '\n') {
        const auto last_nl = bytes.rfind('\n');
        fs::resize_file(path, last_nl == std::string::npos ? 0 : last_nl + 1);
    }
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start < bytes.size()) {
        const auto end = bytes.find('\n', start);
        if (end == std::string::npos) break;
        ++line_no;
        const std::string_view line(bytes.data() + start, end - start);
        start = end + 1;
        if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
        Json doc;
        try {
            doc = Json::parse(line);
            fn(doc);
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::kStoreCorrupt, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void append_line(const fs::path& path, const Json& doc) {
    std::ofstream out(path, std::ios::binary | std::ios::app);
    if (!out) throw Error(ErrorCode::kIo, "cannot append to " + path.string());
    const std::string line = dump_line(doc) + "\n";
    out.write(line.data(), static_cast<std::streamsize>(line.size()));
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "write failed on " + path.string());
}

Json key_json(const TripleKey& k) {
    return {{"report_id", k.report_id}, {"prompt_config_id", k.prompt_config_id}, {"provider_id", k.provider_id}};
}

TripleKey key_from_json(const Json& doc) {
    return {doc.at("report_id").get<std::string>(), doc.at("prompt_config_id").get<std::string>(),
            doc.at("provider_id").get<std::string>()};
}

CorpusFormat format_for(const fs::path& path) {
    return path.extension() == ".csv" ? CorpusFormat::kCsv : CorpusFormat::kJsonl;
}

struct Triple {
    const ReportRecord* report;
    const std::string* config_id;
    const ProviderProfile* profile;
    std::string cache_key;

    TripleKey key() const { return {report->id, *config_id, profile->id}; }
};

}  // namespace

void RunSpec::validate() const {
    if (run_id.empty() || reserved_name(run_id) || run_id.find_first_of("/\\") != std::string::npos) {
        throw Error(ErrorCode::kInvalidArgument, "invalid run id '" + run_id + "'");
    }
    if (corpus_path.empty()) throw Error(ErrorCode::kInvalidArgument, "run spec needs a corpus path");
    if (prompt_config_ids.empty()) throw Error(ErrorCode::kInvalidArgument, "run spec needs prompt configs");
    if (provider_ids.empty()) throw Error(ErrorCode::kInvalidArgument, "run spec needs providers");
    if (concurrency_limit == 0) throw Error(ErrorCode::kInvalidArgument, "concurrency_limit must be positive");
    for (const auto& id : prompt_config_ids) find_config(id);
    for (const auto& id : provider_ids) {
        // ids become table cells and path-like keys
        if (id.empty() || id.find_first_of(",|\"\n\r") != std::string::npos) {
            throw Error(ErrorCode::kInvalidArgument, "invalid provider id '" + id + "'");
        }
        const bool found = std::any_of(providers.begin(), providers.end(), [&](const auto& p) { return p.id == id; });
        if (!found) throw Error(ErrorCode::kInvalidArgument, "provider '" + id + "' has no profile");
    }
    params.validate();
}

Json to_json(const RunSpec& s) {
    Json providers = Json::array();
    for (const auto& p : s.providers) providers.push_back(to_json(p));
    return {{"run_id", s.run_id},
            {"corpus_path", s.corpus_path},
            {"corpus_checksum", s.corpus_checksum},
            {"prompt_config_ids", s.prompt_config_ids},
            {"provider_ids", s.provider_ids},
            {"providers", providers},
            {"seed", s.seed},
            {"weights", to_json(s.weights)},
            {"policy", to_json(s.policy)},
            {"embedding", s.embedding},
            {"concurrency_limit", s.concurrency_limit},
            {"params", to_json(s.params)},
            {"language", to_string(s.language)},
            {"lexicon_path", s.lexicon_path},
            {"registry_path", s.registry_path},
            {"example_pool_path", s.example_pool_path}};
}

RunSpec run_spec_from_json(const Json& doc) {
    RunSpec s;
    try {
        s.run_id = doc.at("run_id").get<std::string>();
        s.corpus_path = doc.at("corpus_path").get<std::string>();
        s.corpus_checksum = doc.value("corpus_checksum", "");
        s.prompt_config_ids = doc.at("prompt_config_ids").get<std::vector<std::string>>();
        s.provider_ids = doc.at("provider_ids").get<std::vector<std::string>>();
        s.providers = profiles_from_json(doc.at("providers"));
        s.seed = doc.value("seed", std::uint64_t{0});
        if (doc.contains("weights")) s.weights = weights_from_json(doc["weights"]);
        if (doc.contains("policy")) s.policy = policy_from_json(doc["policy"]);
        s.embedding = doc.value("embedding", Json("fallback"));
        s.concurrency_limit = doc.value("concurrency_limit", std::size_t{1});
        s.params = params_from_json(doc.value("params", Json()));
        s.language = parse_language(doc.value("language", "zh"));
        s.lexicon_path = doc.value("lexicon_path", "");
        s.registry_path = doc.value("registry_path", "");
        s.example_pool_path = doc.value("example_pool_path", "");
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::kParse, std::string("run spec: ") + e.what());
    }
    return s;
}

Json to_json(const ScoreRow& r) {
    Json doc = key_json(r.key);
    doc["run_id"] = r.run_id;
    doc["cache_key"] = r.cache_key;
    doc["metrics"] = to_json(r.metrics);
    return doc;
}

ScoreRow score_row_from_json(const Json& doc) {
    return {doc.at("run_id").get<std::string>(), key_from_json(doc), doc.at("cache_key").get<std::string>(),
            bundle_from_json(doc.at("metrics"))};
}

Json to_json(const FailureRow& r) {
    Json doc = key_json(r.key);
    doc["run_id"] = r.run_id;
    doc["error_code"] = r.error_code;
    doc["message"] = r.message;
    return doc;
}

RunStore::RunStore(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_);
    for (const auto& entry : fs::directory_iterator(root_)) {
        const std::string name = entry.path().filename().string();
        if (!entry.is_directory() || reserved_name(name)) continue;
        if (!fs::exists(entry.path() / kSpecFile)) continue;
        index_run(name);
    }
}

void RunStore::index_run(const std::string& run_id) {
    const auto dir = run_dir(run_id);
    read_log(dir / kTranscriptsFile, [&](const Json& doc) {
        outputs_.emplace(doc.at("cache_key").get<std::string>(), doc.at("output_text").get<std::string>());
    }, true);
    auto& scored = scored_[run_id];
    read_log(dir / kScoresFile, [&](const Json& doc) { scored.insert(key_from_json(doc)); }, true);
    read_log(dir / kFailuresFile, [](const Json&) {}, true);
}

bool RunStore::has_run(const std::string& run_id) const {
    std::lock_guard lock(mutex_);
    return scored_.count(run_id) != 0;
}

std::vector<std::string> RunStore::run_ids() const {
    std::lock_guard lock(mutex_);
    std::vector<std::string> ids;
    for (const auto& [id, _] : scored_) ids.push_back(id);
    return ids;
}

RunSpec RunStore::load_spec(const std::string& run_id) const {
    if (!has_run(run_id)) throw Error(ErrorCode::kUnknownRun, run_id);
    try {
        return run_spec_from_json(Json::parse(read_text_file(run_dir(run_id) / kSpecFile)));
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::kStoreCorrupt, run_id + "/spec.json: " + e.what());
    }
}

void RunStore::create_run(const RunSpec& spec) {
    if (has_run(spec.run_id)) {
        // concurrency does not affect results, so a resume may change it
        Json stored = to_json(load_spec(spec.run_id));
        Json requested = to_json(spec);
        stored.erase("concurrency_limit");
        requested.erase("concurrency_limit");
        if (stored != requested) {
            throw Error(ErrorCode::kRunExists, spec.run_id + " exists with a different spec");
        }
        return;
    }
    std::lock_guard lock(mutex_);
    write_text_file(run_dir(spec.run_id) / kSpecFile, to_json(spec).dump(2) + "\n");
    scored_[spec.run_id];
}

std::optional<std::string> RunStore::cached_output(const std::string& cache_key) const {
    std::lock_guard lock(mutex_);
    auto it = outputs_.find(cache_key);
    if (it == outputs_.end()) return std::nullopt;
    return it->second;
}

bool RunStore::append_transcript(const std::string& run_id, const Transcript& t) {
    std::lock_guard lock(mutex_);
    if (outputs_.count(t.cache_key) != 0) return false;
    append_line(run_dir(run_id) / kTranscriptsFile, to_json(t));
    outputs_.emplace(t.cache_key, t.output_text);
    return true;
}

void RunStore::append_score(const ScoreRow& row) {
    std::lock_guard lock(mutex_);
    if (!scored_[row.run_id].insert(row.key).second) return;
    append_line(run_dir(row.run_id) / kScoresFile, to_json(row));
}

void RunStore::append_failure(const FailureRow& row) {
    std::lock_guard lock(mutex_);
    append_line(run_dir(row.run_id) / kFailuresFile, to_json(row));
}

std::vector<ScoreRow> RunStore::scores(const std::string& run_id) const {
    if (!has_run(run_id)) throw Error(ErrorCode::kUnknownRun, run_id);
    std::vector<ScoreRow> rows;
    read_log(run_dir(run_id) / kScoresFile, [&](const Json& doc) { rows.push_back(score_row_from_json(doc)); });
    return rows;
}

std::vector<Transcript> RunStore::transcripts(const std::string& run_id) const {
    if (!has_run(run_id)) throw Error(ErrorCode::kUnknownRun, run_id);
    std::vector<Transcript> out;
    read_log(run_dir(run_id) / kTranscriptsFile, [&](const Json& doc) { out.push_back(transcript_from_json(doc)); });
    return out;
}

std::vector<FailureRow> RunStore::failures(const std::string& run_id) const {
    if (!has_run(run_id)) throw Error(ErrorCode::kUnknownRun, run_id);
    std::vector<FailureRow> out;
    read_log(run_dir(run_id) / kFailuresFile, [&](const Json& doc) {
        out.push_back({doc.at("run_id").get<std::string>(), key_from_json(doc),
                       doc.at("error_code").get<std::string>(), doc.at("message").get<std::string>()});
    });
    return out;
}

std::size_t RunStore::transcript_count() const {
    std::lock_guard lock(mutex_);
    return outputs_.size();
}

Json to_json(const RunSummary& s) {
    Json failures = Json::array();
    for (const auto& f : s.failures) failures.push_back(to_json(f));
    return {{"run_id", s.run_id},   {"total", s.total},     {"executed", s.executed},
            {"cached", s.cached},   {"failed", s.failed},   {"pending", s.pending},
            {"interrupted", s.interrupted}, {"failures", failures}};
}

RunSummary execute_run(RunSpec spec, RunStore& store, const RunControl& control, EnvLookup env) {
    for (auto& p : spec.providers) {
        if (p.kind == ProviderKind::kMock && !p.seed) p.seed = spec.seed;
    }
    spec.validate();

    std::optional<Lexicon> own_lexicon;
    if (!spec.lexicon_path.empty()) own_lexicon.emplace(load_lexicon(spec.lexicon_path));
    const Lexicon& lexicon = own_lexicon ? *own_lexicon : default_lexicon();

    LoadOptions load_options;
    load_options.lexicon = &lexicon;
    const Corpus corpus = load_corpus(spec.corpus_path, format_for(spec.corpus_path), load_options);
    if (spec.corpus_checksum.empty()) {
        spec.corpus_checksum = corpus.checksum;
    } else if (spec.corpus_checksum != corpus.checksum) {
        throw Error(ErrorCode::kChecksumMismatch, spec.corpus_path + " no longer matches the run's corpus");
    }
    store.create_run(spec);

    const auto registry =
        spec.registry_path.empty() ? ComponentRegistry::builtin() : ComponentRegistry::load(spec.registry_path);
    const auto pool = spec.example_pool_path.empty() ? builtin_example_pool(spec.language)
                                                     : load_example_pool(spec.example_pool_path);
    std::map<std::string, std::string> system_texts;
    for (const auto& id : spec.prompt_config_ids) {
        system_texts[id] = compose(find_config(id), registry, pool, spec.language).system_text;
    }

    std::vector<ProviderProfile> selected;
    for (const auto& id : spec.provider_ids) {
        selected.push_back(*std::find_if(spec.providers.begin(), spec.providers.end(),
                                         [&](const auto& p) { return p.id == id; }));
    }
    const Gateway gateway(selected, &lexicon, std::move(env));
    const auto embedder = make_embedding_provider(spec.embedding);

    RunSummary summary;
    summary.run_id = spec.run_id;
    summary.total = corpus.size() * spec.prompt_config_ids.size() * spec.provider_ids.size();

    std::set<TripleKey> done;
    for (const auto& row : store.scores(spec.run_id)) done.insert(row.key);

    // Triples that share a cache key share one provider call.
    std::vector<std::vector<Triple>> groups;
    std::map<std::string, std::size_t> group_of;
    for (const auto& report : corpus.records) {
        for (const auto& config_id : spec.prompt_config_ids) {
            for (const auto& provider_id : spec.provider_ids) {
                const auto& profile = gateway.profile(provider_id);
                Triple t{&report, &config_id, &profile,
                         cache_key(profile, spec.params, system_texts[config_id], report.findings)};
                if (done.count(t.key()) != 0) {
                    ++summary.cached;
                    continue;
                }
                auto [it, fresh] = group_of.emplace(t.cache_key, groups.size());
                if (fresh) groups.emplace_back();
                groups[it->second].push_back(std::move(t));
            }
        }
    }

    std::mutex summary_mutex;
    auto record_failure = [&](const Triple& t, const std::string& code, const std::string& message) {
        FailureRow row{spec.run_id, t.key(), code, message};
        store.append_failure(row);
        std::lock_guard lock(summary_mutex);
        ++summary.failed;
        summary.failures.push_back(std::move(row));
    };

    auto process = [&](const std::vector<Triple>& group) {
        const Triple& head = group.front();
        auto output = store.cached_output(head.cache_key);
        bool fresh = false;
        if (!output) {
            try {
                ChatRequest request{head.report->id, *head.config_id, system_texts[*head.config_id],
                                    head.report->findings, head.report->ground_truth_conclusion};
                const auto transcript = gateway.generate(head.profile->id, spec.params, request);
                store.append_transcript(spec.run_id, transcript);
                output = transcript.output_text;
                fresh = true;
            } catch (const Error& e) {
                for (const auto& t : group) record_failure(t, std::string(to_string(e.code())), e.what());
                return;
            } catch (const std::exception& e) {
                for (const auto& t : group) record_failure(t, "Internal", e.what());
                return;
            }
        }
        for (std::size_t i = 0; i < group.size(); ++i) {
            const Triple& t = group[i];
            try {
                ScoreRow row{spec.run_id, t.key(), t.cache_key,
                             score_pair(t.report->ground_truth_conclusion, *output, lexicon, spec.policy,
                                        *embedder, spec.weights)};
                store.append_score(row);
                std::lock_guard lock(summary_mutex);
                ++(fresh && i == 0 ? summary.executed : summary.cached);
            } catch (const Error& e) {
                record_failure(t, std::string(to_string(e.code())), e.what());
            } catch (const std::exception& e) {
                record_failure(t, "Internal", e.what());
            }
        }
    };

    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> finished{0};
    std::atomic<bool> stop{false};
    auto worker = [&] {
        while (!stop.load()) {
            const std::size_t i = next.fetch_add(1);
            if (i >= groups.size()) break;
            process(groups[i]);
            const std::size_t n = finished.fetch_add(groups[i].size()) + groups[i].size();
            if (control.stop_after && n >= *control.stop_after) stop.store(true);
        }
    };
    const std::size_t n_workers = std::min(spec.concurrency_limit, std::max<std::size_t>(groups.size(), 1));
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> threads;
        for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
        for (auto& th : threads) th.join();
    }

    summary.pending = summary.total - summary.executed - summary.cached - summary.failed;
    summary.interrupted = summary.pending > 0;
    return summary;
}

RunSummary resume_run(const std::string& run_id, RunStore& store, const RunControl& control, EnvLookup env) {
    return execute_run(store.load_spec(run_id), store, control, std::move(env));
}

std::vector<ScoreRow> sorted_scores(std::vector<ScoreRow> rows) {
    std::sort(rows.begin(), rows.end(), [](const ScoreRow& a, const ScoreRow& b) { return a.key < b.key; });
    return rows;
}

}  // namespace mdca
