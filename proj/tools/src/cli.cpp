#include "cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <iostream>
#include <memory>
#include <sstream>

#include "mdca/analytics.hpp"
#include "mdca/consistency.hpp"
#include "mdca/corpus.hpp"
#include "mdca/error.hpp"
#include "mdca/hashing.hpp"
#include "mdca/promptkit.hpp"
#include "mdca/runner.hpp"
#include "mdca/segmenter.hpp"
#include "mdca/text.hpp"

namespace mdca::cli {
namespace {

class UsageError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = text::trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::uint64_t parse_seed(const std::string& text) {
    try {
        std::size_t used = 0;
        const auto v = std::stoull(text, &used, 0);
        if (used == text.size()) return v;
    } catch (const std::exception&) {
    }
    throw UsageError("seed must be a non-negative integer, got '" + text + "'");
}

Weights parse_weights(const std::string& text) {
    const auto parts = split_list(text);
    if (parts.size() != 3) throw UsageError("weights must be 'sc,dc,cpa', got '" + text + "'");
    double w[3];
    for (int i = 0; i < 3; ++i) {
        try {
            w[i] = std::stod(parts[static_cast<std::size_t>(i)]);
        } catch (const std::exception&) {
            throw UsageError("bad weight '" + parts[static_cast<std::size_t>(i)] + "'");
        }
    }
    return Weights::make(w[0], w[1], w[2]);
}

Json parse_embedding(const std::string& text) {
    if (text == "fallback" || text == "bigram-hash-4096") return text;
    return load_structured_file(text);
}

// Usage and configuration problems exit 2, everything else 1.
int exit_code_for(ErrorCode code) {
    switch (code) {
        case ErrorCode::kInvalidArgument:
        case ErrorCode::kParse:
        case ErrorCode::kIo:
        case ErrorCode::kUnknownConfig:
        case ErrorCode::kUnknownTier:
        case ErrorCode::kWeightSumInvalid:
        case ErrorCode::kAmbiguousSynonym:
        case ErrorCode::kLexiconMismatch:
        case ErrorCode::kAuthMissing:
        case ErrorCode::kMissingComponent:
        case ErrorCode::kInsufficientExamples:
        case ErrorCode::kUnknownRun:
        case ErrorCode::kRunExists:
        case ErrorCode::kUnknownSession:
        case ErrorCode::kChecksumMismatch: return 2;
        default: return 1;
    }
}

struct Context {
    std::ostream& out;
    std::ostream& err;
    const EnvLookup& env;
    GlobalConfig config;
    bool json = false;

    std::optional<Lexicon> own_lexicon;
    const Lexicon& lexicon() {
        if (config.lexicon_path.empty()) return default_lexicon();
        if (!own_lexicon) own_lexicon.emplace(load_lexicon(config.lexicon_path));
        return *own_lexicon;
    }
    ComponentRegistry registry() const {
        return config.registry_path.empty() ? ComponentRegistry::builtin() : ComponentRegistry::load(config.registry_path);
    }
    void emit(const Json& doc) { out << doc.dump(2) << '\n'; }
};

Json item_json(const DiagnosisItem& item) {
    return {{"index", item.index},
            {"raw", item.raw},
            {"concepts", item.concepts},
            {"locations", item.locations},
            {"tier", item.tier ? Json(to_string(*item.tier)) : Json(nullptr)}};
}

Json issues_json(const std::vector<RecordIssue>& issues) {
    Json arr = Json::array();
    for (const auto& i : issues) arr.push_back({{"line", i.line}, {"code", to_string(i.code)}, {"reason", i.reason}});
    return arr;
}

Json violations_json(const std::vector<ExclusionViolation>& v) {
    Json arr = Json::array();
    for (const auto& x : v) arr.push_back({{"record_id", x.record_id}, {"flags", x.flags}});
    return arr;
}

CorpusFormat format_or_guess(const std::string& format, const std::string& path) {
    if (!format.empty()) return parse_corpus_format(format);
    return std::filesystem::path(path).extension() == ".csv" ? CorpusFormat::kCsv : CorpusFormat::kJsonl;
}

// ---- ingest / validate ---------------------------------------------------

struct CorpusOpts {
    std::string in;
    std::string format;
    std::string out;
    bool exclusions = false;
};

int load_and_check(Context& ctx, const CorpusOpts& o, bool write) {
    LoadOptions options;
    options.lexicon = &ctx.lexicon();
    Corpus corpus;
    try {
        corpus = load_corpus(o.in, format_or_guess(o.format, o.in), options);
    } catch (const CorpusLoadError& e) {
        for (const auto& i : e.issues()) {
            ctx.err << o.in << ":" << i.line << ": " << to_string(i.code) << ": " << i.reason << '\n';
        }
        if (ctx.json) ctx.emit({{"ok", false}, {"issues", issues_json(e.issues())}});
        return 1;
    }
    std::vector<ExclusionViolation> violations;
    if (o.exclusions) violations = check_exclusions(corpus);
    for (const auto& v : violations) {
        ctx.err << "excluded record " << v.record_id << ":";
        for (const auto& f : v.flags) ctx.err << ' ' << f;
        ctx.err << '\n';
    }
    const bool ok = violations.empty();
    if (ok && write) write_corpus(corpus, o.out);
    if (ctx.json) {
        Json doc{{"ok", ok}, {"records", corpus.size()}, {"checksum", corpus.checksum},
                 {"issues", Json::array()}, {"exclusion_violations", violations_json(violations)}};
        if (write) doc["out"] = ok ? Json(o.out) : Json(nullptr);
        ctx.emit(doc);
    } else if (ok) {
        ctx.out << (write ? "wrote " : "valid: ") << corpus.size() << " records" << (write ? " to " + o.out : "")
                << " (sha256 " << corpus.checksum << ")\n";
    }
    return ok ? 0 : 1;
}

// ---- synth ----------------------------------------------------------------

struct SynthOpts {
    std::size_t n = 200;
    std::string out;
    std::string prefix = "syn";
};

int cmd_synth(Context& ctx, const SynthOpts& o) {
    const auto corpus = make_corpus(synthesize_reports(o.n, ctx.config.seed, o.prefix), o.out);
    write_corpus(corpus, o.out);
    if (ctx.json) {
        ctx.emit({{"records", corpus.size()}, {"checksum", corpus.checksum}, {"out", o.out}, {"seed", ctx.config.seed}});
    } else {
        ctx.out << "wrote " << corpus.size() << " synthetic records to " << o.out << " (sha256 " << corpus.checksum
                << ")\n";
    }
    return 0;
}

// ---- compose --------------------------------------------------------------

struct ComposeOpts {
    std::string config;
    std::string examples;
    std::string language = "zh";
    std::string out;
};

int cmd_compose(Context& ctx, const ComposeOpts& o) {
    const Language lang = parse_language(o.language);
    const auto pool = o.examples.empty() ? builtin_example_pool(lang) : load_example_pool(o.examples);
    const auto prompt = compose(find_config(o.config), ctx.registry(), pool, lang);
    if (!o.out.empty()) write_text_file(o.out, prompt.system_text);
    if (ctx.json) {
        Json sections = Json::array();
        for (const auto& s : prompt.sections) {
            Json src = std::holds_alternative<ComponentKind>(s.source)
                           ? Json(to_string(std::get<ComponentKind>(s.source)))
                           : Json("example:" + std::to_string(std::get<std::size_t>(s.source) + 1));
            sections.push_back({{"source", src}, {"text", s.text}});
        }
        ctx.emit({{"config_id", prompt.config_id},
                  {"char_length", prompt.char_length},
                  {"sections", sections},
                  {"system_text", prompt.system_text}});
    } else if (o.out.empty()) {
        ctx.out << prompt.system_text << '\n';
    } else {
        ctx.out << "wrote " << prompt.config_id << " (" << prompt.char_length << " characters) to " << o.out << '\n';
    }
    return 0;
}

// ---- run / resume -------------------------------------------------------

struct RunOpts {
    std::string corpus;
    std::string configs;
    std::string provider_ids;
    std::size_t concurrency = 1;
    std::string run_id;
    std::string language = "zh";
    std::string examples;
    bool require_location = false;
    std::optional<double> temperature;
    std::optional<double> top_p;
    std::optional<int> max_tokens;
    bool enable_thinking = false;
};

int report_summary(Context& ctx, const RunSummary& s) {
    for (const auto& f : s.failures) {
        ctx.err << "failed " << f.key.report_id << " " << f.key.prompt_config_id << " " << f.key.provider_id << ": "
                << f.message << '\n';
    }
    if (ctx.json) {
        ctx.emit(to_json(s));
    } else {
        ctx.out << "run " << s.run_id << ": total " << s.total << ", executed " << s.executed << ", cached "
                << s.cached << ", failed " << s.failed << ", pending " << s.pending << '\n';
    }
    return s.failed == 0 && !s.interrupted ? 0 : 1;
}

int cmd_run(Context& ctx, const RunOpts& o) {
    if (ctx.config.providers_path.empty()) throw UsageError("run needs --providers (or MDCA_PROVIDERS)");
    RunSpec spec;
    spec.corpus_path = std::filesystem::absolute(o.corpus).string();
    spec.prompt_config_ids = split_list(o.configs);
    spec.providers = load_profiles(ctx.config.providers_path);
    if (o.provider_ids.empty()) {
        for (const auto& p : spec.providers) spec.provider_ids.push_back(p.id);
    } else {
        spec.provider_ids = split_list(o.provider_ids);
    }
    spec.seed = ctx.config.seed;
    spec.weights = ctx.config.weights;
    spec.policy.require_location_agreement = o.require_location;
    spec.policy.location_agreement = o.require_location ? LocationAgreement::kOverlap : LocationAgreement::kIgnore;
    spec.embedding = ctx.config.embedding;
    spec.concurrency_limit = o.concurrency;
    if (o.temperature) spec.params.temperature = *o.temperature;
    if (o.top_p) spec.params.top_p = *o.top_p;
    if (o.max_tokens) spec.params.max_tokens = *o.max_tokens;
    spec.params.enable_thinking = o.enable_thinking;
    spec.language = parse_language(o.language);
    if (!ctx.config.lexicon_path.empty()) spec.lexicon_path = std::filesystem::absolute(ctx.config.lexicon_path).string();
    if (!ctx.config.registry_path.empty()) {
        spec.registry_path = std::filesystem::absolute(ctx.config.registry_path).string();
    }
    if (!o.examples.empty()) spec.example_pool_path = std::filesystem::absolute(o.examples).string();
    if (o.run_id.empty()) {
        spec.run_id = "pending";
        Json ident = to_json(spec);
        ident.erase("run_id");
        ident.erase("concurrency_limit");
        spec.run_id = "run-" + sha256_hex(ident.dump()).substr(0, 12);
    } else {
        spec.run_id = o.run_id;
    }
    RunStore store(ctx.config.store_path);
    return report_summary(ctx, execute_run(spec, store, {}, ctx.env));
}

struct ResumeOpts {
    std::string run_id;
    std::optional<std::size_t> concurrency;
};

int cmd_resume(Context& ctx, const ResumeOpts& o) {
    RunStore store(ctx.config.store_path);
    RunSpec spec = store.load_spec(o.run_id);
    if (o.concurrency) spec.concurrency_limit = *o.concurrency;
    return report_summary(ctx, execute_run(spec, store, {}, ctx.env));
}

// ---- score / segment ------------------------------------------------------

struct ScoreOpts {
    std::string target;
    std::string synth;
    bool require_location = false;
};

int cmd_score(Context& ctx, const ScoreOpts& o) {
    ItemMatchPolicy policy;
    policy.require_location_agreement = o.require_location;
    policy.location_agreement = o.require_location ? LocationAgreement::kOverlap : LocationAgreement::kIgnore;
    const auto embedder = make_embedding_provider(ctx.config.embedding);
    const auto bundle = score_pair(read_text_file(o.target), read_text_file(o.synth), ctx.lexicon(), policy,
                                   *embedder, ctx.config.weights);
    if (ctx.json) {
        Json doc = to_json(bundle);
        doc["weights"] = to_json(ctx.config.weights);
        ctx.emit(doc);
    } else {
        char buf[200];
        std::snprintf(buf, sizeof buf, "SC %.4f  DC %.4f  Top-1 %.0f  CPA %.4f  MDCA %.4f\n", bundle.sc, bundle.dc,
                      bundle.top1, bundle.cpa, bundle.mdca);
        ctx.out << buf;
    }
    return 0;
}

struct SegmentOpts {
    std::string text;
    std::string file;
};

int cmd_segment(Context& ctx, const SegmentOpts& o) {
    if (o.text.empty() == o.file.empty()) throw UsageError("segment needs exactly one of --text or --file");
    const std::string input = o.file.empty() ? o.text : read_text_file(o.file);
    const auto items = segment_conclusion(input, ctx.lexicon());
    if (ctx.json) {
        Json arr = Json::array();
        for (const auto& i : items) arr.push_back(item_json(i));
        ctx.emit(arr);
        return 0;
    }
    for (const auto& i : items) {
        ctx.out << i.index << ". " << i.raw << "\n   tier " << (i.tier ? std::string(to_string(*i.tier)) : "-")
                << ", concepts";
        for (const auto& c : i.concepts) ctx.out << ' ' << c;
        if (!i.locations.empty()) {
            ctx.out << ", locations";
            for (const auto& l : i.locations) ctx.out << ' ' << l;
        }
        ctx.out << '\n';
    }
    return 0;
}

// ---- aggregate ------------------------------------------------------------

struct AggregateOpts {
    std::string run_id;
    std::string format = "markdown";
    std::string out;
};

Json table_json(const MetricTable& t) {
    Json rows = Json::array();
    for (const auto& r : t.rows) {
        Json row{{"provider_id", r.provider_id}, {"prompt_config_id", r.prompt_config_id}, {"composite", r.composite}};
        for (Metric m : kMetrics) {
            row[std::string(metric_key(m))] = {{"mean", r.cell(m).mean}, {"std", r.cell(m).std}, {"n", r.cell(m).n}};
        }
        rows.push_back(std::move(row));
    }
    return {{"rows", rows}, {"std", "population"}};
}

int cmd_aggregate(Context& ctx, const AggregateOpts& o) {
    const RunStore store(ctx.config.store_path);
    const auto table = aggregate(store, o.run_id);
    const auto rendered = export_table(table, parse_table_format(o.format));
    if (!o.out.empty()) write_text_file(o.out, rendered);
    if (ctx.json) {
        ctx.emit(table_json(table));
    } else if (o.out.empty()) {
        ctx.out << rendered;
    } else {
        ctx.out << "wrote " << table.rows.size() << " rows to " << o.out << '\n';
    }
    return 0;
}

// ---- consistency ----------------------------------------------------------

struct CreateOpts {
    std::string run_id;
    std::string configs;
    std::size_t n = 100;
    std::string raters;
    std::string provider;
    std::string session_id;
};

int cmd_consistency_create(Context& ctx, const CreateOpts& o) {
    const RunStore runs(ctx.config.store_path);
    SessionStore sessions(ctx.config.store_path);
    SessionRequest req;
    req.run_id = o.run_id;
    req.prompt_config_ids = split_list(o.configs);
    req.reports_per_prompt = o.n;
    req.seed = ctx.config.seed;
    req.rater_ids = split_list(o.raters);
    req.provider_id = o.provider;
    req.session_id = o.session_id;
    const auto session = create_session(runs, req);
    sessions.save_new(session);
    if (ctx.json) {
        ctx.emit({{"session_id", session.session_id},
                  {"tasks", session.tasks.size()},
                  {"expected_grades", session.expected_grades()},
                  {"state", to_string(session.state)}});
    } else {
        ctx.out << "session " << session.session_id << ": " << session.tasks.size() << " tasks, "
                << session.expected_grades() << " grades expected\n";
    }
    return 0;
}

struct ServeOpts {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string ui_dir;
};

int cmd_consistency_serve(Context& ctx, const ServeOpts& o) {
    const RunStore runs(ctx.config.store_path);
    SessionStore sessions(ctx.config.store_path);
    SessionService service(sessions, &runs);
    std::optional<std::filesystem::path> ui;
    if (!o.ui_dir.empty()) ui = o.ui_dir;
    ConsistencyServer server(service, ui);
    if (ctx.json) {
        ctx.emit({{"host", o.host}, {"port", o.port}});
    } else {
        ctx.err << "serving on http://" << o.host << ":" << o.port << '\n';
    }
    ctx.out.flush();
    server.run(o.host, o.port);
    return 0;
}

struct SummarizeOpts {
    std::string session_id;
    std::string format = "text";
};

int cmd_consistency_summarize(Context& ctx, const SummarizeOpts& o) {
    const RunStore runs(ctx.config.store_path);
    SessionStore sessions(ctx.config.store_path);
    const auto session = sessions.load(o.session_id);
    if (session.state != SessionState::kComplete) {
        SessionService service(sessions, &runs);
        const auto summary = service.summary(o.session_id);
        if (ctx.json) {
            ctx.emit(summary);
        } else {
            ctx.out << "session " << o.session_id << " open: " << session.recorded_grades() << " of "
                    << session.expected_grades() << " grades recorded\n";
        }
        return 1;
    }
    const auto report = mdca_agreement(session, runs);
    if (ctx.json) {
        ctx.emit(to_json(report));
    } else if (o.format == "csv") {
        ctx.out << agreement_table_csv(report);
    } else {
        ctx.out << agreement_table_csv(report);
        ctx.out << "spearman(combined score, mdca) over " << report.n_pairs << " reports: ";
        if (report.spearman_rho) {
            char buf[40];
            std::snprintf(buf, sizeof buf, "%.4f", *report.spearman_rho);
            ctx.out << buf << '\n';
        } else {
            ctx.out << "degenerate\n";
        }
    }
    return 0;
}

const CLI::App* deepest_parsed(const CLI::App* app) {
    for (const auto* sub : app->get_subcommands()) return deepest_parsed(sub);
    return app;
}

}  // namespace

GlobalConfig resolve_config(const GlobalFlags& flags, const EnvLookup& env) {
    GlobalConfig cfg;
    Json file = Json::object();
    std::optional<std::string> config_path = flags.config;
    if (!config_path && env) config_path = env("MDCA_CONFIG");
    if (config_path && !config_path->empty()) {
        file = load_structured_file(*config_path);
        if (!file.is_object()) throw UsageError("config file must hold a mapping: " + *config_path);
    }

    // Returns the winning raw value and records where it came from.
    auto pick = [&](const std::string& key, const std::optional<std::string>& flag,
                    const char* env_name) -> std::optional<Json> {
        if (flag) {
            cfg.source[key] = "flag";
            return Json(*flag);
        }
        if (env) {
            if (auto v = env(env_name); v && !v->empty()) {
                cfg.source[key] = "env";
                return Json(*v);
            }
        }
        if (file.contains(key)) {
            cfg.source[key] = "file";
            return file[key];
        }
        cfg.source[key] = "default";
        return std::nullopt;
    };
    auto as_string = [](const Json& j) { return j.is_string() ? j.get<std::string>() : j.dump(); };

    if (auto v = pick("lexicon", flags.lexicon, "MDCA_LEXICON")) cfg.lexicon_path = as_string(*v);
    if (auto v = pick("registry", flags.registry, "MDCA_REGISTRY")) cfg.registry_path = as_string(*v);
    if (auto v = pick("providers", flags.providers, "MDCA_PROVIDERS")) cfg.providers_path = as_string(*v);
    if (auto v = pick("store", flags.store, "MDCA_STORE")) cfg.store_path = as_string(*v);
    if (auto v = pick("seed", flags.seed, "MDCA_SEED")) {
        cfg.seed = v->is_number_unsigned() ? v->get<std::uint64_t>() : parse_seed(as_string(*v));
    }
    if (auto v = pick("weights", flags.weights, "MDCA_WEIGHTS")) {
        cfg.weights = v->is_object() ? weights_from_json(*v) : parse_weights(as_string(*v));
    }
    if (auto v = pick("embedding", flags.embedding, "MDCA_EMBEDDING")) {
        cfg.embedding = v->is_string() ? parse_embedding(v->get<std::string>()) : *v;
    }
    return cfg;
}

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err, const EnvLookup& env) {
    CLI::App app{"Prompt sweeps and credibility scoring for generated radiology conclusions", "mdca"};
    app.require_subcommand(1);
    app.fallthrough();

    GlobalFlags gflags;
    bool json = false;
    app.add_option("--config", gflags.config, "Config file (JSON/YAML); defaults to $MDCA_CONFIG");
    app.add_option("--lexicon", gflags.lexicon, "Lexicon file; defaults to the built-in lexicon");
    app.add_option("--registry", gflags.registry, "Prompt component registry file");
    app.add_option("--providers", gflags.providers, "Provider profiles file (JSON/YAML list)");
    app.add_option("--store", gflags.store, "Run store directory");
    app.add_option("--seed", gflags.seed, "Seed for sampling, synthesis and mock providers");
    app.add_option("--weights", gflags.weights, "MDCA weights as sc,dc,cpa");
    app.add_option("--embedding", gflags.embedding, "'fallback' or an embedding provider config file");
    app.add_flag("--json", json, "Machine-readable output");

    CorpusOpts ingest_o;
    auto* ingest = app.add_subcommand("ingest", "Validate a corpus and write it as canonical JSONL");
    ingest->add_option("--in", ingest_o.in, "Input corpus")->required();
    ingest->add_option("--format", ingest_o.format, "jsonl or csv (default: from extension)");
    ingest->add_option("--out", ingest_o.out, "Output JSONL path")->required();
    ingest->add_flag("--exclusions", ingest_o.exclusions, "Reject records that set an exclusion flag");

    CorpusOpts validate_o;
    auto* validate = app.add_subcommand("validate", "Check a corpus without writing it");
    validate->add_option("--in", validate_o.in, "Input corpus")->required();
    validate->add_option("--format", validate_o.format, "jsonl or csv (default: from extension)");
    validate->add_flag("--exclusions", validate_o.exclusions, "Also check exclusion flags");

    SynthOpts synth_o;
    auto* synth = app.add_subcommand("synth", "Write a seeded synthetic corpus");
    synth->add_option("--n", synth_o.n, "Number of reports")->check(CLI::PositiveNumber);
    synth->add_option("--out", synth_o.out, "Output JSONL path")->required();
    synth->add_option("--prefix", synth_o.prefix, "Record id prefix");

    ComposeOpts compose_o;
    auto* composecmd = app.add_subcommand("compose", "Render the system prompt of one configuration");
    composecmd->add_option("--config", compose_o.config, "Configuration id, P0..P11")->required();
    composecmd->add_option("--examples", compose_o.examples, "Example pool JSONL");
    composecmd->add_option("--language", compose_o.language, "zh or en");
    composecmd->add_option("--out", compose_o.out, "Write the prompt here instead of stdout");

    RunOpts run_o;
    auto* run = app.add_subcommand("run", "Execute a corpus x config x provider sweep");
    run->add_option("--corpus", run_o.corpus, "Corpus file")->required();
    run->add_option("--configs", run_o.configs, "Comma-separated configuration ids")->required();
    run->add_option("--provider-ids", run_o.provider_ids, "Subset of provider ids (default: all in the file)");
    run->add_option("--concurrency", run_o.concurrency, "Worker count")->check(CLI::PositiveNumber);
    run->add_option("--run-id", run_o.run_id, "Run id (default: derived from the spec)");
    run->add_option("--language", run_o.language, "Prompt language, zh or en");
    run->add_option("--examples", run_o.examples, "Example pool JSONL");
    run->add_flag("--require-location", run_o.require_location, "Items must also agree on location");
    run->add_option("--temperature", run_o.temperature, "Sampling temperature");
    run->add_option("--top-p", run_o.top_p, "Nucleus sampling mass");
    run->add_option("--max-tokens", run_o.max_tokens, "Completion token limit");
    run->add_flag("--enable-thinking", run_o.enable_thinking, "Request thinking mode where supported");

    ResumeOpts resume_o;
    auto* resume = app.add_subcommand("resume", "Complete the missing triples of a stored run");
    resume->add_option("--run", resume_o.run_id, "Run id")->required();
    resume->add_option("--concurrency", resume_o.concurrency, "Worker count")->check(CLI::PositiveNumber);

    ScoreOpts score_o;
    auto* score = app.add_subcommand("score", "Score one generated conclusion against a target");
    score->add_option("--target", score_o.target, "Ground-truth conclusion text file")->required();
    score->add_option("--synth", score_o.synth, "Generated conclusion text file")->required();
    score->add_flag("--require-location", score_o.require_location, "Items must also agree on location");

    SegmentOpts segment_o;
    auto* segment = app.add_subcommand("segment", "Show how a conclusion splits into items");
    segment->add_option("--text", segment_o.text, "Conclusion text");
    segment->add_option("--file", segment_o.file, "Conclusion text file");

    AggregateOpts aggregate_o;
    auto* aggregatecmd = app.add_subcommand("aggregate", "Mean (std) table of a run");
    aggregatecmd->add_option("--run", aggregate_o.run_id, "Run id")->required();
    aggregatecmd->add_option("--format", aggregate_o.format, "markdown or csv");
    aggregatecmd->add_option("--out", aggregate_o.out, "Write the table here instead of stdout");

    auto* consistency = app.add_subcommand("consistency", "Two-rater consistency check");
    consistency->require_subcommand(1);
    consistency->fallthrough();

    CreateOpts create_o;
    auto* create = consistency->add_subcommand("create", "Sample a rating session from a run");
    create->add_option("--run", create_o.run_id, "Run id")->required();
    create->add_option("--configs", create_o.configs, "Comma-separated configuration ids")->required();
    create->add_option("--n", create_o.n, "Reports per configuration");
    create->add_option("--raters", create_o.raters, "Two comma-separated rater ids")->required();
    create->add_option("--provider", create_o.provider, "Provider id (default: the run's first)");
    create->add_option("--session-id", create_o.session_id, "Session id (default: derived)");

    ServeOpts serve_o;
    auto* serve = consistency->add_subcommand("serve", "Serve the rating endpoints and UI");
    serve->add_option("--host", serve_o.host, "Bind address");
    serve->add_option("--port", serve_o.port, "Port");
    serve->add_option("--ui-dir", serve_o.ui_dir, "Static rater UI directory");

    SummarizeOpts summarize_o;
    auto* summarize = consistency->add_subcommand("summarize", "Agreement between grades and MDCA");
    summarize->add_option("--session", summarize_o.session_id, "Session id")->required();
    summarize->add_option("--format", summarize_o.format, "text or csv")->check(CLI::IsMember({"text", "csv"}));

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << deepest_parsed(&app)->help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << "\n\n" << deepest_parsed(&app)->help();
        return 2;
    }

    try {
        Context ctx{out, err, env, resolve_config(gflags, env), json, {}};
        if (*ingest) return load_and_check(ctx, ingest_o, true);
        if (*validate) return load_and_check(ctx, validate_o, false);
        if (*synth) return cmd_synth(ctx, synth_o);
        if (*composecmd) return cmd_compose(ctx, compose_o);
        if (*run) return cmd_run(ctx, run_o);
        if (*resume) return cmd_resume(ctx, resume_o);
        if (*score) return cmd_score(ctx, score_o);
        if (*segment) return cmd_segment(ctx, segment_o);
        if (*aggregatecmd) return cmd_aggregate(ctx, aggregate_o);
        if (*create) return cmd_consistency_create(ctx, create_o);
        if (*serve) return cmd_consistency_serve(ctx, serve_o);
        if (*summarize) return cmd_consistency_summarize(ctx, summarize_o);
    } catch (const UsageError& e) {
        err << "error: " << e.what() << "\n\n" << deepest_parsed(&app)->help();
        return 2;
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    err << app.help();
    return 2;
}

}  // namespace mdca::cli
