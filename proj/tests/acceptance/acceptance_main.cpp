// One PASS/FAIL line per acceptance criterion. Exits 1 if any line fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <regex>
#include <string>
#include <vector>

#include "mdca/analytics.hpp"
#include "mdca/consistency.hpp"
#include "mdca/corpus.hpp"
#include "mdca/error.hpp"
#include "mdca/gateway.hpp"
#include "mdca/metrics.hpp"
#include "mdca/promptkit.hpp"
#include "mdca/runner.hpp"
#include "stub_server.hpp"
#include "test_support.hpp"

using namespace mdca;
using mdca::testing::ConceptSet;
using mdca::testing::TempDir;
namespace oracle = mdca::testing::oracle;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

// ---- prioritization over enumerated lists --------------------------------

using Codes = std::vector<int>;

// Reference computed on concept codes alone.
struct CpaRef {
    double x1, x2, cpa;
};

CpaRef cpa_ref(const Codes& t, const Codes& s) {
    CpaRef r{};
    r.x1 = (!s.empty() && t[0] == s[0]) ? 1.0 : 0.0;
    if (t.size() == 1) {
        r.x2 = r.x1;
    } else {
        int hits = 0;
        for (int o = 2; o <= static_cast<int>(t.size()); ++o) {
            bool hit = false;
            for (int p = o - 1; p <= o + 1; ++p) {
                if (p >= 1 && p <= static_cast<int>(s.size()) && s[p - 1] == t[o - 1]) hit = true;
            }
            hits += hit;
        }
        r.x2 = hits / static_cast<double>(t.size() - 1);
    }
    r.cpa = 0.5 * r.x1 + 0.5 * r.x2;
    return r;
}

std::vector<DiagnosisItem> items_for(const Codes& codes) {
    std::vector<DiagnosisItem> out;
    for (std::size_t i = 0; i < codes.size(); ++i) {
        out.push_back(mdca::testing::item_of(i + 1, {std::string("~c") + static_cast<char>('0' + codes[i])}));
    }
    return out;
}

// All lists of length 1..max_len over `alphabet` codes, with or without repeats.
std::vector<Codes> enumerate_lists(int alphabet, int max_len, bool repeats) {
    std::vector<Codes> out;
    Codes cur;
    std::function<void()> go = [&] {
        if (!cur.empty()) out.push_back(cur);
        if (static_cast<int>(cur.size()) == max_len) return;
        for (int c = 0; c < alphabet; ++c) {
            if (!repeats && std::find(cur.begin(), cur.end(), c) != cur.end()) continue;
            cur.push_back(c);
            go();
            cur.pop_back();
        }
    };
    go();
    return out;
}

struct SweepResult {
    std::size_t pairs = 0;
    std::size_t mismatches = 0;
    double library_seconds = 0.0;
};

// Targets are the nonempty lists; synths additionally include the empty list.
SweepResult cpa_sweep(const std::vector<Codes>& lists) {
    std::vector<std::vector<DiagnosisItem>> items;
    for (const auto& l : lists) items.push_back(items_for(l));
    std::vector<Codes> synth_codes = lists;
    synth_codes.emplace_back();
    items.emplace_back();

    const ItemMatchPolicy policy;
    SweepResult r;
    std::vector<CpaResult> got(synth_codes.size());
    // blocks of synth lists keep the working set in cache
    constexpr std::size_t kBlock = 512;
    for (std::size_t b = 0; b < synth_codes.size(); b += kBlock) {
        const std::size_t e = std::min(synth_codes.size(), b + kBlock);
        for (std::size_t t = 0; t < lists.size(); ++t) {
            const auto t0 = Clock::now();
            for (std::size_t s = b; s < e; ++s) got[s] = clinical_prioritization(items[t], items[s], policy);
            r.library_seconds += seconds_since(t0);
            for (std::size_t s = b; s < e; ++s) {
                const auto want = cpa_ref(lists[t], synth_codes[s]);
                if (got[s].x1 != want.x1 || got[s].x2 != want.x2 || got[s].cpa != want.cpa) ++r.mismatches;
                ++r.pairs;
            }
        }
    }
    return r;
}

Outcome check_cpa() {
    const auto t0 = Clock::now();
    const auto distinct = cpa_sweep(enumerate_lists(6, 5, false));
    const double distinct_s = seconds_since(t0);
    const auto t1 = Clock::now();
    const auto full = cpa_sweep(enumerate_lists(6, 5, true));
    const double full_s = seconds_since(t1);
    const bool pass = distinct.mismatches == 0 && full.mismatches == 0 && distinct_s < 10.0;
    return {pass, fmt("distinct-concept lists: %zu pairs, %zu mismatches, %.2fs (< 10s); "
                      "lists with repeats: %zu pairs, %zu mismatches, %.2fs untimed (library share %.2fs)",
                      distinct.pairs, distinct.mismatches, distinct_s, full.pairs, full.mismatches, full_s,
                      full.library_seconds)};
}

// ---- correctness ----------------------------------------------------------

Outcome check_dc() {
    std::mt19937_64 rng(20240601);
    std::size_t mismatches = 0;
    const ItemMatchPolicy policy;
    for (int trial = 0; trial < 1000; ++trial) {
        auto draw = [&](std::size_t lo) {
            std::vector<ConceptSet> sets(lo + rng() % (7 - lo));
            for (auto& s : sets) {
                const int k = 1 + static_cast<int>(rng() % 2);
                for (int i = 0; i < k; ++i) s.insert(std::string(1, static_cast<char>('A' + rng() % 6)));
            }
            return sets;
        };
        const auto t = draw(1);
        const auto s = draw(0);
        const auto got = diagnostic_correctness(mdca::testing::items_of(t), mdca::testing::items_of(s), policy);
        const auto want = oracle::dc(t, s);
        if (got.dc != want.f1 || got.recall != want.recall || got.precision != want.precision) ++mismatches;
    }
    return {mismatches == 0, fmt("1000 seeded pairs of up to 6 items, %zu mismatches", mismatches)};
}

Outcome check_weighted_identity() {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double worst = 0.0;
    for (int i = 0; i < 10000; ++i) {
        const double sc = u(rng), dc = u(rng), cpa = u(rng);
        worst = std::max(worst, std::fabs(mdca_score(sc, dc, cpa) - (0.2 * sc + 0.4 * dc + 0.4 * cpa)));
    }
    int rejected = 0;
    const double bad[][3] = {{0.5, 0.5, 0.5}, {0.2, 0.4, 0.3}, {0.0, 0.0, 0.0}, {1.2, -0.1, -0.1}};
    for (const auto& w : bad) {
        try {
            Weights::make(w[0], w[1], w[2]);
        } catch (const Error& e) {
            rejected += e.code() == ErrorCode::kWeightSumInvalid;
        }
    }
    bool accepts = true;
    try {
        Weights::make(0.2, 0.4, 0.4);
    } catch (const Error&) {
        accepts = false;
    }
    return {worst < 1e-12 && rejected == 4 && accepts,
            fmt("10000 triples, max |diff| %.3g; %d of 4 bad weight sets rejected", worst, rejected)};
}

Outcome check_prompt_matrix() {
    struct Row {
        const char* id;
        const char* flags;
        std::size_t examples;
    };
    const Row rows[] = {
        {"P0", "100000", 0},  {"P1", "110000", 0},  {"P2", "110000", 3},   {"P3", "111010", 3},
        {"P4", "111111", 3},  {"P5", "110000", 10}, {"P6", "111111", 10},  {"P7", "111111", 0},
        {"P8", "111111", 5},  {"P9", "111111", 15}, {"P10", "111111", 20}, {"P11", "111111", 25},
    };
    const auto& configs = builtin_configs();
    int wrong = configs.size() == 12 ? 0 : 1;
    for (std::size_t i = 0; i < 12 && i < configs.size(); ++i) {
        wrong += configs[i].id != rows[i].id;
        wrong += configs[i].n_examples != rows[i].examples;
        for (std::size_t k = 0; k < 6; ++k) wrong += configs[i].flags[k] != (rows[i].flags[k] == '1');
    }
    return {wrong == 0, fmt("12 configurations x 7 cells, %d wrong", wrong)};
}

// ---- runs ---------------------------------------------------------------

ProviderProfile mock(const std::string& id, double fidelity, std::uint64_t seed) {
    ProviderProfile p;
    p.id = id;
    p.kind = ProviderKind::kMock;
    p.model_name = "mock";
    p.fidelity = fidelity;
    p.seed = seed;
    return p;
}

RunSpec spec_for(const std::string& run_id, const std::string& corpus, std::vector<std::string> configs,
                 std::vector<ProviderProfile> providers, std::size_t concurrency = 1) {
    RunSpec s;
    s.run_id = run_id;
    s.corpus_path = corpus;
    s.prompt_config_ids = std::move(configs);
    for (const auto& p : providers) s.provider_ids.push_back(p.id);
    s.providers = std::move(providers);
    s.concurrency_limit = concurrency;
    return s;
}

std::vector<ScoreRow> table_of(const RunStore& store, const std::string& run_id) {
    auto rows = sorted_scores(store.scores(run_id));
    for (auto& r : rows) r.run_id.clear();
    return rows;
}

struct Workspace {
    TempDir dir{"mdca-accept"};
    std::string corpus;

    Workspace() {
        corpus = (dir / "corpus.jsonl").string();
        write_corpus(make_corpus(synthesize_reports(200, 17), "synthetic"), corpus);
    }
};

Outcome check_identity_channel(const Workspace& ws) {
    RunStore store(ws.dir / "identity");
    const auto t0 = Clock::now();
    const auto summary = execute_run(spec_for("identity", ws.corpus, {"P6"}, {mock("mock", 1.0, 1)}), store);
    const double secs = seconds_since(t0);
    std::size_t bad = 0;
    double min_sc = 1.0;
    const auto rows = store.scores("identity");
    for (const auto& r : rows) {
        min_sc = std::min(min_sc, r.metrics.sc);
        if (r.metrics.dc != 1.0 || r.metrics.top1 != 1.0 || r.metrics.cpa != 1.0 || r.metrics.sc < 1.0 - 1e-9) ++bad;
    }
    const bool pass = rows.size() == 200 && summary.failed == 0 && bad == 0 && secs < 30.0;
    return {pass, fmt("%zu bundles, %zu off identity, min sc %.12f, %.2fs single-threaded (< 30s)", rows.size(), bad,
                      min_sc, secs)};
}

Outcome check_degradation(const Workspace& ws) {
    RunStore store(ws.dir / "degrade");
    std::vector<double> means;
    for (double f : {1.0, 0.8, 0.5, 0.2}) {
        const std::string id = fmt("f%.1f", f);
        execute_run(spec_for(id, ws.corpus, {"P6"}, {mock("mock", f, 7)}), store);
        means.push_back(aggregate(store, id).rows.at(0).cell(Metric::kMdca).mean);
    }
    const bool pass = means[0] > means[1] && means[1] > means[2] && means[2] > means[3];
    return {pass, fmt("mean MDCA at fidelity 1.0/0.8/0.5/0.2: %.4f > %.4f > %.4f > %.4f", means[0], means[1],
                      means[2], means[3])};
}

Outcome check_scheduling(const Workspace& ws) {
    const std::vector<ProviderProfile> providers = {mock("m-high", 0.8, 3), mock("m-low", 0.3, 4)};
    RunStore serial(ws.dir / "serial"), parallel(ws.dir / "parallel");
    execute_run(spec_for("sched", ws.corpus, {"P2", "P6"}, providers, 1), serial);
    execute_run(spec_for("sched", ws.corpus, {"P2", "P6"}, providers, 8), parallel);
    const auto a = table_of(serial, "sched");
    const auto b = table_of(parallel, "sched");
    const bool pass = a.size() == 800 && a == b && aggregate(serial, "sched") == aggregate(parallel, "sched");
    return {pass, fmt("%zu vs %zu score rows, tables %s", a.size(), b.size(), a == b ? "identical" : "differ")};
}

Outcome check_resume(const Workspace& ws) {
    const auto spec = spec_for("resume", ws.corpus, {"P4", "P6"}, {mock("mock", 0.5, 9)}, 4);
    RunStore full(ws.dir / "uninterrupted");
    execute_run(spec, full);
    RunSummary first;
    {
        RunStore part(ws.dir / "interrupted");
        first = execute_run(spec, part, RunControl{200});
    }
    RunStore reopened(ws.dir / "interrupted");
    const auto second = resume_run("resume", reopened);
    const bool same = table_of(reopened, "resume") == table_of(full, "resume");
    const bool pass = first.interrupted && first.executed < 400 && second.executed == first.pending &&
                      second.cached == first.executed && same;
    return {pass, fmt("stopped after %zu of 400, resume executed %zu and reused %zu, tables %s", first.executed,
                      second.executed, second.cached, same ? "identical" : "differ")};
}

Outcome check_aggregation(const Workspace& ws) {
    RunStore store(ws.dir / "degrade");
    double worst = 0.0;
    std::size_t cells = 0;
    for (const std::string id : {"f0.8", "f0.5"}) {
        const auto table = aggregate(store, id);
        std::map<std::pair<std::string, std::string>, std::vector<MetricBundle>> groups;
        for (const auto& r : store.scores(id)) groups[{r.key.provider_id, r.key.prompt_config_id}].push_back(r.metrics);
        for (const auto& row : table.rows) {
            const auto& bundles = groups.at({row.provider_id, row.prompt_config_id});
            for (Metric m : kMetrics) {
                std::vector<double> v;
                for (const auto& b : bundles) v.push_back(metric_value(b, m));
                const auto [mean, sd] = oracle::mean_std(v);
                worst = std::max({worst, std::fabs(row.cell(m).mean - mean), std::fabs(row.cell(m).std - sd)});
                ++cells;
            }
        }
    }
    const std::regex cell(R"(\d\.\d{4} \(\d\.\d{4}\))");
    const auto md = export_table(aggregate(store, "f0.5"), TableFormat::kMarkdown);
    const auto formatted = std::distance(std::sregex_iterator(md.begin(), md.end(), cell), std::sregex_iterator());
    const bool sample = format_cell({0.75982, 0.18691, 1}) == "0.7598 (0.1869)";
    const bool pass = worst < 1e-9 && formatted == 5 && sample;
    return {pass, fmt("%zu cells, max deviation %.3g; %ld formatted cells in the markdown row", cells, worst,
                      static_cast<long>(formatted))};
}

// ---- consistency ----------------------------------------------------------

Outcome check_consistency(const Workspace& ws) {
    const GradeTier tiers[] = {GradeTier::kA, GradeTier::kB, GradeTier::kC};
    const double want_score[3][3] = {{2.0, 1.5, 1.0}, {1.5, 1.0, 0.5}, {1.0, 0.5, 0.0}};
    int pair_errors = 0;
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j < 3; ++j) {
            RatingTask t;
            t.grades = {{"a", tiers[i]}, {"b", tiers[j]}};
            const auto c = combined_score(t);
            const double w = want_score[i][j];
            const Category cat = w >= 2.0 ? Category::kExcellent : w >= 1.0 ? Category::kAcceptable
                                                                             : Category::kUnacceptable;
            pair_errors += c.score != w || c.category != cat;
        }
    }

    RunStore store(ws.dir / "consistency");
    const std::vector<std::string> configs = {"P2", "P4", "P6", "P10"};
    execute_run(spec_for("c", ws.corpus, configs, {mock("mock", 0.5, 5)}), store);
    SessionRequest req;
    req.run_id = "c";
    req.prompt_config_ids = configs;
    req.reports_per_prompt = 25;
    req.seed = 3;
    req.rater_ids = {"rater-1", "rater-2"};
    auto session = create_session(store, req);
    const std::size_t expected = session.expected_grades();

    std::mt19937_64 rng(11);
    std::size_t recorded = 0;
    for (const auto& rater : session.rater_ids) {
        while (const RatingTask* t = session.next_task(rater)) {
            record_grade(session, t->task_id, rater, tiers[rng() % 3]);
            ++recorded;
        }
    }
    const auto report = mdca_agreement(session, store);
    std::map<TripleKey, double> mdca;
    for (const auto& r : store.scores("c")) mdca[r.key] = r.metrics.mdca;
    std::vector<double> combined, scores;
    for (const auto& t : session.tasks) {
        double sum = 0.0;
        for (const auto& [_, g] : t.grades) sum += g == GradeTier::kA ? 1.0 : g == GradeTier::kB ? 0.5 : 0.0;
        combined.push_back(sum);
        scores.push_back(mdca.at({t.report_id, t.prompt_config_id, t.provider_id}));
    }
    const auto want_rho = oracle::spearman(combined, scores);
    const bool rho_ok = want_rho && report.spearman_rho && std::fabs(*want_rho - *report.spearman_rho) < 1e-9;
    const bool pass = pair_errors == 0 && expected == 2 * 4 * 25 && recorded == expected &&
                      session.state == SessionState::kComplete && rho_ok;
    return {pass, fmt("%d of 9 grade pairs wrong; %zu expected grades for 4 configs x 25 reports; rho %.6f vs oracle "
                      "%.6f",
                      pair_errors, expected, report.spearman_rho.value_or(NAN), want_rho.value_or(NAN))};
}

// ---- wire protocol --------------------------------------------------------

Outcome check_wire() {
    using mdca::testing::StubServer;
    using mdca::testing::chat_body;
    auto profile = [](const std::string& url) {
        ProviderProfile p;
        p.id = "stub";
        p.kind = ProviderKind::kHttpChat;
        p.model_name = "stub-model";
        p.endpoint = url;
        p.auth_env_var = "STUB_KEY";
        p.max_retries = 2;
        p.backoff_base = std::chrono::milliseconds(1);
        p.timeout = std::chrono::milliseconds(3000);
        return p;
    };
    GenerateOptions opts;
    opts.env = [](const std::string& name) -> std::optional<std::string> {
        if (name == "STUB_KEY") return "sk-accept";
        return std::nullopt;
    };
    const ChatRequest req{"r1", "P6", "system text", "user findings", "1. 肝硬化。"};
    const auto code_of = [&](const ProviderProfile& p) {
        try {
            generate(p, {}, req, opts);
        } catch (const Error& e) {
            return e.code();
        }
        return ErrorCode::kIo;
    };

    StubServer ok({{200, chat_body("1. 肝硬化。")}});
    generate(profile(ok.url()), {}, req, opts);
    const auto body = Json::parse(ok.requests().at(0).body);
    const Json messages = Json::array({{{"role", "system"}, {"content", "system text"}},
                                       {{"role", "user"}, {"content", "user findings"}}});
    const bool body_ok = body.size() == 5 && body["model"] == "stub-model" && body["messages"] == messages &&
                         body["temperature"] == 0.5 && body["top_p"] == 0.95 && body["max_tokens"] == 1024 &&
                         ok.requests()[0].authorization == "Bearer sk-accept";

    StubServer flaky({{429, "{}"}, {429, "{}"}, {200, chat_body("x")}});
    const auto t = generate(profile(flaky.url()), {}, req, opts);
    const bool retry_ok = t.attempt_count == 3 && flaky.requests().size() == 3;

    StubServer limited({{429, "{}"}});
    const bool bounded = code_of(profile(limited.url())) == ErrorCode::kRateLimited && limited.requests().size() == 3;

    StubServer bad({{400, R"({"error":"bad request"})"}});
    const bool fast = code_of(profile(bad.url())) == ErrorCode::kProviderError && bad.requests().size() == 1;

    return {body_ok && retry_ok && bounded && fast,
            fmt("body %s; 429x2 then 200 in %zu requests; persistent 429 stopped after %zu; 400 after %zu",
                body_ok ? "exact" : "wrong", flaky.requests().size(), limited.requests().size(),
                bad.requests().size())};
}

}  // namespace

int main() {
    Workspace ws;
    const std::vector<std::pair<const char*, std::function<Outcome()>>> checks = {
        {"CPA oracle equivalence", check_cpa},
        {"DC oracle equivalence", check_dc},
        {"MDCA weighted identity", check_weighted_identity},
        {"Prompt configuration matrix", check_prompt_matrix},
        {"Identity channel end-to-end", [&] { return check_identity_channel(ws); }},
        {"Degradation monotonicity", [&] { return check_degradation(ws); }},
        {"Scheduling independence", [&] { return check_scheduling(ws); }},
        {"Resume determinism", [&] { return check_resume(ws); }},
        {"Aggregation oracle", [&] { return check_aggregation(ws); }},
        {"Consistency protocol", [&] { return check_consistency(ws); }},
        {"Wire-protocol conformance", check_wire},
    };
    int failures = 0;
    for (const auto& [name, fn] : checks) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("threw: ") + e.what()};
        }
        failures += !o.pass;
        std::printf("%s  %s: %s\n", o.pass ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(checks.size()) - failures, checks.size());
    return failures == 0 ? 0 : 1;
}
