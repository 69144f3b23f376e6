#include "mdca/consistency.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "mdca/corpus.hpp"
#include "mdca/error.hpp"
#include "mdca/hashing.hpp"
#include "mdca/random.hpp"

namespace mdca {
namespace {

namespace fs = std::filesystem;

std::string short_hash(std::string_view text) { return sha256_hex(text).substr(0, 16); }

double mean_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    std::sort(v.begin(), v.end());
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

Json grade_event(const std::string& task_id, const std::string& rater_id, GradeTier tier) {
    return {{"task_id", task_id}, {"rater_id", rater_id}, {"tier", to_string(tier)}};
}

}  // namespace

std::string_view to_string(GradeTier tier) {
    switch (tier) {
        case GradeTier::kA: return "A";
        case GradeTier::kB: return "B";
        case GradeTier::kC: return "C";
    }
    return "?";
}

GradeTier parse_grade_tier(std::string_view name) {
    if (name == "A" || name == "a") return GradeTier::kA;
    if (name == "B" || name == "b") return GradeTier::kB;
    if (name == "C" || name == "c") return GradeTier::kC;
    throw Error(ErrorCode::kInvalidArgument, "grade must be A, B or C, got '" + std::string(name) + "'");
}

double grade_points(GradeTier tier) {
    switch (tier) {
        case GradeTier::kA: return 1.0;
        case GradeTier::kB: return 0.5;
        case GradeTier::kC: return 0.0;
    }
    return 0.0;
}

std::string_view to_string(Category c) {
    switch (c) {
        case Category::kExcellent: return "excellent";
        case Category::kAcceptable: return "acceptable";
        case Category::kUnacceptable: return "unacceptable";
    }
    return "?";
}

Category categorize(double combined) {
    if (combined >= 2.0) return Category::kExcellent;
    if (combined >= 1.0) return Category::kAcceptable;
    return Category::kUnacceptable;
}

std::string_view to_string(SessionState s) { return s == SessionState::kOpen ? "open" : "complete"; }

RatingTask* RatingSession::find_task(std::string_view task_id) {
    auto it = std::find_if(tasks.begin(), tasks.end(), [&](const auto& t) { return t.task_id == task_id; });
    return it == tasks.end() ? nullptr : &*it;
}

const RatingTask* RatingSession::find_task(std::string_view task_id) const {
    return const_cast<RatingSession*>(this)->find_task(task_id);
}

bool RatingSession::has_rater(std::string_view rater_id) const {
    return std::find(rater_ids.begin(), rater_ids.end(), rater_id) != rater_ids.end();
}

std::size_t RatingSession::recorded_grades() const {
    std::size_t n = 0;
    for (const auto& t : tasks) n += t.grades.size();
    return n;
}

std::size_t RatingSession::graded_by(std::string_view rater_id) const {
    return static_cast<std::size_t>(std::count_if(tasks.begin(), tasks.end(), [&](const auto& t) {
        return t.grades.count(std::string(rater_id)) != 0;
    }));
}

const RatingTask* RatingSession::next_task(std::string_view rater_id) const {
    auto it = presentation_order.find(std::string(rater_id));
    if (it == presentation_order.end()) throw Error(ErrorCode::kUnknownRater, std::string(rater_id));
    for (std::size_t idx : it->second) {
        if (tasks[idx].grades.count(std::string(rater_id)) == 0) return &tasks[idx];
    }
    return nullptr;
}

RatingSession create_session(const RunStore& store, const SessionRequest& req) {
    const std::set<std::string> distinct(req.rater_ids.begin(), req.rater_ids.end());
    if (req.rater_ids.size() != 2 || distinct.size() != 2 || distinct.count("") != 0) {
        throw Error(ErrorCode::kInvalidArgument, "a session needs exactly two distinct rater ids");
    }
    if (req.prompt_config_ids.empty()) throw Error(ErrorCode::kInvalidArgument, "a session needs prompt configs");
    const RunSpec spec = store.load_spec(req.run_id);
    const std::string provider = req.provider_id.empty() ? spec.provider_ids.front() : req.provider_id;
    if (std::find(spec.provider_ids.begin(), spec.provider_ids.end(), provider) == spec.provider_ids.end()) {
        throw Error(ErrorCode::kInvalidArgument, "run " + req.run_id + " has no provider " + provider);
    }

    RatingSession s;
    s.run_id = req.run_id;
    s.provider_id = provider;
    s.prompt_config_ids = req.prompt_config_ids;
    s.reports_per_prompt = req.reports_per_prompt;
    s.seed = req.seed;
    s.rater_ids = req.rater_ids;

    std::map<std::string, std::vector<ScoreRow>> by_config;
    for (auto& row : store.scores(req.run_id)) {
        if (row.key.provider_id == provider) by_config[row.key.prompt_config_id].push_back(std::move(row));
    }
    std::optional<Corpus> corpus;
    if (req.reports_per_prompt > 0) {
        LoadOptions options;
        options.deny_list.clear();
        corpus = load_corpus(spec.corpus_path,
                             fs::path(spec.corpus_path).extension() == ".csv" ? CorpusFormat::kCsv : CorpusFormat::kJsonl,
                             options);
    }
    for (const auto& config : req.prompt_config_ids) {
        auto& rows = by_config[config];
        if (rows.size() < req.reports_per_prompt) {
            throw Error(ErrorCode::kInsufficientReports, config + ": need " + std::to_string(req.reports_per_prompt) +
                                                             ", have " + std::to_string(rows.size()));
        }
        std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.key < b.key; });
        for (std::size_t idx : sample_indices(rows.size(), req.reports_per_prompt, req.seed)) {
            const auto& row = rows[idx];
            const ReportRecord* rec = corpus->find(row.key.report_id);
            const auto output = store.cached_output(row.cache_key);
            if (rec == nullptr || !output) {
                throw Error(ErrorCode::kStoreCorrupt, "no transcript or record for " + row.key.report_id);
            }
            RatingTask t;
            t.task_id = short_hash(req.run_id + "\n" + provider + "\n" + config + "\n" + row.key.report_id);
            t.report_id = row.key.report_id;
            t.prompt_config_id = config;
            t.provider_id = provider;
            t.ground_truth_conclusion = rec->ground_truth_conclusion;
            t.generated_conclusion = *output;
            s.tasks.push_back(std::move(t));
        }
    }
    for (const auto& rater : s.rater_ids) {
        std::vector<std::size_t> order(s.tasks.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        SeededRng rng(derive_seed(req.seed, "rater:" + rater));
        rng.shuffle(order);
        s.presentation_order[rater] = std::move(order);
    }
    if (!req.session_id.empty()) {
        s.session_id = req.session_id;
    } else {
        Json ident{{"run_id", s.run_id}, {"provider_id", provider}, {"configs", s.prompt_config_ids},
                   {"n", s.reports_per_prompt}, {"seed", s.seed}, {"raters", s.rater_ids}};
        s.session_id = "cs-" + short_hash(ident.dump()).substr(0, 12);
    }
    s.state = s.tasks.empty() ? SessionState::kComplete : SessionState::kOpen;
    return s;
}

const RatingTask& record_grade(RatingSession& session, std::string_view task_id, std::string_view rater_id,
                               GradeTier tier) {
    if (session.state == SessionState::kComplete) throw Error(ErrorCode::kSessionComplete, session.session_id);
    if (!session.has_rater(rater_id)) throw Error(ErrorCode::kUnknownRater, std::string(rater_id));
    RatingTask* task = session.find_task(task_id);
    if (task == nullptr) throw Error(ErrorCode::kUnknownTask, std::string(task_id));
    if (!task->grades.emplace(std::string(rater_id), tier).second) {
        throw Error(ErrorCode::kDuplicateGrade, std::string(rater_id) + " already graded " + std::string(task_id));
    }
    if (session.recorded_grades() == session.expected_grades()) session.state = SessionState::kComplete;
    return *task;
}

CombinedScore combined_score(const RatingTask& task) {
    if (task.grades.size() != 2) throw Error(ErrorCode::kIncompleteTask, task.task_id);
    double score = 0.0;
    for (const auto& [_, tier] : task.grades) score += grade_points(tier);
    return {score, categorize(score)};
}

std::vector<double> average_ranks(const std::vector<double>& values) {
    std::vector<std::size_t> idx(values.size());
    for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    std::vector<double> ranks(values.size());
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j + 1 < idx.size() && values[idx[j + 1]] == values[idx[i]]) ++j;
        const double r = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
        for (std::size_t k = i; k <= j; ++k) ranks[idx[k]] = r;
        i = j + 1;
    }
    return ranks;
}

std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
    if (x.size() != y.size()) throw Error(ErrorCode::kInvalidArgument, "spearman needs equal-length inputs");
    if (x.size() < 2) return std::nullopt;
    const auto rx = average_ranks(x);
    const auto ry = average_ranks(y);
    const double n = static_cast<double>(x.size());
    const double mean = (n + 1.0) / 2.0;  // mean rank is fixed even with ties
    double sxy = 0.0;
    double sxx = 0.0;
    double syy = 0.0;
    for (std::size_t i = 0; i < rx.size(); ++i) {
        sxy += (rx[i] - mean) * (ry[i] - mean);
        sxx += (rx[i] - mean) * (rx[i] - mean);
        syy += (ry[i] - mean) * (ry[i] - mean);
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

AgreementReport mdca_agreement(const RatingSession& session, const RunStore& store) {
    if (session.state != SessionState::kComplete) throw Error(ErrorCode::kIncompleteSession, session.session_id);
    std::map<TripleKey, double> mdca;
    for (const auto& row : store.scores(session.run_id)) mdca[row.key] = row.metrics.mdca;

    AgreementReport report;
    report.session_id = session.session_id;
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per_config;
    std::vector<double> all_combined;
    std::vector<double> all_mdca;
    for (const auto& task : session.tasks) {
        auto it = mdca.find({task.report_id, task.prompt_config_id, task.provider_id});
        if (it == mdca.end()) throw Error(ErrorCode::kMissingScores, task.task_id);
        const auto c = combined_score(task);
        per_config[task.prompt_config_id].first.push_back(c.score);
        per_config[task.prompt_config_id].second.push_back(it->second);
        all_combined.push_back(c.score);
        all_mdca.push_back(it->second);
    }
    for (const auto& config : session.prompt_config_ids) {
        PromptAgreement pa;
        pa.prompt_config_id = config;
        const auto& [combined, scores] = per_config[config];
        pa.n = combined.size();
        for (double c : combined) {
            switch (categorize(c)) {
                case Category::kExcellent: ++pa.excellent; break;
                case Category::kAcceptable: ++pa.acceptable; break;
                case Category::kUnacceptable: ++pa.unacceptable; break;
            }
        }
        pa.mean_combined = mean_of(combined);
        pa.mean_mdca = mean_of(scores);
        report.per_prompt.push_back(pa);
    }
    report.n_pairs = all_combined.size();
    report.spearman_rho = spearman(all_combined, all_mdca);
    return report;
}

Json to_json(const AgreementReport& r) {
    Json prompts = Json::array();
    for (const auto& p : r.per_prompt) {
        const double n = p.n == 0 ? 1.0 : static_cast<double>(p.n);
        prompts.push_back({{"prompt_config_id", p.prompt_config_id},
                           {"n", p.n},
                           {"counts", {{"excellent", p.excellent}, {"acceptable", p.acceptable},
                                       {"unacceptable", p.unacceptable}}},
                           {"proportions", {{"excellent", static_cast<double>(p.excellent) / n},
                                            {"acceptable", static_cast<double>(p.acceptable) / n},
                                            {"unacceptable", static_cast<double>(p.unacceptable) / n}}},
                           {"mean_combined_score", p.mean_combined},
                           {"mean_mdca", p.mean_mdca}});
    }
    Json corr{{"statistic", "spearman"}, {"n", r.n_pairs}};
    if (r.spearman_rho) {
        corr["rho"] = *r.spearman_rho;
        corr["status"] = "ok";
    } else {
        corr["rho"] = nullptr;
        corr["status"] = "degenerate";
    }
    return {{"session_id", r.session_id}, {"per_prompt", prompts}, {"correlation", corr}};
}

std::string agreement_table_csv(const AgreementReport& r) {
    std::ostringstream out;
    out << "prompt_config_id,n,excellent,acceptable,unacceptable,mean_combined_score,mean_mdca\n";
    char buf[256];
    for (const auto& p : r.per_prompt) {
        const double n = p.n == 0 ? 1.0 : static_cast<double>(p.n);
        std::snprintf(buf, sizeof buf, "%s,%zu,%.4f,%.4f,%.4f,%.4f,%.4f\n", p.prompt_config_id.c_str(), p.n,
                      static_cast<double>(p.excellent) / n, static_cast<double>(p.acceptable) / n,
                      static_cast<double>(p.unacceptable) / n, p.mean_combined, p.mean_mdca);
        out << buf;
    }
    return out.str();
}

Json to_json(const RatingSession& s, bool with_grades) {
    Json tasks = Json::array();
    for (const auto& t : s.tasks) {
        Json task{{"task_id", t.task_id},
                  {"report_id", t.report_id},
                  {"prompt_config_id", t.prompt_config_id},
                  {"provider_id", t.provider_id},
                  {"ground_truth_conclusion", t.ground_truth_conclusion},
                  {"generated_conclusion", t.generated_conclusion}};
        if (with_grades) {
            Json grades = Json::object();
            for (const auto& [rater, tier] : t.grades) grades[rater] = to_string(tier);
            task["grades"] = grades;
        }
        tasks.push_back(std::move(task));
    }
    Json doc{{"session_id", s.session_id},
             {"run_id", s.run_id},
             {"provider_id", s.provider_id},
             {"prompt_config_ids", s.prompt_config_ids},
             {"reports_per_prompt", s.reports_per_prompt},
             {"seed", s.seed},
             {"rater_ids", s.rater_ids},
             {"presentation_order", s.presentation_order},
             {"tasks", tasks}};
    if (with_grades) doc["state"] = to_string(s.state);
    return doc;
}

RatingSession session_from_json(const Json& doc) {
    RatingSession s;
    try {
        s.session_id = doc.at("session_id").get<std::string>();
        s.run_id = doc.at("run_id").get<std::string>();
        s.provider_id = doc.at("provider_id").get<std::string>();
        s.prompt_config_ids = doc.at("prompt_config_ids").get<std::vector<std::string>>();
        s.reports_per_prompt = doc.at("reports_per_prompt").get<std::size_t>();
        s.seed = doc.at("seed").get<std::uint64_t>();
        s.rater_ids = doc.at("rater_ids").get<std::vector<std::string>>();
        s.presentation_order = doc.at("presentation_order").get<std::map<std::string, std::vector<std::size_t>>>();
        for (const auto& t : doc.at("tasks")) {
            RatingTask task;
            task.task_id = t.at("task_id").get<std::string>();
            task.report_id = t.at("report_id").get<std::string>();
            task.prompt_config_id = t.at("prompt_config_id").get<std::string>();
            task.provider_id = t.at("provider_id").get<std::string>();
            task.ground_truth_conclusion = t.at("ground_truth_conclusion").get<std::string>();
            task.generated_conclusion = t.at("generated_conclusion").get<std::string>();
            if (t.contains("grades")) {
                for (const auto& [rater, tier] : t["grades"].items()) {
                    task.grades[rater] = parse_grade_tier(tier.get<std::string>());
                }
            }
            s.tasks.push_back(std::move(task));
        }
    } catch (const Json::exception& e) {
        throw Error(ErrorCode::kParse, std::string("session: ") + e.what());
    }
    s.state = s.recorded_grades() == s.expected_grades() ? SessionState::kComplete : SessionState::kOpen;
    return s;
}

SessionStore::SessionStore(fs::path store_root) : root_(std::move(store_root) / "sessions") {
    fs::create_directories(root_);
}

fs::path SessionStore::dir(const std::string& id) const {
    if (id.empty() || id.find_first_of("/\\") != std::string::npos || id[0] == '.') {
        throw Error(ErrorCode::kInvalidArgument, "invalid session id '" + id + "'");
    }
    return root_ / id;
}

bool SessionStore::exists(const std::string& id) const { return fs::exists(dir(id) / "session.json"); }

std::vector<std::string> SessionStore::ids() const {
    std::vector<std::string> out;
    for (const auto& e : fs::directory_iterator(root_)) {
        if (e.is_directory() && fs::exists(e.path() / "session.json")) out.push_back(e.path().filename().string());
    }
    std::sort(out.begin(), out.end());
    return out;
}

void SessionStore::save_new(const RatingSession& session) {
    if (exists(session.session_id)) {
        throw Error(ErrorCode::kInvalidArgument, "session " + session.session_id + " already exists");
    }
    write_text_file(dir(session.session_id) / "session.json", to_json(session, false).dump(2) + "\n");
    write_text_file(dir(session.session_id) / "grades.jsonl", "");
    for (const auto& t : session.tasks) {
        for (const auto& [rater, tier] : t.grades) append_grade(session.session_id, t.task_id, rater, tier);
    }
}

RatingSession SessionStore::load(const std::string& id) const {
    if (!exists(id)) throw Error(ErrorCode::kUnknownSession, id);
    RatingSession s = session_from_json(Json::parse(read_text_file(dir(id) / "session.json")));
    const auto log = dir(id) / "grades.jsonl";
    if (!fs::exists(log)) return s;
    const std::string bytes = read_text_file(log);
    std::size_t start = 0;
    while (start < bytes.size()) {
        const auto end = bytes.find('\n', start);
        if (end == std::string::npos) break;  // torn final line
        const std::string_view line(bytes.data() + start, end - start);
        start = end + 1;
        if (line.empty()) continue;
        try {
            const auto ev = Json::parse(line);
            record_grade(s, ev.at("task_id").get<std::string>(), ev.at("rater_id").get<std::string>(),
                         parse_grade_tier(ev.at("tier").get<std::string>()));
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::kStoreCorrupt, log.string() + ": " + e.what());
        }
    }
    return s;
}

void SessionStore::append_grade(const std::string& id, const std::string& task_id, const std::string& rater_id,
                                GradeTier tier) {
    const auto log = dir(id) / "grades.jsonl";
    std::ofstream out(log, std::ios::binary | std::ios::app);
    if (!out) throw Error(ErrorCode::kIo, "cannot append to " + log.string());
    out << dump_line(grade_event(task_id, rater_id, tier)) << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::kIo, "write failed on " + log.string());
}

SessionService::SessionService(SessionStore& sessions, const RunStore* runs) : sessions_(sessions), runs_(runs) {}

SessionService::Entry& SessionService::entry(const std::string& id) {
    std::lock_guard lock(map_mutex_);
    auto it = entries_.find(id);
    if (it == entries_.end()) {
        auto e = std::make_unique<Entry>();
        e->session = sessions_.load(id);
        it = entries_.emplace(id, std::move(e)).first;
    }
    return *it->second;
}

Json SessionService::next_task(const std::string& session_id, const std::string& rater_id) {
    Entry& e = entry(session_id);
    std::lock_guard lock(e.mutex);
    const auto& s = e.session;
    const RatingTask* task = s.next_task(rater_id);
    Json out{{"session_id", s.session_id},
             {"rater_id", rater_id},
             {"progress", {{"done", s.graded_by(rater_id)}, {"total", s.tasks.size()}}},
             {"complete", task == nullptr}};
    // prompt config and provider stay hidden from raters
    if (task != nullptr) {
        out["task"] = {{"task_id", task->task_id},
                       {"ground_truth_conclusion", task->ground_truth_conclusion},
                       {"generated_conclusion", task->generated_conclusion}};
    }
    return out;
}

Json SessionService::submit_grade(const std::string& session_id, const std::string& task_id,
                                  const std::string& rater_id, const std::string& tier_name) {
    const GradeTier tier = parse_grade_tier(tier_name);
    Entry& e = entry(session_id);
    std::lock_guard lock(e.mutex);
    RatingSession copy = e.session;
    record_grade(copy, task_id, rater_id, tier);
    sessions_.append_grade(session_id, task_id, rater_id, tier);
    e.session = std::move(copy);
    return {{"task_id", task_id},
            {"rater_id", rater_id},
            {"tier", to_string(tier)},
            {"points", grade_points(tier)},
            {"session_state", to_string(e.session.state)}};
}

Json SessionService::summary(const std::string& session_id) {
    Entry& e = entry(session_id);
    std::lock_guard lock(e.mutex);
    const auto& s = e.session;
    Json raters = Json::object();
    for (const auto& r : s.rater_ids) raters[r] = s.graded_by(r);
    std::size_t both = 0;
    for (const auto& t : s.tasks) both += t.grades.size() == s.rater_ids.size() ? 1 : 0;
    Json out{{"session_id", s.session_id},
             {"state", to_string(s.state)},
             {"tasks", s.tasks.size()},
             {"tasks_fully_graded", both},
             {"expected_grades", s.expected_grades()},
             {"recorded_grades", s.recorded_grades()},
             {"grades_by_rater", raters}};
    if (s.state == SessionState::kComplete && runs_ != nullptr) {
        try {
            out["agreement"] = to_json(mdca_agreement(s, *runs_));
        } catch (const Error& err) {
            out["agreement_error"] = err.what();
        }
    }
    return out;
}

}  // namespace mdca
