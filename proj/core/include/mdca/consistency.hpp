/// @file consistency.hpp
/// @brief Two-rater consistency check of generated conclusions against ground
/// truth, and its agreement with MDCA.
///
/// Sessions live under <store>/sessions/<session_id>/: session.json holds the
/// task list without grades, grades.jsonl is the append-only grade log.
/// Loading replays the log.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mdca/runner.hpp"

namespace mdca {

enum class GradeTier { kA, kB, kC };

std::string_view to_string(GradeTier tier);
/// "A", "B" or "C" (case-insensitive). Throws InvalidArgument.
GradeTier parse_grade_tier(std::string_view name);
/// A = 1, B = 0.5, C = 0.
double grade_points(GradeTier tier);

enum class Category { kExcellent, kAcceptable, kUnacceptable };

std::string_view to_string(Category category);
/// >= 2.0 excellent, >= 1.0 acceptable, otherwise unacceptable.
Category categorize(double combined);

struct RatingTask {
    std::string task_id;
    std::string report_id;
    std::string prompt_config_id;
    std::string provider_id;
    std::string ground_truth_conclusion;
    std::string generated_conclusion;
    std::map<std::string, GradeTier> grades;  // rater id -> grade
};

enum class SessionState { kOpen, kComplete };

std::string_view to_string(SessionState state);

struct RatingSession {
    std::string session_id;
    std::string run_id;
    std::string provider_id;
    std::vector<std::string> prompt_config_ids;
    std::size_t reports_per_prompt = 0;
    std::uint64_t seed = 0;
    std::vector<std::string> rater_ids;
    std::vector<RatingTask> tasks;
    std::map<std::string, std::vector<std::size_t>> presentation_order;  // rater -> task indices
    SessionState state = SessionState::kOpen;

    RatingTask* find_task(std::string_view task_id);
    const RatingTask* find_task(std::string_view task_id) const;
    bool has_rater(std::string_view rater_id) const;
    std::size_t expected_grades() const { return tasks.size() * rater_ids.size(); }
    std::size_t recorded_grades() const;
    std::size_t graded_by(std::string_view rater_id) const;

    /// Next ungraded task in this rater's order, or nullptr when done.
    /// Throws UnknownRater.
    const RatingTask* next_task(std::string_view rater_id) const;
};

struct SessionRequest {
    std::string run_id;
    std::vector<std::string> prompt_config_ids;
    std::size_t reports_per_prompt = 100;
    std::uint64_t seed = 0;
    std::vector<std::string> rater_ids;
    std::string provider_id;  // empty = the run's first provider
    std::string session_id;   // empty = derived from the other fields
};

/// Samples reports_per_prompt scored reports per config (same seed for every
/// config) and shuffles a separate presentation order for each rater.
/// Throws UnknownRun, InsufficientReports, InvalidArgument (rater count is
/// not exactly two).
RatingSession create_session(const RunStore& store, const SessionRequest& request);

/// Throws SessionComplete, UnknownRater, UnknownTask, DuplicateGrade.
const RatingTask& record_grade(RatingSession& session, std::string_view task_id, std::string_view rater_id,
                               GradeTier tier);

struct CombinedScore {
    double score = 0.0;
    Category category = Category::kUnacceptable;
};

/// Sum of both raters' points. Throws IncompleteTask.
CombinedScore combined_score(const RatingTask& task);

/// Spearman rank correlation with average ranks for ties. Empty when fewer
/// than two points or either side has zero variance.
std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y);

/// Ranks starting at 1; tied values share the mean of their positions.
std::vector<double> average_ranks(const std::vector<double>& values);

struct PromptAgreement {
    std::string prompt_config_id;
    std::size_t n = 0;
    std::size_t excellent = 0;
    std::size_t acceptable = 0;
    std::size_t unacceptable = 0;
    double mean_combined = 0.0;
    double mean_mdca = 0.0;
};

struct AgreementReport {
    std::string session_id;
    std::vector<PromptAgreement> per_prompt;  // session config order
    std::size_t n_pairs = 0;
    std::optional<double> spearman_rho;  // empty = degenerate
};

/// Throws IncompleteSession, MissingScores.
AgreementReport mdca_agreement(const RatingSession& session, const RunStore& store);

Json to_json(const AgreementReport& report);
/// Per-prompt category proportions as CSV.
std::string agreement_table_csv(const AgreementReport& report);

Json to_json(const RatingSession& session, bool with_grades = true);
RatingSession session_from_json(const Json& doc);

/// On-disk sessions under <root>/sessions.
class SessionStore {
public:
    explicit SessionStore(std::filesystem::path store_root);

    /// Throws InvalidArgument if the id exists.
    void save_new(const RatingSession& session);
    /// Replays the grade log. Throws UnknownSession.
    RatingSession load(const std::string& session_id) const;
    void append_grade(const std::string& session_id, const std::string& task_id, const std::string& rater_id,
                      GradeTier tier);
    bool exists(const std::string& session_id) const;
    std::vector<std::string> ids() const;

private:
    std::filesystem::path dir(const std::string& session_id) const;
    std::filesystem::path root_;
};

/// Thread-safe front for the HTTP handlers. Each session has its own mutex so
/// mutations of one session are serialized.
class SessionService {
public:
    SessionService(SessionStore& sessions, const RunStore* runs = nullptr);

    Json next_task(const std::string& session_id, const std::string& rater_id);
    Json submit_grade(const std::string& session_id, const std::string& task_id, const std::string& rater_id,
                      const std::string& tier);
    Json summary(const std::string& session_id);

private:
    struct Entry {
        std::mutex mutex;
        RatingSession session;
    };
    Entry& entry(const std::string& session_id);

    SessionStore& sessions_;
    const RunStore* runs_;
    std::mutex map_mutex_;
    std::map<std::string, std::unique_ptr<Entry>> entries_;
};

/// Serves GET /sessions/{id}/next-task?rater=, POST /sessions/{id}/grades,
/// GET /sessions/{id}/summary, and static UI files (or a placeholder page).
class ConsistencyServer {
public:
    ConsistencyServer(SessionService& service, std::optional<std::filesystem::path> ui_dir = std::nullopt);
    ~ConsistencyServer();

    /// Binds and serves on a background thread; port 0 picks a free one.
    /// Returns the bound port.
    int start(const std::string& host, int port);
    /// Binds and serves on the calling thread until stop().
    void run(const std::string& host, int port);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace mdca
