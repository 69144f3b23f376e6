/// @file analytics.hpp
/// @brief Mean (std) tables per (provider, prompt config) and their CSV /
/// markdown renderings.

#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mdca/runner.hpp"

namespace mdca {

enum class Metric { kSc, kDc, kTop1, kCpa, kMdca };

inline constexpr std::array<Metric, 5> kMetrics{Metric::kSc, Metric::kDc, Metric::kTop1, Metric::kCpa,
                                                Metric::kMdca};

/// Column label: "SC", "DC", "Top-1", "CPA", "MDCA Score".
std::string_view metric_label(Metric metric);
/// Field name: "sc", "dc", "top1", "cpa", "mdca".
std::string_view metric_key(Metric metric);
double metric_value(const MetricBundle& bundle, Metric metric);

struct CellStat {
    double mean = 0.0;
    double std = 0.0;  // population standard deviation
    std::size_t n = 0;

    bool operator==(const CellStat&) const = default;
};

/// Mean and population std. Values are summed in ascending order, so the
/// result does not depend on the order of the input.
CellStat summarize(std::vector<double> values);

/// 100 x mean mdca, rounded half-even to 3 decimals.
double composite_score(double mean_mdca);

struct MetricRow {
    std::string provider_id;
    std::string prompt_config_id;
    std::array<CellStat, 5> cells;  // kMetrics order
    double composite = 0.0;

    const CellStat& cell(Metric m) const { return cells[static_cast<std::size_t>(m)]; }
    bool operator==(const MetricRow&) const = default;
};

struct MetricTable {
    std::vector<MetricRow> rows;  // by provider id, then config id in numeric order ("P2" < "P10")

    bool operator==(const MetricTable&) const = default;
};

/// Orders "P2" before "P10"; other ids compare as plain strings.
bool config_id_less(std::string_view a, std::string_view b);

/// Throws EmptyRun when rows is empty.
MetricTable aggregate_rows(const std::vector<ScoreRow>& rows);

/// Throws UnknownRun, EmptyRun.
MetricTable aggregate(const RunStore& store, const std::string& run_id);

enum class TableFormat { kCsv, kMarkdown };

TableFormat parse_table_format(std::string_view name);

/// CSV keeps full precision (17 significant digits). Markdown shows cells as
/// "0.7598 (0.1869)" and ends with a note on the std convention.
std::string export_table(const MetricTable& table, TableFormat format);

/// Reads either export back. Markdown values carry the printed precision.
MetricTable parse_table(std::string_view text, TableFormat format);

/// "0.7598 (0.1869)".
std::string format_cell(const CellStat& cell);

}  // namespace mdca
