#include "mdca/analytics.hpp"

#include <algorithm>
#include <cfenv>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "mdca/error.hpp"

namespace mdca {
namespace {

constexpr std::array<std::string_view, 5> kLabels{"SC", "DC", "Top-1", "CPA", "MDCA Score"};
constexpr std::array<std::string_view, 5> kKeys{"sc", "dc", "top1", "cpa", "mdca"};
constexpr std::string_view kFooter =
    "Values are mean (std); std is the population standard deviation (divisor n).";

std::string fmt_full(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string fmt_fixed(double v, int decimals) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
    return buf;
}

std::vector<std::string> split(std::string_view line, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::string strip(std::string_view s) {
    const auto b = s.find_first_not_of(' ');
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(' ');
    return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& s) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw Error(ErrorCode::kParse, "not a number: '" + s + "'");
    }
}

std::vector<std::string> lines_of(std::string_view text) {
    std::vector<std::string> out;
    for (auto& line : split(text, '\n')) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!strip(line).empty()) out.push_back(std::move(line));
    }
    return out;
}

}  // namespace

std::string_view metric_label(Metric m) { return kLabels[static_cast<std::size_t>(m)]; }
std::string_view metric_key(Metric m) { return kKeys[static_cast<std::size_t>(m)]; }

double metric_value(const MetricBundle& b, Metric m) {
    switch (m) {
        case Metric::kSc: return b.sc;
        case Metric::kDc: return b.dc;
        case Metric::kTop1: return b.top1;
        case Metric::kCpa: return b.cpa;
        case Metric::kMdca: return b.mdca;
    }
    return 0.0;
}

CellStat summarize(std::vector<double> values) {
    CellStat c;
    c.n = values.size();
    if (values.empty()) return c;
    std::sort(values.begin(), values.end());
    double sum = 0.0;
    for (double v : values) sum += v;
    c.mean = sum / static_cast<double>(c.n);
    std::vector<double> sq;
    sq.reserve(values.size());
    for (double v : values) sq.push_back((v - c.mean) * (v - c.mean));
    std::sort(sq.begin(), sq.end());
    double ss = 0.0;
    for (double v : sq) ss += v;
    c.std = std::sqrt(ss / static_cast<double>(c.n));
    return c;
}

double composite_score(double mean_mdca) {
    const int saved = std::fegetround();
    std::fesetround(FE_TONEAREST);
    const double r = std::nearbyint(100.0 * mean_mdca * 1000.0) / 1000.0;
    std::fesetround(saved);
    return r;
}

bool config_id_less(std::string_view a, std::string_view b) {
    auto number = [](std::string_view s) -> long {
        if (s.size() < 2 || s[0] != 'P') return -1;
        long n = 0;
        for (char c : s.substr(1)) {
            if (c < '0' || c > '9') return -1;
            n = n * 10 + (c - '0');
        }
        return n;
    };
    const long na = number(a);
    const long nb = number(b);
    if (na >= 0 && nb >= 0) return na < nb;
    if ((na >= 0) != (nb >= 0)) return na >= 0;
    return a < b;
}

MetricTable aggregate_rows(const std::vector<ScoreRow>& rows) {
    if (rows.empty()) throw Error(ErrorCode::kEmptyRun, "no score rows");
    struct Less {
        bool operator()(const std::pair<std::string, std::string>& a,
                        const std::pair<std::string, std::string>& b) const {
            if (a.first != b.first) return a.first < b.first;
            return config_id_less(a.second, b.second);
        }
    };
    std::map<std::pair<std::string, std::string>, std::array<std::vector<double>, 5>, Less> cells;
    for (const auto& r : rows) {
        auto& cell = cells[{r.key.provider_id, r.key.prompt_config_id}];
        for (Metric m : kMetrics) cell[static_cast<std::size_t>(m)].push_back(metric_value(r.metrics, m));
    }
    MetricTable table;
    for (auto& [key, values] : cells) {
        MetricRow row;
        row.provider_id = key.first;
        row.prompt_config_id = key.second;
        for (std::size_t i = 0; i < values.size(); ++i) row.cells[i] = summarize(std::move(values[i]));
        row.composite = composite_score(row.cell(Metric::kMdca).mean);
        table.rows.push_back(std::move(row));
    }
    return table;
}

MetricTable aggregate(const RunStore& store, const std::string& run_id) {
    const auto rows = store.scores(run_id);
    if (rows.empty()) throw Error(ErrorCode::kEmptyRun, run_id);
    return aggregate_rows(rows);
}

TableFormat parse_table_format(std::string_view name) {
    if (name == "csv") return TableFormat::kCsv;
    if (name == "markdown" || name == "md") return TableFormat::kMarkdown;
    throw Error(ErrorCode::kInvalidArgument, "table format must be csv or markdown, got '" + std::string(name) + "'");
}

std::string format_cell(const CellStat& c) { return fmt_fixed(c.mean, 4) + " (" + fmt_fixed(c.std, 4) + ")"; }

std::string export_table(const MetricTable& table, TableFormat format) {
    std::ostringstream out;
    if (format == TableFormat::kCsv) {
        out << "provider_id,prompt_config_id,n";
        for (Metric m : kMetrics) out << ',' << metric_key(m) << "_mean," << metric_key(m) << "_std";
        out << ",composite\n";
        for (const auto& r : table.rows) {
            out << r.provider_id << ',' << r.prompt_config_id << ',' << r.cell(Metric::kMdca).n;
            for (Metric m : kMetrics) out << ',' << fmt_full(r.cell(m).mean) << ',' << fmt_full(r.cell(m).std);
            out << ',' << fmt_fixed(r.composite, 3) << '\n';
        }
        return out.str();
    }
    out << "| Provider | Prompt | n |";
    for (Metric m : kMetrics) out << ' ' << metric_label(m) << " |";
    out << " Composite |\n|---|---|---|";
    for (std::size_t i = 0; i < kMetrics.size(); ++i) out << "---|";
    out << "---|\n";
    for (const auto& r : table.rows) {
        out << "| " << r.provider_id << " | " << r.prompt_config_id << " | " << r.cell(Metric::kMdca).n << " |";
        for (Metric m : kMetrics) out << ' ' << format_cell(r.cell(m)) << " |";
        out << ' ' << fmt_fixed(r.composite, 3) << " |\n";
    }
    out << '\n' << kFooter << '\n';
    return out.str();
}

MetricTable parse_table(std::string_view text, TableFormat format) {
    MetricTable table;
    const auto lines = lines_of(text);
    if (format == TableFormat::kCsv) {
        for (std::size_t i = 1; i < lines.size(); ++i) {
            const auto f = split(lines[i], ',');
            if (f.size() != 4 + 2 * kMetrics.size()) {
                throw Error(ErrorCode::kParse, "csv row " + std::to_string(i + 1) + " has " +
                                                   std::to_string(f.size()) + " fields");
            }
            MetricRow row{f[0], f[1], {}, to_double(f.back())};
            const auto n = static_cast<std::size_t>(to_double(f[2]));
            for (std::size_t m = 0; m < kMetrics.size(); ++m) {
                row.cells[m] = {to_double(f[3 + 2 * m]), to_double(f[4 + 2 * m]), n};
            }
            table.rows.push_back(std::move(row));
        }
        return table;
    }
    for (const auto& line : lines) {
        if (line.rfind("| ", 0) != 0 || line.rfind("| Provider", 0) == 0) continue;
        auto f = split(line, '|');
        // leading and trailing pipes produce empty first/last fields
        if (f.size() != 2 + 4 + kMetrics.size()) throw Error(ErrorCode::kParse, "bad markdown row: " + line);
        MetricRow row{strip(f[1]), strip(f[2]), {}, to_double(strip(f[4 + kMetrics.size()]))};
        const auto n = static_cast<std::size_t>(to_double(strip(f[3])));
        for (std::size_t m = 0; m < kMetrics.size(); ++m) {
            const std::string cell = strip(f[4 + m]);
            const auto open = cell.find(" (");
            if (open == std::string::npos || cell.back() != ')') throw Error(ErrorCode::kParse, "bad cell: " + cell);
            row.cells[m] = {to_double(cell.substr(0, open)), to_double(cell.substr(open + 2, cell.size() - open - 3)),
                            n};
        }
        table.rows.push_back(std::move(row));
    }
    return table;
}

}  // namespace mdca
