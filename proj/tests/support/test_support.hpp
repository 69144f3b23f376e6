// Shared fixtures and reference implementations for the test suites.
//
// The oracles below work on plain concept-id sets and vectors. They share no
// code with the library beyond the DiagnosisItem struct used to feed it.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iterator>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "mdca/taxonomy.hpp"

namespace mdca::testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "mdca") {
        static std::mt19937_64 gen(std::random_device{}());
        path_ = std::filesystem::temp_directory_path() / (tag + "-" + std::to_string(gen()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    out << content;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

using ConceptSet = std::set<std::string>;

/// Item carrying exactly these concepts, tagged with the default lexicon version.
inline DiagnosisItem item_of(std::size_t index, ConceptSet concepts, std::set<std::string> locations = {}) {
    DiagnosisItem it;
    it.index = index;
    for (const auto& c : concepts) it.raw += c + " ";
    it.concepts = std::move(concepts);
    it.locations = std::move(locations);
    it.lexicon_version = default_lexicon().version();
    return it;
}

inline std::vector<DiagnosisItem> items_of(const std::vector<ConceptSet>& sets) {
    std::vector<DiagnosisItem> out;
    for (std::size_t i = 0; i < sets.size(); ++i) out.push_back(item_of(i + 1, sets[i]));
    return out;
}

/// Single-concept items named by letters, e.g. "ABC".
inline std::vector<DiagnosisItem> letters(const std::string& word) {
    std::vector<ConceptSet> sets;
    for (char c : word) sets.push_back({std::string(1, c)});
    return items_of(sets);
}

namespace oracle {

inline bool overlaps(const ConceptSet& a, const ConceptSet& b) {
    for (const auto& x : a)
        if (b.count(x)) return true;
    return false;
}

/// Largest one-to-one pairing by exhaustive search over every assignment.
inline std::size_t max_matching(const std::vector<ConceptSet>& t, const std::vector<ConceptSet>& s) {
    std::vector<bool> used(s.size(), false);
    std::function<std::size_t(std::size_t)> go = [&](std::size_t i) -> std::size_t {
        if (i == t.size()) return 0;
        std::size_t best = go(i + 1);  // leave t[i] unpaired
        for (std::size_t j = 0; j < s.size(); ++j) {
            if (used[j] || !overlaps(t[i], s[j])) continue;
            used[j] = true;
            best = std::max(best, 1 + go(i + 1));
            used[j] = false;
        }
        return best;
    };
    return go(0);
}

struct Prf {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
};

inline Prf dc(const std::vector<ConceptSet>& t, const std::vector<ConceptSet>& s) {
    const double m = static_cast<double>(max_matching(t, s));
    Prf r;
    r.recall = m / static_cast<double>(t.size());
    r.precision = s.empty() ? 0.0 : m / static_cast<double>(s.size());
    r.f1 = (r.precision + r.recall) == 0.0 ? 0.0 : 2 * r.precision * r.recall / (r.precision + r.recall);
    return r;
}

struct Cpa {
    double x1 = 0.0;
    double x2 = 0.0;
    double cpa = 0.0;
};

/// Step 1: first items agree. Step 2: every later target item looks for a
/// hit among synth positions o-1..o+1 (1-based), averaged over those items.
inline Cpa cpa(const std::vector<ConceptSet>& t, const std::vector<ConceptSet>& s) {
    Cpa r;
    r.x1 = (!s.empty() && overlaps(t[0], s[0])) ? 1.0 : 0.0;
    if (t.size() == 1) {
        r.x2 = r.x1;
    } else {
        int hits = 0;
        for (std::size_t o = 2; o <= t.size(); ++o) {
            bool hit = false;
            for (std::size_t p : {o - 1, o, o + 1})
                if (p >= 1 && p <= s.size() && overlaps(t[o - 1], s[p - 1])) hit = true;
            hits += hit ? 1 : 0;
        }
        r.x2 = hits / static_cast<double>(t.size() - 1);
    }
    r.cpa = 0.5 * r.x1 + 0.5 * r.x2;
    return r;
}

/// Rank of each value = 1 + (number smaller) + (number equal - 1) / 2.
inline std::vector<double> ranks(const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double less = 0, equal = 0;
        for (double w : v) {
            if (w < v[i]) less += 1;
            if (w == v[i]) equal += 1;
        }
        r[i] = 1 + less + (equal - 1) / 2;
    }
    return r;
}

inline std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y) {
    const double n = static_cast<double>(x.size());
    if (x.size() < 2) return std::nullopt;
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < x.size(); ++i) mx += x[i], my += y[i];
    mx /= n, my /= n;
    double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        sxy += (x[i] - mx) * (y[i] - my);
        sxx += (x[i] - mx) * (x[i] - mx);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0 || syy == 0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

inline std::optional<double> spearman(const std::vector<double>& x, const std::vector<double>& y) {
    return pearson(ranks(x), ranks(y));
}

/// Two-pass mean and population std in long double.
inline std::pair<double, double> mean_std(const std::vector<double>& v) {
    long double sum = 0;
    for (double x : v) sum += x;
    const long double mean = sum / v.size();
    long double ss = 0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {static_cast<double>(mean), static_cast<double>(std::sqrt(ss / v.size()))};
}

}  // namespace oracle
}  // namespace mdca::testing
