#include "mdca/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "mdca/error.hpp"
#include "mdca/segmenter.hpp"

namespace mdca {
namespace {

void require_target(const std::vector<DiagnosisItem>& target) {
    if (target.empty()) throw Error(ErrorCode::kEmptyTarget, "target conclusion has no items");
}

void require_unit(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) {
        throw Error(ErrorCode::kInvalidArgument, std::string(name) + " must lie in [0,1], got " + std::to_string(v));
    }
}

}  // namespace

Weights Weights::make(double sc, double dc, double cpa) {
    for (double w : {sc, dc, cpa}) {
        if (!(w >= 0.0 && w <= 1.0)) {
            throw Error(ErrorCode::kWeightSumInvalid, "weight " + std::to_string(w) + " outside [0,1]");
        }
    }
    if (std::abs(sc + dc + cpa - 1.0) > 1e-12) {
        throw Error(ErrorCode::kWeightSumInvalid, "weights sum to " + std::to_string(sc + dc + cpa));
    }
    return Weights(sc, dc, cpa);
}

Json to_json(const Weights& w) { return {{"sc", w.sc()}, {"dc", w.dc()}, {"cpa", w.cpa()}}; }

Weights weights_from_json(const Json& doc) {
    return Weights::make(doc.value("sc", 0.2), doc.value("dc", 0.4), doc.value("cpa", 0.4));
}

Json to_json(const MetricBundle& b) {
    Json pairs = Json::array();
    for (const auto& [t, s] : b.matched_pairs) pairs.push_back({t, s});
    return {{"sc", b.sc},
            {"dc", b.dc},
            {"top1", b.top1},
            {"cpa", b.cpa},
            {"x1", b.x1},
            {"x2", b.x2},
            {"mdca", b.mdca},
            {"recall", b.recall},
            {"precision", b.precision},
            {"target_items", b.target_items},
            {"synth_items", b.synth_items},
            {"matched_pairs", pairs}};
}

MetricBundle bundle_from_json(const Json& doc) {
    MetricBundle b;
    b.sc = doc.at("sc").get<double>();
    b.dc = doc.at("dc").get<double>();
    b.top1 = doc.at("top1").get<double>();
    b.cpa = doc.at("cpa").get<double>();
    b.x1 = doc.at("x1").get<double>();
    b.x2 = doc.at("x2").get<double>();
    b.mdca = doc.at("mdca").get<double>();
    b.recall = doc.value("recall", 0.0);
    b.precision = doc.value("precision", 0.0);
    b.target_items = doc.value("target_items", std::size_t{0});
    b.synth_items = doc.value("synth_items", std::size_t{0});
    if (doc.contains("matched_pairs")) {
        for (const auto& p : doc["matched_pairs"]) {
            b.matched_pairs.emplace_back(p.at(0).get<std::size_t>(), p.at(1).get<std::size_t>());
        }
    }
    return b;
}

double semantic_coherence(std::string_view target, std::string_view synth, const EmbeddingProvider& provider) {
    const auto a = provider.embed(target);
    const auto b = provider.embed(synth);
    if (a.is_zero() || b.is_zero()) return 0.0;
    return std::clamp(cosine(a, b), 0.0, 1.0);
}

DcResult diagnostic_correctness(const std::vector<DiagnosisItem>& target,
                                const std::vector<DiagnosisItem>& synth, const ItemMatchPolicy& policy) {
    require_target(target);
    const std::size_t nt = target.size();
    const std::size_t ns = synth.size();
    std::vector<std::vector<bool>> adj(nt, std::vector<bool>(ns));
    for (std::size_t i = 0; i < nt; ++i) {
        for (std::size_t j = 0; j < ns; ++j) adj[i][j] = match_items(target[i], synth[j], policy);
    }

    constexpr std::size_t kFree = static_cast<std::size_t>(-1);
    std::vector<std::size_t> synth_owner(ns, kFree);
    std::vector<std::size_t> target_mate(nt, kFree);
    for (std::size_t i = 0; i < nt; ++i) {
        for (std::size_t j = 0; j < ns; ++j) {
            if (adj[i][j] && synth_owner[j] == kFree) {
                synth_owner[j] = i;
                target_mate[i] = j;
                break;
            }
        }
    }
    // Augmenting paths from every target the greedy pass left unmatched.
    std::vector<bool> visited(ns);
    std::function<bool(std::size_t)> augment = [&](std::size_t i) {
        for (std::size_t j = 0; j < ns; ++j) {
            if (!adj[i][j] || visited[j]) continue;
            visited[j] = true;
            if (synth_owner[j] == kFree || augment(synth_owner[j])) {
                synth_owner[j] = i;
                target_mate[i] = j;
                return true;
            }
        }
        return false;
    };
    for (std::size_t i = 0; i < nt; ++i) {
        if (target_mate[i] != kFree) continue;
        std::fill(visited.begin(), visited.end(), false);
        augment(i);
    }

    DcResult r;
    for (std::size_t i = 0; i < nt; ++i) {
        if (target_mate[i] != kFree) r.pairs.emplace_back(target[i].index, synth[target_mate[i]].index);
    }
    const double matched = static_cast<double>(r.pairs.size());
    r.recall = matched / static_cast<double>(nt);
    r.precision = ns == 0 ? 0.0 : matched / static_cast<double>(ns);
    r.dc = (r.recall + r.precision) == 0.0 ? 0.0 : 2.0 * r.recall * r.precision / (r.recall + r.precision);
    return r;
}

int top1_match(const std::vector<DiagnosisItem>& target, const std::vector<DiagnosisItem>& synth,
               const ItemMatchPolicy& policy) {
    require_target(target);
    if (synth.empty()) return 0;
    return match_items(primary_item(target), primary_item(synth), policy) ? 1 : 0;
}

CpaResult clinical_prioritization(const std::vector<DiagnosisItem>& target,
                                  const std::vector<DiagnosisItem>& synth, const ItemMatchPolicy& policy) {
    CpaResult r;
    r.x1 = top1_match(target, synth, policy);
    if (target.size() == 1) {
        r.x2 = r.x1;
    } else {
        std::size_t hits = 0;
        for (std::size_t o = 2; o <= target.size(); ++o) {
            // window {o-1, o, o+1} in 1-based synth positions
            const std::size_t lo = o - 1;
            const std::size_t hi = std::min(o + 1, synth.size());
            for (std::size_t p = lo; p <= hi; ++p) {
                if (match_items(target[o - 1], synth[p - 1], policy)) {
                    ++hits;
                    break;
                }
            }
        }
        r.x2 = static_cast<double>(hits) / static_cast<double>(target.size() - 1);
    }
    r.cpa = 0.5 * r.x1 + 0.5 * r.x2;
    return r;
}

double mdca_score(double sc, double dc, double cpa, const Weights& weights) {
    require_unit(sc, "sc");
    require_unit(dc, "dc");
    require_unit(cpa, "cpa");
    return weights.sc() * sc + weights.dc() * dc + weights.cpa() * cpa;
}

MetricBundle score_items(const std::vector<DiagnosisItem>& target, const std::vector<DiagnosisItem>& synth,
                         double sc, const ItemMatchPolicy& policy, const Weights& weights) {
    MetricBundle b;
    const auto dc = diagnostic_correctness(target, synth, policy);
    const auto cpa = clinical_prioritization(target, synth, policy);
    b.sc = sc;
    b.dc = dc.dc;
    b.recall = dc.recall;
    b.precision = dc.precision;
    b.matched_pairs = dc.pairs;
    b.top1 = cpa.x1;
    b.x1 = cpa.x1;
    b.x2 = cpa.x2;
    b.cpa = cpa.cpa;
    b.mdca = mdca_score(b.sc, b.dc, b.cpa, weights);
    b.target_items = target.size();
    b.synth_items = synth.size();
    return b;
}

MetricBundle score_pair(std::string_view target_conclusion, std::string_view synth_conclusion,
                        const Lexicon& lexicon, const ItemMatchPolicy& policy,
                        const EmbeddingProvider& provider, const Weights& weights) {
    const auto target = segment_conclusion(target_conclusion, lexicon);
    std::vector<DiagnosisItem> synth;
    try {
        synth = segment_conclusion(synth_conclusion, lexicon);
    } catch (const Error& e) {
        if (e.code() != ErrorCode::kNoItemsFound) throw;
    }
    const double sc = semantic_coherence(target_conclusion, synth_conclusion, provider);
    return score_items(target, synth, sc, policy, weights);
}

}  // namespace mdca
