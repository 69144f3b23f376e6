/// @file metrics.hpp
/// @brief Per-report credibility metrics: semantic coherence (SC), diagnostic
/// correctness (DC), top-1 match, clinical prioritization alignment (CPA) and
/// the weighted MDCA composite.

#pragma once

#include <cstddef>
#include <string_view>
#include <utility>
#include <vector>

#include "mdca/embedding.hpp"
#include "mdca/taxonomy.hpp"

namespace mdca {

/// Composite weights. Components lie in [0,1] and sum to 1 within 1e-12.
class Weights {
public:
    Weights() = default;

    /// Throws WeightSumInvalid on a bad component or sum.
    static Weights make(double sc, double dc, double cpa);

    double sc() const { return sc_; }
    double dc() const { return dc_; }
    double cpa() const { return cpa_; }

    bool operator==(const Weights&) const = default;

private:
    Weights(double sc, double dc, double cpa) : sc_(sc), dc_(dc), cpa_(cpa) {}

    double sc_ = 0.2;
    double dc_ = 0.4;
    double cpa_ = 0.4;
};

Json to_json(const Weights& weights);
Weights weights_from_json(const Json& doc);

/// (target index, synth index), both 1-based.
using MatchedPair = std::pair<std::size_t, std::size_t>;

struct DcResult {
    double dc = 0.0;
    double recall = 0.0;
    double precision = 0.0;
    std::vector<MatchedPair> pairs;
};

struct CpaResult {
    double cpa = 0.0;
    double x1 = 0.0;
    double x2 = 0.0;
};

struct MetricBundle {
    double sc = 0.0;
    double dc = 0.0;
    double top1 = 0.0;
    double cpa = 0.0;
    double x1 = 0.0;
    double x2 = 0.0;
    double mdca = 0.0;
    double recall = 0.0;
    double precision = 0.0;
    std::size_t target_items = 0;
    std::size_t synth_items = 0;
    std::vector<MatchedPair> matched_pairs;

    bool operator==(const MetricBundle&) const = default;
};

Json to_json(const MetricBundle& bundle);
MetricBundle bundle_from_json(const Json& doc);

/// Cosine of the two embeddings clamped to [0,1]; 0 if either is a zero vector.
double semantic_coherence(std::string_view target, std::string_view synth,
                          const EmbeddingProvider& provider);

/// One-to-one keyword matching between target and synthesized items.
///
/// A greedy pass pairs each target (in order) with the first unconsumed synth
/// item it matches; augmenting paths then raise the pairing to maximum
/// cardinality, which makes the count independent of item order.
/// dc is the harmonic mean of recall = |pairs|/|target| and
/// precision = |pairs|/|synth| (0 when synth is empty or nothing matches).
/// Throws EmptyTarget.
DcResult diagnostic_correctness(const std::vector<DiagnosisItem>& target,
                                const std::vector<DiagnosisItem>& synth,
                                const ItemMatchPolicy& policy);

/// 1 iff synth is nonempty and the primary items match. Throws EmptyTarget.
int top1_match(const std::vector<DiagnosisItem>& target, const std::vector<DiagnosisItem>& synth,
               const ItemMatchPolicy& policy);

/// x1 = top-1 match. Each target item at position o > 1 scores 1 if it
/// matches any synth item at o-1, o or o+1 (missing positions skipped);
/// x2 is the mean of those scores, or x1 when the target has one item.
/// cpa = 0.5*x1 + 0.5*x2. Throws EmptyTarget.
CpaResult clinical_prioritization(const std::vector<DiagnosisItem>& target,
                                  const std::vector<DiagnosisItem>& synth,
                                  const ItemMatchPolicy& policy);

/// Weighted composite; inputs must lie in [0,1].
double mdca_score(double sc, double dc, double cpa, const Weights& weights = {});

/// Scores already-segmented items; sc is supplied by the caller.
MetricBundle score_items(const std::vector<DiagnosisItem>& target,
                         const std::vector<DiagnosisItem>& synth, double sc,
                         const ItemMatchPolicy& policy, const Weights& weights);

/// Full metric bundle for one (ground truth, generated) conclusion pair.
/// A synth that yields no items scores dc = top1 = cpa = 0 with sc computed
/// on the raw text.
MetricBundle score_pair(std::string_view target_conclusion, std::string_view synth_conclusion,
                        const Lexicon& lexicon, const ItemMatchPolicy& policy,
                        const EmbeddingProvider& provider, const Weights& weights = {});

}  // namespace mdca
