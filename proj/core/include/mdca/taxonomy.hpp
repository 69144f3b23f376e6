/// @file taxonomy.hpp
/// @brief Tiered diagnostic taxonomy, bilingual synonym lexicon, and the
/// item-level keyword match predicate.
///
/// The lexicon maps surface strings (Chinese, English, abbreviations) to
/// canonical concept ids. Matching runs on folded text (case, full/half
/// width, whitespace removed) with longest-synonym-first, non-overlapping
/// consumption, so "肝内胆管细胞癌" is claimed by one synonym and is not
/// re-read through a shorter one that it contains.

#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mdca/structured_io.hpp"

namespace mdca {

/// Diagnostic priority tier. kTop1 is the most urgent (malignant).
enum class Tier { kTop1 = 1, kTop2, kTop3, kTop4, kTop5 };

std::string_view to_string(Tier tier);
/// Accepts "TOP1".."TOP5" in any case; throws UnknownTier otherwise.
Tier parse_tier(std::string_view name);

struct Concept {
    std::string id;
    Tier tier = Tier::kTop5;
    std::vector<std::string> synonyms;
    std::string category;
};

/// An anatomical location with its surface forms ("IVb段", "segment IVb").
struct LocationMarker {
    std::string id;
    std::vector<std::string> surfaces;
};

/// Concept ids produced for text that matches nothing in the lexicon start
/// with this prefix, followed by the folded text itself.
inline constexpr std::string_view kSyntheticConceptPrefix = "~";

/// One parsed conclusion line.
struct DiagnosisItem {
    std::size_t index = 0;  // 1-based position within its conclusion
    std::string raw;
    std::set<std::string> concepts;
    std::set<std::string> locations;
    std::optional<Tier> tier;  // empty when only synthetic concepts are present
    std::string lexicon_version;

    bool operator==(const DiagnosisItem&) const = default;
};

class Lexicon {
public:
    /// Validates ids, tiers and synonym uniqueness; throws AmbiguousSynonym
    /// when two concepts share a folded synonym.
    Lexicon(std::string version, std::vector<Concept> concepts,
            std::vector<LocationMarker> locations);

    const std::string& version() const { return version_; }
    const std::vector<Concept>& concepts() const { return concepts_; }
    const std::vector<LocationMarker>& location_markers() const { return locations_; }

    const Concept* find(std::string_view id) const;

    std::set<std::string> concepts_in(std::string_view text) const;
    std::set<std::string> locations_in(std::string_view text) const;

private:
    struct Entry {
        std::u32string key;
        std::string id;
    };

    static std::set<std::string> scan(std::u32string_view key, const std::vector<Entry>& index);

    std::string version_;
    std::vector<Concept> concepts_;
    std::vector<LocationMarker> locations_;
    std::vector<Entry> synonym_index_;   // longest key first
    std::vector<Entry> location_index_;  // longest key first
    std::unordered_map<std::string, std::size_t> by_id_;
};

/// Built-in lexicon covering the liver MRI taxonomy (TOP1-TOP5 lists,
/// verification checklist terms and the sample report vocabulary).
const Lexicon& default_lexicon();

/// Parses {version, concepts: [{id, tier, synonyms[], category}], location_markers[]}.
/// A location marker may be a bare string or {id, surfaces[]}.
Lexicon lexicon_from_json(const Json& doc);
Lexicon load_lexicon(const std::filesystem::path& path);
Json to_json(const Lexicon& lexicon);

/// All concept ids whose synonyms occur in text. Empty text yields {}.
std::set<std::string> normalize_text(std::string_view text, const Lexicon& lexicon);

enum class LocationAgreement { kIgnore, kOverlap };

struct ItemMatchPolicy {
    bool require_location_agreement = false;
    LocationAgreement location_agreement = LocationAgreement::kIgnore;

    bool operator==(const ItemMatchPolicy&) const = default;
};

Json to_json(const ItemMatchPolicy& policy);
ItemMatchPolicy policy_from_json(const Json& doc);

/// Keyword match between two items: concept sets intersect and, when the
/// policy asks for it, location sets intersect or one side has none.
/// Symmetric. Throws LexiconMismatch if the items came from different
/// lexicon versions.
bool match_items(const DiagnosisItem& a, const DiagnosisItem& b, const ItemMatchPolicy& policy);

}  // namespace mdca
