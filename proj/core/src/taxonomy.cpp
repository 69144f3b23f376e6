#include "mdca/taxonomy.hpp"

#include <algorithm>
#include <array>
#include <cctype>

#include "mdca/error.hpp"
#include "mdca/text.hpp"

namespace mdca {
namespace {

bool sets_intersect(const std::set<std::string>& a, const std::set<std::string>& b) {
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        const int c = ia->compare(*ib);
        if (c == 0) return true;
        if (c < 0) {
            ++ia;
        } else {
            ++ib;
        }
    }
    return false;
}

void sort_index(auto& index) {
    std::sort(index.begin(), index.end(), [](const auto& x, const auto& y) {
        if (x.key.size() != y.key.size()) return x.key.size() > y.key.size();
        return x.key < y.key;
    });
}

std::vector<LocationMarker> default_locations() {
    static constexpr std::array<std::pair<std::string_view, std::string_view>, 10> kSegments{{
        {"seg1", "I"},  {"seg2", "II"}, {"seg3", "III"}, {"seg4", "IV"},   {"seg4a", "IVa"},
        {"seg4b", "IVb"}, {"seg5", "V"}, {"seg6", "VI"},  {"seg7", "VII"}, {"seg8", "VIII"},
    }};
    static constexpr std::array<std::string_view, 10> kArabic{"1", "2", "3", "4", "4a",
                                                              "4b", "5", "6", "7", "8"};
    std::vector<LocationMarker> out;
    for (std::size_t i = 0; i < kSegments.size(); ++i) {
        const auto [id, roman] = kSegments[i];
        out.push_back({std::string(id),
                       {std::string(roman) + "段", "segment " + std::string(roman),
                        "segment " + std::string(kArabic[i])}});
    }
    out.push_back({"left_lobe", {"肝左叶", "左叶", "left lobe", "left hepatic lobe"}});
    out.push_back({"right_lobe", {"肝右叶", "右叶", "right lobe", "right hepatic lobe"}});
    out.push_back({"caudate_lobe", {"尾状叶", "caudate lobe"}});
    out.push_back({"porta_hepatis",
                   {"肝门部", "肝门区", "porta hepatis", "hepatic hilum", "periportal", "hilar"}});
    out.push_back({"gallbladder", {"胆囊", "gallbladder"}});
    out.push_back({"left_kidney", {"左肾", "left kidney"}});
    out.push_back({"right_kidney", {"右肾", "right kidney"}});
    out.push_back({"both_kidneys", {"双肾", "bilateral kidneys", "both kidneys"}});
    out.push_back({"left_pleura", {"左侧胸腔", "left pleural"}});
    out.push_back({"right_pleura", {"右侧胸腔", "right pleural"}});
    out.push_back({"both_pleura", {"双侧胸腔", "bilateral pleural"}});
    return out;
}

std::vector<Concept> default_concepts() {
    return {
        {"hcc", Tier::kTop1,
         {"HCC", "肝细胞癌", "肝癌", "原发性肝癌", "hepatocellular carcinoma"},
         "malignant"},
        {"icc", Tier::kTop1,
         {"ICC", "胆管细胞癌", "肝内胆管细胞癌", "肝内胆管癌", "cholangiocarcinoma",
          "intrahepatic cholangiocarcinoma"},
         "malignant"},
        {"metastasis", Tier::kTop1,
         {"转移瘤", "转移灶", "转移", "metastasis", "metastases", "metastatic"},
         "malignant"},
        {"fnh", Tier::kTop2,
         {"FNH", "局灶性结节增生", "局灶性结节性增生", "focal nodular hyperplasia"},
         "benign_lesion"},
        {"hemangioma", Tier::kTop2,
         {"血管瘤", "肝血管瘤", "hemangioma", "haemangioma"},
         "benign_lesion"},
        {"cirrhosis", Tier::kTop3,
         {"肝硬化", "cirrhosis", "liver cirrhosis"},
         "diffuse_liver_disease"},
        {"portal_hypertension", Tier::kTop3,
         {"门脉高压", "门静脉高压", "门脉高压症", "portal hypertension"},
         "diffuse_liver_disease"},
        {"perfusion_anomaly", Tier::kTop4,
         {"灌注异常", "异常灌注", "perfusion anomaly", "perfusion anomalies",
          "perfusion abnormality"},
         "secondary_finding"},
        {"lymphadenopathy", Tier::kTop4,
         {"淋巴结增大", "淋巴结肿大", "淋巴结", "lymphadenopathy", "enlarged lymph nodes",
          "enlarged lymph node", "lymph node enlargement", "lymph nodes", "lymph node"},
         "secondary_finding"},
        {"biliary_stones", Tier::kTop4,
         {"胆系结石", "胆结石", "胆囊结石", "胆管结石", "胆总管结石", "biliary stones",
          "biliary stone", "gallstones", "gallstone", "cholelithiasis", "choledocholithiasis"},
         "secondary_finding"},
        {"renal_cyst", Tier::kTop5,
         {"肾囊肿", "renal cyst", "renal cysts", "kidney cyst"},
         "incidental_extrahepatic"},
        {"pleural_effusion", Tier::kTop5,
         {"胸腔积液", "胸水", "pleural effusion", "pleural effusions"},
         "incidental_extrahepatic"},
    };
}

}  // namespace

std::string_view to_string(Tier tier) {
    switch (tier) {
        case Tier::kTop1: return "TOP1";
        case Tier::kTop2: return "TOP2";
        case Tier::kTop3: return "TOP3";
        case Tier::kTop4: return "TOP4";
        case Tier::kTop5: return "TOP5";
    }
    return "TOP?";
}

Tier parse_tier(std::string_view name) {
    std::string upper;
    for (char c : name) upper.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
    if (upper.size() == 4 && upper.starts_with("TOP") && upper[3] >= '1' && upper[3] <= '5') {
        return static_cast<Tier>(upper[3] - '0');
    }
    throw Error(ErrorCode::kUnknownTier, std::string(name));
}

Lexicon::Lexicon(std::string version, std::vector<Concept> concepts,
                 std::vector<LocationMarker> locations)
    : version_(std::move(version)), concepts_(std::move(concepts)), locations_(std::move(locations)) {
    std::unordered_map<std::u32string, std::string> owner;
    for (std::size_t i = 0; i < concepts_.size(); ++i) {
        const Concept& c = concepts_[i];
        if (c.id.empty() || c.id.starts_with(kSyntheticConceptPrefix)) {
            throw Error(ErrorCode::kInvalidArgument, "invalid concept id '" + c.id + "'");
        }
        if (!by_id_.emplace(c.id, i).second) {
            throw Error(ErrorCode::kInvalidArgument, "duplicate concept id '" + c.id + "'");
        }
        if (c.synonyms.empty()) {
            throw Error(ErrorCode::kInvalidArgument, "concept '" + c.id + "' has no synonyms");
        }
        for (const auto& syn : c.synonyms) {
            auto key = text::match_key(syn);
            if (key.empty()) {
                throw Error(ErrorCode::kInvalidArgument, "concept '" + c.id + "' has a blank synonym");
            }
            auto [it, inserted] = owner.emplace(key, c.id);
            if (!inserted) {
                if (it->second != c.id) {
                    throw Error(ErrorCode::kAmbiguousSynonym,
                                "'" + syn + "' maps to both '" + it->second + "' and '" + c.id + "'");
                }
                continue;
            }
            synonym_index_.push_back({std::move(key), c.id});
        }
    }
    std::unordered_map<std::u32string, std::string> location_owner;
    for (const auto& marker : locations_) {
        for (const auto& surface : marker.surfaces) {
            auto key = text::match_key(surface);
            if (key.empty()) continue;
            auto [it, inserted] = location_owner.emplace(key, marker.id);
            if (!inserted) {
                if (it->second != marker.id) {
                    throw Error(ErrorCode::kAmbiguousSynonym, "location '" + surface + "' maps to both '" +
                                                                  it->second + "' and '" + marker.id + "'");
                }
                continue;
            }
            location_index_.push_back({std::move(key), marker.id});
        }
    }
    sort_index(synonym_index_);
    sort_index(location_index_);
}

const Concept* Lexicon::find(std::string_view id) const {
    auto it = by_id_.find(std::string(id));
    return it == by_id_.end() ? nullptr : &concepts_[it->second];
}

std::set<std::string> Lexicon::scan(std::u32string_view key, const std::vector<Entry>& index) {
    std::set<std::string> found;
    if (key.empty()) return found;
    std::vector<bool> consumed(key.size(), false);
    for (const auto& entry : index) {
        const std::size_t len = entry.key.size();
        std::size_t pos = key.find(entry.key);
        while (pos != std::u32string_view::npos) {
            const bool free = std::none_of(consumed.begin() + static_cast<std::ptrdiff_t>(pos),
                                           consumed.begin() + static_cast<std::ptrdiff_t>(pos + len),
                                           [](bool b) { return b; });
            if (free) {
                std::fill_n(consumed.begin() + static_cast<std::ptrdiff_t>(pos), len, true);
                found.insert(entry.id);
                pos = key.find(entry.key, pos + len);
            } else {
                pos = key.find(entry.key, pos + 1);
            }
        }
    }
    return found;
}

std::set<std::string> Lexicon::concepts_in(std::string_view text) const {
    return scan(text::match_key(text), synonym_index_);
}

std::set<std::string> Lexicon::locations_in(std::string_view text) const {
    return scan(text::match_key(text), location_index_);
}

const Lexicon& default_lexicon() {
    static const Lexicon lexicon("liver-mri-default-1", default_concepts(), default_locations());
    return lexicon;
}

Lexicon lexicon_from_json(const Json& doc) {
    if (!doc.is_object() || !doc.contains("concepts") || !doc["concepts"].is_array()) {
        throw Error(ErrorCode::kParse, "lexicon document needs a 'concepts' array");
    }
    std::vector<Concept> concepts;
    for (const auto& c : doc["concepts"]) {
        Concept concept_entry;
        try {
            concept_entry.id = c.at("id").get<std::string>();
            concept_entry.tier = parse_tier(c.at("tier").get<std::string>());
            concept_entry.synonyms = c.at("synonyms").get<std::vector<std::string>>();
            concept_entry.category = c.value("category", "");
        } catch (const Json::exception& e) {
            throw Error(ErrorCode::kParse, std::string("lexicon concept: ") + e.what());
        }
        concepts.push_back(std::move(concept_entry));
    }
    std::vector<LocationMarker> locations;
    if (doc.contains("location_markers")) {
        for (const auto& m : doc["location_markers"]) {
            if (m.is_string()) {
                const auto surface = m.get<std::string>();
                locations.push_back({text::encode_utf8(text::match_key(surface)), {surface}});
            } else {
                try {
                    locations.push_back({m.at("id").get<std::string>(),
                                         m.at("surfaces").get<std::vector<std::string>>()});
                } catch (const Json::exception& e) {
                    throw Error(ErrorCode::kParse, std::string("lexicon location marker: ") + e.what());
                }
            }
        }
    }
    return Lexicon(doc.value("version", "unversioned"), std::move(concepts), std::move(locations));
}

Lexicon load_lexicon(const std::filesystem::path& path) {
    return lexicon_from_json(load_structured_file(path));
}

Json to_json(const Lexicon& lexicon) {
    Json concepts = Json::array();
    for (const auto& c : lexicon.concepts()) {
        concepts.push_back({{"id", c.id},
                            {"tier", std::string(to_string(c.tier))},
                            {"synonyms", c.synonyms},
                            {"category", c.category}});
    }
    Json markers = Json::array();
    for (const auto& m : lexicon.location_markers()) {
        markers.push_back({{"id", m.id}, {"surfaces", m.surfaces}});
    }
    return {{"version", lexicon.version()}, {"concepts", concepts}, {"location_markers", markers}};
}

std::set<std::string> normalize_text(std::string_view text, const Lexicon& lexicon) {
    return lexicon.concepts_in(text);
}

Json to_json(const ItemMatchPolicy& policy) {
    return {{"require_location_agreement", policy.require_location_agreement},
            {"location_agreement",
             policy.location_agreement == LocationAgreement::kOverlap ? "overlap" : "ignore"}};
}

ItemMatchPolicy policy_from_json(const Json& doc) {
    ItemMatchPolicy policy;
    policy.require_location_agreement = doc.value("require_location_agreement", false);
    const auto mode = doc.value("location_agreement", std::string("ignore"));
    if (mode == "overlap") {
        policy.location_agreement = LocationAgreement::kOverlap;
    } else if (mode != "ignore") {
        throw Error(ErrorCode::kInvalidArgument, "location_agreement must be ignore|overlap");
    }
    return policy;
}

bool match_items(const DiagnosisItem& a, const DiagnosisItem& b, const ItemMatchPolicy& policy) {
    if (a.lexicon_version != b.lexicon_version) {
        throw Error(ErrorCode::kLexiconMismatch, a.lexicon_version + " vs " + b.lexicon_version);
    }
    if (!sets_intersect(a.concepts, b.concepts)) return false;
    if (policy.require_location_agreement &&
        policy.location_agreement == LocationAgreement::kOverlap && !a.locations.empty() &&
        !b.locations.empty()) {
        return sets_intersect(a.locations, b.locations);
    }
    return true;
}

}  // namespace mdca
