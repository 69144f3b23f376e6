#include <gtest/gtest.h>

#include "mdca/error.hpp"
#include "mdca/segmenter.hpp"
#include "mdca/taxonomy.hpp"
#include "mdca/text.hpp"
#include "test_support.hpp"

using namespace mdca;
using mdca::testing::item_of;

namespace {

// Brute-force substring scan: every concept whose folded synonym occurs
// anywhere in the folded text. Agrees with the library whenever no matched
// synonym is nested inside a longer one.
std::set<std::string> substring_oracle(const std::string& text, const Lexicon& lex) {
    const auto key = text::match_key(text);
    std::set<std::string> out;
    for (const auto& c : lex.concepts())
        for (const auto& syn : c.synonyms)
            if (key.find(text::match_key(syn)) != std::u32string::npos) out.insert(c.id);
    return out;
}

}  // namespace

TEST(DefaultLexicon, TiersFollowTheTaxonomy) {
    const auto& lex = default_lexicon();
    for (const char* id : {"hcc", "icc", "metastasis"}) EXPECT_EQ(lex.find(id)->tier, Tier::kTop1) << id;
    for (const char* id : {"fnh", "hemangioma"}) EXPECT_EQ(lex.find(id)->tier, Tier::kTop2) << id;
    for (const char* id : {"cirrhosis", "portal_hypertension"}) EXPECT_EQ(lex.find(id)->tier, Tier::kTop3) << id;
    EXPECT_EQ(lex.find("renal_cyst")->tier, Tier::kTop5);
    EXPECT_EQ(lex.find("pleural_effusion")->tier, Tier::kTop5);
    EXPECT_EQ(lex.find("nope"), nullptr);
}

TEST(Tier, ParseAndPrint) {
    EXPECT_EQ(parse_tier("top3"), Tier::kTop3);
    EXPECT_EQ(to_string(Tier::kTop1), "TOP1");
    try {
        parse_tier("TOP6");
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kUnknownTier);
    }
}

TEST(NormalizeText, Examples) {
    const auto& lex = default_lexicon();
    EXPECT_EQ(normalize_text("肝IVb段占位，考虑HCC可能", lex), (std::set<std::string>{"hcc"}));
    EXPECT_TRUE(normalize_text("", lex).empty());
    const std::string s = "肝硬化伴门脉高压";
    EXPECT_EQ(normalize_text(s, lex), (std::set<std::string>{"cirrhosis", "portal_hypertension"}));
    EXPECT_EQ(normalize_text(s, lex), substring_oracle(s, lex));
}

TEST(NormalizeText, LongestSynonymWins) {
    // "肝内胆管细胞癌" contains the hcc-free "胆管细胞癌" only through icc.
    EXPECT_EQ(normalize_text("肝内胆管细胞癌", default_lexicon()), (std::set<std::string>{"icc"}));
}

TEST(NormalizeText, CaseAndWidthVariantsAgree) {
    const auto& lex = default_lexicon();
    for (const auto& c : lex.concepts()) {
        for (const auto& syn : c.synonyms) {
            std::string upper = syn;
            for (auto& ch : upper) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
            EXPECT_TRUE(normalize_text(upper, lex).count(c.id)) << syn;
            EXPECT_TRUE(normalize_text(syn, lex).count(c.id)) << syn;
        }
    }
}

TEST(NormalizeText, IdempotentOverSynonymText) {
    const auto& lex = default_lexicon();
    for (const auto& c : lex.concepts()) {
        const auto once = normalize_text(c.synonyms.front(), lex);
        EXPECT_EQ(once, normalize_text(c.synonyms.front(), lex));
    }
}

TEST(Lexicon, AmbiguousSynonymRejected) {
    const Json doc = {{"version", "t"},
                      {"concepts",
                       {{{"id", "a"}, {"tier", "TOP1"}, {"synonyms", {"肝癌"}}},
                        {{"id", "b"}, {"tier", "TOP2"}, {"synonyms", {"肝 癌"}}}}}};
    try {
        lexicon_from_json(doc);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kAmbiguousSynonym);
    }
}

TEST(Lexicon, AdversarialWidthCollisionsRejected) {
    // Full-width and upper-case spellings of the same synonym must collide.
    const std::vector<std::pair<std::string, std::string>> pairs{
        {"HCC", "ｈｃｃ"}, {"Cyst", "cyst"}, {"a b", "ab"}};
    for (const auto& [x, y] : pairs) {
        const Json doc = {{"concepts",
                           {{{"id", "p"}, {"tier", "TOP1"}, {"synonyms", {x}}},
                            {{"id", "q"}, {"tier", "TOP1"}, {"synonyms", {y}}}}}};
        EXPECT_THROW(lexicon_from_json(doc), Error) << x << " / " << y;
    }
}

TEST(Lexicon, UnknownTierRejected) {
    const Json doc = {{"concepts", {{{"id", "a"}, {"tier", "TOP9"}, {"synonyms", {"x"}}}}}};
    try {
        lexicon_from_json(doc);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kUnknownTier);
    }
}

TEST(Lexicon, JsonRoundTrip) {
    const auto& lex = default_lexicon();
    const auto copy = lexicon_from_json(to_json(lex));
    EXPECT_EQ(copy.version(), lex.version());
    ASSERT_EQ(copy.concepts().size(), lex.concepts().size());
    EXPECT_EQ(normalize_text("肝硬化伴门脉高压，双肾囊肿", copy),
              normalize_text("肝硬化伴门脉高压，双肾囊肿", lex));
}

TEST(Lexicon, LoadsYamlFile) {
    mdca::testing::TempDir dir;
    mdca::testing::write_file(dir / "lex.yaml",
                              "version: y1\n"
                              "concepts:\n"
                              "  - id: cyst\n    tier: TOP5\n    synonyms: [囊肿, cyst]\n"
                              "location_markers: [左叶]\n");
    const auto lex = load_lexicon(dir / "lex.yaml");
    EXPECT_EQ(lex.version(), "y1");
    EXPECT_EQ(normalize_text("左叶CYST", lex), (std::set<std::string>{"cyst"}));
    EXPECT_FALSE(lex.locations_in("左叶CYST").empty());
}

TEST(MatchItems, BilingualSampleLinesMatch) {
    const auto& lex = default_lexicon();
    const auto zh = make_item(1, "肝IVb段占位，考虑HCC可能。", lex);
    const auto en = make_item(1, "Segment IVb lesion suggestive of HCC.", lex);
    EXPECT_TRUE(match_items(zh, en, {}));
    EXPECT_TRUE(match_items(zh, en, {true, LocationAgreement::kOverlap}));
}

TEST(MatchItems, ReflexiveSymmetricDisjoint) {
    const auto a = item_of(1, {"hemangioma"});
    const auto b = item_of(1, {"hcc"});
    EXPECT_FALSE(match_items(a, b, {}));
    EXPECT_TRUE(match_items(a, a, {}));
    const auto c = item_of(2, {"hcc", "cirrhosis"});
    EXPECT_EQ(match_items(b, c, {}), match_items(c, b, {}));
    EXPECT_TRUE(match_items(b, c, {}));
}

TEST(MatchItems, LocationPolicy) {
    const ItemMatchPolicy strict{true, LocationAgreement::kOverlap};
    const auto a = item_of(1, {"hcc"}, {"seg4b"});
    const auto b = item_of(1, {"hcc"}, {"seg7"});
    const auto c = item_of(1, {"hcc"});
    EXPECT_TRUE(match_items(a, b, {}));
    EXPECT_FALSE(match_items(a, b, strict));
    EXPECT_TRUE(match_items(a, c, strict));  // one side without location
}

TEST(MatchItems, VersionMismatchThrows) {
    auto a = item_of(1, {"hcc"});
    auto b = a;
    b.lexicon_version = "other";
    try {
        match_items(a, b, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kLexiconMismatch);
    }
}

TEST(MatchItems, PropertySymmetryOverRandomSets) {
    std::mt19937_64 gen(11);
    const std::vector<std::string> alphabet{"a", "b", "c", "d"};
    for (int trial = 0; trial < 500; ++trial) {
        auto draw = [&] {
            std::set<std::string> s;
            const int k = 1 + static_cast<int>(gen() % 3);
            for (int i = 0; i < k; ++i) s.insert(alphabet[gen() % alphabet.size()]);
            return s;
        };
        const auto x = item_of(1, draw());
        const auto y = item_of(1, draw());
        EXPECT_EQ(match_items(x, y, {}), match_items(y, x, {}));
        EXPECT_TRUE(match_items(x, x, {}));
        EXPECT_EQ(match_items(x, y, {}), mdca::testing::oracle::overlaps(x.concepts, y.concepts));
    }
}

TEST(Policy, JsonRoundTrip) {
    const ItemMatchPolicy p{true, LocationAgreement::kOverlap};
    EXPECT_EQ(policy_from_json(to_json(p)), p);
    EXPECT_EQ(policy_from_json(to_json(ItemMatchPolicy{})), ItemMatchPolicy{});
}
