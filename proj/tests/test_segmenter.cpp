#include <gtest/gtest.h>

#include <random>

#include "mdca/error.hpp"
#include "mdca/segmenter.hpp"
#include "mdca/text.hpp"

using namespace mdca;

namespace {

const char* kSample = "1. 肝IVb段占位，考虑HCC可能。2. 肝硬化伴门脉高压。3. 肝门部淋巴结增大，转移不除外。";

std::u32string strip_space(std::string_view s) {
    std::u32string out;
    for (char32_t c : text::decode_utf8(s))
        if (!text::is_space(c)) out.push_back(c);
    return out;
}

}  // namespace

TEST(Segment, SampleReport) {
    const auto items = segment_conclusion(kSample, default_lexicon());
    ASSERT_EQ(items.size(), 3u);
    EXPECT_TRUE(items[0].concepts.count("hcc"));
    EXPECT_TRUE(items[2].concepts.count("lymphadenopathy"));
    EXPECT_EQ(items[0].raw, "肝IVb段占位，考虑HCC可能。");
    EXPECT_EQ(items[0].tier, Tier::kTop1);
    EXPECT_TRUE(items[0].locations.count("seg4b"));
    EXPECT_TRUE(primary_item(items).concepts.count("hcc"));
}

TEST(Segment, SingleLineWithoutNumbering) {
    const auto items = segment_conclusion("肝血管瘤", default_lexicon());
    ASSERT_EQ(items.size(), 1u);
    EXPECT_EQ(items[0].index, 1u);
    EXPECT_TRUE(items[0].concepts.count("hemangioma"));
}

TEST(Segment, MarkerStyles) {
    const auto& lex = default_lexicon();
    EXPECT_EQ(segment_conclusion("①肝硬化②脾大③胆囊结石", lex).size(), 3u);
    EXPECT_EQ(segment_conclusion("（1）肝硬化（2）脾大", lex).size(), 2u);
    EXPECT_EQ(segment_conclusion("(1) cirrhosis (2) renal cyst", lex).size(), 2u);
    EXPECT_EQ(segment_conclusion("1、肝硬化\n2、脾大", lex).size(), 2u);
}

TEST(Segment, NewlinesWhenNoMarkers) {
    const auto items = segment_conclusion("肝硬化\n\n  双肾囊肿  \n", default_lexicon());
    ASSERT_EQ(items.size(), 2u);
    EXPECT_EQ(items[1].raw, "双肾囊肿");
}

TEST(Segment, DecimalIsNotAMarker) {
    const auto items = segment_conclusion("1. 肝右叶结节约2.5cm，考虑FNH。2. 肝囊肿。", default_lexicon());
    ASSERT_EQ(items.size(), 2u);
    EXPECT_NE(items[0].raw.find("2.5cm"), std::string::npos);
}

TEST(Segment, TrailingWrappedLineJoinsLastItem) {
    const auto items = segment_conclusion("1. 肝硬化\n2. 肝门部淋巴结增大，\n转移不除外", default_lexicon());
    ASSERT_EQ(items.size(), 2u);
    EXPECT_TRUE(items[1].concepts.count("metastasis"));
}

TEST(Segment, UnknownTextGetsSyntheticConcept) {
    const auto items = segment_conclusion("1. 脾大。", default_lexicon());
    ASSERT_EQ(items.size(), 1u);
    ASSERT_EQ(items[0].concepts.size(), 1u);
    EXPECT_TRUE(items[0].concepts.begin()->starts_with(kSyntheticConceptPrefix));
    EXPECT_FALSE(items[0].tier.has_value());
    // verbatim-equal unknown findings still match
    EXPECT_TRUE(match_items(items[0], segment_conclusion("脾大", default_lexicon())[0], {}));
}

TEST(Segment, EmptyInputThrows) {
    for (const char* s : {"", "   \n ", "1. 2. "}) {
        try {
            segment_conclusion(s, default_lexicon());
            FAIL() << s;
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::kNoItemsFound);
        }
    }
}

TEST(PrimaryItem, EmptyListThrows) {
    try {
        primary_item({});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kEmptyList);
    }
}

TEST(Serialize, RoundTripsThroughSegmenter) {
    const std::vector<std::string> raws{"肝硬化。", "脾大。", "双肾囊肿。"};
    const auto items = segment_conclusion(serialize_items(raws), default_lexicon());
    ASSERT_EQ(items.size(), raws.size());
    for (std::size_t i = 0; i < raws.size(); ++i) EXPECT_EQ(items[i].raw, raws[i]);
}

// Property: k generated items with random marker styles and separators come
// back as exactly k contiguous items whose raw text reconstructs the input.
TEST(SegmentProperty, GeneratedNumberedConclusions) {
    std::mt19937_64 gen(20240501);
    const std::vector<std::string> bodies{"肝硬化伴门脉高压。", "肝右叶血管瘤", "双肾囊肿。",  "胆囊结石；",
                                          "左侧胸腔积液",       "脾大",         "renal cyst.", "S8 FNH"};
    const std::vector<std::string> seps{" ", "\n", "", "\r\n"};
    for (int trial = 0; trial < 300; ++trial) {
        const std::size_t k = 1 + gen() % 8;
        const int style = static_cast<int>(gen() % 4);
        std::string input;
        std::vector<std::string> chosen;
        for (std::size_t i = 1; i <= k; ++i) {
            std::string m;
            switch (style) {
                case 0: m = std::to_string(i) + ". "; break;
                case 1: m = std::to_string(i) + "、"; break;
                case 2: m = "（" + std::to_string(i) + "）"; break;
                default: m = text::encode_utf8(std::u32string(1, static_cast<char32_t>(0x2460 + i - 1))); break;
            }
            const auto& body = bodies[gen() % bodies.size()];
            chosen.push_back(body);
            std::string sep = seps[gen() % seps.size()];
            // bare digits glued to a CJK character are not read as markers
            if (sep.empty() && style < 2) sep = " ";
            input += m + body + (i < k ? sep : "");
        }
        const auto items = segment_conclusion(input, default_lexicon());
        ASSERT_EQ(items.size(), k) << input;
        std::u32string rebuilt;
        for (std::size_t i = 0; i < k; ++i) {
            EXPECT_EQ(items[i].index, i + 1);
            EXPECT_EQ(items[i].raw, text::trim(chosen[i]));
            rebuilt += strip_space(items[i].raw);
        }
        // input minus markers and whitespace equals the joined raw fields
        std::u32string expected;
        for (std::size_t i = 0; i < k; ++i) expected += strip_space(chosen[i]);
        EXPECT_EQ(rebuilt, expected);
        EXPECT_EQ(items, segment_conclusion(input, default_lexicon()));
    }
}
