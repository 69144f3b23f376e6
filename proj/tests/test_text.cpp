#include <gtest/gtest.h>

#include "mdca/hashing.hpp"
#include "mdca/random.hpp"
#include "mdca/text.hpp"

using namespace mdca;

TEST(Utf8, RoundTripsMixedScripts) {
    const std::string s = "肝IVb段 lesion ① （1）";
    EXPECT_EQ(text::encode_utf8(text::decode_utf8(s)), s);
    EXPECT_EQ(text::utf8_length("肝硬化"), 3u);
    EXPECT_EQ(text::utf8_length("abc"), 3u);
}

TEST(Utf8, InvalidBytesBecomeReplacementChar) {
    const auto cps = text::decode_utf8(std::string("a\xff" "b"));
    ASSERT_EQ(cps.size(), 3u);
    EXPECT_EQ(cps[1], U'�');
}

TEST(Fold, CaseWidthAndSpace) {
    EXPECT_EQ(text::match_key("ＨＣＣ"), text::match_key("hcc"));
    EXPECT_EQ(text::match_key("Portal  Hypertension"), text::match_key("portalhypertension"));
    EXPECT_EQ(text::match_key("肝　硬化"), text::match_key("肝硬化"));
}

TEST(Trim, StripsWhitespaceAndTrailingPunct) {
    EXPECT_EQ(text::trim("  肝硬化\n"), "肝硬化");
    EXPECT_EQ(text::strip_trailing_punct("肝硬化。 "), "肝硬化");
    EXPECT_EQ(text::strip_trailing_punct("HCC;."), "HCC");
    EXPECT_EQ(text::trim(""), "");
}

TEST(Hashing, Sha256KnownVectors) {
    EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST(Hashing, Fnv1aKnownVector) {
    // Published FNV-1a 64 test vector for "a".
    EXPECT_EQ(fnv1a64("a"), 0xaf63dc4c8601ec8cULL);
}

TEST(SeededRng, BelowStaysInRangeAndIsDeterministic) {
    SeededRng a(42), b(42);
    for (int i = 0; i < 1000; ++i) {
        const auto x = a.below(7);
        EXPECT_LT(x, 7u);
        EXPECT_EQ(x, b.below(7));
    }
    SeededRng c(1);
    for (int i = 0; i < 1000; ++i) {
        const double u = c.unit();
        EXPECT_GE(u, 0.0);
        EXPECT_LT(u, 1.0);
    }
}

TEST(SeededRng, DerivedSeedsDiffer) {
    EXPECT_NE(derive_seed(1, "a"), derive_seed(1, "b"));
    EXPECT_NE(derive_seed(1, "a"), derive_seed(2, "a"));
    EXPECT_EQ(derive_seed(9, "x"), derive_seed(9, "x"));
}
