#include <gtest/gtest.h>

#include <random>
#include <set>

#include "mdca/corpus.hpp"
#include "mdca/segmenter.hpp"
#include "test_support.hpp"

using namespace mdca;
using mdca::testing::TempDir;
using mdca::testing::write_file;

namespace {

std::string line(const std::string& id, const std::string& conclusion = "1. 肝硬化。",
                 const std::string& meta = "{}") {
    return R"({"id":")" + id + R"(","findings":"肝脏形态正常。","conclusion":")" + conclusion +
           R"(","meta":)" + meta + "}\n";
}

std::vector<std::string> ids(const Corpus& c) {
    std::vector<std::string> out;
    for (const auto& r : c.records) out.push_back(r.id);
    return out;
}

}  // namespace

TEST(LoadCorpus, ThreeLinesInOrder) {
    TempDir dir;
    write_file(dir / "c.jsonl", line("b") + line("a") + line("c"));
    const auto c = load_corpus(dir / "c.jsonl", CorpusFormat::kJsonl);
    EXPECT_EQ(ids(c), (std::vector<std::string>{"b", "a", "c"}));
    EXPECT_EQ(c.records[0].ground_truth_conclusion, "1. 肝硬化。");
    EXPECT_EQ(c.checksum.size(), 64u);
    EXPECT_NE(c.find("a"), nullptr);
    EXPECT_EQ(c.find("zz"), nullptr);
}

TEST(LoadCorpus, DuplicateIdRejected) {
    TempDir dir;
    write_file(dir / "c.jsonl", line("r1") + line("r2") + line("r1"));
    try {
        load_corpus(dir / "c.jsonl", CorpusFormat::kJsonl);
        FAIL();
    } catch (const CorpusLoadError& e) {
        EXPECT_EQ(e.code(), ErrorCode::kDuplicateId);
        ASSERT_EQ(e.issues().size(), 1u);
        EXPECT_EQ(e.issues()[0].line, 3u);
        EXPECT_NE(std::string(e.what()).find("r1"), std::string::npos);
    }
}

TEST(LoadCorpus, EmptyFileRejected) {
    TempDir dir;
    write_file(dir / "c.jsonl", "\n\n");
    try {
        load_corpus(dir / "c.jsonl", CorpusFormat::kJsonl);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kEmptyCorpus);
    }
}

TEST(LoadCorpus, MissingFileIsIoError) {
    try {
        load_corpus("/nonexistent/c.jsonl", CorpusFormat::kJsonl);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kIo);
    }
}

TEST(LoadCorpus, DenyListedMetaRejected) {
    TempDir dir;
    write_file(dir / "c.jsonl", line("a", "1. 肝硬化。", R"({"Patient_Name":"x"})"));
    EXPECT_THROW(load_corpus(dir / "c.jsonl", CorpusFormat::kJsonl), CorpusLoadError);
    LoadOptions open;
    open.deny_list.clear();
    EXPECT_EQ(load_corpus(dir / "c.jsonl", CorpusFormat::kJsonl, open).size(), 1u);
}

TEST(LoadCorpus, CsvWithQuotesAndExtraColumns) {
    TempDir dir;
    write_file(dir / "c.csv",
               "id,findings,conclusion,site\n"
               "r1,\"肝脏形态正常，未见异常。\",\"1. 肝硬化。\n2. 脾大。\",A\n"
               "r2,肝右叶结节,\"1. 血管瘤，\"\"典型\"\"。\",B\n");
    const auto c = load_corpus(dir / "c.csv", CorpusFormat::kCsv);
    ASSERT_EQ(c.size(), 2u);
    EXPECT_EQ(c.records[0].meta.at("site"), "A");
    EXPECT_EQ(segment_conclusion(c.records[0].ground_truth_conclusion, default_lexicon()).size(), 2u);
    EXPECT_EQ(c.records[1].ground_truth_conclusion, "1. 血管瘤，\"典型\"。");
}

TEST(LoadCorpus, WriteLoadRoundTrip) {
    TempDir dir;
    const auto records = synthesize_reports(50, 3);
    const auto corpus = make_corpus(records, "mem");
    write_corpus(corpus, dir / "a.jsonl");
    const auto back = load_corpus(dir / "a.jsonl", CorpusFormat::kJsonl);
    EXPECT_EQ(back.records, records);
    EXPECT_EQ(back.checksum, corpus.checksum);
    write_corpus(back, dir / "b.jsonl");
    EXPECT_EQ(mdca::testing::read_file(dir / "a.jsonl"), mdca::testing::read_file(dir / "b.jsonl"));
}

TEST(LoadCorpus, ChecksumOfByteIdenticalCopy) {
    TempDir dir;
    write_corpus(make_corpus(synthesize_reports(200, 77), "x"), dir / "a.jsonl");
    std::filesystem::copy_file(dir / "a.jsonl", dir / "b.jsonl");
    EXPECT_EQ(load_corpus(dir / "a.jsonl", CorpusFormat::kJsonl).checksum,
              load_corpus(dir / "b.jsonl", CorpusFormat::kJsonl).checksum);
}

TEST(LoadCorpus, ChecksumChangesWithContent) {
    auto records = synthesize_reports(5, 1);
    const auto before = corpus_checksum(records);
    records[2].findings += " ";
    EXPECT_NE(corpus_checksum(records), before);
}

// Property: every injected defect is reported at its line, the load is
// rejected as a whole, and a clean corpus always loads fully valid records.
TEST(LoadCorpusProperty, InjectedDefectsAreAllReported) {
    std::mt19937_64 gen(99);
    const std::vector<std::string> defects{
        R"({"id":"","findings":"f","conclusion":"1. 肝硬化。"})",
        R"({"id":"x","findings":"   ","conclusion":"1. 肝硬化。"})",
        R"({"id":"x","findings":"f"})",
        R"({"id":"x","findings":"f","conclusion":"1. 2. "})",
        R"({"id":"x","findings":"f","conclusion":"1. a","meta":{"mrn":"1"}})",
        R"({"id":"x","findings":"f","conclusion":"1. a","meta":{"k":[1]}})",
        R"(["not", "an", "object"])",
        R"({"id": "x", broken)",
    };
    for (int trial = 0; trial < 60; ++trial) {
        TempDir dir;
        const std::size_t n = 3 + gen() % 10;
        std::string content;
        std::set<std::size_t> bad_lines;
        for (std::size_t i = 1; i <= n; ++i) {
            if (gen() % 4 == 0) {
                content += defects[gen() % defects.size()] + "\n";
                bad_lines.insert(i);
            } else {
                content += line("r" + std::to_string(i));
            }
        }
        write_file(dir / "c.jsonl", content);
        if (bad_lines.empty()) {
            const auto c = load_corpus(dir / "c.jsonl", CorpusFormat::kJsonl);
            EXPECT_EQ(c.size(), n);
            for (const auto& r : c.records) {
                EXPECT_FALSE(r.id.empty());
                EXPECT_FALSE(r.findings.empty());
                EXPECT_NO_THROW(segment_conclusion(r.ground_truth_conclusion, default_lexicon()));
            }
            continue;
        }
        try {
            load_corpus(dir / "c.jsonl", CorpusFormat::kJsonl);
            FAIL() << "defective corpus loaded";
        } catch (const CorpusLoadError& e) {
            std::set<std::size_t> reported;
            for (const auto& issue : e.issues()) reported.insert(issue.line);
            EXPECT_EQ(reported, bad_lines);
        }
    }
}

TEST(Sample, FullSampleKeepsIds) {
    const auto c = make_corpus(synthesize_reports(20, 5), "x");
    EXPECT_EQ(ids(sample_corpus(c, 20, 123)), ids(c));
}

TEST(Sample, Deterministic) {
    const auto c = make_corpus(synthesize_reports(30, 5), "x");
    EXPECT_EQ(ids(sample_corpus(c, 5, 42)), ids(sample_corpus(c, 5, 42)));
    EXPECT_NE(ids(sample_corpus(c, 5, 42)), ids(sample_corpus(c, 5, 43)));
}

TEST(Sample, SubsetInSourceOrder) {
    const auto c = make_corpus(synthesize_reports(200, 8), "x");
    const auto s = sample_corpus(c, 100, 7);
    const auto sampled = ids(s);
    ASSERT_EQ(sampled.size(), 100u);
    EXPECT_EQ(std::set<std::string>(sampled.begin(), sampled.end()).size(), 100u);
    // every id present in the source, positions strictly increasing
    std::size_t last = 0;
    bool first = true;
    for (const auto& id : sampled) {
        std::size_t pos = c.size();
        for (std::size_t i = 0; i < c.size(); ++i)
            if (c.records[i].id == id) pos = i;
        ASSERT_LT(pos, c.size()) << id;
        if (!first) EXPECT_GT(pos, last);
        last = pos;
        first = false;
    }
}

TEST(Sample, TooLarge) {
    try {
        sample_indices(3, 4, 1);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::kSampleTooLarge);
    }
}

TEST(Exclusions, TruthyFlagsReported) {
    auto records = synthesize_reports(3, 2);
    records[0].meta["hepatic_surgery_history"] = "yes";
    records[1].meta["systemic_antitumor_therapy"] = "false";
    records[2].meta["poor_image_quality"] = "1";
    records[2].meta["hepatic_surgery_history"] = "TRUE";
    const auto v = check_exclusions(make_corpus(records, "x"));
    ASSERT_EQ(v.size(), 2u);
    EXPECT_EQ(v[0].record_id, records[0].id);
    EXPECT_EQ(v[1].flags.size(), 2u);
}

TEST(Synthetic, DeterministicAndSegmentable) {
    const auto a = synthesize_reports(40, 11);
    EXPECT_EQ(a, synthesize_reports(40, 11));
    EXPECT_NE(a, synthesize_reports(40, 12));
    for (const auto& r : a) {
        const auto items = segment_conclusion(r.ground_truth_conclusion, default_lexicon());
        EXPECT_GE(items.size(), 1u);
        // ordered by tier
        for (std::size_t i = 1; i < items.size(); ++i)
            if (items[i].tier && items[i - 1].tier) EXPECT_LE(*items[i - 1].tier, *items[i].tier);
    }
}
