#include <benchmark/benchmark.h>

#include <filesystem>
#include <random>

#include "mdca/corpus.hpp"
#include "mdca/embedding.hpp"
#include "mdca/metrics.hpp"
#include "mdca/runner.hpp"
#include "mdca/segmenter.hpp"

using namespace mdca;

namespace {

const char* kConclusion =
    "1. 肝IVb段占位，考虑HCC可能。\n2. 肝硬化伴门脉高压。\n3. 肝门部淋巴结增大，转移不除外。\n4. 胆囊结石。";
const char* kSynth = "1. 肝硬化。\n2. 肝IVb段占位，考虑肝细胞癌。\n3. 胆囊结石。";

std::vector<DiagnosisItem> random_items(std::mt19937_64& rng, std::size_t n) {
    std::vector<std::string> raws;
    for (std::size_t i = 0; i < n; ++i) raws.push_back("~c" + std::to_string(rng() % 8));
    std::vector<DiagnosisItem> out;
    for (std::size_t i = 0; i < raws.size(); ++i) out.push_back(make_item(i + 1, raws[i], default_lexicon()));
    return out;
}

void BM_Segment(benchmark::State& state) {
    const auto& lex = default_lexicon();
    for (auto _ : state) benchmark::DoNotOptimize(segment_conclusion(kConclusion, lex));
}
BENCHMARK(BM_Segment);

void BM_DiagnosticCorrectness(benchmark::State& state) {
    std::mt19937_64 rng(1);
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto t = random_items(rng, n);
    const auto s = random_items(rng, n);
    const ItemMatchPolicy policy;
    for (auto _ : state) benchmark::DoNotOptimize(diagnostic_correctness(t, s, policy));
}
BENCHMARK(BM_DiagnosticCorrectness)->Arg(3)->Arg(6)->Arg(12);

void BM_ClinicalPrioritization(benchmark::State& state) {
    std::mt19937_64 rng(2);
    const auto t = random_items(rng, 5);
    const auto s = random_items(rng, 5);
    const ItemMatchPolicy policy;
    for (auto _ : state) benchmark::DoNotOptimize(clinical_prioritization(t, s, policy));
}
BENCHMARK(BM_ClinicalPrioritization);

void BM_FallbackEmbedding(benchmark::State& state) {
    const auto provider = make_embedding_provider("fallback");
    for (auto _ : state) benchmark::DoNotOptimize(provider->embed(kConclusion));
}
BENCHMARK(BM_FallbackEmbedding);

void BM_ScorePair(benchmark::State& state) {
    const auto provider = make_embedding_provider("fallback");
    const ItemMatchPolicy policy;
    for (auto _ : state) {
        benchmark::DoNotOptimize(score_pair(kConclusion, kSynth, default_lexicon(), policy, *provider, Weights{}));
    }
}
BENCHMARK(BM_ScorePair);

// 50 reports x 2 configs through a mock provider into a fresh store.
void BM_SmallRun(benchmark::State& state) {
    namespace fs = std::filesystem;
    const fs::path root = fs::temp_directory_path() / ("mdca-bench-" + std::to_string(std::random_device{}()));
    fs::create_directories(root);
    const auto corpus = root / "corpus.jsonl";
    write_corpus(make_corpus(synthesize_reports(50, 5), "bench"), corpus);
    ProviderProfile mock;
    mock.id = "mock";
    mock.kind = ProviderKind::kMock;
    mock.fidelity = 0.6;
    mock.seed = 1;
    int i = 0;
    for (auto _ : state) {
        RunSpec spec;
        spec.run_id = "run" + std::to_string(i++);
        spec.corpus_path = corpus.string();
        spec.prompt_config_ids = {"P2", "P6"};
        spec.provider_ids = {"mock"};
        spec.providers = {mock};
        spec.concurrency_limit = static_cast<std::size_t>(state.range(0));
        state.PauseTiming();
        fs::remove_all(root / "store");
        state.ResumeTiming();
        RunStore store(root / "store");
        benchmark::DoNotOptimize(execute_run(spec, store));
    }
    state.SetItemsProcessed(state.iterations() * 100);
    fs::remove_all(root);
}
BENCHMARK(BM_SmallRun)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
