#include <cstdlib>
#include <filesystem>

#include <benchmark/benchmark.h>

#include "dlaudit/manifest.hpp"
#include "dlaudit/pipeline.hpp"

using namespace dlaudit;

// Full audit over the bundled campaign fixture; the argument is the worker count.
static void BM_CampaignAudit(benchmark::State& state) {
    setenv("DLAUDIT_DATA_DIR", DLAUDIT_BENCH_DATA_DIR, 0);
    const auto manifest =
        RunManifest::load(std::filesystem::path(DLAUDIT_BENCH_FIXTURE_DIR) / "campaign" / "manifest.json");
    const auto jobs = static_cast<unsigned>(state.range(0));
    const auto run = load_run(manifest, std::nullopt, jobs);
    auto config = run.config;
    config.jobs = jobs;
    for (auto _ : state) benchmark::DoNotOptimize(run_audit(run.inputs, config, run.ledger));
}
BENCHMARK(BM_CampaignAudit)->Arg(1)->Arg(4)->Unit(benchmark::kMillisecond);

// Loading and parsing every input file of the campaign fixture.
static void BM_CampaignLoad(benchmark::State& state) {
    setenv("DLAUDIT_DATA_DIR", DLAUDIT_BENCH_DATA_DIR, 0);
    const auto manifest =
        RunManifest::load(std::filesystem::path(DLAUDIT_BENCH_FIXTURE_DIR) / "campaign" / "manifest.json");
    for (auto _ : state) benchmark::DoNotOptimize(load_run(manifest, std::nullopt, 1));
}
BENCHMARK(BM_CampaignLoad)->Unit(benchmark::kMillisecond);
BENCHMARK_MAIN();
