// Parallel (OpenMP) against serial reference execution for the two
// embarrassingly parallel kernels: independent chains and evidence blocks.
#include <benchmark/benchmark.h>

#include "blr/inference.hpp"
#include "blr/modelspec.hpp"
#include "blr/sampler.hpp"

namespace {

const blr::Dataset& points() {
  static const blr::Dataset d{{{"machine", 132, 7}, {"people", 139, 6}, {"probability", 331, 8}}};
  return d;
}

void run_chains(benchmark::State& state, blr::Execution exec) {
  blr::SamplerConfig cfg;
  cfg.n_chains = static_cast<std::size_t>(state.range(0));
  cfg.n_draws = 1000;
  cfg.n_warmup = 500;
  cfg.seed = 1;
  for (auto _ : state) {
    auto chains = blr::sample_hmc(blr::default_model(), points(), cfg, exec);
    benchmark::DoNotOptimize(chains.raw().data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(cfg.n_chains * (cfg.n_draws + cfg.n_warmup)));
}

void BM_ChainsSerial(benchmark::State& state) { run_chains(state, blr::Execution::Serial); }
void BM_ChainsParallel(benchmark::State& state) { run_chains(state, blr::Execution::Parallel); }

void run_evidence(benchmark::State& state, blr::Execution exec) {
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    auto e = blr::estimate_evidence(blr::default_model(), points(), n, 7, exec);
    benchmark::DoNotOptimize(e.log_evidence);
  }
  state.SetItemsProcessed(state.iterations() * static_cast<int64_t>(n));
}

void BM_EvidenceSerial(benchmark::State& state) { run_evidence(state, blr::Execution::Serial); }
void BM_EvidenceParallel(benchmark::State& state) { run_evidence(state, blr::Execution::Parallel); }

}  // namespace

BENCHMARK(BM_ChainsSerial)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ChainsParallel)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvidenceSerial)->Arg(100000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EvidenceParallel)->Arg(100000)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
