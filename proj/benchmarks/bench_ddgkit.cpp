// Microbenchmarks for the hot paths: feature extraction, energy and
// score evaluation, Langevin sampling, the denoising loss, and metric
// aggregation. Sizes bracket the defaults used by the pipeline.
#include <benchmark/benchmark.h>

#include <string>
#include <vector>

#include "ddgkit/dsm.hpp"
#include "ddgkit/energy.hpp"
#include "ddgkit/geometry.hpp"
#include "ddgkit/metrics.hpp"
#include "ddgkit/rng.hpp"
#include "ddgkit/sampler.hpp"
#include "ddgkit/synthetic.hpp"

using namespace ddgkit;

namespace {

struct BenchSetup {
  Complex cx;
  MutationSet muts;
  Neighborhood neigh;
  EnergyModel model;

  explicit BenchSetup(int k) {
    SyntheticSpec spec;
    spec.n_binder = 8;
    spec.n_target = 8;
    spec.seed = 1;
    cx = make_synthetic_complex(spec);
    const Residue& res = cx.chains[0].residues[2];
    muts.resize(1);
    muts[0].wt_aa = res.aa_type;
    muts[0].chain_id = res.chain_id;
    muts[0].seq_index = res.seq_index;
    muts[0].mut_aa = res.aa_type == 1 ? 2 : 1;
    neigh = select_neighborhood(cx, muts, k);

    EnergyModelConfig mc;  // library defaults: 32/64/64, 16 radial bins
    Rng rng(2);
    model = init_energy_model(mc, rng);
  }
};

void bm_featurize(benchmark::State& state) {
  const BenchSetup s(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(make_energy_input(s.neigh));
  }
}
BENCHMARK(bm_featurize)->Arg(4)->Arg(8)->Arg(12);

void bm_energy_eval(benchmark::State& state) {
  const BenchSetup s(static_cast<int>(state.range(0)));
  const EnergyInput input = make_energy_input(s.neigh);
  for (auto _ : state) {
    EnergyEval ev;
    benchmark::DoNotOptimize(energy_eval(s.model, input, ev));
  }
}
BENCHMARK(bm_energy_eval)->Arg(4)->Arg(8)->Arg(12);

void bm_score(benchmark::State& state) {
  const BenchSetup s(static_cast<int>(state.range(0)));
  const std::vector<Eigen::Vector3d> coords = s.neigh.coords();
  for (auto _ : state) {
    benchmark::DoNotOptimize(score_of(s.model, s.neigh, coords));
  }
}
BENCHMARK(bm_score)->Arg(4)->Arg(8)->Arg(12);

void bm_langevin_sample(benchmark::State& state) {
  const BenchSetup s(8);
  LangevinConfig cfg;
  cfg.steps = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(langevin_sample(s.neigh, s.model, cfg));
  }
}
BENCHMARK(bm_langevin_sample)->Arg(1)->Arg(10)->Arg(100)->Unit(benchmark::kMillisecond);

void bm_dsm_loss_grad(benchmark::State& state) {
  const BenchSetup s(8);
  const double sigma = std::sqrt(0.1);
  Rng rng(3);
  const DsmBatch batch = make_dsm_batch(s.neigh, sigma, rng);
  EnergyGrads grads;
  grads.init_like(const_cast<EnergyModel&>(s.model));
  for (auto _ : state) {
    grads.set_zero();
    benchmark::DoNotOptimize(dsm_loss_grad(s.model, batch, sigma, grads));
  }
}
BENCHMARK(bm_dsm_loss_grad);

void bm_metrics(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  Rng rng(4);
  std::vector<std::string> keys;
  std::vector<double> pred(n), truth(n);
  for (std::size_t i = 0; i < n; ++i) {
    keys.push_back("K" + std::to_string(i % 25));
    pred[i] = rng.normal();
    truth[i] = rng.normal();
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(compute_metrics(keys, pred, truth));
  }
}
BENCHMARK(bm_metrics)->Arg(100)->Arg(1000);

}  // namespace

BENCHMARK_MAIN();
