// Chunked OpenMP gradient vs the per-sample serial reference, at the trained shape.
#include <benchmark/benchmark.h>

#include <random>

#include "meso/drl/learn.hpp"
#include "meso/drl/qnet.hpp"

using namespace meso::drl;

namespace {

struct Setup {
  QNetwork net;
  Batch batch;
  CombinedLoss loss;
};

Setup make(int batch) {
  QShape shape{15, 100, 100};
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal;
  Batch b{Mat(15, batch), Mat(100, batch), Mat(100, batch)};
  for (auto* m : {&b.obs, &b.h, &b.c})
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = 0.5 * normal(rng);
  std::vector<int> acts(batch), teacher(batch);
  Vec y(batch);
  for (int j = 0; j < batch; ++j) {
    acts[j] = j % 3;
    teacher[j] = (j + 2) % 3;
    y[j] = normal(rng);
  }
  return {QNetwork::random(shape, 2), b, CombinedLoss(acts, y, teacher, 100.0, 0.05, false)};
}

void BM_GradChunked(benchmark::State& state) {
  auto s = make(static_cast<int>(state.range(0)));
  Vec g;
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad(s.net, s.batch, s.loss, g));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_GradSerial(benchmark::State& state) {
  auto s = make(static_cast<int>(state.range(0)));
  Vec g;
  for (auto _ : state) benchmark::DoNotOptimize(loss_and_grad_serial(s.net, s.batch, s.loss, g));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_GradChunked)->Arg(32)->Arg(128);
BENCHMARK(BM_GradSerial)->Arg(32)->Arg(128);
BENCHMARK_MAIN();
