#include <benchmark/benchmark.h>

#include <random>

#include "skewfair/asd.h"
#include "skewfair/sim.h"

namespace {

using namespace skewfair;

// Finetune-style set of n instances over the default simulator taxonomy with
// 70%-accurate random predictions.
struct Workload {
  Dataset dataset;
  PredictionLog predictions;
};

Workload MakeWorkload(std::size_t n) {
  const Taxonomy taxonomy = DefaultSimTaxonomy();
  std::mt19937_64 rng(1);
  std::vector<Instance> instances;
  PredictionLog predictions(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t label = rng() % taxonomy.concept_count();
    instances.push_back(
        {"b" + std::to_string(i), {rng() % 2, rng() % 2}, label, {}});
    predictions.Set(i, rng() % 10 < 7 ? label : rng() % taxonomy.concept_count());
  }
  return {Dataset(taxonomy, std::move(instances)), std::move(predictions)};
}

void BM_SkewTable(benchmark::State& state) {
  const Workload w = MakeWorkload(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ComputeSkewTable(w.dataset, w.predictions));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_SkewTable)->Arg(1000)->Arg(100000);

void BM_Resample(benchmark::State& state) {
  const Workload w = MakeWorkload(static_cast<std::size_t>(state.range(0)));
  const SkewTable table =
      ComputeSkewTable(w.dataset, w.predictions, SkewOptions::Smoothed());
  const auto skews = ComputeInstanceSkews(w.dataset, table);
  ResampleConfig config;
  for (auto _ : state) {
    benchmark::DoNotOptimize(Resample(w.dataset, skews, config));
    ++config.seed;
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Resample)->Arg(1000)->Arg(100000);

void BM_TrainEpoch(benchmark::State& state) {
  SimConfig config;
  config.stereotypes = {{"gender", "Female", "nurse"}};
  const SyntheticData data = GenerateSynthetic(config);
  const LabeledSet& set = data.pretrain;
  std::vector<std::size_t> entries(set.dataset.size());
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i] = i;
  const std::vector<double> weights(entries.size(), 1.0);
  SoftmaxModel model(set.dim, set.dataset.taxonomy().concept_count());
  TrainOptions options;
  std::size_t epoch = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        TrainEpoch(model, set, entries, weights, options, epoch++));
  }
  state.SetItemsProcessed(state.iterations() *
                          static_cast<std::int64_t>(entries.size()));
}
BENCHMARK(BM_TrainEpoch);

}  // namespace

BENCHMARK_MAIN();
