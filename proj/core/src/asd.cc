#include "skewfair/asd.h"

#include <algorithm>
#include <cmath>
#include <random>

#include "skewfair/errors.h"

namespace skewfair {

using OrderedJson = nlohmann::ordered_json;

void ResampleConfig::Validate() const {
  if (!(tau1 > 0)) throw ValidationError("tau1 must be > 0");
  if (!(tau2 > 0)) throw ValidationError("tau2 must be > 0");
  if (!(kappa > 0)) throw ValidationError("kappa must be > 0");
}

std::vector<std::size_t> ResamplePlan::CopyCounts(
    std::size_t dataset_size) const {
  std::vector<std::size_t> counts(dataset_size, 0);
  for (std::size_t index : entries) ++counts.at(index);
  return counts;
}

std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t stream) {
  std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

namespace {

// Uniform on [0, 1) with 53 random bits; identical on every platform.
double Uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double Clamp(double skew, double kappa) {
  return std::clamp(skew, -kappa, kappa);
}

}  // namespace

ResamplePlan Resample(const Dataset& dataset,
                      const std::vector<InstanceSkew>& skews,
                      const ResampleConfig& config) {
  config.Validate();
  if (skews.size() != dataset.size()) {
    throw ValidationError("instance skews do not match the dataset size");
  }
  const Taxonomy& taxonomy = dataset.taxonomy();
  const std::size_t attributes = taxonomy.attribute_count();

  ResamplePlan plan;
  plan.config = config;
  plan.pair_stats.resize(attributes * taxonomy.concept_count());
  plan.entries.reserve(dataset.size());
  std::vector<double> accumulator(plan.pair_stats.size(), 0.0);
  std::mt19937_64 rng(config.seed);

  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const InstanceSkew& skew = skews[i];
    if (!skew.source) {
      ++plan.undefined;
      ++plan.accepted;
      plan.entries.push_back(i);
      continue;
    }
    const std::size_t key = skew.source->label * attributes +
                            skew.source->attribute;
    PairResampleStats& stats = plan.pair_stats[key];
    const double s = Clamp(skew.value, config.kappa);
    if (s > 0) {
      const double u = Uniform01(rng) * (s + config.tau1);
      if (u > s) {
        plan.entries.push_back(i);
        ++stats.accepted;
        ++plan.accepted;
      } else {
        ++stats.rejected;
        ++plan.rejected;
      }
      continue;
    }
    plan.entries.push_back(i);
    ++stats.accepted;
    ++plan.accepted;
    accumulator[key] += std::abs(s);
    if (accumulator[key] > config.tau2) {
      plan.entries.push_back(i);
      ++stats.extra;
      ++plan.extra_copies;
      accumulator[key] = 0.0;
    }
  }
  return plan;
}

ResamplePlan Resample(const Dataset& dataset, const SkewTable& table,
                      const ResampleConfig& config) {
  return Resample(dataset, ComputeInstanceSkews(dataset, table), config);
}

double FairnessWeight(double skew, double kappa) {
  return std::exp(-Clamp(skew, kappa));
}

std::vector<double> WeightTable::ForPlan(const ResamplePlan& plan) const {
  std::vector<double> out;
  out.reserve(plan.entries.size());
  for (std::size_t index : plan.entries) out.push_back(weights.at(index));
  return out;
}

WeightTable LossWeights(const std::vector<InstanceSkew>& skews, double kappa) {
  if (!(kappa > 0)) throw ValidationError("kappa must be > 0");
  WeightTable table;
  table.weights.reserve(skews.size());
  for (const InstanceSkew& skew : skews) {
    table.weights.push_back(skew.source ? FairnessWeight(skew.value, kappa)
                                        : 1.0);
  }
  return table;
}

WeightTable LossWeights(const Dataset& dataset, const SkewTable& table,
                        double kappa) {
  return LossWeights(ComputeInstanceSkews(dataset, table), kappa);
}

EpochPreparation PrepareAsdEpoch(const Dataset& dataset,
                                 const PredictionLog& predictions,
                                 const ResampleConfig& config,
                                 const SkewOptions& skew_options) {
  config.Validate();
  SkewOptions options = skew_options;
  options.kappa = config.kappa;
  SkewTable table = ComputeSkewTable(dataset, predictions, options);
  const auto skews = ComputeInstanceSkews(dataset, table);
  ResamplePlan plan = Resample(dataset, skews, config);
  WeightTable weights = LossWeights(skews, config.kappa);
  return {std::move(table), std::move(plan), std::move(weights)};
}

std::string SerializePlan(const Dataset& dataset, const ResamplePlan& plan,
                          const std::string& source_table_hash) {
  const auto counts = plan.CopyCounts(dataset.size());
  std::vector<bool> written(dataset.size(), false);
  std::string out;
  for (std::size_t index : plan.entries) {
    if (written[index]) continue;
    written[index] = true;
    out += OrderedJson{{"id", dataset[index].id}, {"count", counts[index]}}
               .dump();
    out += '\n';
  }
  const ResampleConfig& config = plan.config;
  OrderedJson meta = {{"format", "skewfair.resample_plan"},
                      {"format_version", 1},
                      {"seed", config.seed},
                      {"tau1", Round12(config.tau1)},
                      {"tau2", Round12(config.tau2)},
                      {"kappa", Round12(config.kappa)},
                      {"source_table_hash", source_table_hash},
                      {"copies_per_trigger", 2},
                      {"dataset_size", dataset.size()},
                      {"plan_size", plan.entries.size()},
                      {"accepted", plan.accepted},
                      {"rejected", plan.rejected},
                      {"extra_copies", plan.extra_copies},
                      {"undefined", plan.undefined}};
  out += OrderedJson{{"meta", std::move(meta)}}.dump();
  out += '\n';
  return out;
}

std::string SerializeWeights(const Dataset& dataset,
                             const WeightTable& weights) {
  if (weights.weights.size() != dataset.size()) {
    throw ValidationError("weight table does not match the dataset size");
  }
  std::string out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    out += OrderedJson{{"id", dataset[i].id},
                       {"weight", Round12(weights.weights[i])}}
               .dump();
    out += '\n';
  }
  return out;
}

}  // namespace skewfair
