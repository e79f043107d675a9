#ifndef SKEWFAIR_ASD_H_
#define SKEWFAIR_ASD_H_

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "skewfair/metrics.h"

namespace skewfair {

// Anti-stereotype debiasing: skew-driven resampling and loss rescaling.

struct ResampleConfig {
  double tau1 = 1.0;  // acceptance slack
  double tau2 = 1.0;  // over-resampling threshold on the accumulator
  std::uint64_t seed = 0;
  double kappa = 5.0;  // skew clamp applied before the acceptance test

  void Validate() const;
};

struct PairResampleStats {
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t extra = 0;
};

struct ResamplePlan {
  // Dataset indices in plan order, with repetition.
  std::vector<std::size_t> entries;
  // Indexed concept * attribute_count + attribute (the instance's source pair).
  std::vector<PairResampleStats> pair_stats;
  std::size_t accepted = 0;
  std::size_t rejected = 0;
  std::size_t extra_copies = 0;
  std::size_t undefined = 0;  // instances with no defined skew pair
  ResampleConfig config;

  // Number of times each dataset instance appears.
  std::vector<std::size_t> CopyCounts(std::size_t dataset_size) const;
};

// One sequential pass over the dataset in manifest order. A positive skew s
// is kept with probability tau1 / (s + tau1); a non-positive one is always
// kept and adds |s| to the accumulator of its source pair, which appends one
// extra copy and resets once it exceeds tau2.
ResamplePlan Resample(const Dataset& dataset, const SkewTable& table,
                      const ResampleConfig& config);

// Variant taking precomputed instance skews (aligned with the dataset).
ResamplePlan Resample(const Dataset& dataset,
                      const std::vector<InstanceSkew>& skews,
                      const ResampleConfig& config);

// Independent 64-bit seed for stream `stream` of a base seed (SplitMix64).
std::uint64_t DeriveSeed(std::uint64_t base, std::uint64_t stream);

// e^{-clamp(skew, -kappa, kappa)}.
double FairnessWeight(double skew, double kappa = 5.0);

// Loss multipliers aligned with the dataset.
struct WeightTable {
  std::vector<double> weights;

  // Every plan entry gets the weight of the instance it copies.
  std::vector<double> ForPlan(const ResamplePlan& plan) const;
};

WeightTable LossWeights(const Dataset& dataset, const SkewTable& table,
                        double kappa = 5.0);
WeightTable LossWeights(const std::vector<InstanceSkew>& skews,
                        double kappa = 5.0);

struct EpochPreparation {
  SkewTable table;
  ResamplePlan plan;
  WeightTable weights;
};

// Skew table (smoothed by default), plan and weights for one training epoch,
// all derived from the same predictions.
EpochPreparation PrepareAsdEpoch(
    const Dataset& dataset, const PredictionLog& predictions,
    const ResampleConfig& config,
    const SkewOptions& skew_options = SkewOptions::Smoothed());

// Plan file: one {"id", "count"} line per distinct id in first-occurrence
// order, then {"meta": {...}}.
std::string SerializePlan(const Dataset& dataset, const ResamplePlan& plan,
                          const std::string& source_table_hash);
// Weights file: one {"id", "weight"} line per dataset instance.
std::string SerializeWeights(const Dataset& dataset,
                             const WeightTable& weights);

}  // namespace skewfair

#endif  // SKEWFAIR_ASD_H_
