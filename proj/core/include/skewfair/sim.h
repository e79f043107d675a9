#ifndef SKEWFAIR_SIM_H_
#define SKEWFAIR_SIM_H_

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "skewfair/asd.h"

namespace skewfair {

// Desk-scale debiasing simulator: synthetic counterfactual data, a linear
// softmax classifier trained from scratch, and the pretrain / FT / ASD
// comparison.

// Over-represents `attribute` (a value of `axis`) among pretraining instances
// labeled `concept_name`.
struct Stereotype {
  std::string axis;
  std::string attribute;
  std::string concept_name;
};

struct AsdSettings {
  double tau1 = 1.0;
  double tau2 = 1.0;
  double epsilon = 1.0;
  double kappa = 5.0;
  bool resample = true;
  bool reweight = true;
};

Taxonomy DefaultSimTaxonomy();

struct SimConfig {
  Taxonomy taxonomy = DefaultSimTaxonomy();
  // Fraction of the stereotyped axis' mass moved onto the stereotyped value.
  double bias_strength = 0.8;
  std::vector<Stereotype> stereotypes;
  std::size_t pretrain_size = 2400;
  std::size_t finetune_size = 960;
  std::size_t test_size = 4800;
  double feature_noise = 0.6;    // σ of the Gaussian added to concept signal
  double signal_strength = 1.0;  // magnitude of the concept one-hot
  bool zero_sa_features = false;  // ablation: remove the bias pathway
  double learning_rate = 0.1;
  std::size_t pretrain_epochs = 20;
  std::size_t epochs = 5;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  AsdSettings asd;

  void Validate() const;
  static SimConfig FromJson(const Json& doc,
                            const std::filesystem::path& base_dir = {});
  static SimConfig Load(const std::filesystem::path& path);
  Json ToJson() const;
};

// A dataset with one dense feature row per instance.
struct LabeledSet {
  Dataset dataset;
  std::vector<double> features;  // row-major, dataset.size() x dim
  std::size_t dim = 0;

  std::span<const double> row(std::size_t i) const {
    return {features.data() + i * dim, dim};
  }
};

struct SyntheticData {
  LabeledSet pretrain;
  LabeledSet finetune;
  LabeledSet test;
};

// Feature layout: one-hot over all attribute values, then one signal slot per
// concept (signal_strength on the true concept plus N(0, σ²) noise on every
// slot). Finetune and test sets are exactly balanced over (SA combination,
// concept) cells; their sizes are rounded down to a multiple of the cell
// count.
SyntheticData GenerateSynthetic(const SimConfig& config);
std::size_t FeatureDim(const Taxonomy& taxonomy);

class SoftmaxModel {
 public:
  SoftmaxModel(std::size_t feature_dim, std::size_t class_count);

  std::size_t feature_dim() const { return feature_dim_; }
  std::size_t class_count() const { return class_count_; }

  // Row-major feature_dim x class_count.
  std::vector<double>& weights() { return weights_; }
  const std::vector<double>& weights() const { return weights_; }
  std::vector<double>& bias() { return bias_; }
  const std::vector<double>& bias() const { return bias_; }

  void Logits(std::span<const double> x, std::span<double> out) const;
  void Probabilities(std::span<const double> x, std::span<double> out) const;
  // Argmax; ties go to the lower class index.
  std::size_t Predict(std::span<const double> x) const;
  bool IsFinite() const;

  bool operator==(const SoftmaxModel&) const = default;

 private:
  std::size_t feature_dim_;
  std::size_t class_count_;
  std::vector<double> weights_;
  std::vector<double> bias_;
};

struct Gradient {
  std::vector<double> weights;
  std::vector<double> bias;
};

// (1/|rows|) Σ w_i · CE(softmax(W x_i + b), c_i) over `rows`, with
// `weights[k]` applying to `rows[k]`. Fills `gradient` when non-null.
double WeightedCrossEntropy(const SoftmaxModel& model, const LabeledSet& data,
                            std::span<const std::size_t> rows,
                            std::span<const double> weights,
                            Gradient* gradient = nullptr);

struct TrainOptions {
  double learning_rate = 0.1;
  std::size_t epochs = 10;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
};

struct EvalSummary {
  double accuracy = 0.0;
  double max_skew = 0.0;
  double min_skew = 0.0;
  double mean_abs_skew = 0.0;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double mean_loss = 0.0;
  EvalSummary eval;
  std::size_t steps = 0;
  std::string order_hash;  // hash of the shuffled entry order
};

struct TrainTrace {
  std::string regime;
  std::vector<EpochRecord> epochs;

  Json ToJson() const;
};

struct TrainResult {
  SoftmaxModel model;
  TrainTrace trace;
  bool diverged = false;
};

// One epoch of mini-batch gradient descent over `entries` (dataset indices,
// repeats allowed) with per-entry loss weights. The entry order is a seeded
// shuffle derived from (seed, epoch). Returns the mean weighted loss.
double TrainEpoch(SoftmaxModel& model, const LabeledSet& data,
                  std::span<const std::size_t> entries,
                  std::span<const double> weights, const TrainOptions& options,
                  std::size_t epoch, std::string* order_hash = nullptr,
                  std::size_t* steps = nullptr);

// Trains for options.epochs epochs over the whole set. `weights` null means
// uniform. Each epoch is evaluated on `eval` when given. On a non-finite loss
// training stops, the model from the last finite epoch is returned and
// `diverged` is set.
TrainResult Train(SoftmaxModel model, const LabeledSet& data,
                  const WeightTable* weights, const TrainOptions& options,
                  const LabeledSet* eval = nullptr,
                  std::string regime = "ft");

PredictionLog PredictAll(const SoftmaxModel& model, const LabeledSet& data);
// Accuracy plus strict-mode skew aggregates on `data`.
EvalSummary Evaluate(const SoftmaxModel& model, const LabeledSet& data);

struct RegimeResult {
  std::string regime;  // pretrain | ft | asd
  EvalSummary final;
  TrainTrace trace;
  bool diverged = false;
};

struct ExperimentReport {
  SimConfig config;
  std::vector<RegimeResult> regimes;

  const RegimeResult& regime(const std::string& name) const;
  Json ToJson() const;
  std::string Serialize() const;
  std::string ToCsv() const;
  std::string SummaryTable() const;
};

// Pretrains on the biased set, then fine-tunes a copy naively (FT) and
// another copy with per-epoch ASD preparation; everything is evaluated on the
// balanced test set.
ExperimentReport RunExperiment(const SimConfig& config);

}  // namespace skewfair

#endif  // SKEWFAIR_SIM_H_
