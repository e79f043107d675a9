#ifndef SKEWFAIR_METRICS_H_
#define SKEWFAIR_METRICS_H_

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skewfair/dataset.h"

namespace skewfair {

enum class SkewMode { kStrict, kSmoothed };

std::string_view ToString(SkewMode mode);
SkewMode ParseSkewMode(std::string_view text);

struct SkewOptions {
  SkewMode mode = SkewMode::kStrict;
  // Pseudo-count added to each |D̂_{a|c}| in smoothed mode; |D̂_c| receives
  // epsilon * (axis size).
  double epsilon = 1.0;
  // Magnitude of the sentinel recorded when γ̂ = 0 in strict mode, and the
  // clamp applied by the debiasing module.
  double kappa = 5.0;

  static SkewOptions Strict() { return {}; }
  static SkewOptions Smoothed(double epsilon = 1.0) {
    return {SkewMode::kSmoothed, epsilon, 5.0};
  }
};

// The four subset sizes behind one skew value. Predicted counts include the
// smoothing pseudo-counts in smoothed mode.
struct SkewCounts {
  double predicted_pair = 0;     // |D̂_{a|c}|
  double predicted_concept = 0;  // |D̂_c|
  double true_pair = 0;          // |D_{a|c}|
  double true_concept = 0;       // |D_c|

  double predicted_ratio() const { return predicted_pair / predicted_concept; }
  double true_ratio() const { return true_pair / true_concept; }
};

// ln(γ̂ / γ). `sentinel` marks the γ̂ = 0 case, where value is -kappa.
struct SkewValue {
  double value = 0.0;
  SkewCounts counts;
  bool sentinel = false;
};

enum class UndefinedReason { kEmptyPredictedSubset, kEmptyGroundTruth };
std::string_view ToString(UndefinedReason reason);

struct UndefinedPair {
  std::size_t attribute = 0;
  std::size_t label = 0;
  UndefinedReason reason = UndefinedReason::kEmptyPredictedSubset;
};

struct Extremum {
  double value = 0.0;
  std::size_t attribute = 0;
};

struct AxisExtrema {
  Extremum max;
  Extremum min;
};

// MaxSkew_c / MinSkew_c pooled over every attribute of every axis, plus the
// per-axis breakdown (nullopt for an axis with no defined pair).
struct ConceptExtrema {
  Extremum max;
  Extremum min;
  std::vector<std::optional<AxisExtrema>> per_axis;
};

// MaxSkew@C / MinSkew@C: unweighted means of the per-concept extrema over
// concepts that have at least one defined pair.
struct SkewAggregates {
  double max_skew = 0.0;
  double min_skew = 0.0;
  std::size_t concepts_included = 0;
  std::size_t concepts_skipped = 0;
};

struct SkewTableMeta {
  std::string dataset_hash;
  std::size_t instance_count = 0;
  std::size_t other_predictions = 0;
};

class SkewTable {
 public:
  // `pairs` is concept-major: index concept * attribute_count + attribute.
  // Extrema and aggregates are derived here.
  SkewTable(Taxonomy taxonomy, SkewOptions options,
            std::vector<std::optional<SkewValue>> pairs,
            std::vector<UndefinedPair> undefined, SkewTableMeta meta);

  const Taxonomy& taxonomy() const { return taxonomy_; }
  const SkewOptions& options() const { return options_; }
  const SkewTableMeta& meta() const { return meta_; }

  const std::optional<SkewValue>& pair(std::size_t attribute,
                                       std::size_t label) const {
    return pairs_[label * taxonomy_.attribute_count() + attribute];
  }
  const std::optional<ConceptExtrema>& extrema(std::size_t label) const {
    return extrema_[label];
  }
  const SkewAggregates& aggregates() const { return aggregates_; }
  const std::vector<UndefinedPair>& undefined() const { return undefined_; }

  std::size_t defined_count() const;
  // Mean of |Skew| over defined pairs; 0 when none are defined.
  double MeanAbsSkew() const;

 private:
  Taxonomy taxonomy_;
  SkewOptions options_;
  std::vector<std::optional<SkewValue>> pairs_;
  std::vector<UndefinedPair> undefined_;
  SkewTableMeta meta_;
  std::vector<std::optional<ConceptExtrema>> extrema_;
  SkewAggregates aggregates_;
};

// Builds the full skew table. Throws ValidationError on an empty dataset or
// when an instance has no prediction.
SkewTable ComputeSkewTable(const Dataset& dataset,
                           const PredictionLog& predictions,
                           const SkewOptions& options = {});

// The attribute/concept pair that produced an instance skew.
struct SkewSource {
  std::size_t axis = 0;
  std::size_t attribute = 0;  // flat attribute id
  std::size_t label = 0;
};

// Skew(P_i): the defined pair (a, c_i), a in A_i, with the largest |Skew|.
// Ties go to the earlier axis. `source` is nullopt when every pair is
// undefined, in which case value is 0.
struct InstanceSkew {
  std::string id;
  double value = 0.0;
  std::optional<SkewSource> source;
};

InstanceSkew ComputeInstanceSkew(const Instance& instance,
                                 const SkewTable& table);
std::vector<InstanceSkew> ComputeInstanceSkews(const Dataset& dataset,
                                               const SkewTable& table);

// Deterministic JSON report with keys pairwise, per_concept, aggregates,
// undefined and meta. Numbers carry 12 significant digits.
Json SkewReportJson(const SkewTable& table);
std::string SerializeSkewReport(const SkewTable& table);
// Rebuilds a table from a report. Pairwise values are taken as written.
SkewTable ParseSkewReport(const Json& report, const Taxonomy& taxonomy);

}  // namespace skewfair

#endif  // SKEWFAIR_METRICS_H_
