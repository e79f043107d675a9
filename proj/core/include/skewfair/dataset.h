#ifndef SKEWFAIR_DATASET_H_
#define SKEWFAIR_DATASET_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "skewfair/taxonomy.h"

namespace skewfair {

// Reserved predicted label for model outputs outside the taxonomy. It counts
// toward the predicted population but defines no skew pairs.
inline constexpr std::string_view kOtherConcept = "__other__";

// One labeled datum. `attributes[k]` is the value index on taxonomy axis k.
struct Instance {
  std::string id;
  std::vector<std::size_t> attributes;
  std::size_t label = 0;  // concept index
  std::optional<std::string> uri;

  bool operator==(const Instance&) const = default;
};

// A validated, ordered collection of instances over one taxonomy.
// Iteration order is the manifest order.
class Dataset {
 public:
  Dataset(Taxonomy taxonomy, std::vector<Instance> instances);

  const Taxonomy& taxonomy() const { return taxonomy_; }
  const std::vector<Instance>& instances() const { return instances_; }
  const Instance& operator[](std::size_t i) const { return instances_[i]; }
  std::size_t size() const { return instances_.size(); }
  bool empty() const { return instances_.empty(); }

  std::optional<std::size_t> Find(std::string_view id) const;

  // Flat attribute id of instance `i` on axis `axis`.
  std::size_t attribute_id(std::size_t i, std::size_t axis) const {
    return taxonomy_.attribute_id(axis, instances_[i].attributes[axis]);
  }

  // Canonical manifest bytes (what SaveDataset writes).
  std::string ToManifest() const;
  // Hash of the canonical manifest; identifies the dataset in reports.
  std::string Hash() const;

  bool operator==(const Dataset& other) const;

 private:
  Taxonomy taxonomy_;
  std::vector<Instance> instances_;
  std::unordered_map<std::string, std::size_t> index_;
};

// Reads a JSON Lines manifest and validates it against `taxonomy`.
// Errors name the offending line.
Dataset LoadDataset(const std::filesystem::path& manifest,
                    const Taxonomy& taxonomy);
Dataset LoadDataset(const std::filesystem::path& manifest,
                    const std::filesystem::path& taxonomy_config);
void SaveDataset(const Dataset& dataset, const std::filesystem::path& path);

// Predicted concept per dataset instance, stored positionally.
class PredictionLog {
 public:
  static constexpr std::size_t kOther = static_cast<std::size_t>(-1);

  explicit PredictionLog(std::size_t instance_count)
      : predicted_(instance_count) {}

  // Predictions equal to the ground-truth labels.
  static PredictionLog FromLabels(const Dataset& dataset);

  void Set(std::size_t instance, std::size_t concept_or_other) {
    predicted_[instance] = concept_or_other;
  }
  // nullopt when the instance has no prediction; kOther for out-of-vocabulary.
  const std::optional<std::size_t>& at(std::size_t instance) const {
    return predicted_[instance];
  }
  std::size_t size() const { return predicted_.size(); }
  std::size_t covered() const;

 private:
  std::vector<std::optional<std::size_t>> predicted_;
};

// Reads `{"id": ..., "predicted_sc": ...}` lines. Unknown ids and duplicate
// ids are errors; labels outside the taxonomy map to kOtherConcept.
PredictionLog LoadPredictions(const std::filesystem::path& path,
                              const Dataset& dataset);
std::string SerializePredictions(const Dataset& dataset,
                                 const PredictionLog& predictions);

// |D_{a|c}| counts for every (attribute, concept) cell plus the intersectional
// (SA combination, concept) cells.
struct AuditCell {
  std::size_t count = 0;
  double deviation = 0.0;  // |count - mean| / mean, mean taken per concept
  bool flagged = false;
};

struct BalanceAudit {
  double tolerance = 0.0;
  std::size_t instance_count = 0;
  // [concept][attribute id]; the mean is over the values of the same axis.
  std::vector<std::vector<AuditCell>> pairs;
  // [concept][combination index]; combination index is mixed-radix over axes
  // with the last axis varying fastest.
  std::vector<std::vector<AuditCell>> combinations;
  std::size_t flagged_pairs = 0;
  std::size_t flagged_combinations = 0;

  // Σ_concept Σ_value count for one axis; equals instance_count.
  std::size_t AxisTotal(const Taxonomy& taxonomy, std::size_t axis) const;
};

// Flags cells whose deviation from the per-concept mean exceeds `tolerance`
// (a fraction; 0.1 means 10%).
BalanceAudit AuditBalance(const Dataset& dataset, double tolerance = 0.1);
Json AuditToJson(const Dataset& dataset, const BalanceAudit& audit);

// Mixed-radix combination index of an instance (last axis fastest).
std::size_t CombinationIndex(const Taxonomy& taxonomy,
                             const std::vector<std::size_t>& attributes);
std::vector<std::size_t> CombinationAt(const Taxonomy& taxonomy,
                                       std::size_t index);

}  // namespace skewfair

#endif  // SKEWFAIR_DATASET_H_
