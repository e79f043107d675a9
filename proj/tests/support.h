// Shared helpers for the test binaries: small dataset builders, random
// corpora and an independent brute-force recount of the skew table.
#ifndef SKEWFAIR_TESTS_SUPPORT_H_
#define SKEWFAIR_TESTS_SUPPORT_H_

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "skewfair/dataset.h"
#include "skewfair/metrics.h"

namespace skewfair::testing {

inline std::filesystem::path FixturePath(const std::string& name) {
  return std::filesystem::path(SKEWFAIR_FIXTURE_DIR) / name;
}

inline std::filesystem::path DataPath(const std::string& name) {
  return std::filesystem::path(SKEWFAIR_DATA_DIR) / name;
}

// A fresh scratch directory under the system temp dir, removed on scope exit.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static int counter = 0;
    path_ = std::filesystem::temp_directory_path() /
            ("skewfair-" + tag + "-" + std::to_string(::getpid()) + "-" +
             std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ignored;
    std::filesystem::remove_all(path_, ignored);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const {
    return path_ / name;
  }

 private:
  std::filesystem::path path_;
};

inline Taxonomy GenderTaxonomy(std::vector<std::string> concepts) {
  std::vector<Concept> list;
  for (auto& c : concepts) list.push_back({c, "occupation"});
  return Taxonomy({{"gender", {"Male", "Female"}}}, list);
}

inline Taxonomy ThreeAxisTaxonomy() {
  return Taxonomy({{"gender", {"Male", "Female"}},
                   {"race", {"White", "Black", "Indian"}},
                   {"age", {"Young", "Old"}}},
                  {{"nurse", "occupation"},
                   {"engineer", "occupation"},
                   {"chef", "occupation"}});
}

// The 20-instance nurse/engineer set with the 8F/2M prediction pattern.
struct NurseCase {
  Dataset dataset;
  PredictionLog predictions;
};

inline NurseCase MakeNurseCase() {
  const Taxonomy taxonomy = GenderTaxonomy({"nurse", "engineer"});
  std::vector<Instance> instances;
  std::vector<std::size_t> predicted;
  for (std::size_t c = 0; c < 2; ++c) {
    for (std::size_t g : {1u, 0u}) {  // Female first, then Male
      for (std::size_t k = 0; k < 5; ++k) {
        instances.push_back({"i" + std::to_string(instances.size()), {g}, c, {}});
        std::size_t p = c;
        if (c == 0 && g == 0) p = k < 2 ? 0 : 1;
        if (c == 1 && g == 1) p = k < 3 ? 0 : 1;
        predicted.push_back(p);
      }
    }
  }
  Dataset dataset(taxonomy, std::move(instances));
  PredictionLog log(dataset.size());
  for (std::size_t i = 0; i < predicted.size(); ++i) log.Set(i, predicted[i]);
  return {std::move(dataset), std::move(log)};
}

// Random taxonomy with 1-3 axes of 2-4 values and 1-5 concepts, plus a
// dataset of up to max_n instances and noisy predictions (some __other__).
struct RandomCase {
  Dataset dataset;
  PredictionLog predictions;
};

inline RandomCase MakeRandomCase(std::mt19937_64& rng, std::size_t max_n) {
  auto pick = [&](std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
  };
  std::vector<Axis> axes;
  const std::size_t axis_count = pick(1, 3);
  for (std::size_t a = 0; a < axis_count; ++a) {
    Axis axis{"axis" + std::to_string(a), {}};
    const std::size_t values = pick(2, 4);
    for (std::size_t v = 0; v < values; ++v) {
      axis.values.push_back("v" + std::to_string(v));
    }
    axes.push_back(axis);
  }
  std::vector<Concept> concepts;
  const std::size_t concept_count = pick(1, 5);
  for (std::size_t c = 0; c < concept_count; ++c) {
    concepts.push_back({"c" + std::to_string(c), "g"});
  }
  Taxonomy taxonomy(axes, concepts);
  const std::size_t n = pick(1, max_n);
  std::vector<Instance> instances;
  for (std::size_t i = 0; i < n; ++i) {
    Instance inst{"r" + std::to_string(i), {}, pick(0, concept_count - 1), {}};
    for (const Axis& axis : axes) {
      inst.attributes.push_back(pick(0, axis.values.size() - 1));
    }
    instances.push_back(inst);
  }
  Dataset dataset(taxonomy, std::move(instances));
  PredictionLog log(n);
  const double accuracy = std::uniform_real_distribution<double>(0, 1)(rng);
  for (std::size_t i = 0; i < n; ++i) {
    const double u = std::uniform_real_distribution<double>(0, 1)(rng);
    if (u < 0.03) {
      log.Set(i, PredictionLog::kOther);
    } else if (u < accuracy) {
      log.Set(i, dataset[i].label);
    } else {
      log.Set(i, pick(0, concept_count - 1));
    }
  }
  return {std::move(dataset), std::move(log)};
}

// Straight recount of the skew definition, one pair at a time, by scanning
// every instance. Deliberately shares no code with ComputeSkewTable.
struct OraclePair {
  bool defined = false;
  double value = 0.0;
  bool sentinel = false;
};

inline OraclePair OracleSkew(const Dataset& dataset,
                             const PredictionLog& predictions,
                             std::size_t axis, std::size_t value,
                             std::size_t label, const SkewOptions& options) {
  double predicted_pair = 0, predicted_concept = 0;
  double true_pair = 0, true_concept = 0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const bool has_attribute = dataset[i].attributes[axis] == value;
    if (predictions.at(i) && *predictions.at(i) == label) {
      predicted_concept += 1;
      if (has_attribute) predicted_pair += 1;
    }
    if (dataset[i].label == label) {
      true_concept += 1;
      if (has_attribute) true_pair += 1;
    }
  }
  OraclePair out;
  if (options.mode == SkewMode::kSmoothed) {
    // Pseudo-counts go on the predicted side only.
    const double k =
        static_cast<double>(dataset.taxonomy().axes()[axis].values.size());
    predicted_pair += options.epsilon;
    predicted_concept += options.epsilon * k;
  }
  if (predicted_concept == 0 || true_pair == 0) return out;
  out.defined = true;
  if (predicted_pair == 0) {
    out.value = -options.kappa;
    out.sentinel = true;
    return out;
  }
  out.value = std::log((predicted_pair / predicted_concept) /
                       (true_pair / true_concept));
  return out;
}

}  // namespace skewfair::testing

#endif  // SKEWFAIR_TESTS_SUPPORT_H_
