#include "skewfair/metrics.h"

#include <cmath>

#include "skewfair/errors.h"

namespace skewfair {

std::string_view ToString(SkewMode mode) {
  return mode == SkewMode::kStrict ? "strict" : "smoothed";
}

SkewMode ParseSkewMode(std::string_view text) {
  if (text == "strict") return SkewMode::kStrict;
  if (text == "smoothed") return SkewMode::kSmoothed;
  throw ValidationError("unknown skew mode '" + std::string(text) +
                        "' (expected strict or smoothed)");
}

std::string_view ToString(UndefinedReason reason) {
  switch (reason) {
    case UndefinedReason::kEmptyPredictedSubset:
      return "empty predicted subset";
    case UndefinedReason::kEmptyGroundTruth:
      return "empty ground-truth subset";
  }
  return "unknown";
}

namespace {

UndefinedReason ParseReason(std::string_view text) {
  if (text == ToString(UndefinedReason::kEmptyGroundTruth)) {
    return UndefinedReason::kEmptyGroundTruth;
  }
  return UndefinedReason::kEmptyPredictedSubset;
}

void UpdateExtrema(Extremum& max, Extremum& min, bool& seen, double value,
                   std::size_t attribute) {
  if (!seen) {
    max = min = {value, attribute};
    seen = true;
    return;
  }
  if (value > max.value) max = {value, attribute};
  if (value < min.value) min = {value, attribute};
}

}  // namespace

SkewTable::SkewTable(Taxonomy taxonomy, SkewOptions options,
                     std::vector<std::optional<SkewValue>> pairs,
                     std::vector<UndefinedPair> undefined, SkewTableMeta meta)
    : taxonomy_(std::move(taxonomy)),
      options_(options),
      pairs_(std::move(pairs)),
      undefined_(std::move(undefined)),
      meta_(std::move(meta)) {
  const std::size_t attributes = taxonomy_.attribute_count();
  if (pairs_.size() != attributes * taxonomy_.concept_count()) {
    throw ValidationError("skew table size does not match the taxonomy");
  }
  extrema_.resize(taxonomy_.concept_count());
  double max_sum = 0.0;
  double min_sum = 0.0;
  for (std::size_t c = 0; c < taxonomy_.concept_count(); ++c) {
    ConceptExtrema extrema;
    extrema.per_axis.resize(taxonomy_.axis_count());
    bool seen = false;
    for (std::size_t axis = 0; axis < taxonomy_.axis_count(); ++axis) {
      AxisExtrema per_axis;
      bool axis_seen = false;
      for (std::size_t v = 0; v < taxonomy_.axes()[axis].values.size(); ++v) {
        const std::size_t a = taxonomy_.attribute_id(axis, v);
        const auto& entry = pair(a, c);
        if (!entry) continue;
        UpdateExtrema(extrema.max, extrema.min, seen, entry->value, a);
        UpdateExtrema(per_axis.max, per_axis.min, axis_seen, entry->value, a);
      }
      if (axis_seen) extrema.per_axis[axis] = per_axis;
    }
    if (seen) {
      max_sum += extrema.max.value;
      min_sum += extrema.min.value;
      ++aggregates_.concepts_included;
      extrema_[c] = std::move(extrema);
    } else {
      ++aggregates_.concepts_skipped;
    }
  }
  if (aggregates_.concepts_included > 0) {
    const auto n = static_cast<double>(aggregates_.concepts_included);
    aggregates_.max_skew = max_sum / n;
    aggregates_.min_skew = min_sum / n;
  }
}

std::size_t SkewTable::defined_count() const {
  std::size_t count = 0;
  for (const auto& p : pairs_) count += p.has_value();
  return count;
}

double SkewTable::MeanAbsSkew() const {
  double sum = 0.0;
  std::size_t count = 0;
  for (const auto& p : pairs_) {
    if (!p) continue;
    sum += std::abs(p->value);
    ++count;
  }
  return count ? sum / static_cast<double>(count) : 0.0;
}

SkewTable ComputeSkewTable(const Dataset& dataset,
                           const PredictionLog& predictions,
                           const SkewOptions& options) {
  if (dataset.empty()) throw ValidationError("cannot compute skew: empty dataset");
  if (predictions.size() != dataset.size()) {
    throw ValidationError("prediction log does not match the dataset size");
  }
  if (options.mode == SkewMode::kSmoothed && !(options.epsilon > 0)) {
    throw ValidationError("smoothed mode requires epsilon > 0");
  }
  if (!(options.kappa > 0)) throw ValidationError("kappa must be > 0");

  const Taxonomy& taxonomy = dataset.taxonomy();
  const std::size_t attributes = taxonomy.attribute_count();
  const std::size_t concepts = taxonomy.concept_count();

  std::vector<double> true_concept(concepts, 0.0);
  std::vector<double> predicted_concept(concepts, 0.0);
  std::vector<double> true_pair(concepts * attributes, 0.0);
  std::vector<double> predicted_pair(concepts * attributes, 0.0);
  SkewTableMeta meta;
  meta.dataset_hash = dataset.Hash();
  meta.instance_count = dataset.size();

  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& predicted = predictions.at(i);
    if (!predicted) {
      throw ValidationError("no prediction for instance '" + dataset[i].id +
                            "'");
    }
    const std::size_t truth = dataset[i].label;
    true_concept[truth] += 1;
    const bool other = *predicted == PredictionLog::kOther;
    if (other) {
      ++meta.other_predictions;
    } else {
      predicted_concept[*predicted] += 1;
    }
    for (std::size_t axis = 0; axis < taxonomy.axis_count(); ++axis) {
      const std::size_t a = dataset.attribute_id(i, axis);
      true_pair[truth * attributes + a] += 1;
      if (!other) predicted_pair[*predicted * attributes + a] += 1;
    }
  }

  const bool smoothed = options.mode == SkewMode::kSmoothed;
  std::vector<std::optional<SkewValue>> pairs(concepts * attributes);
  std::vector<UndefinedPair> undefined;
  for (std::size_t c = 0; c < concepts; ++c) {
    for (std::size_t axis = 0; axis < taxonomy.axis_count(); ++axis) {
      const double axis_size =
          static_cast<double>(taxonomy.axes()[axis].values.size());
      for (std::size_t v = 0; v < taxonomy.axes()[axis].values.size(); ++v) {
        const std::size_t a = taxonomy.attribute_id(axis, v);
        SkewCounts counts;
        counts.true_pair = true_pair[c * attributes + a];
        counts.true_concept = true_concept[c];
        counts.predicted_pair = predicted_pair[c * attributes + a];
        counts.predicted_concept = predicted_concept[c];
        if (smoothed) {
          counts.predicted_pair += options.epsilon;
          counts.predicted_concept += options.epsilon * axis_size;
        }
        if (counts.predicted_concept == 0) {
          undefined.push_back({a, c, UndefinedReason::kEmptyPredictedSubset});
          continue;
        }
        if (counts.true_pair == 0 || counts.true_concept == 0) {
          undefined.push_back({a, c, UndefinedReason::kEmptyGroundTruth});
          continue;
        }
        SkewValue skew;
        skew.counts = counts;
        if (counts.predicted_pair == 0) {
          skew.value = -options.kappa;
          skew.sentinel = true;
        } else {
          // One rounding for the ratio: the integer products are exact, so
          // equal proportions give exactly 0.
          skew.value =
              std::log((counts.predicted_pair * counts.true_concept) /
                       (counts.predicted_concept * counts.true_pair));
        }
        pairs[c * attributes + a] = skew;
      }
    }
  }
  return SkewTable(taxonomy, options, std::move(pairs), std::move(undefined),
                   std::move(meta));
}

InstanceSkew ComputeInstanceSkew(const Instance& instance,
                                 const SkewTable& table) {
  const Taxonomy& taxonomy = table.taxonomy();
  InstanceSkew result;
  result.id = instance.id;
  double best = -1.0;
  for (std::size_t axis = 0; axis < taxonomy.axis_count(); ++axis) {
    const std::size_t a = taxonomy.attribute_id(axis, instance.attributes[axis]);
    const auto& entry = table.pair(a, instance.label);
    if (!entry) continue;
    const double magnitude = std::abs(entry->value);
    if (magnitude > best) {
      best = magnitude;
      result.value = entry->value;
      result.source = SkewSource{axis, a, instance.label};
    }
  }
  return result;
}

std::vector<InstanceSkew> ComputeInstanceSkews(const Dataset& dataset,
                                               const SkewTable& table) {
  if (!(dataset.taxonomy() == table.taxonomy())) {
    throw ValidationError("skew table was computed on a different taxonomy");
  }
  std::vector<InstanceSkew> skews;
  skews.reserve(dataset.size());
  for (const Instance& instance : dataset.instances()) {
    skews.push_back(ComputeInstanceSkew(instance, table));
  }
  return skews;
}

Json SkewReportJson(const SkewTable& table) {
  const Taxonomy& taxonomy = table.taxonomy();
  Json pairwise = Json::array();
  for (std::size_t c = 0; c < taxonomy.concept_count(); ++c) {
    for (std::size_t a = 0; a < taxonomy.attribute_count(); ++a) {
      const auto& entry = table.pair(a, c);
      if (!entry) continue;
      pairwise.push_back(
          {{"concept", taxonomy.concepts()[c].name},
           {"axis", taxonomy.attribute_axis_name(a)},
           {"attribute", taxonomy.attribute_name(a)},
           {"value", Round12(entry->value)},
           {"sentinel", entry->sentinel},
           {"counts",
            {{"predicted_pair", Round12(entry->counts.predicted_pair)},
             {"predicted_concept", Round12(entry->counts.predicted_concept)},
             {"true_pair", Round12(entry->counts.true_pair)},
             {"true_concept", Round12(entry->counts.true_concept)}}}});
    }
  }

  auto extremum_json = [&](const Extremum& e) {
    return Json{{"value", Round12(e.value)},
                {"axis", taxonomy.attribute_axis_name(e.attribute)},
                {"attribute", taxonomy.attribute_name(e.attribute)}};
  };
  Json per_concept = Json::array();
  for (std::size_t c = 0; c < taxonomy.concept_count(); ++c) {
    Json entry = {{"concept", taxonomy.concepts()[c].name},
                  {"group", taxonomy.concepts()[c].group}};
    const auto& extrema = table.extrema(c);
    entry["defined"] = extrema.has_value();
    if (extrema) {
      entry["max_skew"] = extremum_json(extrema->max);
      entry["min_skew"] = extremum_json(extrema->min);
      Json per_axis = Json::array();
      for (std::size_t axis = 0; axis < taxonomy.axis_count(); ++axis) {
        const auto& ax = extrema->per_axis[axis];
        if (!ax) continue;
        per_axis.push_back({{"axis", taxonomy.axes()[axis].name},
                            {"max_skew", extremum_json(ax->max)},
                            {"min_skew", extremum_json(ax->min)}});
      }
      entry["per_axis"] = std::move(per_axis);
    }
    per_concept.push_back(std::move(entry));
  }

  Json undefined = Json::array();
  for (const UndefinedPair& u : table.undefined()) {
    undefined.push_back({{"concept", taxonomy.concepts()[u.label].name},
                         {"axis", taxonomy.attribute_axis_name(u.attribute)},
                         {"attribute", taxonomy.attribute_name(u.attribute)},
                         {"reason", std::string(ToString(u.reason))}});
  }

  const SkewAggregates& agg = table.aggregates();
  const SkewOptions& options = table.options();
  return {
      {"pairwise", std::move(pairwise)},
      {"per_concept", std::move(per_concept)},
      {"aggregates",
       {{"max_skew_at_c", Round12(agg.max_skew)},
        {"min_skew_at_c", Round12(agg.min_skew)},
        {"mean_abs_skew", Round12(table.MeanAbsSkew())},
        {"concepts_included", agg.concepts_included},
        {"concepts_skipped", agg.concepts_skipped}}},
      {"undefined", std::move(undefined)},
      {"meta",
       {{"format", "skewfair.skew_report"},
        {"format_version", 1},
        {"mode", std::string(ToString(options.mode))},
        {"epsilon", Round12(options.epsilon)},
        {"kappa", Round12(options.kappa)},
        {"log_base", "e"},
        {"dataset_hash", table.meta().dataset_hash},
        {"instance_count", table.meta().instance_count},
        {"other_predictions", table.meta().other_predictions}}}};
}

std::string SerializeSkewReport(const SkewTable& table) {
  return SkewReportJson(table).dump(2) + "\n";
}

namespace {

std::size_t ResolveAttribute(const Taxonomy& taxonomy, const Json& entry) {
  const std::string axis_name = entry.at("axis").get<std::string>();
  const std::string value = entry.at("attribute").get<std::string>();
  const auto axis = taxonomy.FindAxis(axis_name);
  if (!axis) throw ValidationError("report: unknown axis '" + axis_name + "'");
  const auto index = taxonomy.FindValue(*axis, value);
  if (!index) {
    throw ValidationError("report: unknown value '" + value + "' on axis '" +
                          axis_name + "'");
  }
  return taxonomy.attribute_id(*axis, *index);
}

std::size_t ResolveConcept(const Taxonomy& taxonomy, const Json& entry) {
  const std::string name = entry.at("concept").get<std::string>();
  const auto label = taxonomy.FindConcept(name);
  if (!label) throw ValidationError("report: unknown concept '" + name + "'");
  return *label;
}

}  // namespace

SkewTable ParseSkewReport(const Json& report, const Taxonomy& taxonomy) {
  try {
    SkewOptions options;
    SkewTableMeta meta;
    if (report.contains("meta")) {
      const Json& m = report["meta"];
      if (m.contains("mode")) {
        options.mode = ParseSkewMode(m["mode"].get<std::string>());
      }
      if (m.contains("epsilon")) options.epsilon = m["epsilon"].get<double>();
      if (m.contains("kappa")) options.kappa = m["kappa"].get<double>();
      if (m.contains("dataset_hash")) {
        meta.dataset_hash = m["dataset_hash"].get<std::string>();
      }
      if (m.contains("instance_count")) {
        meta.instance_count = m["instance_count"].get<std::size_t>();
      }
      if (m.contains("other_predictions")) {
        meta.other_predictions = m["other_predictions"].get<std::size_t>();
      }
    }
    const std::size_t attributes = taxonomy.attribute_count();
    std::vector<std::optional<SkewValue>> pairs(attributes *
                                                taxonomy.concept_count());
    for (const Json& entry : report.at("pairwise")) {
      const std::size_t a = ResolveAttribute(taxonomy, entry);
      const std::size_t c = ResolveConcept(taxonomy, entry);
      SkewValue value;
      value.value = entry.at("value").get<double>();
      value.sentinel = entry.value("sentinel", false);
      if (entry.contains("counts")) {
        const Json& counts = entry["counts"];
        value.counts.predicted_pair = counts.value("predicted_pair", 0.0);
        value.counts.predicted_concept = counts.value("predicted_concept", 0.0);
        value.counts.true_pair = counts.value("true_pair", 0.0);
        value.counts.true_concept = counts.value("true_concept", 0.0);
      }
      pairs[c * attributes + a] = value;
    }
    std::vector<UndefinedPair> undefined;
    if (report.contains("undefined")) {
      for (const Json& entry : report["undefined"]) {
        undefined.push_back(
            {ResolveAttribute(taxonomy, entry), ResolveConcept(taxonomy, entry),
             ParseReason(entry.value("reason", std::string()))});
      }
    }
    return SkewTable(taxonomy, options, std::move(pairs), std::move(undefined),
                     std::move(meta));
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("malformed skew report: ") + e.what());
  }
}

}  // namespace skewfair
