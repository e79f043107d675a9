#include "skewfair/dataset.h"

#include <cmath>

#include "skewfair/errors.h"

namespace skewfair {

using OrderedJson = nlohmann::ordered_json;

Dataset::Dataset(Taxonomy taxonomy, std::vector<Instance> instances)
    : taxonomy_(std::move(taxonomy)), instances_(std::move(instances)) {
  index_.reserve(instances_.size());
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    const Instance& instance = instances_[i];
    if (instance.id.empty()) {
      throw ValidationError("instance " + std::to_string(i) + " has empty id");
    }
    if (instance.attributes.size() != taxonomy_.axis_count()) {
      throw ValidationError("instance '" + instance.id +
                            "' does not have one value per axis");
    }
    for (std::size_t axis = 0; axis < taxonomy_.axis_count(); ++axis) {
      if (instance.attributes[axis] >= taxonomy_.axes()[axis].values.size()) {
        throw ValidationError("instance '" + instance.id +
                              "' has an out-of-range value on axis '" +
                              taxonomy_.axes()[axis].name + "'");
      }
    }
    if (instance.label >= taxonomy_.concept_count()) {
      throw ValidationError("instance '" + instance.id +
                            "' has an out-of-range concept");
    }
    if (!index_.emplace(instance.id, i).second) {
      throw ValidationError("duplicate id '" + instance.id + "'");
    }
  }
}

std::optional<std::size_t> Dataset::Find(std::string_view id) const {
  const auto it = index_.find(std::string(id));
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string Dataset::ToManifest() const {
  std::string out;
  for (const Instance& instance : instances_) {
    OrderedJson sa = OrderedJson::object();
    for (std::size_t axis = 0; axis < taxonomy_.axis_count(); ++axis) {
      const Axis& a = taxonomy_.axes()[axis];
      sa[a.name] = a.values[instance.attributes[axis]];
    }
    OrderedJson line = {{"id", instance.id},
                        {"sc", taxonomy_.concepts()[instance.label].name},
                        {"sa", std::move(sa)}};
    if (instance.uri) line["uri"] = *instance.uri;
    out += line.dump();
    out += '\n';
  }
  return out;
}

std::string Dataset::Hash() const { return HashHex(ToManifest()); }

bool Dataset::operator==(const Dataset& other) const {
  return taxonomy_ == other.taxonomy_ && instances_ == other.instances_;
}

Dataset LoadDataset(const std::filesystem::path& manifest,
                    const Taxonomy& taxonomy) {
  std::vector<Instance> instances;
  std::unordered_map<std::string, std::size_t> first_line;
  ForEachJsonLine(manifest, [&](const Json& line, std::size_t line_number) {
    const std::string where = Where(manifest, line_number);
    if (!line.contains("id") || !line["id"].is_string() ||
        line["id"].get<std::string>().empty()) {
      throw ValidationError(where + "missing or non-string 'id'");
    }
    Instance instance;
    instance.id = line["id"].get<std::string>();
    const auto [it, inserted] = first_line.emplace(instance.id, line_number);
    if (!inserted) {
      throw ValidationError(where + "duplicate id '" + instance.id +
                            "' (first seen on line " +
                            std::to_string(it->second) + ")");
    }
    if (!line.contains("sc") || !line["sc"].is_string()) {
      throw ValidationError(where + "missing or non-string 'sc'");
    }
    const std::string sc = line["sc"].get<std::string>();
    const auto label = taxonomy.FindConcept(sc);
    if (!label) throw ValidationError(where + "unknown concept '" + sc + "'");
    instance.label = *label;

    if (!line.contains("sa") || !line["sa"].is_object()) {
      throw ValidationError(where + "missing or non-object 'sa'");
    }
    const Json& sa = line["sa"];
    for (const auto& [key, value] : sa.items()) {
      if (!taxonomy.FindAxis(key)) {
        throw ValidationError(where + "unknown axis '" + key + "' in 'sa'");
      }
    }
    instance.attributes.resize(taxonomy.axis_count());
    for (std::size_t axis = 0; axis < taxonomy.axis_count(); ++axis) {
      const std::string& name = taxonomy.axes()[axis].name;
      if (!sa.contains(name)) {
        throw ValidationError(where + "'sa' is missing axis '" + name + "'");
      }
      if (!sa[name].is_string()) {
        throw ValidationError(where + "'sa." + name + "' must be a string");
      }
      const std::string value = sa[name].get<std::string>();
      const auto index = taxonomy.FindValue(axis, value);
      if (!index) {
        throw ValidationError(where + "unknown value '" + value +
                              "' for axis '" + name + "'");
      }
      instance.attributes[axis] = *index;
    }
    if (line.contains("uri")) {
      if (!line["uri"].is_string()) {
        throw ValidationError(where + "'uri' must be a string");
      }
      instance.uri = line["uri"].get<std::string>();
    }
    instances.push_back(std::move(instance));
  });
  return Dataset(taxonomy, std::move(instances));
}

Dataset LoadDataset(const std::filesystem::path& manifest,
                    const std::filesystem::path& taxonomy_config) {
  return LoadDataset(manifest, Taxonomy::Load(taxonomy_config));
}

void SaveDataset(const Dataset& dataset, const std::filesystem::path& path) {
  WriteTextFile(path, dataset.ToManifest());
}

PredictionLog PredictionLog::FromLabels(const Dataset& dataset) {
  PredictionLog log(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    log.Set(i, dataset[i].label);
  }
  return log;
}

std::size_t PredictionLog::covered() const {
  std::size_t count = 0;
  for (const auto& p : predicted_) count += p.has_value();
  return count;
}

PredictionLog LoadPredictions(const std::filesystem::path& path,
                              const Dataset& dataset) {
  PredictionLog log(dataset.size());
  const Taxonomy& taxonomy = dataset.taxonomy();
  ForEachJsonLine(path, [&](const Json& line, std::size_t line_number) {
    const std::string where = Where(path, line_number);
    if (!line.contains("id") || !line["id"].is_string()) {
      throw ValidationError(where + "missing or non-string 'id'");
    }
    if (!line.contains("predicted_sc") || !line["predicted_sc"].is_string()) {
      throw ValidationError(where + "missing or non-string 'predicted_sc'");
    }
    const std::string id = line["id"].get<std::string>();
    const auto index = dataset.Find(id);
    if (!index) {
      throw ValidationError(where + "id '" + id + "' is not in the dataset");
    }
    if (log.at(*index)) {
      throw ValidationError(where + "duplicate prediction for id '" + id + "'");
    }
    const auto label =
        taxonomy.FindConcept(line["predicted_sc"].get<std::string>());
    log.Set(*index, label ? *label : PredictionLog::kOther);
  });
  return log;
}

std::string SerializePredictions(const Dataset& dataset,
                                 const PredictionLog& predictions) {
  std::string out;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const auto& p = predictions.at(i);
    if (!p) continue;
    const std::string label =
        *p == PredictionLog::kOther
            ? std::string(kOtherConcept)
            : dataset.taxonomy().concepts()[*p].name;
    out += OrderedJson{{"id", dataset[i].id}, {"predicted_sc", label}}.dump();
    out += '\n';
  }
  return out;
}

std::size_t CombinationIndex(const Taxonomy& taxonomy,
                             const std::vector<std::size_t>& attributes) {
  std::size_t index = 0;
  for (std::size_t axis = 0; axis < taxonomy.axis_count(); ++axis) {
    index = index * taxonomy.axes()[axis].values.size() + attributes[axis];
  }
  return index;
}

std::vector<std::size_t> CombinationAt(const Taxonomy& taxonomy,
                                       std::size_t index) {
  std::vector<std::size_t> attributes(taxonomy.axis_count());
  for (std::size_t axis = taxonomy.axis_count(); axis-- > 0;) {
    const std::size_t radix = taxonomy.axes()[axis].values.size();
    attributes[axis] = index % radix;
    index /= radix;
  }
  return attributes;
}

namespace {

// Marks deviations over a group of cells sharing one mean.
std::size_t FlagGroup(std::vector<AuditCell>& cells, std::size_t begin,
                      std::size_t end, double tolerance) {
  double total = 0;
  for (std::size_t i = begin; i < end; ++i) total += cells[i].count;
  const double mean = total / static_cast<double>(end - begin);
  std::size_t flagged = 0;
  for (std::size_t i = begin; i < end; ++i) {
    AuditCell& cell = cells[i];
    cell.deviation =
        mean > 0 ? std::abs(static_cast<double>(cell.count) - mean) / mean
                 : 0.0;
    cell.flagged = cell.deviation > tolerance;
    flagged += cell.flagged;
  }
  return flagged;
}

}  // namespace

std::size_t BalanceAudit::AxisTotal(const Taxonomy& taxonomy,
                                    std::size_t axis) const {
  std::size_t total = 0;
  const std::size_t begin = taxonomy.attribute_id(axis, 0);
  const std::size_t end = begin + taxonomy.axes()[axis].values.size();
  for (const auto& row : pairs) {
    for (std::size_t a = begin; a < end; ++a) total += row[a].count;
  }
  return total;
}

BalanceAudit AuditBalance(const Dataset& dataset, double tolerance) {
  if (!(tolerance >= 0)) throw ValidationError("tolerance must be >= 0");
  const Taxonomy& taxonomy = dataset.taxonomy();
  BalanceAudit audit;
  audit.tolerance = tolerance;
  audit.instance_count = dataset.size();
  audit.pairs.assign(taxonomy.concept_count(),
                     std::vector<AuditCell>(taxonomy.attribute_count()));
  audit.combinations.assign(
      taxonomy.concept_count(),
      std::vector<AuditCell>(taxonomy.combination_count()));
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const Instance& instance = dataset[i];
    for (std::size_t axis = 0; axis < taxonomy.axis_count(); ++axis) {
      ++audit.pairs[instance.label][dataset.attribute_id(i, axis)].count;
    }
    ++audit.combinations[instance.label]
                        [CombinationIndex(taxonomy, instance.attributes)]
                            .count;
  }
  for (std::size_t c = 0; c < taxonomy.concept_count(); ++c) {
    for (std::size_t axis = 0; axis < taxonomy.axis_count(); ++axis) {
      const std::size_t begin = taxonomy.attribute_id(axis, 0);
      audit.flagged_pairs +=
          FlagGroup(audit.pairs[c], begin,
                    begin + taxonomy.axes()[axis].values.size(), tolerance);
    }
    audit.flagged_combinations +=
        FlagGroup(audit.combinations[c], 0, taxonomy.combination_count(),
                  tolerance);
  }
  return audit;
}

Json AuditToJson(const Dataset& dataset, const BalanceAudit& audit) {
  const Taxonomy& taxonomy = dataset.taxonomy();
  Json pairs = Json::array();
  Json combinations = Json::array();
  for (std::size_t c = 0; c < taxonomy.concept_count(); ++c) {
    const std::string& label = taxonomy.concepts()[c].name;
    for (std::size_t a = 0; a < taxonomy.attribute_count(); ++a) {
      const AuditCell& cell = audit.pairs[c][a];
      pairs.push_back({{"concept", label},
                       {"axis", taxonomy.attribute_axis_name(a)},
                       {"attribute", taxonomy.attribute_name(a)},
                       {"count", cell.count},
                       {"deviation", Round12(cell.deviation)},
                       {"flagged", cell.flagged}});
    }
    for (std::size_t k = 0; k < taxonomy.combination_count(); ++k) {
      const AuditCell& cell = audit.combinations[c][k];
      Json sa = Json::object();
      const auto values = CombinationAt(taxonomy, k);
      for (std::size_t axis = 0; axis < taxonomy.axis_count(); ++axis) {
        sa[taxonomy.axes()[axis].name] =
            taxonomy.axes()[axis].values[values[axis]];
      }
      combinations.push_back({{"concept", label},
                              {"sa", std::move(sa)},
                              {"count", cell.count},
                              {"deviation", Round12(cell.deviation)},
                              {"flagged", cell.flagged}});
    }
  }
  return {{"instance_count", audit.instance_count},
          {"tolerance", audit.tolerance},
          {"flagged_pairs", audit.flagged_pairs},
          {"flagged_combinations", audit.flagged_combinations},
          {"pairs", std::move(pairs)},
          {"combinations", std::move(combinations)}};
}

}  // namespace skewfair
