#include "skewfair/taxonomy.h"

#include <set>

#include "skewfair/errors.h"

namespace skewfair {

Taxonomy::Taxonomy(std::vector<Axis> axes, std::vector<Concept> concepts)
    : axes_(std::move(axes)), concepts_(std::move(concepts)) {
  if (axes_.empty()) throw ValidationError("taxonomy has no axes");
  if (concepts_.empty()) throw ValidationError("taxonomy has no concepts");
  std::set<std::string> axis_names;
  for (const Axis& axis : axes_) {
    if (axis.name.empty()) throw ValidationError("axis with empty name");
    if (!axis_names.insert(axis.name).second) {
      throw ValidationError("duplicate axis '" + axis.name + "'");
    }
    if (axis.values.size() < 2) {
      throw ValidationError("axis '" + axis.name +
                            "' needs at least 2 values");
    }
    std::set<std::string> values;
    for (const std::string& value : axis.values) {
      if (value.empty()) {
        throw ValidationError("axis '" + axis.name + "' has an empty value");
      }
      if (!values.insert(value).second) {
        throw ValidationError("duplicate value '" + value + "' on axis '" +
                              axis.name + "'");
      }
    }
  }
  std::set<std::string> concept_names;
  for (const Concept& c : concepts_) {
    if (c.name.empty()) throw ValidationError("concept with empty name");
    if (c.name == "__other__") {
      throw ValidationError("concept name '__other__' is reserved");
    }
    if (!concept_names.insert(c.name).second) {
      throw ValidationError("duplicate concept '" + c.name + "'");
    }
  }
  offsets_.reserve(axes_.size());
  for (const Axis& axis : axes_) {
    offsets_.push_back(attribute_count_);
    attribute_count_ += axis.values.size();
  }
}

Taxonomy Taxonomy::FromJson(const Json& doc) {
  if (!doc.is_object()) throw ValidationError("taxonomy must be an object");
  if (!doc.contains("axes") || !doc["axes"].is_array()) {
    throw ValidationError("taxonomy: 'axes' must be an array");
  }
  if (!doc.contains("concepts") || !doc["concepts"].is_array()) {
    throw ValidationError("taxonomy: 'concepts' must be an array");
  }
  std::vector<Axis> axes;
  for (const Json& entry : doc["axes"]) {
    if (!entry.is_object() || !entry.contains("name") ||
        !entry["name"].is_string() || !entry.contains("values") ||
        !entry["values"].is_array()) {
      throw ValidationError(
          "taxonomy: each axis needs a string 'name' and a 'values' array");
    }
    Axis axis{entry["name"].get<std::string>(), {}};
    for (const Json& value : entry["values"]) {
      if (!value.is_string()) {
        throw ValidationError("taxonomy: axis '" + axis.name +
                              "' has a non-string value");
      }
      axis.values.push_back(value.get<std::string>());
    }
    axes.push_back(std::move(axis));
  }
  std::vector<Concept> concepts;
  for (const Json& entry : doc["concepts"]) {
    if (entry.is_string()) {
      concepts.push_back({entry.get<std::string>(), ""});
      continue;
    }
    if (!entry.is_object() || !entry.contains("name") ||
        !entry["name"].is_string()) {
      throw ValidationError("taxonomy: each concept needs a string 'name'");
    }
    Concept parsed{entry["name"].get<std::string>(), ""};
    if (entry.contains("group")) {
      if (!entry["group"].is_string()) {
        throw ValidationError("taxonomy: concept group must be a string");
      }
      parsed.group = entry["group"].get<std::string>();
    }
    concepts.push_back(std::move(parsed));
  }
  return Taxonomy(std::move(axes), std::move(concepts));
}

Taxonomy Taxonomy::Load(const std::filesystem::path& path) {
  const Json doc = ReadJsonFile(path);
  try {
    return FromJson(doc);
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

Json Taxonomy::ToJson() const {
  Json axes = Json::array();
  for (const Axis& axis : axes_) {
    axes.push_back({{"name", axis.name}, {"values", axis.values}});
  }
  Json concepts = Json::array();
  for (const Concept& c : concepts_) {
    concepts.push_back({{"name", c.name}, {"group", c.group}});
  }
  return {{"axes", std::move(axes)}, {"concepts", std::move(concepts)}};
}

std::optional<std::size_t> Taxonomy::FindAxis(std::string_view name) const {
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    if (axes_[i].name == name) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> Taxonomy::FindValue(std::size_t axis,
                                               std::string_view value) const {
  const auto& values = axes_.at(axis).values;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] == value) return i;
  }
  return std::nullopt;
}

std::optional<std::size_t> Taxonomy::FindConcept(std::string_view name) const {
  for (std::size_t i = 0; i < concepts_.size(); ++i) {
    if (concepts_[i].name == name) return i;
  }
  return std::nullopt;
}

AttributeRef Taxonomy::attribute_at(std::size_t id) const {
  for (std::size_t axis = axes_.size(); axis-- > 0;) {
    if (id >= offsets_[axis]) return {axis, id - offsets_[axis]};
  }
  return {};
}

const std::string& Taxonomy::attribute_name(std::size_t id) const {
  const AttributeRef ref = attribute_at(id);
  return axes_[ref.axis].values[ref.value];
}

const std::string& Taxonomy::attribute_axis_name(std::size_t id) const {
  return axes_[attribute_at(id).axis].name;
}

std::size_t Taxonomy::combination_count() const {
  std::size_t count = 1;
  for (const Axis& axis : axes_) count *= axis.values.size();
  return count;
}

bool Taxonomy::operator==(const Taxonomy& other) const {
  if (axes_.size() != other.axes_.size() ||
      concepts_.size() != other.concepts_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < axes_.size(); ++i) {
    if (axes_[i].name != other.axes_[i].name ||
        axes_[i].values != other.axes_[i].values) {
      return false;
    }
  }
  for (std::size_t i = 0; i < concepts_.size(); ++i) {
    if (concepts_[i].name != other.concepts_[i].name ||
        concepts_[i].group != other.concepts_[i].group) {
      return false;
    }
  }
  return true;
}

}  // namespace skewfair
