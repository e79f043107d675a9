#ifndef SKEWFAIR_TAXONOMY_H_
#define SKEWFAIR_TAXONOMY_H_

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "skewfair/io.h"

namespace skewfair {

// One attribute axis, e.g. gender with values {Male, Female}.
struct Axis {
  std::string name;
  std::vector<std::string> values;
};

// A social concept (the classification target) and the group it belongs to.
struct Concept {
  std::string name;
  std::string group;
};

// Position of an attribute value inside the taxonomy.
struct AttributeRef {
  std::size_t axis = 0;
  std::size_t value = 0;
};

// Attribute axes and concept list. Attribute values of all axes are also
// addressable by a flat "attribute id": axis 0 values first, then axis 1, ...
//
// Immutable after construction; the constructor enforces unique names,
// at least two values per axis and at least one concept.
class Taxonomy {
 public:
  Taxonomy(std::vector<Axis> axes, std::vector<Concept> concepts);

  static Taxonomy FromJson(const Json& doc);
  static Taxonomy Load(const std::filesystem::path& path);
  Json ToJson() const;

  const std::vector<Axis>& axes() const { return axes_; }
  const std::vector<Concept>& concepts() const { return concepts_; }
  std::size_t axis_count() const { return axes_.size(); }
  std::size_t concept_count() const { return concepts_.size(); }

  std::optional<std::size_t> FindAxis(std::string_view name) const;
  std::optional<std::size_t> FindValue(std::size_t axis,
                                       std::string_view value) const;
  std::optional<std::size_t> FindConcept(std::string_view name) const;

  // Flat attribute ids.
  std::size_t attribute_count() const { return attribute_count_; }
  std::size_t attribute_id(std::size_t axis, std::size_t value) const {
    return offsets_[axis] + value;
  }
  AttributeRef attribute_at(std::size_t id) const;
  const std::string& attribute_name(std::size_t id) const;
  const std::string& attribute_axis_name(std::size_t id) const;

  // Number of distinct SA combinations (product of axis sizes).
  std::size_t combination_count() const;

  bool operator==(const Taxonomy& other) const;

 private:
  std::vector<Axis> axes_;
  std::vector<Concept> concepts_;
  std::vector<std::size_t> offsets_;
  std::size_t attribute_count_ = 0;
};

}  // namespace skewfair

#endif  // SKEWFAIR_TAXONOMY_H_
