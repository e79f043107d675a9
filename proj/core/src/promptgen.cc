#include "skewfair/promptgen.h"

#include <algorithm>
#include <cctype>

#include "skewfair/errors.h"

namespace skewfair {

using OrderedJson = nlohmann::ordered_json;

PromptTemplate PromptTemplate::FromJson(const Json& doc) {
  auto required_string = [&](const char* key) {
    if (!doc.contains(key) || !doc[key].is_string()) {
      throw ValidationError(std::string("template: missing string '") + key +
                            "'");
    }
    return doc[key].get<std::string>();
  };
  if (!doc.is_object()) throw ValidationError("template must be an object");
  PromptTemplate t;
  t.concept_name = required_string("concept");
  t.group = doc.contains("group") ? required_string("group") : "";
  t.body = required_string("body");
  if (doc.contains("age_variants")) {
    if (!doc["age_variants"].is_object()) {
      throw ValidationError("template '" + t.concept_name +
                            "': 'age_variants' must be an object");
    }
    for (const auto& [key, value] : doc["age_variants"].items()) {
      if (!value.is_string()) {
        throw ValidationError("template '" + t.concept_name +
                              "': age variant bodies must be strings");
      }
      t.age_variants[key] = value.get<std::string>();
    }
  }
  return t;
}

Json PromptTemplate::ToJson() const {
  Json doc = {{"concept", concept_name}, {"group", group}, {"body", body}};
  if (!age_variants.empty()) doc["age_variants"] = age_variants;
  return doc;
}

std::vector<PromptTemplate> LoadTemplates(const std::filesystem::path& dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(dir, ec)) {
    throw IoError("template directory not found: " + dir.string());
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".json") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<PromptTemplate> templates;
  for (const auto& file : files) {
    try {
      templates.push_back(PromptTemplate::FromJson(ReadJsonFile(file)));
    } catch (const ValidationError& e) {
      throw ValidationError(file.string() + ": " + e.what());
    }
  }
  return templates;
}

namespace {

std::string Placeholder(const std::string& axis) { return "[" + axis + "]"; }

void ReplaceAll(std::string& text, const std::string& from,
                const std::string& to) {
  for (std::size_t pos = text.find(from); pos != std::string::npos;
       pos = text.find(from, pos + to.size())) {
    text.replace(pos, from.size(), to);
  }
}

// Finds a leftover "[name]" token.
std::optional<std::string> FindPlaceholder(const std::string& text) {
  for (std::size_t open = text.find('['); open != std::string::npos;
       open = text.find('[', open + 1)) {
    const std::size_t close = text.find(']', open);
    if (close == std::string::npos) return std::nullopt;
    const std::string name = text.substr(open + 1, close - open - 1);
    if (!name.empty() &&
        std::all_of(name.begin(), name.end(), [](unsigned char c) {
          return std::isalnum(c) || c == '_' || c == '-' || c == ' ';
        })) {
      return "[" + name + "]";
    }
  }
  return std::nullopt;
}

std::string Slug(const std::string& text) {
  std::string out;
  for (unsigned char c : text) {
    out += std::isalnum(c) ? static_cast<char>(std::tolower(c)) : '_';
  }
  return out;
}

void ValidateTemplate(const PromptTemplate& t, const Taxonomy& taxonomy,
                      const PromptOptions& options) {
  const auto variant_axis = taxonomy.FindAxis(options.variant_axis);
  for (const auto& [value, body] : t.age_variants) {
    if (!variant_axis || !taxonomy.FindValue(*variant_axis, value)) {
      throw ValidationError("template '" + t.concept_name +
                            "': age variant for unknown value '" + value +
                            "'");
    }
  }
  for (const Axis& axis : taxonomy.axes()) {
    if (t.body.find(Placeholder(axis.name)) != std::string::npos) continue;
    if (axis.name == options.variant_axis && !t.age_variants.empty()) continue;
    throw ValidationError("template '" + t.concept_name + "': body lacks " +
                          Placeholder(axis.name));
  }
}

}  // namespace

std::vector<PromptJob> ExpandPrompts(const std::vector<PromptTemplate>& templates,
                                     const Taxonomy& taxonomy,
                                     const PromptOptions& options) {
  const auto batch_axis = taxonomy.FindAxis(options.batch_axis);
  const auto variant_axis = taxonomy.FindAxis(options.variant_axis);

  // Non-batch axes in taxonomy order, then the batch axis (fastest).
  std::vector<std::size_t> order;
  for (std::size_t axis = 0; axis < taxonomy.axis_count(); ++axis) {
    if (!batch_axis || axis != *batch_axis) order.push_back(axis);
  }
  if (batch_axis) order.push_back(*batch_axis);

  auto render_value = [&](std::size_t axis, std::size_t value) {
    const Axis& a = taxonomy.axes()[axis];
    const auto phrases = options.phrases.find(a.name);
    if (phrases != options.phrases.end()) {
      const auto phrase = phrases->second.find(a.values[value]);
      if (phrase != phrases->second.end()) return phrase->second;
    }
    return a.values[value];
  };

  std::vector<PromptJob> jobs;
  jobs.reserve(taxonomy.concept_count() * taxonomy.combination_count());
  for (std::size_t c = 0; c < taxonomy.concept_count(); ++c) {
    const Concept& target = taxonomy.concepts()[c];
    const auto t = std::find_if(
        templates.begin(), templates.end(),
        [&](const PromptTemplate& p) { return p.concept_name == target.name; });
    if (t == templates.end()) {
      throw ValidationError("no prompt template for concept '" + target.name +
                            "'");
    }
    ValidateTemplate(*t, taxonomy, options);

    std::vector<std::size_t> digits(order.size(), 0);
    for (std::size_t n = 0; n < taxonomy.combination_count(); ++n) {
      PromptJob job;
      job.label = c;
      job.attributes.assign(taxonomy.axis_count(), 0);
      for (std::size_t k = 0; k < order.size(); ++k) {
        job.attributes[order[k]] = digits[k];
      }

      std::string body = t->body;
      if (variant_axis) {
        const std::string& value =
            taxonomy.axes()[*variant_axis].values[job.attributes[*variant_axis]];
        const auto variant = t->age_variants.find(value);
        if (variant != t->age_variants.end()) body = variant->second;
      }
      for (std::size_t axis = 0; axis < taxonomy.axis_count(); ++axis) {
        ReplaceAll(body, Placeholder(taxonomy.axes()[axis].name),
                   render_value(axis, job.attributes[axis]));
      }
      if (const auto left = FindPlaceholder(body)) {
        throw ValidationError("template '" + target.name +
                              "': placeholder " + *left +
                              " left unexpanded");
      }
      job.prompt = std::move(body);

      job.job_id = Slug(target.name) + "-";
      for (std::size_t axis = 0; axis < taxonomy.axis_count(); ++axis) {
        job.job_id += "-" + Slug(taxonomy.axes()[axis].values[job.attributes[axis]]);
      }
      for (std::size_t axis = 0; axis < taxonomy.axis_count(); ++axis) {
        if (batch_axis && axis == *batch_axis) continue;
        if (!job.base_group.empty()) job.base_group += "|";
        job.base_group += taxonomy.axes()[axis].values[job.attributes[axis]];
      }
      jobs.push_back(std::move(job));

      for (std::size_t k = order.size(); k-- > 0;) {
        if (++digits[k] < taxonomy.axes()[order[k]].values.size()) break;
        digits[k] = 0;
      }
    }
  }
  return jobs;
}

std::string SerializePromptManifest(const std::vector<PromptJob>& jobs,
                                    const Taxonomy& taxonomy,
                                    std::size_t images_per_prompt) {
  if (images_per_prompt < 1) {
    throw ValidationError("images per prompt must be >= 1");
  }
  std::string out;
  for (const PromptJob& job : jobs) {
    OrderedJson sa = OrderedJson::object();
    for (std::size_t axis = 0; axis < taxonomy.axis_count(); ++axis) {
      sa[taxonomy.axes()[axis].name] =
          taxonomy.axes()[axis].values[job.attributes[axis]];
    }
    out += OrderedJson{{"job_id", job.job_id},
                       {"concept", taxonomy.concepts()[job.label].name},
                       {"sa", std::move(sa)},
                       {"prompt", job.prompt},
                       {"count", images_per_prompt}}
               .dump();
    out += '\n';
  }
  return out;
}

}  // namespace skewfair
