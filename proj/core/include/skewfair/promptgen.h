#ifndef SKEWFAIR_PROMPTGEN_H_
#define SKEWFAIR_PROMPTGEN_H_

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "skewfair/taxonomy.h"

namespace skewfair {

// A prompt body with [axis-name] placeholders, e.g. "[race] [gender]".
// `age_variants` replaces the body for specific values of the variant axis.
struct PromptTemplate {
  std::string concept_name;
  std::string group;
  std::string body;
  std::map<std::string, std::string> age_variants;

  static PromptTemplate FromJson(const Json& doc);
  Json ToJson() const;
};

// Loads every *.json file in `dir`, sorted by file name.
std::vector<PromptTemplate> LoadTemplates(const std::filesystem::path& dir);

struct PromptOptions {
  // Axis varied within a base group (the prompt-to-prompt batch).
  std::string batch_axis = "race";
  // Axis whose values select an age_variants body.
  std::string variant_axis = "age";
  // Rendering of placeholder values; values without an entry render verbatim.
  std::map<std::string, std::map<std::string, std::string>> phrases = {
      {"age", {{"Young", "20s"}, {"Old", "60s"}}}};
};

struct PromptJob {
  std::string job_id;
  std::size_t label = 0;  // concept index
  std::vector<std::size_t> attributes;  // value index per axis
  std::string prompt;
  std::string base_group;  // values of every axis except the batch axis
};

// One job per (concept, SA combination). Order: concept order, then base
// group (non-batch axes in taxonomy order), then batch axis value.
std::vector<PromptJob> ExpandPrompts(const std::vector<PromptTemplate>& templates,
                                     const Taxonomy& taxonomy,
                                     const PromptOptions& options = {});

// JSON Lines: {"job_id", "concept", "sa", "prompt", "count"}.
std::string SerializePromptManifest(const std::vector<PromptJob>& jobs,
                                    const Taxonomy& taxonomy,
                                    std::size_t images_per_prompt = 100);

}  // namespace skewfair

#endif  // SKEWFAIR_PROMPTGEN_H_
