#include "skewfair/sim.h"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <set>

#include "skewfair/errors.h"

namespace skewfair {

Taxonomy DefaultSimTaxonomy() {
  return Taxonomy({{"gender", {"Male", "Female"}}, {"age", {"Young", "Old"}}},
                  {{"nurse", "occupation"},
                   {"engineer", "occupation"},
                   {"chef", "occupation"},
                   {"teacher", "occupation"}});
}

namespace {

struct ResolvedStereotype {
  std::size_t axis;
  std::size_t value;
  std::size_t label;
};

std::vector<ResolvedStereotype> ResolveStereotypes(const SimConfig& config) {
  const Taxonomy& taxonomy = config.taxonomy;
  std::vector<ResolvedStereotype> resolved;
  for (const Stereotype& s : config.stereotypes) {
    const auto axis = taxonomy.FindAxis(s.axis);
    if (!axis) {
      throw ValidationError("stereotype: unknown axis '" + s.axis + "'");
    }
    const auto value = taxonomy.FindValue(*axis, s.attribute);
    if (!value) {
      throw ValidationError("stereotype: unknown value '" + s.attribute +
                            "' on axis '" + s.axis + "'");
    }
    const auto label = taxonomy.FindConcept(s.concept_name);
    if (!label) {
      throw ValidationError("stereotype: unknown concept '" + s.concept_name + "'");
    }
    resolved.push_back({*axis, *value, *label});
  }
  return resolved;
}

std::size_t CellCount(const Taxonomy& taxonomy) {
  return taxonomy.concept_count() * taxonomy.combination_count();
}

// Largest-remainder rounding of n * p; ties go to the lower index.
std::vector<std::size_t> Apportion(std::size_t n, const std::vector<double>& p) {
  std::vector<std::size_t> counts(p.size());
  std::vector<std::pair<double, std::size_t>> remainders;
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double exact = static_cast<double>(n) * p[i];
    counts[i] = static_cast<std::size_t>(std::floor(exact + 1e-9));
    assigned += counts[i];
    remainders.push_back({exact - static_cast<double>(counts[i]), i});
  }
  std::stable_sort(remainders.begin(), remainders.end(),
                   [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; assigned < n && k < remainders.size(); ++k) {
    if (p[remainders[k].second] <= 0) continue;
    ++counts[remainders[k].second];
    ++assigned;
  }
  return counts;
}

double Round(double v) { return Round12(v); }

Json EvalJson(const EvalSummary& e) {
  return {{"accuracy", Round(e.accuracy)},
          {"max_skew_at_c", Round(e.max_skew)},
          {"min_skew_at_c", Round(e.min_skew)},
          {"mean_abs_skew", Round(e.mean_abs_skew)}};
}

}  // namespace

void SimConfig::Validate() const {
  if (!(bias_strength >= 0 && bias_strength <= 1)) {
    throw ValidationError("bias_strength must be in [0, 1]");
  }
  const std::size_t cells = CellCount(taxonomy);
  auto check_size = [&](const char* name, std::size_t size) {
    if (size < cells) {
      throw ValidationError(std::string(name) + " = " + std::to_string(size) +
                            " cannot fill all " + std::to_string(cells) +
                            " (SA combination, concept) cells");
    }
  };
  check_size("pretrain_size", pretrain_size);
  check_size("finetune_size", finetune_size);
  check_size("test_size", test_size);
  if (!(feature_noise >= 0)) throw ValidationError("feature_noise must be >= 0");
  if (!std::isfinite(signal_strength)) {
    throw ValidationError("signal_strength must be finite");
  }
  if (!(learning_rate > 0)) throw ValidationError("learning_rate must be > 0");
  if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
  ResampleConfig{asd.tau1, asd.tau2, 0, asd.kappa}.Validate();
  if (!(asd.epsilon > 0)) throw ValidationError("asd.epsilon must be > 0");
  ResolveStereotypes(*this);
}

SimConfig SimConfig::FromJson(const Json& doc,
                              const std::filesystem::path& base_dir) {
  if (!doc.is_object()) throw ValidationError("sim config must be an object");
  static const std::set<std::string> known = {
      "taxonomy",        "bias_strength", "stereotypes",     "pretrain_size",
      "finetune_size",   "test_size",     "feature_noise",   "signal_strength",
      "zero_sa_features", "learning_rate", "pretrain_epochs", "epochs",
      "batch_size",      "seed",          "asd"};
  for (const auto& [key, value] : doc.items()) {
    if (!known.count(key)) {
      throw ValidationError("sim config: unknown key '" + key + "'");
    }
  }
  SimConfig config;
  try {
    if (doc.contains("taxonomy")) {
      const Json& t = doc["taxonomy"];
      config.taxonomy = t.is_string()
                            ? Taxonomy::Load(base_dir / t.get<std::string>())
                            : Taxonomy::FromJson(t);
    }
    config.bias_strength = doc.value("bias_strength", config.bias_strength);
    if (doc.contains("stereotypes")) {
      for (const Json& s : doc["stereotypes"]) {
        config.stereotypes.push_back({s.at("axis").get<std::string>(),
                                      s.at("attribute").get<std::string>(),
                                      s.at("concept").get<std::string>()});
      }
    }
    config.pretrain_size = doc.value("pretrain_size", config.pretrain_size);
    config.finetune_size = doc.value("finetune_size", config.finetune_size);
    config.test_size = doc.value("test_size", config.test_size);
    config.feature_noise = doc.value("feature_noise", config.feature_noise);
    config.signal_strength = doc.value("signal_strength", config.signal_strength);
    config.zero_sa_features =
        doc.value("zero_sa_features", config.zero_sa_features);
    config.learning_rate = doc.value("learning_rate", config.learning_rate);
    config.pretrain_epochs = doc.value("pretrain_epochs", config.pretrain_epochs);
    config.epochs = doc.value("epochs", config.epochs);
    config.batch_size = doc.value("batch_size", config.batch_size);
    config.seed = doc.value("seed", config.seed);
    if (doc.contains("asd")) {
      const Json& a = doc["asd"];
      config.asd.tau1 = a.value("tau1", config.asd.tau1);
      config.asd.tau2 = a.value("tau2", config.asd.tau2);
      config.asd.epsilon = a.value("epsilon", config.asd.epsilon);
      config.asd.kappa = a.value("kappa", config.asd.kappa);
      config.asd.resample = a.value("resample", config.asd.resample);
      config.asd.reweight = a.value("reweight", config.asd.reweight);
    }
  } catch (const Json::exception& e) {
    throw ValidationError(std::string("sim config: ") + e.what());
  }
  config.Validate();
  return config;
}

SimConfig SimConfig::Load(const std::filesystem::path& path) {
  const Json doc = ReadJsonFile(path);
  try {
    return FromJson(doc, path.parent_path());
  } catch (const ValidationError& e) {
    throw ValidationError(path.string() + ": " + e.what());
  }
}

Json SimConfig::ToJson() const {
  Json stereotypes_json = Json::array();
  for (const Stereotype& s : stereotypes) {
    stereotypes_json.push_back(
        {{"axis", s.axis}, {"attribute", s.attribute}, {"concept", s.concept_name}});
  }
  return {{"taxonomy", taxonomy.ToJson()},
          {"bias_strength", Round(bias_strength)},
          {"stereotypes", std::move(stereotypes_json)},
          {"pretrain_size", pretrain_size},
          {"finetune_size", finetune_size},
          {"test_size", test_size},
          {"feature_noise", Round(feature_noise)},
          {"signal_strength", Round(signal_strength)},
          {"zero_sa_features", zero_sa_features},
          {"learning_rate", Round(learning_rate)},
          {"pretrain_epochs", pretrain_epochs},
          {"epochs", epochs},
          {"batch_size", batch_size},
          {"seed", seed},
          {"asd",
           {{"tau1", Round(asd.tau1)},
            {"tau2", Round(asd.tau2)},
            {"epsilon", Round(asd.epsilon)},
            {"kappa", Round(asd.kappa)},
            {"resample", asd.resample},
            {"reweight", asd.reweight}}}};
}

std::size_t FeatureDim(const Taxonomy& taxonomy) {
  return taxonomy.attribute_count() + taxonomy.concept_count();
}

namespace {

// Appends features for one instance.
void AppendFeatures(const SimConfig& config, const Instance& instance,
                    std::mt19937_64& rng, std::vector<double>& out) {
  const Taxonomy& taxonomy = config.taxonomy;
  const std::size_t begin = out.size();
  out.resize(begin + FeatureDim(taxonomy), 0.0);
  if (!config.zero_sa_features) {
    for (std::size_t axis = 0; axis < taxonomy.axis_count(); ++axis) {
      out[begin + taxonomy.attribute_id(axis, instance.attributes[axis])] = 1.0;
    }
  }
  std::normal_distribution<double> noise(0.0, 1.0);
  const std::size_t signal = begin + taxonomy.attribute_count();
  for (std::size_t c = 0; c < taxonomy.concept_count(); ++c) {
    const double base = c == instance.label ? config.signal_strength : 0.0;
    out[signal + c] = base + config.feature_noise * noise(rng);
  }
}

LabeledSet MakeSet(const SimConfig& config, const std::string& prefix,
                   const std::vector<std::pair<std::size_t, std::size_t>>& cells,
                   std::uint64_t seed) {
  const Taxonomy& taxonomy = config.taxonomy;
  std::mt19937_64 rng(seed);
  std::vector<Instance> instances;
  std::vector<double> features;
  instances.reserve(cells.size());
  features.reserve(cells.size() * FeatureDim(taxonomy));
  char id[32];
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto [label, combination] = cells[i];
    std::snprintf(id, sizeof id, "%s-%06zu", prefix.c_str(), i);
    Instance instance{id, CombinationAt(taxonomy, combination), label,
                      std::nullopt};
    AppendFeatures(config, instance, rng, features);
    instances.push_back(std::move(instance));
  }
  return {Dataset(taxonomy, std::move(instances)), std::move(features),
          FeatureDim(taxonomy)};
}

// Exactly balanced: every (concept, combination) cell appears size / cells
// times, interleaved cell by cell.
std::vector<std::pair<std::size_t, std::size_t>> BalancedCells(
    const Taxonomy& taxonomy, std::size_t size) {
  const std::size_t per_cell = size / CellCount(taxonomy);
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  cells.reserve(per_cell * CellCount(taxonomy));
  for (std::size_t r = 0; r < per_cell; ++r) {
    for (std::size_t c = 0; c < taxonomy.concept_count(); ++c) {
      for (std::size_t k = 0; k < taxonomy.combination_count(); ++k) {
        cells.emplace_back(c, k);
      }
    }
  }
  return cells;
}

std::vector<std::pair<std::size_t, std::size_t>> BiasedCells(
    const SimConfig& config) {
  const Taxonomy& taxonomy = config.taxonomy;
  const auto stereotypes = ResolveStereotypes(config);
  const double beta = config.bias_strength;
  const std::size_t concepts = taxonomy.concept_count();
  std::vector<std::pair<std::size_t, std::size_t>> cells;
  for (std::size_t c = 0; c < concepts; ++c) {
    const std::size_t n = config.pretrain_size / concepts +
                          (c < config.pretrain_size % concepts ? 1 : 0);
    // Per-axis marginals for this concept.
    std::vector<std::vector<double>> marginals;
    for (std::size_t axis = 0; axis < taxonomy.axis_count(); ++axis) {
      const std::size_t size = taxonomy.axes()[axis].values.size();
      std::vector<std::size_t> targets;
      for (const auto& s : stereotypes) {
        if (s.axis == axis && s.label == c) targets.push_back(s.value);
      }
      std::vector<double> p(size, 1.0 / static_cast<double>(size));
      if (!targets.empty()) {
        for (double& v : p) v *= 1.0 - beta;
        for (std::size_t t : targets) {
          p[t] += beta / static_cast<double>(targets.size());
        }
      }
      marginals.push_back(std::move(p));
    }
    std::vector<double> joint(taxonomy.combination_count());
    for (std::size_t k = 0; k < joint.size(); ++k) {
      const auto values = CombinationAt(taxonomy, k);
      double p = 1.0;
      for (std::size_t axis = 0; axis < values.size(); ++axis) {
        p *= marginals[axis][values[axis]];
      }
      joint[k] = p;
    }
    const auto counts = Apportion(n, joint);
    for (std::size_t k = 0; k < counts.size(); ++k) {
      for (std::size_t r = 0; r < counts[k]; ++r) cells.emplace_back(c, k);
    }
  }
  return cells;
}

}  // namespace

SyntheticData GenerateSynthetic(const SimConfig& config) {
  config.Validate();
  const Taxonomy& taxonomy = config.taxonomy;
  return {MakeSet(config, "pre", BiasedCells(config), DeriveSeed(config.seed, 1)),
          MakeSet(config, "ft", BalancedCells(taxonomy, config.finetune_size),
                  DeriveSeed(config.seed, 2)),
          MakeSet(config, "test", BalancedCells(taxonomy, config.test_size),
                  DeriveSeed(config.seed, 3))};
}

SoftmaxModel::SoftmaxModel(std::size_t feature_dim, std::size_t class_count)
    : feature_dim_(feature_dim),
      class_count_(class_count),
      weights_(feature_dim * class_count, 0.0),
      bias_(class_count, 0.0) {
  if (class_count < 2) throw ValidationError("softmax needs >= 2 classes");
}

void SoftmaxModel::Logits(std::span<const double> x,
                          std::span<double> out) const {
  for (std::size_t k = 0; k < class_count_; ++k) out[k] = bias_[k];
  for (std::size_t j = 0; j < feature_dim_; ++j) {
    const double xj = x[j];
    if (xj == 0.0) continue;
    const double* row = weights_.data() + j * class_count_;
    for (std::size_t k = 0; k < class_count_; ++k) out[k] += xj * row[k];
  }
}

void SoftmaxModel::Probabilities(std::span<const double> x,
                                 std::span<double> out) const {
  Logits(x, out);
  const double max = *std::max_element(out.begin(), out.end());
  double sum = 0.0;
  for (double& v : out) {
    v = std::exp(v - max);
    sum += v;
  }
  for (double& v : out) v /= sum;
}

std::size_t SoftmaxModel::Predict(std::span<const double> x) const {
  std::vector<double> logits(class_count_);
  Logits(x, logits);
  return static_cast<std::size_t>(
      std::max_element(logits.begin(), logits.end()) - logits.begin());
}

bool SoftmaxModel::IsFinite() const {
  auto finite = [](double v) { return std::isfinite(v); };
  return std::all_of(weights_.begin(), weights_.end(), finite) &&
         std::all_of(bias_.begin(), bias_.end(), finite);
}

double WeightedCrossEntropy(const SoftmaxModel& model, const LabeledSet& data,
                            std::span<const std::size_t> rows,
                            std::span<const double> weights,
                            Gradient* gradient) {
  const std::size_t classes = model.class_count();
  const std::size_t dim = model.feature_dim();
  if (data.dim != dim) {
    throw ValidationError("feature dimension does not match the model");
  }
  if (weights.size() != rows.size()) {
    throw ValidationError("one weight per row is required");
  }
  if (gradient) {
    gradient->weights.assign(dim * classes, 0.0);
    gradient->bias.assign(classes, 0.0);
  }
  if (rows.empty()) return 0.0;
  const double scale = 1.0 / static_cast<double>(rows.size());
  std::vector<double> logits(classes);
  double loss = 0.0;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto x = data.row(rows[r]);
    const std::size_t label = data.dataset[rows[r]].label;
    model.Logits(x, logits);
    const double max = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (double v : logits) sum += std::exp(v - max);
    const double log_sum = max + std::log(sum);
    loss += weights[r] * (log_sum - logits[label]);
    if (!gradient) continue;
    const double w = weights[r] * scale;
    for (std::size_t k = 0; k < classes; ++k) {
      const double p = std::exp(logits[k] - log_sum);
      const double dz = w * (p - (k == label ? 1.0 : 0.0));
      gradient->bias[k] += dz;
      logits[k] = dz;  // reuse as dL/dz
    }
    for (std::size_t j = 0; j < dim; ++j) {
      const double xj = x[j];
      if (xj == 0.0) continue;
      double* row = gradient->weights.data() + j * classes;
      for (std::size_t k = 0; k < classes; ++k) row[k] += xj * logits[k];
    }
  }
  return loss * scale;
}

double TrainEpoch(SoftmaxModel& model, const LabeledSet& data,
                  std::span<const std::size_t> entries,
                  std::span<const double> weights, const TrainOptions& options,
                  std::size_t epoch, std::string* order_hash,
                  std::size_t* steps) {
  if (weights.size() != entries.size()) {
    throw ValidationError("one weight per entry is required");
  }
  if (options.batch_size < 1) throw ValidationError("batch_size must be >= 1");
  // Seeded Fisher-Yates over positions so the order is platform independent.
  std::vector<std::size_t> order(entries.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::mt19937_64 rng(DeriveSeed(options.seed, epoch));
  for (std::size_t i = order.size(); i > 1; --i) {
    std::swap(order[i - 1], order[rng() % i]);
  }
  std::vector<std::size_t> rows(order.size());
  std::vector<double> row_weights(order.size());
  for (std::size_t i = 0; i < order.size(); ++i) {
    rows[i] = entries[order[i]];
    row_weights[i] = weights[order[i]];
  }
  if (order_hash) {
    *order_hash = HashHex(std::string_view(
        reinterpret_cast<const char*>(rows.data()),
        rows.size() * sizeof(std::size_t)));
  }

  Gradient gradient;
  double total = 0.0;
  std::size_t batches = 0;
  for (std::size_t begin = 0; begin < rows.size();
       begin += options.batch_size) {
    const std::size_t count = std::min(options.batch_size, rows.size() - begin);
    const double loss = WeightedCrossEntropy(
        model, data, std::span(rows).subspan(begin, count),
        std::span(row_weights).subspan(begin, count), &gradient);
    total += loss * static_cast<double>(count);
    for (std::size_t i = 0; i < gradient.weights.size(); ++i) {
      model.weights()[i] -= options.learning_rate * gradient.weights[i];
    }
    for (std::size_t k = 0; k < gradient.bias.size(); ++k) {
      model.bias()[k] -= options.learning_rate * gradient.bias[k];
    }
    ++batches;
  }
  if (steps) *steps = batches;
  return rows.empty() ? 0.0 : total / static_cast<double>(rows.size());
}

PredictionLog PredictAll(const SoftmaxModel& model, const LabeledSet& data) {
  PredictionLog log(data.dataset.size());
  for (std::size_t i = 0; i < data.dataset.size(); ++i) {
    log.Set(i, model.Predict(data.row(i)));
  }
  return log;
}

EvalSummary Evaluate(const SoftmaxModel& model, const LabeledSet& data) {
  const PredictionLog predictions = PredictAll(model, data);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < data.dataset.size(); ++i) {
    correct += *predictions.at(i) == data.dataset[i].label;
  }
  const SkewTable table =
      ComputeSkewTable(data.dataset, predictions, SkewOptions::Strict());
  EvalSummary summary;
  summary.accuracy =
      static_cast<double>(correct) / static_cast<double>(data.dataset.size());
  summary.max_skew = table.aggregates().max_skew;
  summary.min_skew = table.aggregates().min_skew;
  summary.mean_abs_skew = table.MeanAbsSkew();
  return summary;
}

namespace {

// Runs one epoch, records it, and rolls back on divergence. Returns false
// when training must stop.
bool RunRecordedEpoch(SoftmaxModel& model, const LabeledSet& data,
                      std::span<const std::size_t> entries,
                      std::span<const double> weights,
                      const TrainOptions& options, std::size_t epoch,
                      const LabeledSet* eval, TrainTrace& trace) {
  const SoftmaxModel previous = model;
  EpochRecord record;
  record.epoch = epoch;
  record.mean_loss = TrainEpoch(model, data, entries, weights, options, epoch,
                                &record.order_hash, &record.steps);
  if (!std::isfinite(record.mean_loss) || !model.IsFinite()) {
    model = previous;
    return false;
  }
  if (eval) record.eval = Evaluate(model, *eval);
  trace.epochs.push_back(std::move(record));
  return true;
}

}  // namespace

TrainResult Train(SoftmaxModel model, const LabeledSet& data,
                  const WeightTable* weights, const TrainOptions& options,
                  const LabeledSet* eval, std::string regime) {
  if (data.dim != model.feature_dim()) {
    throw ValidationError("feature dimension does not match the model");
  }
  std::vector<std::size_t> entries(data.dataset.size());
  for (std::size_t i = 0; i < entries.size(); ++i) entries[i] = i;
  std::vector<double> entry_weights(entries.size(), 1.0);
  if (weights) {
    if (weights->weights.size() != entries.size()) {
      throw ValidationError("weight table does not match the training set");
    }
    entry_weights = weights->weights;
  }
  TrainResult result{std::move(model), {std::move(regime), {}}, false};
  for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
    if (!RunRecordedEpoch(result.model, data, entries, entry_weights, options,
                          epoch, eval, result.trace)) {
      result.diverged = true;
      break;
    }
  }
  return result;
}

Json TrainTrace::ToJson() const {
  Json records = Json::array();
  for (const EpochRecord& r : epochs) {
    Json record = EvalJson(r.eval);
    record["epoch"] = r.epoch;
    record["mean_loss"] = Round(r.mean_loss);
    record["steps"] = r.steps;
    record["order_hash"] = r.order_hash;
    records.push_back(std::move(record));
  }
  return {{"regime", regime}, {"epochs", std::move(records)}};
}

const RegimeResult& ExperimentReport::regime(const std::string& name) const {
  for (const RegimeResult& r : regimes) {
    if (r.regime == name) return r;
  }
  throw ValidationError("no regime '" + name + "' in report");
}

Json ExperimentReport::ToJson() const {
  Json blocks = Json::array();
  for (const RegimeResult& r : regimes) {
    blocks.push_back({{"regime", r.regime},
                      {"final", EvalJson(r.final)},
                      {"diverged", r.diverged},
                      {"trace", r.trace.ToJson()}});
  }
  return {{"format", "skewfair.sim_report"},
          {"format_version", 1},
          {"config", config.ToJson()},
          {"regimes", std::move(blocks)}};
}

std::string ExperimentReport::Serialize() const { return ToJson().dump(2) + "\n"; }

std::string ExperimentReport::ToCsv() const {
  std::string out =
      "regime,epoch,mean_loss,accuracy,max_skew_at_c,min_skew_at_c,"
      "mean_abs_skew\n";
  char line[256];
  for (const RegimeResult& r : regimes) {
    for (const EpochRecord& e : r.trace.epochs) {
      std::snprintf(line, sizeof line, "%s,%zu,%.12g,%.12g,%.12g,%.12g,%.12g\n",
                    r.regime.c_str(), e.epoch, e.mean_loss, e.eval.accuracy,
                    e.eval.max_skew, e.eval.min_skew, e.eval.mean_abs_skew);
      out += line;
    }
  }
  return out;
}

std::string ExperimentReport::SummaryTable() const {
  std::string out =
      "regime     accuracy  MaxSkew@C  MinSkew@C  mean|Skew|\n";
  char line[128];
  for (const RegimeResult& r : regimes) {
    std::snprintf(line, sizeof line, "%-9s  %8.4f  %9.4f  %9.4f  %10.4f%s\n",
                  r.regime.c_str(), r.final.accuracy, r.final.max_skew + 0.0,
                  r.final.min_skew + 0.0, r.final.mean_abs_skew,
                  r.diverged ? "  (diverged)" : "");
    out += line;
  }
  return out;
}

ExperimentReport RunExperiment(const SimConfig& config) {
  const SyntheticData data = GenerateSynthetic(config);
  const Taxonomy& taxonomy = config.taxonomy;
  const SoftmaxModel initial(FeatureDim(taxonomy), taxonomy.concept_count());

  TrainOptions pretrain_options{config.learning_rate, config.pretrain_epochs,
                                config.batch_size,
                                DeriveSeed(config.seed, 10)};
  TrainResult pretrained = Train(initial, data.pretrain, nullptr,
                                 pretrain_options, &data.test, "pretrain");

  // FT and ASD share the batch-order seed so only the debiasing differs.
  const TrainOptions finetune_options{config.learning_rate, config.epochs,
                                      config.batch_size,
                                      DeriveSeed(config.seed, 20)};
  TrainResult ft = Train(pretrained.model, data.finetune, nullptr,
                         finetune_options, &data.test, "ft");

  SoftmaxModel asd_model = pretrained.model;
  TrainTrace asd_trace{"asd", {}};
  bool asd_diverged = false;
  const std::size_t n = data.finetune.dataset.size();
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const PredictionLog predictions = PredictAll(asd_model, data.finetune);
    const ResampleConfig resample{config.asd.tau1, config.asd.tau2,
                                  DeriveSeed(config.seed, 1000 + epoch),
                                  config.asd.kappa};
    const EpochPreparation prep =
        PrepareAsdEpoch(data.finetune.dataset, predictions, resample,
                        SkewOptions::Smoothed(config.asd.epsilon));
    std::vector<std::size_t> entries;
    if (config.asd.resample) {
      entries = prep.plan.entries;
    } else {
      entries.resize(n);
      for (std::size_t i = 0; i < n; ++i) entries[i] = i;
    }
    std::vector<double> weights(entries.size(), 1.0);
    if (config.asd.reweight) {
      for (std::size_t i = 0; i < entries.size(); ++i) {
        weights[i] = prep.weights.weights[entries[i]];
      }
    }
    if (!RunRecordedEpoch(asd_model, data.finetune, entries, weights,
                          finetune_options, epoch, &data.test, asd_trace)) {
      asd_diverged = true;
      break;
    }
  }

  ExperimentReport report;
  report.config = config;
  report.regimes.push_back({"pretrain", Evaluate(pretrained.model, data.test),
                            std::move(pretrained.trace), pretrained.diverged});
  report.regimes.push_back({"ft", Evaluate(ft.model, data.test),
                            std::move(ft.trace), ft.diverged});
  report.regimes.push_back({"asd", Evaluate(asd_model, data.test),
                            std::move(asd_trace), asd_diverged});
  return report;
}

}  // namespace skewfair
