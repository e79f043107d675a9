// Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any fail.
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "cli.h"
#include "skewfair/asd.h"
#include "skewfair/io.h"
#include "skewfair/promptgen.h"
#include "skewfair/sim.h"
#include "support.h"

namespace skewfair {
namespace {

using Clock = std::chrono::steady_clock;

double Seconds(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Verdict {
  bool pass;
  std::string detail;
};

Verdict Check(bool pass, const char* fmt, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, fmt, args...);
  return {pass, buffer};
}

// Shared by criteria 1 and 2.
std::vector<testing::RandomCase> RandomCorpus() {
  std::mt19937_64 rng(20240601);
  std::vector<testing::RandomCase> corpus;
  for (int i = 0; i < 500; ++i) corpus.push_back(testing::MakeRandomCase(rng, 200));
  return corpus;
}

Verdict OracleEquivalence(const std::vector<testing::RandomCase>& corpus) {
  const auto start = Clock::now();
  double worst = 0.0;
  std::size_t mismatched_definedness = 0, pairs = 0;
  for (const auto& c : corpus) {
    const SkewTable table = ComputeSkewTable(c.dataset, c.predictions);
    const Taxonomy& t = c.dataset.taxonomy();
    for (std::size_t l = 0; l < t.concept_count(); ++l) {
      for (std::size_t axis = 0; axis < t.axis_count(); ++axis) {
        for (std::size_t v = 0; v < t.axes()[axis].values.size(); ++v) {
          const auto oracle = testing::OracleSkew(c.dataset, c.predictions, axis,
                                                  v, l, SkewOptions::Strict());
          const auto& got = table.pair(t.attribute_id(axis, v), l);
          ++pairs;
          if (oracle.defined != got.has_value()) {
            ++mismatched_definedness;
            continue;
          }
          if (got) worst = std::max(worst, std::abs(got->value - oracle.value));
        }
      }
    }
  }
  const double elapsed = Seconds(start);
  return Check(worst <= 1e-12 && mismatched_definedness == 0 && elapsed < 10,
               "500 datasets, %zu pairs, max |diff| %.3g, definedness "
               "mismatches %zu, %.2f s",
               pairs, worst, mismatched_definedness, elapsed);
}

Verdict ExtremaSign(const std::vector<testing::RandomCase>& corpus) {
  std::size_t checked = 0, violations = 0;
  for (const auto& c : corpus) {
    const SkewTable table = ComputeSkewTable(c.dataset, c.predictions);
    const Taxonomy& t = c.dataset.taxonomy();
    for (std::size_t l = 0; l < t.concept_count(); ++l) {
      bool all_defined = true;
      for (std::size_t a = 0; a < t.attribute_count(); ++a) {
        all_defined &= table.pair(a, l).has_value();
      }
      if (!all_defined) continue;
      ++checked;
      const auto& e = *table.extrema(l);
      violations += !(e.max.value >= 0 && e.min.value <= 0);
    }
  }
  return Check(violations == 0 && checked > 0,
               "%zu fully defined concepts, %zu violations", checked, violations);
}

Verdict PerfectPredictionZero() {
  std::mt19937_64 rng(77);
  std::size_t nonzero = 0, tables = 0;
  bool aggregates_zero = true;
  std::vector<testing::RandomCase> cases;
  for (int i = 0; i < 50; ++i) cases.push_back(testing::MakeRandomCase(rng, 200));
  cases.push_back(testing::RandomCase{testing::MakeNurseCase().dataset,
                                      PredictionLog(0)});
  for (auto& c : cases) {
    const SkewTable table =
        ComputeSkewTable(c.dataset, PredictionLog::FromLabels(c.dataset));
    ++tables;
    const Taxonomy& t = c.dataset.taxonomy();
    for (std::size_t l = 0; l < t.concept_count(); ++l) {
      for (std::size_t a = 0; a < t.attribute_count(); ++a) {
        if (table.pair(a, l) && table.pair(a, l)->value != 0.0) ++nonzero;
      }
    }
    const Json agg = SkewReportJson(table)["aggregates"];
    aggregates_zero &= agg["max_skew_at_c"].get<double>() == 0.0 &&
                       agg["min_skew_at_c"].get<double>() == 0.0 &&
                       !std::signbit(agg["min_skew_at_c"].get<double>());
  }
  return Check(nonzero == 0 && aggregates_zero,
               "%zu tables, %zu nonzero pairs, aggregates 0.0/0.0: %s", tables,
               nonzero, aggregates_zero ? "yes" : "no");
}

Verdict AcceptanceLaw() {
  const auto start = Clock::now();
  const Taxonomy t = testing::GenderTaxonomy({"nurse"});
  const Dataset d(t, {{"x", {1}, 0, {}}});
  const std::size_t trials = 100000;
  bool ok = true;
  std::string detail;
  for (double s : {0.1, 0.5, 1.0, 2.0}) {
    const std::vector<InstanceSkew> skews = {{"x", s, SkewSource{0, 1, 0}}};
    std::size_t accepted = 0;
    for (std::size_t k = 0; k < trials; ++k) {
      ResampleConfig config;
      config.seed = DeriveSeed(0xACCE97, k);
      accepted += Resample(d, skews, config).accepted;
    }
    const double p = 1.0 / (s + 1.0);
    const double sigma = std::sqrt(p * (1 - p) / trials);
    const double rate = static_cast<double>(accepted) / trials;
    const double z = (rate - p) / sigma;
    ok &= std::abs(z) <= 3.0;
    char part[96];
    std::snprintf(part, sizeof part, "s=%.1f rate %.4f vs %.4f (z %+.2f); ", s,
                  rate, p, z);
    detail += part;
  }
  const double elapsed = Seconds(start);
  return Check(ok && elapsed < 5, "%s%.2f s", detail.c_str(), elapsed);
}

Verdict HandTrace() {
  const Taxonomy t = testing::GenderTaxonomy({"nurse"});
  std::vector<Instance> instances;
  std::vector<InstanceSkew> skews;
  for (std::size_t i = 0; i < 7; ++i) {
    instances.push_back({"h" + std::to_string(i), {1}, 0, {}});
    skews.push_back({instances.back().id, -0.3, SkewSource{0, 1, 0}});
  }
  ResampleConfig config;
  config.tau2 = 1.0;
  const ResamplePlan plan = Resample(Dataset(t, instances), skews, config);
  const std::vector<std::size_t> expected = {0, 1, 2, 3, 3, 4, 5, 6};
  return Check(plan.entries == expected,
               "plan size %zu, duplicate of instance 4 at plan position 4: %s",
               plan.entries.size(),
               plan.entries.size() > 4 && plan.entries[4] == 3 ? "yes" : "no");
}

SimConfig NurseConfig(double beta, std::uint64_t seed) {
  SimConfig config =
      SimConfig::Load(testing::DataPath("configs/sim_bias08.json"));
  config.bias_strength = beta;
  config.seed = seed;
  return config;
}

Verdict LossIdentities() {
  const double w0 = FairnessWeight(0.0);
  const double w1 = FairnessWeight(std::log(2.0));
  const double w2 = FairnessWeight(-1.0);
  const bool closed = std::abs(w0 - 1) <= 1e-12 && std::abs(w1 - 0.5) <= 1e-12 &&
                      std::abs(w2 - std::exp(1.0)) <= 1e-12;
  const SyntheticData data = GenerateSynthetic(NurseConfig(0.8, 0));
  TrainOptions options;
  options.epochs = 5;
  const SoftmaxModel initial(data.finetune.dim, 4);
  const WeightTable ones{std::vector<double>(data.finetune.dataset.size(), 1.0)};
  const TrainResult a = Train(initial, data.finetune, nullptr, options);
  const TrainResult b = Train(initial, data.finetune, &ones, options);
  const bool identical =
      a.model == b.model && a.trace.ToJson() == b.trace.ToJson();
  return Check(closed && identical,
               "w(0)=%.15g w(ln2)=%.15g w(-1)=%.15g; uniform-weight trajectory "
               "bit-identical: %s",
               w0, w1, w2, identical ? "yes" : "no");
}

Verdict GradientCheck() {
  const SyntheticData data = GenerateSynthetic(NurseConfig(0.8, 0));
  std::mt19937_64 rng(4242);
  std::normal_distribution<double> normal(0.0, 0.7);
  std::uniform_real_distribution<double> weight(0.1, 3.0);
  std::uniform_int_distribution<std::size_t> row(0, data.test.dataset.size() - 1);
  double worst = 0.0;
  for (int point = 0; point < 20; ++point) {
    SoftmaxModel model(data.test.dim, 4);
    for (double& w : model.weights()) w = normal(rng);
    for (double& b : model.bias()) b = normal(rng);
    std::vector<std::size_t> rows(16);
    std::vector<double> weights(16);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      rows[k] = row(rng);
      weights[k] = weight(rng);
    }
    Gradient grad;
    WeightedCrossEntropy(model, data.test, rows, weights, &grad);
    const double h = 1e-5;
    auto probe = [&](std::vector<double>& params,
                     const std::vector<double>& analytic) {
      for (std::size_t k = 0; k < params.size(); ++k) {
        const double saved = params[k];
        params[k] = saved + h;
        const double up = WeightedCrossEntropy(model, data.test, rows, weights);
        params[k] = saved - h;
        const double down = WeightedCrossEntropy(model, data.test, rows, weights);
        params[k] = saved;
        const double numeric = (up - down) / (2 * h);
        const double scale = std::max({std::abs(numeric), std::abs(analytic[k]), 1e-3});
        worst = std::max(worst, std::abs(analytic[k] - numeric) / scale);
      }
    };
    probe(model.weights(), grad.weights);
    probe(model.bias(), grad.bias);
  }
  return Check(worst <= 1e-5, "20 points, max relative error %.3g", worst);
}

Verdict DebiasingAnalogue() {
  const auto start = Clock::now();
  int ft_better = 0, asd_better = 0, accuracy_ok = 0;
  double ft_sum = 0, asd_sum = 0, pre_sum = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const ExperimentReport report = RunExperiment(NurseConfig(0.8, seed));
    const EvalSummary& pre = report.regime("pretrain").final;
    const EvalSummary& ft = report.regime("ft").final;
    const EvalSummary& asd = report.regime("asd").final;
    ft_better += ft.mean_abs_skew < pre.mean_abs_skew;
    asd_better += asd.mean_abs_skew < ft.mean_abs_skew;
    accuracy_ok += std::abs(asd.accuracy - ft.accuracy) <= 0.02;
    pre_sum += pre.mean_abs_skew;
    ft_sum += ft.mean_abs_skew;
    asd_sum += asd.mean_abs_skew;
  }
  const double elapsed = Seconds(start);
  return Check(ft_better >= 9 && asd_better >= 8 && accuracy_ok == 10 &&
                   elapsed < 120,
               "FT<pretrain %d/10, ASD<FT %d/10, |acc ASD-FT|<=0.02 %d/10; mean "
               "|Skew| pretrain %.4f FT %.4f ASD %.4f; %.1f s",
               ft_better, asd_better, accuracy_ok, pre_sum / 10, ft_sum / 10,
               asd_sum / 10, elapsed);
}

std::string StripAll(std::string text, std::vector<std::string> values) {
  std::sort(values.begin(), values.end(),
            [](const auto& a, const auto& b) { return a.size() > b.size(); });
  for (const std::string& v : values) {
    for (std::size_t at; (at = text.find(v)) != std::string::npos;) {
      text.replace(at, v.size(), "#");
    }
  }
  return text;
}

Verdict PromptCounts() {
  const Taxonomy t = Taxonomy::Load(testing::DataPath("taxonomy/cmsc.json"));
  const auto jobs =
      ExpandPrompts(LoadTemplates(testing::DataPath("templates")), t);
  const auto race = t.FindAxis("race");
  const std::vector<std::string>& races = t.axes()[*race].values;
  std::size_t bad_batches = 0, batches = 0;
  for (std::size_t b = 0; b + races.size() <= jobs.size(); b += races.size()) {
    ++batches;
    const std::string base = StripAll(jobs[b].prompt, races);
    for (std::size_t k = 0; k < races.size(); ++k) {
      const PromptJob& job = jobs[b + k];
      if (job.base_group != jobs[b].base_group || job.label != jobs[b].label ||
          StripAll(job.prompt, races) != base) {
        ++bad_batches;
        break;
      }
    }
  }
  return Check(jobs.size() == 504 && batches == 72 && bad_batches == 0,
               "%zu jobs (18 x 28 = 504), %zu race batches, %zu differ beyond "
               "race tokens",
               jobs.size(), batches, bad_batches);
}

Verdict Determinism() {
  testing::TempDir dir("accept");
  const auto fixture = [](const char* name) {
    return testing::FixturePath(name).string();
  };
  const std::string config = testing::DataPath("configs/sim_bias08.json").string();
  using Make = std::function<std::vector<std::string>(const std::string&)>;
  const std::vector<std::pair<std::string, Make>> commands = {
      {"eval",
       [&](const std::string& out) {
         return std::vector<std::string>{
             "eval", "--dataset", fixture("nurse_dataset.jsonl"), "--predictions",
             fixture("nurse_predictions.jsonl"), "--taxonomy",
             fixture("nurse_taxonomy.json"), "--out", out};
       }},
      {"resample",
       [&](const std::string& out) {
         return std::vector<std::string>{
             "resample", "--dataset", fixture("nurse_dataset.jsonl"),
             "--taxonomy", fixture("nurse_taxonomy.json"), "--predictions",
             fixture("nurse_predictions.jsonl"), "--seed", "42", "--out", out};
       }},
      {"weights",
       [&](const std::string& out) {
         return std::vector<std::string>{
             "weights", "--dataset", fixture("nurse_dataset.jsonl"),
             "--taxonomy", fixture("nurse_taxonomy.json"), "--predictions",
             fixture("nurse_predictions.jsonl"), "--out", out};
       }},
      {"simulate",
       [&](const std::string& out) {
         return std::vector<std::string>{"simulate", "--config", config,
                                         "--seed", "3", "--out", out};
       }},
  };
  std::string detail;
  bool ok = true;
  for (const auto& [name, make] : commands) {
    std::string outputs[2];
    bool ran = true;
    for (int k = 0; k < 2; ++k) {
      const std::string path = (dir / (name + std::to_string(k))).string();
      std::ostringstream out, err;
      ran &= cli::Run(make(path), out, err) == 0;
      if (ran) outputs[k] = ReadTextFile(path);
    }
    const bool same = ran && !outputs[0].empty() && outputs[0] == outputs[1];
    ok &= same;
    detail += name + (same ? " identical; " : " DIFFERS; ");
  }
  return Check(ok, "%s", detail.c_str());
}

}  // namespace
}  // namespace skewfair

int main() {
  using namespace skewfair;
  const auto corpus = RandomCorpus();
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria = {
      {"skew oracle equivalence", [&] { return OracleEquivalence(corpus); }},
      {"extrema sign invariant", [&] { return ExtremaSign(corpus); }},
      {"perfect-prediction zero point", PerfectPredictionZero},
      {"resampling acceptance law", AcceptanceLaw},
      {"accumulator hand trace", HandTrace},
      {"loss weight identities", LossIdentities},
      {"gradient correctness", GradientCheck},
      {"desk-scale debiasing analogue", DebiasingAnalogue},
      {"prompt manifest counts", PromptCounts},
      {"determinism", Determinism},
  };
  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v{false, ""};
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failures += !v.pass;
    std::printf("[%s] %2zu %s: %s\n", v.pass ? "PASS" : "FAIL", i + 1,
                criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failures,
              criteria.size());
  return failures == 0 ? 0 : 1;
}
