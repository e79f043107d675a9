#include "cli.h"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <optional>

#if __has_include(<CLI11.hpp>)
#include <CLI11.hpp>
#else
#include <CLI/CLI.hpp>
#endif

#include "skewfair/asd.h"
#include "skewfair/errors.h"
#include "skewfair/metrics.h"
#include "skewfair/promptgen.h"
#include "skewfair/sim.h"

#ifndef SKEWFAIR_DATA_DIR
#define SKEWFAIR_DATA_DIR "data"
#endif
#ifndef SKEWFAIR_INSTALL_DATA_DIR
#define SKEWFAIR_INSTALL_DATA_DIR SKEWFAIR_DATA_DIR
#endif

namespace skewfair::cli {
namespace {

namespace fs = std::filesystem;

constexpr const char* kVersion =
    "skewfair 0.1.0 (skew_report v1, resample_plan v1, sim_report v1)";

std::string Fixed6(double v) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.6f", v + 0.0);
  // Print exact zeros without a sign.
  if (std::string(buffer) == "-0.000000") return "0.000000";
  return buffer;
}

// Shipped taxonomy and templates: the source tree when running from a build
// directory, the installed share directory otherwise.
std::string DefaultDataDir() {
  if (fs::exists(SKEWFAIR_DATA_DIR)) return SKEWFAIR_DATA_DIR;
  return SKEWFAIR_INSTALL_DATA_DIR;
}

// Seed precedence: flag > SKEWFAIR_SEED > fallback.
std::uint64_t ResolveSeed(const CLI::Option* flag, std::uint64_t flag_value,
                          std::uint64_t fallback) {
  if (flag->count() > 0) return flag_value;
  if (const char* env = std::getenv("SKEWFAIR_SEED"); env && *env) {
    char* end = nullptr;
    const unsigned long long value = std::strtoull(env, &end, 10);
    if (*end != '\0') {
      throw ValidationError(std::string("SKEWFAIR_SEED is not an integer: ") +
                            env);
    }
    return value;
  }
  return fallback;
}

// Skew source shared by resample and weights: a precomputed report or the
// predictions to compute one from.
struct SkewSourceArgs {
  std::string report;
  std::string predictions;
  std::string mode = "smoothed";
  double epsilon = 1.0;
};

void AddSkewSource(CLI::App* cmd, SkewSourceArgs& args) {
  cmd->add_option("--skew-report", args.report, "Precomputed skew report");
  cmd->add_option("--predictions", args.predictions,
                  "Prediction log to compute the skew table from");
  cmd->add_option("--mode", args.mode, "strict | smoothed")
      ->capture_default_str();
  cmd->add_option("--epsilon", args.epsilon, "Smoothing pseudo-count")
      ->capture_default_str();
}

SkewTable LoadSkewSource(const SkewSourceArgs& args, const Dataset& dataset,
                         double kappa) {
  if (args.report.empty() == args.predictions.empty()) {
    throw ValidationError(
        "exactly one of --skew-report or --predictions is required");
  }
  if (!args.report.empty()) {
    return ParseSkewReport(ReadJsonFile(args.report), dataset.taxonomy());
  }
  const PredictionLog predictions = LoadPredictions(args.predictions, dataset);
  return ComputeSkewTable(dataset, predictions,
                          {ParseSkewMode(args.mode), args.epsilon, kappa});
}

}  // namespace

int Run(const std::vector<std::string>& args, std::ostream& out,
        std::ostream& err) {
  CLI::App app{"Skew measurement and anti-stereotype debiasing toolkit",
               "skewfair"};
  app.set_version_flag("--version", kVersion);
  app.require_subcommand(1);

  // eval
  struct {
    std::string dataset, predictions, taxonomy, mode = "strict", out;
    double epsilon = 1.0, kappa = 5.0;
  } eval;
  CLI::App* eval_cmd = app.add_subcommand("eval", "Compute the skew report");
  eval_cmd->add_option("--dataset", eval.dataset, "Dataset manifest (JSONL)")
      ->required();
  eval_cmd->add_option("--predictions", eval.predictions, "Prediction log")
      ->required();
  eval_cmd->add_option("--taxonomy", eval.taxonomy, "Taxonomy config")
      ->required();
  eval_cmd->add_option("--mode", eval.mode, "strict | smoothed")
      ->capture_default_str();
  eval_cmd->add_option("--epsilon", eval.epsilon, "Smoothing pseudo-count")
      ->capture_default_str();
  eval_cmd->add_option("--kappa", eval.kappa, "Sentinel magnitude for pairs never predicted")
      ->capture_default_str();
  eval_cmd->add_option("--out", eval.out, "Report path")->required();

  // resample
  struct {
    std::string dataset, taxonomy, out;
    SkewSourceArgs source;
    double tau1 = 1.0, tau2 = 1.0, kappa = 5.0;
    std::uint64_t seed = 0;
    std::size_t trials = 0;
  } resample;
  CLI::App* resample_cmd =
      app.add_subcommand("resample", "Build a resampling plan");
  resample_cmd->add_option("--dataset", resample.dataset)->required();
  resample_cmd->add_option("--taxonomy", resample.taxonomy)->required();
  AddSkewSource(resample_cmd, resample.source);
  resample_cmd->add_option("--tau1", resample.tau1, "Acceptance slack")
      ->capture_default_str();
  resample_cmd->add_option("--tau2", resample.tau2, "Over-resampling threshold")
      ->capture_default_str();
  resample_cmd->add_option("--kappa", resample.kappa, "Skew clamp")
      ->capture_default_str();
  CLI::Option* resample_seed =
      resample_cmd->add_option("--seed", resample.seed, "RNG seed");
  resample_cmd->add_option("--trials", resample.trials,
                           "Repeat under derived seeds and report the "
                           "acceptance rate of positive-skew instances");
  resample_cmd->add_option("--out", resample.out, "Plan path");

  // weights
  struct {
    std::string dataset, taxonomy, out;
    SkewSourceArgs source;
    double kappa = 5.0;
  } weights;
  CLI::App* weights_cmd =
      app.add_subcommand("weights", "Compute per-instance loss weights");
  weights_cmd->add_option("--dataset", weights.dataset)->required();
  weights_cmd->add_option("--taxonomy", weights.taxonomy)->required();
  AddSkewSource(weights_cmd, weights.source);
  weights_cmd->add_option("--kappa", weights.kappa, "Skew clamp")
      ->capture_default_str();
  weights_cmd->add_option("--out", weights.out, "Weights path")->required();

  // simulate
  struct {
    std::string config, out, csv;
    std::uint64_t seed = 0;
  } simulate;
  CLI::App* simulate_cmd =
      app.add_subcommand("simulate", "Run the pretrain / FT / ASD simulation");
  simulate_cmd->add_option("--config", simulate.config, "SimConfig JSON")
      ->required();
  CLI::Option* simulate_seed =
      simulate_cmd->add_option("--seed", simulate.seed, "Overrides config seed");
  simulate_cmd->add_option("--out", simulate.out, "Report path")->required();
  simulate_cmd->add_option("--csv", simulate.csv, "Per-epoch CSV path");

  // prompts
  struct {
    std::string taxonomy = DefaultDataDir() + "/taxonomy/cmsc.json";
    std::string templates = DefaultDataDir() + "/templates";
    std::string out;
    std::size_t k = 100;
  } prompts;
  CLI::App* prompts_cmd =
      app.add_subcommand("prompts", "Expand prompt templates into a job manifest");
  prompts_cmd->add_option("--taxonomy", prompts.taxonomy)->capture_default_str();
  prompts_cmd->add_option("--templates", prompts.templates,
                          "Directory of template JSON files")
      ->capture_default_str();
  prompts_cmd->add_option("-k,--images-per-prompt", prompts.k)
      ->capture_default_str();
  prompts_cmd->add_option("--out", prompts.out, "Manifest path")->required();

  // audit
  struct {
    std::string dataset, taxonomy, out;
    double tolerance = 0.1;
  } audit;
  CLI::App* audit_cmd =
      app.add_subcommand("audit", "Count instances per attribute/concept cell");
  audit_cmd->add_option("--dataset", audit.dataset)->required();
  audit_cmd->add_option("--taxonomy", audit.taxonomy)->required();
  audit_cmd->add_option("--tolerance", audit.tolerance,
                        "Flag cells deviating from the mean by more than this "
                        "fraction")
      ->capture_default_str();
  audit_cmd->add_option("--out", audit.out, "Audit JSON path");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << kVersion << "\n";
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n\n";
    const CLI::App* failing = &app;
    for (const CLI::App* sub : app.get_subcommands()) failing = sub;
    err << failing->help();
    return kExitValidation;
  }

  try {
    if (eval_cmd->parsed()) {
      const Dataset dataset = LoadDataset(eval.dataset, eval.taxonomy);
      const PredictionLog predictions =
          LoadPredictions(eval.predictions, dataset);
      const SkewTable table = ComputeSkewTable(
          dataset, predictions,
          {ParseSkewMode(eval.mode), eval.epsilon, eval.kappa});
      WriteTextFile(eval.out, SerializeSkewReport(table));
      out << "MaxSkew@C=" << Fixed6(table.aggregates().max_skew)
          << " MinSkew@C=" << Fixed6(table.aggregates().min_skew) << "\n";
    } else if (resample_cmd->parsed()) {
      const Dataset dataset = LoadDataset(resample.dataset, resample.taxonomy);
      const SkewTable table =
          LoadSkewSource(resample.source, dataset, resample.kappa);
      const ResampleConfig config{
          resample.tau1, resample.tau2,
          ResolveSeed(resample_seed, resample.seed, 0), resample.kappa};
      if (resample.out.empty() && resample.trials == 0) {
        throw ValidationError("--out is required unless --trials is given");
      }
      const auto skews = ComputeInstanceSkews(dataset, table);
      const ResamplePlan plan = Resample(dataset, skews, config);
      if (!resample.out.empty()) {
        WriteTextFile(resample.out,
                      SerializePlan(dataset, plan,
                                    HashHex(SerializeSkewReport(table))));
      }
      out << "plan_size=" << plan.entries.size()
          << " dataset_size=" << dataset.size()
          << " extra_copies=" << plan.extra_copies
          << " rejected=" << plan.rejected << "\n";
      if (resample.trials > 0) {
        // Rejections only ever come from positive-skew instances, so the
        // acceptance rate is (positive - rejected) / positive per trial.
        std::size_t positive = 0;
        for (const InstanceSkew& s : skews) {
          positive += s.source && std::min(s.value, config.kappa) > 0;
        }
        std::size_t accepted = 0;
        std::size_t draws = 0;
        for (std::size_t t = 0; t < resample.trials; ++t) {
          ResampleConfig trial = config;
          trial.seed = DeriveSeed(config.seed, t);
          const ResamplePlan p = Resample(dataset, skews, trial);
          draws += positive;
          accepted += positive - p.rejected;
        }
        char line[160];
        std::snprintf(line, sizeof line,
                      "trials=%zu positive_draws=%zu accepted=%zu "
                      "acceptance=%.6f\n",
                      resample.trials, draws, accepted,
                      draws ? static_cast<double>(accepted) /
                                  static_cast<double>(draws)
                            : 0.0);
        out << line;
      }
    } else if (weights_cmd->parsed()) {
      const Dataset dataset = LoadDataset(weights.dataset, weights.taxonomy);
      const SkewTable table =
          LoadSkewSource(weights.source, dataset, weights.kappa);
      const WeightTable table_weights =
          LossWeights(dataset, table, weights.kappa);
      WriteTextFile(weights.out, SerializeWeights(dataset, table_weights));
      double lo = table_weights.weights.empty() ? 0 : table_weights.weights[0];
      double hi = lo;
      for (double w : table_weights.weights) {
        lo = std::min(lo, w);
        hi = std::max(hi, w);
      }
      out << "weights=" << table_weights.weights.size()
          << " min=" << Fixed6(lo) << " max=" << Fixed6(hi) << "\n";
    } else if (simulate_cmd->parsed()) {
      SimConfig config = SimConfig::Load(simulate.config);
      config.seed = ResolveSeed(simulate_seed, simulate.seed, config.seed);
      const ExperimentReport report = RunExperiment(config);
      WriteTextFile(simulate.out, report.Serialize());
      if (!simulate.csv.empty()) WriteTextFile(simulate.csv, report.ToCsv());
      out << report.SummaryTable();
    } else if (prompts_cmd->parsed()) {
      const Taxonomy taxonomy = Taxonomy::Load(prompts.taxonomy);
      const auto templates = LoadTemplates(prompts.templates);
      const auto jobs = ExpandPrompts(templates, taxonomy);
      WriteTextFile(prompts.out,
                    SerializePromptManifest(jobs, taxonomy, prompts.k));
      out << "jobs=" << jobs.size() << " images_per_prompt=" << prompts.k
          << " planned_images=" << jobs.size() * prompts.k << "\n";
    } else if (audit_cmd->parsed()) {
      const Dataset dataset = LoadDataset(audit.dataset, audit.taxonomy);
      const BalanceAudit result = AuditBalance(dataset, audit.tolerance);
      if (!audit.out.empty()) {
        WriteTextFile(audit.out, AuditToJson(dataset, result).dump(2) + "\n");
      }
      out << "instances=" << result.instance_count
          << " flagged_pairs=" << result.flagged_pairs
          << " flagged_combinations=" << result.flagged_combinations << "\n";
    }
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitValidation;
  }
  return kExitOk;
}

}  // namespace skewfair::cli
