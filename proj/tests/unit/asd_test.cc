#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "skewfair/asd.h"
#include "skewfair/errors.h"
#include "support.h"

namespace skewfair {
namespace {

// n female nurses, every one sourced from the (Female, nurse) pair with the
// same skew value.
struct Stream {
  Dataset dataset;
  std::vector<InstanceSkew> skews;
};

Stream UniformStream(std::size_t n, double s) {
  const Taxonomy t = testing::GenderTaxonomy({"nurse"});
  std::vector<Instance> instances;
  std::vector<InstanceSkew> skews;
  for (std::size_t i = 0; i < n; ++i) {
    instances.push_back({"s" + std::to_string(i), {1}, 0, {}});
    skews.push_back({instances.back().id, s, SkewSource{0, 1, 0}});
  }
  return {Dataset(t, std::move(instances)), std::move(skews)};
}

TEST(ResampleTest, ZeroSkewIsIdentity) {
  const Stream stream = UniformStream(9, 0.0);
  const ResamplePlan plan = Resample(stream.dataset, stream.skews, {});
  ASSERT_EQ(plan.entries.size(), 9u);
  for (std::size_t i = 0; i < 9; ++i) EXPECT_EQ(plan.entries[i], i);
  EXPECT_EQ(plan.extra_copies, 0u);
  EXPECT_EQ(plan.rejected, 0u);
}

TEST(ResampleTest, AccumulatorHandTrace) {
  const Stream stream = UniformStream(7, -0.3);
  ResampleConfig config;
  config.tau2 = 1.0;
  const ResamplePlan plan = Resample(stream.dataset, stream.skews, config);
  EXPECT_EQ(plan.entries,
            (std::vector<std::size_t>{0, 1, 2, 3, 3, 4, 5, 6}));
  EXPECT_EQ(plan.extra_copies, 1u);
  EXPECT_EQ(plan.pair_stats[1].extra, 1u);
}

TEST(ResampleTest, UndefinedInstancesPassThroughOnce) {
  Stream stream = UniformStream(4, -2.0);
  stream.skews[1].source.reset();
  stream.skews[1].value = 0.0;
  const ResamplePlan plan = Resample(stream.dataset, stream.skews, {});
  EXPECT_EQ(plan.undefined, 1u);
  EXPECT_EQ(plan.CopyCounts(4), (std::vector<std::size_t>{2, 1, 2, 2}));
}

TEST(ResampleTest, SentinelsAreClampedBeforeAccumulating) {
  // -1000 clamps to -5, so each instance alone crosses tau2 = 4.
  const Stream stream = UniformStream(3, -1000.0);
  ResampleConfig config;
  config.tau2 = 4.0;
  const ResamplePlan plan = Resample(stream.dataset, stream.skews, config);
  EXPECT_EQ(plan.extra_copies, 3u);
}

double EmpiricalAcceptance(double s, std::size_t trials) {
  const Stream stream = UniformStream(1, s);
  std::size_t accepted = 0;
  for (std::size_t t = 0; t < trials; ++t) {
    ResampleConfig config;
    config.seed = DeriveSeed(7, t);
    accepted += Resample(stream.dataset, stream.skews, config).accepted;
  }
  return static_cast<double>(accepted) / static_cast<double>(trials);
}

TEST(ResampleTest, AcceptanceMatchesClosedForm) {
  const double rate = EmpiricalAcceptance(1.0, 100000);
  EXPECT_NEAR(rate, 0.5, 0.01);
}

TEST(ResampleTest, DeterministicForSeed) {
  const auto nurse = testing::MakeNurseCase();
  const SkewTable table = ComputeSkewTable(nurse.dataset, nurse.predictions,
                                           SkewOptions::Smoothed());
  ResampleConfig config;
  config.seed = 42;
  const ResamplePlan a = Resample(nurse.dataset, table, config);
  const ResamplePlan b = Resample(nurse.dataset, table, config);
  EXPECT_EQ(SerializePlan(nurse.dataset, a, "h"),
            SerializePlan(nurse.dataset, b, "h"));
  EXPECT_EQ(a.entries, b.entries);
}

TEST(ResampleTest, RejectsNonPositiveThresholds) {
  const Stream stream = UniformStream(1, 0.0);
  ResampleConfig config;
  config.tau1 = 0;
  EXPECT_THROW(Resample(stream.dataset, stream.skews, config), ValidationError);
  config = {};
  config.tau2 = -1;
  EXPECT_THROW(Resample(stream.dataset, stream.skews, config), ValidationError);
}

TEST(ResampleTest, PlanSerializationHasEntriesThenMeta) {
  const Stream stream = UniformStream(7, -0.3);
  const ResamplePlan plan = Resample(stream.dataset, stream.skews, {});
  const std::string text = SerializePlan(stream.dataset, plan, "abc");
  std::vector<Json> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    const std::size_t end = text.find('\n', start);
    lines.push_back(Json::parse(text.substr(start, end - start)));
    start = end + 1;
  }
  ASSERT_EQ(lines.size(), 8u);
  EXPECT_EQ(lines[3]["id"], "s3");
  EXPECT_EQ(lines[3]["count"], 2);
  const Json& meta = lines.back()["meta"];
  EXPECT_EQ(meta["plan_size"], 8);
  EXPECT_EQ(meta["dataset_size"], 7);
  EXPECT_EQ(meta["source_table_hash"], "abc");
  EXPECT_EQ(meta["tau1"], 1.0);
}

TEST(DeriveSeedTest, StreamsAreDistinct) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t base : {0ull, 1ull, 42ull}) {
    for (std::uint64_t stream = 0; stream < 1000; ++stream) {
      seen.insert(DeriveSeed(base, stream));
    }
  }
  EXPECT_EQ(seen.size(), 3000u);
}

TEST(WeightTest, ClosedFormValues) {
  EXPECT_EQ(FairnessWeight(0.0), 1.0);
  EXPECT_NEAR(FairnessWeight(std::log(2.0)), 0.5, 1e-12);
  EXPECT_NEAR(FairnessWeight(-1.0), std::exp(1.0), 1e-12);
  EXPECT_NEAR(FairnessWeight(-100.0), std::exp(5.0), 1e-9);
  EXPECT_NEAR(FairnessWeight(100.0, 2.0), std::exp(-2.0), 1e-15);
}

TEST(WeightTest, StrictNurseWeights) {
  const auto nurse = testing::MakeNurseCase();
  const WeightTable w = LossWeights(
      nurse.dataset, ComputeSkewTable(nurse.dataset, nurse.predictions));
  EXPECT_NEAR(w.weights[0], 0.625, 1e-12);  // female nurse: 1 / 1.6
  EXPECT_NEAR(w.weights[5], 2.5, 1e-12);    // male nurse: 1 / 0.4
}

TEST(WeightTest, SmoothedNurseWeightsMatchOracle) {
  const auto nurse = testing::MakeNurseCase();
  const SkewOptions options = SkewOptions::Smoothed(1.0);
  const WeightTable w = LossWeights(
      nurse.dataset, ComputeSkewTable(nurse.dataset, nurse.predictions, options));
  for (std::size_t i = 0; i < nurse.dataset.size(); ++i) {
    const Instance& inst = nurse.dataset[i];
    const auto oracle = testing::OracleSkew(nurse.dataset, nurse.predictions, 0,
                                            inst.attributes[0], inst.label,
                                            options);
    ASSERT_TRUE(oracle.defined);
    EXPECT_NEAR(w.weights[i], std::exp(-oracle.value), 1e-12) << i;
  }
  EXPECT_NEAR(w.weights[0], 2.0 / 3.0, 1e-12);
  EXPECT_NEAR(w.weights[5], 2.0, 1e-12);
}

TEST(WeightTest, UndefinedSkewGivesUnitWeight) {
  Stream stream = UniformStream(2, -1.0);
  stream.skews[0].source.reset();
  const WeightTable w = LossWeights(stream.skews);
  EXPECT_EQ(w.weights[0], 1.0);
  EXPECT_NEAR(w.weights[1], std::exp(1.0), 1e-12);
}

TEST(WeightTest, ForPlanFollowsEntries) {
  const Stream stream = UniformStream(7, -0.3);
  const ResamplePlan plan = Resample(stream.dataset, stream.skews, {});
  const WeightTable w = LossWeights(stream.skews);
  EXPECT_EQ(w.ForPlan(plan).size(), plan.entries.size());
}

TEST(EpochPreparationTest, UnbiasedModelLeavesDataUntouched) {
  const auto nurse = testing::MakeNurseCase();
  const EpochPreparation prep = PrepareAsdEpoch(
      nurse.dataset, PredictionLog::FromLabels(nurse.dataset), {});
  EXPECT_EQ(prep.table.options().mode, SkewMode::kSmoothed);
  ASSERT_EQ(prep.plan.entries.size(), nurse.dataset.size());
  for (std::size_t i = 0; i < nurse.dataset.size(); ++i) {
    EXPECT_EQ(prep.plan.entries[i], i);
    EXPECT_EQ(prep.weights.weights[i], 1.0);
  }
}

TEST(EpochPreparationTest, ByteIdenticalAcrossCalls) {
  const auto nurse = testing::MakeNurseCase();
  ResampleConfig config;
  config.seed = 9;
  const auto a = PrepareAsdEpoch(nurse.dataset, nurse.predictions, config);
  const auto b = PrepareAsdEpoch(nurse.dataset, nurse.predictions, config);
  EXPECT_EQ(SerializePlan(nurse.dataset, a.plan, "x"),
            SerializePlan(nurse.dataset, b.plan, "x"));
  EXPECT_EQ(SerializeWeights(nurse.dataset, a.weights),
            SerializeWeights(nurse.dataset, b.weights));
}

}  // namespace
}  // namespace skewfair
