#include <random>

#include <gtest/gtest.h>

#include "decompeval/datasets.hpp"
#include "decompeval/errors.hpp"
#include "decompeval/metaeval.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

namespace decompeval {
namespace {

const std::filesystem::path kShare = DECOMPEVAL_SHARE_DATA;

TEST(Correlation, HandComputedValues) {
  const std::vector<double> a = {1, 2, 3, 4}, b = {1, 3, 2, 4};
  EXPECT_NEAR(pearson(a, b), 0.8, 1e-12);
  EXPECT_NEAR(spearman(std::vector<double>{1, 2, 2, 3}, std::vector<double>{1, 2, 3, 4}),
              0.9486832980505138, 1e-12);
  EXPECT_NEAR(kendall_tau_b(std::vector<double>{1, 2, 2, 3}, std::vector<double>{2, 1, 3, 3}), 0.4, 1e-12);
}

TEST(Correlation, MatchesOraclesOnRandomTiedVectors) {
  std::mt19937_64 rng(1234);
  std::uniform_int_distribution<std::size_t> length(3, 50);
  std::uniform_int_distribution<int> levels(2, 8);
  int compared = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const auto n = length(rng);
    auto xs = oracle::tied_vector(rng, n, levels(rng));
    auto ys = oracle::tied_vector(rng, n, levels(rng));
    // Constant inputs are rejected by design; redraw until both vary.
    while (std::all_of(xs.begin(), xs.end(), [&](double v) { return v == xs[0]; })) {
      xs = oracle::tied_vector(rng, n, 3);
    }
    while (std::all_of(ys.begin(), ys.end(), [&](double v) { return v == ys[0]; })) {
      ys = oracle::tied_vector(rng, n, 3);
    }
    EXPECT_NEAR(pearson(xs, ys), oracle::pearson(xs, ys), 1e-9) << trial;
    EXPECT_NEAR(spearman(xs, ys), oracle::spearman(xs, ys), 1e-9) << trial;
    EXPECT_NEAR(kendall_tau_b(xs, ys), oracle::kendall_tau_b(xs, ys), 1e-9) << trial;
    EXPECT_EQ(average_ranks(xs), oracle::average_ranks(xs));
    ++compared;
  }
  EXPECT_EQ(compared, 200);
}

TEST(Correlation, SelfAndReversalAreExact) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> xs(3 + trial), reversed;
    for (auto& v : xs) v = dist(rng);
    for (double v : xs) reversed.push_back(-v);
    for (auto c : kAllCoefficients) {
      EXPECT_EQ(correlation(c, xs, xs), 1.0) << to_string(c);
      EXPECT_EQ(correlation(c, xs, reversed), -1.0) << to_string(c);
    }
  }
}

TEST(Correlation, SymmetricAndRankInvariant) {
  std::mt19937_64 rng(5);
  auto xs = oracle::tied_vector(rng, 30, 6);
  auto ys = oracle::tied_vector(rng, 30, 9);
  std::vector<double> cubed;
  for (double v : xs) cubed.push_back(v * v * v + 2.0);
  for (auto c : kAllCoefficients) {
    EXPECT_NEAR(correlation(c, xs, ys), correlation(c, ys, xs), 1e-12);
  }
  EXPECT_NEAR(spearman(xs, ys), spearman(cubed, ys), 1e-12);
  EXPECT_NEAR(kendall_tau_b(xs, ys), kendall_tau_b(cubed, ys), 1e-12);
}

TEST(Correlation, DegenerateInputs) {
  const std::vector<double> constant = {2, 2, 2}, varied = {1, 2, 3};
  for (auto c : kAllCoefficients) {
    EXPECT_THROW(correlation(c, constant, varied), DegenerateInputError);
    EXPECT_THROW(correlation(c, std::vector<double>{1}, std::vector<double>{1}), DegenerateInputError);
    EXPECT_THROW(correlation(c, varied, std::vector<double>{1, 2}), DegenerateInputError);
  }
}

std::vector<GroupedPair> five_groups(std::mt19937_64& rng) {
  std::vector<GroupedPair> pairs;
  std::uniform_real_distribution<double> dist(0.0, 1.0);
  const std::size_t sizes[] = {3, 4, 5, 6, 7};
  for (std::size_t g = 0; g < 5; ++g) {
    for (std::size_t i = 0; i < sizes[g]; ++i) {
      pairs.push_back({"g" + std::to_string(g), dist(rng), std::floor(dist(rng) * 4.0)});
    }
  }
  return pairs;
}

TEST(GroupedCorrelation, MatchesPerGroupOracleMean) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    auto pairs = five_groups(rng);
    for (auto c : kAllCoefficients) {
      double sum = 0.0;
      std::size_t used = 0, skipped = 0;
      for (int g = 0; g < 5; ++g) {
        std::vector<double> m, h;
        for (const auto& p : pairs) {
          if (p.group_id == "g" + std::to_string(g)) {
            m.push_back(p.metric);
            h.push_back(p.human);
          }
        }
        if (std::all_of(h.begin(), h.end(), [&](double v) { return v == h[0]; })) {
          ++skipped;
          continue;
        }
        sum += c == Coefficient::pearson    ? oracle::pearson(m, h)
               : c == Coefficient::spearman ? oracle::spearman(m, h)
                                            : oracle::kendall_tau_b(m, h);
        ++used;
      }
      if (used == 0) continue;
      const auto grouped = grouped_correlation(pairs, c);
      EXPECT_NEAR(grouped.value, sum / static_cast<double>(used), 1e-9);
      EXPECT_EQ(grouped.groups_used, used);
      EXPECT_EQ(grouped.groups_skipped, skipped);
    }
  }
}

TEST(GroupedCorrelation, UnweightedMeanAndSkips) {
  std::vector<GroupedPair> pairs = {
      {"up", 1, 1},   {"up", 2, 2},     {"up", 3, 3},
      {"down", 1, 3}, {"down", 2, 2},   {"down", 3, 1}, {"down", 4, 0}, {"down", 5, -1},
      {"single", 1, 1},
      {"flat", 1, 2}, {"flat", 2, 2},
  };
  const auto grouped = grouped_correlation(pairs, Coefficient::pearson);
  EXPECT_DOUBLE_EQ(grouped.value, 0.0);
  EXPECT_EQ(grouped.groups_used, 2u);
  EXPECT_EQ(grouped.groups_skipped, 2u);

  const std::vector<GroupedPair> unusable = {{"a", 1, 1}, {"b", 1, 2}, {"b", 2, 2}};
  EXPECT_THROW(grouped_correlation(unusable, Coefficient::kendall), DegenerateInputError);
}

std::vector<DimensionSpec> dialogue_specs() {
  return {fixtures::preset(Task::dialogue, "coherence"), fixtures::preset(Task::dialogue, "engagingness"),
          fixtures::preset(Task::dialogue, "naturalness")};
}

TEST(Benchmark, PlantedMetricIsPerfect) {
  const auto samples = load(DatasetManifest::from_file(kShare / "synthetic" / "manifest.json"));
  const auto specs = dialogue_specs();
  for (bool decomposition : {true, false}) {
    EvalOptions options;
    options.ablation.include_decomposition = decomposition;
    const auto backend = planted_backend(samples, specs, options);
    for (auto granularity : {Granularity::pooled, Granularity::grouped}) {
      const auto report = benchmark(samples, specs, options, *backend, granularity, 2, "synthetic");
      ASSERT_EQ(report.dimensions.size(), 3u);
      for (const auto& dim : report.dimensions) {
        EXPECT_EQ(dim.samples_scored, samples.size());
        EXPECT_EQ(dim.samples_failed, 0u);
        EXPECT_EQ(dim.coefficients.size(), 3u);
        for (const auto& [name, value] : dim.coefficients) {
          EXPECT_NEAR(value, 1.0, 1e-9) << dim.dimension << " " << name;
        }
      }
    }
  }
}

TEST(Benchmark, DeterministicAcrossParallelism) {
  const auto samples = load(DatasetManifest::from_file(kShare / "synthetic" / "manifest.json"));
  MockBackend backend(42);
  const auto one = benchmark(samples, dialogue_specs(), {}, backend, Granularity::grouped, 1, "synthetic");
  const auto eight = benchmark(samples, dialogue_specs(), {}, backend, Granularity::grouped, 8, "synthetic");
  EXPECT_EQ(to_json(one).dump(), to_json(eight).dump());
  EXPECT_EQ(render_table(one), render_table(eight));
}

TEST(Benchmark, ConstantMetricIsReportedNotFatal) {
  const auto samples = load(DatasetManifest::from_file(kShare / "synthetic" / "manifest.json"));
  FunctionBackend constant(
      [](const ScoreRequest&) {
        CandidateProbabilities p;
        p.values = {{"yes", 0.4}, {"no", 0.4}};
        return p;
      },
      "constant");
  const auto report = benchmark(samples, {fixtures::preset(Task::dialogue, "coherence")}, {}, constant,
                                Granularity::pooled);
  const auto* dim = report.find("coherence");
  ASSERT_NE(dim, nullptr);
  EXPECT_TRUE(dim->coefficients.empty());
  EXPECT_FALSE(dim->warnings.empty());
}

TEST(Benchmark, FailedSamplesAreCounted) {
  auto samples = load(DatasetManifest::from_file(kShare / "synthetic" / "manifest.json"));
  samples[0].context.erase("fact");
  MockBackend backend(1);
  const auto report = benchmark(samples, {fixtures::preset(Task::dialogue, "engagingness")}, {}, backend,
                                Granularity::pooled);
  const auto& dim = report.dimensions.at(0);
  EXPECT_EQ(dim.samples_failed, 1u);
  EXPECT_EQ(dim.samples_scored, samples.size() - 1);
  ASSERT_EQ(dim.errors.size(), 1u);
  EXPECT_EQ(dim.errors[0].rfind(samples[0].id + ": ", 0), 0u);
}

TEST(Benchmark, SkipsSamplesWithoutHumanScore) {
  auto samples = load(DatasetManifest::from_file(kShare / "synthetic" / "manifest.json"));
  samples[1].human_scores.erase("coherence");
  std::atomic<int> calls = 0;
  MockBackend inner(3);
  FunctionBackend counting(
      [&](const ScoreRequest& r) {
        ++calls;
        return inner.score(r);
      },
      "counting");
  EvalOptions options;
  options.ablation.include_decomposition = false;
  const auto report = benchmark(samples, {fixtures::preset(Task::dialogue, "coherence")}, options, counting,
                                Granularity::pooled);
  EXPECT_EQ(report.dimensions[0].samples_scored, samples.size() - 1);
  EXPECT_EQ(calls, static_cast<int>(samples.size() - 1));
}

TEST(ReportJson, Shape) {
  const auto samples = load(DatasetManifest::from_file(kShare / "synthetic" / "manifest.json"));
  MockBackend backend(8);
  const auto report = benchmark(samples, dialogue_specs(), {}, backend, Granularity::pooled, 1, "synthetic");
  const auto json = to_json(report);
  EXPECT_EQ(json.at("dataset"), "synthetic");
  EXPECT_EQ(json.at("granularity"), "pooled");
  EXPECT_EQ(json.at("dimensions").size(), 3u);
  const auto table = render_table(report);
  EXPECT_NE(table.find("pearson"), std::string::npos);
  EXPECT_NE(table.find("engagingness"), std::string::npos);
}

}  // namespace
}  // namespace decompeval
