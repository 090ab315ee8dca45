#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "decompeval/core.hpp"
#include "decompeval/engine.hpp"
#include "decompeval/scorer.hpp"

namespace decompeval {

enum class Coefficient { pearson, spearman, kendall };
enum class Granularity { pooled, grouped };

std::string_view to_string(Coefficient coefficient);
std::string_view to_string(Granularity granularity);
Coefficient parse_coefficient(std::string_view name);
Granularity parse_granularity(std::string_view name);

inline constexpr Coefficient kAllCoefficients[] = {Coefficient::pearson, Coefficient::spearman,
                                                   Coefficient::kendall};

// All three throw DegenerateInputError on mismatched lengths, fewer than two
// points, or a constant input.
double pearson(std::span<const double> xs, std::span<const double> ys);

// Pearson on average ranks (ties share the mean of their positions).
double spearman(std::span<const double> xs, std::span<const double> ys);

// Kendall tau-b, computed with Knight's O(n log n) merge-sort method.
double kendall_tau_b(std::span<const double> xs, std::span<const double> ys);

double correlation(Coefficient coefficient, std::span<const double> xs,
                   std::span<const double> ys);

// 1-based average ranks.
std::vector<double> average_ranks(std::span<const double> values);

struct GroupedPair {
  std::string group_id;
  double metric = 0.0;
  double human = 0.0;
};

struct GroupedCorrelation {
  double value = 0.0;
  std::size_t groups_used = 0;
  std::size_t groups_skipped = 0;  // singleton or constant groups
};

// Unweighted mean over groups of the within-group coefficient. Throws
// DegenerateInputError when no group is usable.
GroupedCorrelation grouped_correlation(std::span<const GroupedPair> pairs,
                                       Coefficient coefficient);

struct DimensionCorrelation {
  std::string dimension;
  std::size_t samples_scored = 0;
  std::size_t samples_failed = 0;
  std::size_t groups_skipped = 0;
  std::map<std::string, double> coefficients;  // keyed by coefficient name
  std::vector<std::string> warnings;
  std::vector<std::string> errors;  // per-sample failures, "id: message"
};

struct CorrelationReport {
  std::string dataset;
  Granularity granularity = Granularity::pooled;
  std::vector<DimensionCorrelation> dimensions;

  const DimensionCorrelation* find(std::string_view dimension) const;
};

// Scores every sample that has a human score for each spec's dimension and
// correlates metric with human scores at the requested granularity.
CorrelationReport benchmark(const std::vector<EvaluationSample>& samples,
                            const std::vector<DimensionSpec>& specs, const EvalOptions& options,
                            ScoreBackend& backend, Granularity granularity,
                            std::size_t parallelism = 1, std::string dataset_name = {});

// Correlates already computed results (keyed by sample id) with human scores.
DimensionCorrelation correlate(const std::vector<EvaluationSample>& samples,
                               const std::string& dimension,
                               const std::vector<SampleOutcome>& outcomes,
                               Granularity granularity);

nlohmann::ordered_json to_json(const CorrelationReport& report);
// Aligned-column text table.
std::string render_table(const CorrelationReport& report);

// A planted "perfect metric": a scripted backend whose answers make each
// sample's score an increasing function of its human score. Built by
// replaying the engine so it knows every prompt the run will issue.
std::shared_ptr<ScoreBackend> planted_backend(const std::vector<EvaluationSample>& samples,
                                              const std::vector<DimensionSpec>& specs,
                                              const EvalOptions& options);

}  // namespace decompeval
