#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>

#include "decompeval/errors.hpp"
#include "decompeval/metaeval.hpp"
#include "decompeval/segmentation.hpp"

namespace decompeval {

using nlohmann::json;
using nlohmann::ordered_json;

const DimensionCorrelation* CorrelationReport::find(std::string_view dimension) const {
  for (const auto& row : dimensions) {
    if (row.dimension == dimension) return &row;
  }
  return nullptr;
}

DimensionCorrelation correlate(const std::vector<EvaluationSample>& samples,
                               const std::string& dimension,
                               const std::vector<SampleOutcome>& outcomes,
                               Granularity granularity) {
  DimensionCorrelation row;
  row.dimension = dimension;

  std::map<std::string, const ScoreResult*> by_id;
  for (const auto& outcome : outcomes) {
    if (outcome.ok()) {
      by_id[outcome.sample_id] = &*outcome.result;
    } else {
      ++row.samples_failed;
      row.errors.push_back(outcome.sample_id + ": " + outcome.error);
    }
  }

  std::vector<GroupedPair> pairs;
  std::size_t unscored = 0;
  for (const auto& sample : samples) {
    auto human = sample.human_scores.find(dimension);
    if (human == sample.human_scores.end()) {
      ++unscored;
      continue;
    }
    auto result = by_id.find(sample.id);
    if (result == by_id.end()) continue;
    pairs.push_back({sample.group_id, result->second->score, human->second});
  }
  row.samples_scored = pairs.size();
  if (unscored > 0) {
    row.warnings.push_back(std::to_string(unscored) + " samples lack a human score for " + dimension);
  }

  for (const auto coefficient : kAllCoefficients) {
    const std::string name(to_string(coefficient));
    try {
      if (granularity == Granularity::pooled) {
        std::vector<double> metric, human;
        for (const auto& pair : pairs) {
          metric.push_back(pair.metric);
          human.push_back(pair.human);
        }
        row.coefficients[name] = correlation(coefficient, metric, human);
      } else {
        const auto grouped = grouped_correlation(pairs, coefficient);
        row.coefficients[name] = grouped.value;
        row.groups_skipped = std::max(row.groups_skipped, grouped.groups_skipped);
      }
    } catch (const DegenerateInputError& e) {
      row.warnings.push_back(name + ": " + e.what());
    }
  }
  if (granularity == Granularity::grouped && row.groups_skipped > 0) {
    row.warnings.push_back(std::to_string(row.groups_skipped) + " degenerate groups skipped");
  }
  return row;
}

CorrelationReport benchmark(const std::vector<EvaluationSample>& samples,
                            const std::vector<DimensionSpec>& specs, const EvalOptions& options,
                            ScoreBackend& backend, Granularity granularity,
                            std::size_t parallelism, std::string dataset_name) {
  CorrelationReport report;
  report.dataset = std::move(dataset_name);
  report.granularity = granularity;
  for (const auto& spec : specs) {
    std::vector<EvaluationSample> scored;
    for (const auto& sample : samples) {
      if (sample.human_scores.count(spec.name) > 0) scored.push_back(sample);
    }
    const auto outcomes = evaluate_batch(scored, spec, options, backend, parallelism);
    report.dimensions.push_back(correlate(samples, spec.name, outcomes, granularity));
  }
  return report;
}

ordered_json to_json(const CorrelationReport& report) {
  ordered_json out;
  out["dataset"] = report.dataset;
  out["granularity"] = to_string(report.granularity);
  out["dimensions"] = ordered_json::array();
  for (const auto& row : report.dimensions) {
    ordered_json entry;
    entry["dimension"] = row.dimension;
    entry["samples_scored"] = row.samples_scored;
    entry["samples_failed"] = row.samples_failed;
    entry["groups_skipped"] = row.groups_skipped;
    entry["coefficients"] = ordered_json::object();
    for (const auto coefficient : kAllCoefficients) {
      const std::string name(to_string(coefficient));
      auto it = row.coefficients.find(name);
      entry["coefficients"][name] = it == row.coefficients.end() ? ordered_json() : ordered_json(it->second);
    }
    entry["warnings"] = row.warnings;
    entry["errors"] = row.errors;
    out["dimensions"].push_back(std::move(entry));
  }
  return out;
}

std::string render_table(const CorrelationReport& report) {
  std::size_t name_width = 9;
  for (const auto& row : report.dimensions) name_width = std::max(name_width, row.dimension.size());

  auto cell = [](const char* fmt, auto value) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, fmt, value);
    return std::string(buffer);
  };
  auto pad = [](std::string text, std::size_t width) {
    if (text.size() < width) text.append(width - text.size(), ' ');
    return text;
  };

  std::string out = "dataset: " + (report.dataset.empty() ? std::string("-") : report.dataset) +
                    "  granularity: " + std::string(to_string(report.granularity)) + "\n";
  out += pad("dimension", name_width) + cell("%8s", "n") + cell("%10s", "pearson") +
         cell("%10s", "spearman") + cell("%10s", "kendall") + cell("%9s", "skipped") +
         cell("%8s", "failed") + "\n";
  for (const auto& row : report.dimensions) {
    out += pad(row.dimension, name_width) + cell("%8zu", row.samples_scored);
    for (const auto coefficient : kAllCoefficients) {
      auto it = row.coefficients.find(std::string(to_string(coefficient)));
      out += it == row.coefficients.end() ? cell("%10s", "-") : cell("%10.3f", it->second);
    }
    out += cell("%9zu", row.groups_skipped) + cell("%8zu", row.samples_failed) + "\n";
  }
  return out;
}

std::shared_ptr<ScoreBackend> planted_backend(const std::vector<EvaluationSample>& samples,
                                              const std::vector<DimensionSpec>& specs,
                                              const EvalOptions& options) {
  auto planted = std::make_shared<ScriptedBackend>();
  const SentenceSplitter fallback;
  const SentenceSplitter& splitter = options.splitter != nullptr ? *options.splitter : fallback;

  for (const auto& spec : specs) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    for (const auto& sample : samples) {
      auto it = sample.human_scores.find(spec.name);
      if (it == sample.human_scores.end()) continue;
      lo = std::min(lo, it->second);
      hi = std::max(hi, it->second);
    }
    for (const auto& sample : samples) {
      auto it = sample.human_scores.find(spec.name);
      if (it == sample.human_scores.end() || !validate_sample(sample, spec).ok()) continue;
      // Dyadic targets keep v / (v + (1 - v)), sums and means exact, so equal
      // human scores map to bit-identical metric scores.
      const double raw = hi > lo ? 0.05 + 0.9 * (it->second - lo) / (hi - lo) : 0.5;
      const double target = std::round(raw * 1048576.0) / 1048576.0;

      const bool decomposed = options.ablation.include_decomposition;
      const std::size_t steps = decomposed ? splitter.split(sample.generated).sentences.size() : 0;
      // sentence_sum: the first step carries the whole target, the rest 0.
      const bool summed = decomposed && spec.aggregation == Aggregation::sentence_sum;

      std::size_t call = 0;
      FunctionBackend recorder(
          [&](const ScoreRequest& request) {
            const std::size_t index = call++;
            const double value = index < steps && summed && index > 0 ? 0.0 : target;
            std::map<std::string, double> probs = {{spec.answer_words.yes, value},
                                                   {spec.answer_words.no, 1.0 - value}};
            planted->add_prompt(request.prompt, probs);
            CandidateProbabilities out;
            out.values = std::move(probs);
            return out;
          },
          "planted-recorder");
      evaluate(sample, spec, options, recorder);
    }
  }
  return planted;
}

}  // namespace decompeval
