#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "decompeval/core.hpp"
#include "decompeval/errors.hpp"
#include "decompeval/scorer.hpp"
#include "decompeval/segmentation.hpp"

namespace decompeval {

struct EvidenceStep {
  int index = 0;  // 1-based sentence index
  std::string sentence;
  std::string subquestion;
  std::string answer;
  double p_yes = 0.0;
  double p_no = 0.0;

  bool operator==(const EvidenceStep&) const = default;
};

struct EvidenceTrace {
  std::vector<EvidenceStep> steps;
  std::string final_question;
  double final_p_yes = 0.0;
  double final_p_no = 0.0;

  bool operator==(const EvidenceTrace&) const = default;
};

struct ScoreResult {
  std::string sample_id;
  std::string dimension;
  // In [0, 1] for direct and sentence_mean; a raw sum for sentence_sum.
  double score = 0.0;
  Aggregation aggregation = Aggregation::direct;
  std::optional<std::vector<double>> per_sentence_scores;
  EvidenceTrace trace;
  AblationConfig ablation;

  bool operator==(const ScoreResult&) const = default;
};

struct EvalOptions {
  AblationConfig ablation;
  std::size_t max_prompt_chars = 4000;
  const SentenceSplitter* splitter = nullptr;  // defaults to the built-in splitter
};

// p_yes / (p_yes + p_no). Throws DegenerateProbabilityError when both are 0.
double normalized_yes(double p_yes, double p_no);

// a_t = yes iff P(yes) > P(no); ties answer no.
const std::string& decide_answer(const AnswerWords& words, double p_yes, double p_no);

// Evaluation-input fields after trimming context so that the largest prompt
// of the run (the recomposition prompt with every subquestion answered by the
// longer answer word) fits the budget. Every prompt of one sample reuses them.
std::vector<EvaluationField> prepared_fields(const EvaluationSample& sample,
                                             const DimensionSpec& spec,
                                             const EvalOptions& options);

// Sentence-by-sentence Q&A. Returns only the steps; empty when decomposition
// is disabled. A backend failure at step t aborts with a BackendError naming t.
EvidenceTrace answer_subquestions(const EvaluationSample& sample, const DimensionSpec& spec,
                                  const EvalOptions& options, ScoreBackend& backend);

// Asks the original question after the full Q&A history, records the final
// probabilities in `trace` and returns the normalized yes-probability.
double final_score(const EvaluationSample& sample, const DimensionSpec& spec,
                   const EvalOptions& options, EvidenceTrace& trace, ScoreBackend& backend);

// Full pipeline for one sample. Issues n + 1 backend calls (1 without
// decomposition).
ScoreResult evaluate(const EvaluationSample& sample, const DimensionSpec& spec,
                     const EvalOptions& options, ScoreBackend& backend);

struct SampleOutcome {
  std::string sample_id;
  std::optional<ScoreResult> result;
  std::string error;
  ErrorKind error_kind = ErrorKind::other;

  bool ok() const noexcept { return result.has_value(); }
};

// Order-preserving; failures are isolated per sample.
std::vector<SampleOutcome> evaluate_batch(const std::vector<EvaluationSample>& samples,
                                          const DimensionSpec& spec, const EvalOptions& options,
                                          ScoreBackend& backend, std::size_t parallelism = 1);

nlohmann::ordered_json to_json(const ScoreResult& result);
ScoreResult score_result_from_json(const nlohmann::json& json);

// Human-readable evidence listing, one subquestion per line followed by its
// answer, then the final question and score.
std::string render_evidence(const ScoreResult& result);

}  // namespace decompeval
