#include "decompeval/engine.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <numeric>
#include <thread>

#include "decompeval/prompts.hpp"

namespace decompeval {

using nlohmann::json;
using nlohmann::ordered_json;

double normalized_yes(double p_yes, double p_no) {
  const double total = p_yes + p_no;
  if (!(total > 0.0)) {
    throw DegenerateProbabilityError("both answer words have zero probability");
  }
  return p_yes / total;
}

const std::string& decide_answer(const AnswerWords& words, double p_yes, double p_no) {
  return p_yes > p_no ? words.yes : words.no;
}

namespace {

const SentenceSplitter& splitter_for(const EvalOptions& options) {
  static const SentenceSplitter fallback;
  return options.splitter != nullptr ? *options.splitter : fallback;
}

void require_valid(const EvaluationSample& sample, const DimensionSpec& spec) {
  const auto validation = validate_sample(sample, spec);
  if (validation.ok()) return;
  std::string message = "sample '" + sample.id + "' invalid for " + spec.name + ":";
  for (const auto& violation : validation.violations) message += " " + violation.message + ";";
  bool missing_only = std::all_of(validation.violations.begin(), validation.violations.end(),
                                  [](const Violation& v) { return v.message.rfind("missing field ", 0) == 0; });
  if (missing_only) throw MissingFieldError(validation.violations.front().message.substr(14));
  throw DataError(message);
}

std::vector<std::string> subquestions_for(const EvaluationSample& sample, const DimensionSpec& spec,
                                          const EvalOptions& options,
                                          std::vector<std::string>* sentences_out = nullptr) {
  if (!options.ablation.include_decomposition) return {};
  auto split = splitter_for(options).split(sample.generated);
  std::vector<std::string> subquestions;
  subquestions.reserve(split.sentences.size());
  for (std::size_t i = 0; i < split.sentences.size(); ++i) {
    subquestions.push_back(render_subquestion(spec, static_cast<int>(i + 1), split.sentences[i]));
  }
  if (sentences_out != nullptr) *sentences_out = std::move(split.sentences);
  return subquestions;
}

std::vector<EvaluationField> fields_for(const EvaluationSample& sample, const DimensionSpec& spec,
                                        const EvalOptions& options,
                                        const std::vector<std::string>& subquestions) {
  const auto& words = spec.answer_words;
  const std::string& longer = words.yes.size() >= words.no.size() ? words.yes : words.no;
  std::vector<QaPair> worst_case;
  worst_case.reserve(subquestions.size());
  for (const auto& sq : subquestions) worst_case.push_back({sq, longer});
  auto assembly = final_assembly(spec, evaluation_fields(sample, spec), std::move(worst_case));
  return truncate_prompt(std::move(assembly), options.max_prompt_chars, options.ablation)
      .evaluation_input;
}

ScoreRequest request_for(std::string prompt, const DimensionSpec& spec) {
  return {std::move(prompt), {spec.answer_words.yes, spec.answer_words.no}};
}

}  // namespace

std::vector<EvaluationField> prepared_fields(const EvaluationSample& sample,
                                             const DimensionSpec& spec,
                                             const EvalOptions& options) {
  return fields_for(sample, spec, options, subquestions_for(sample, spec, options));
}

EvidenceTrace answer_subquestions(const EvaluationSample& sample, const DimensionSpec& spec,
                                  const EvalOptions& options, ScoreBackend& backend) {
  EvidenceTrace trace;
  trace.final_question = spec.question;
  if (!options.ablation.include_decomposition) return trace;
  require_valid(sample, spec);

  std::vector<std::string> sentences;
  const auto subquestions = subquestions_for(sample, spec, options, &sentences);
  const auto fields = fields_for(sample, spec, options, subquestions);

  std::vector<QaPair> history;
  for (std::size_t t = 0; t < subquestions.size(); ++t) {
    const auto prompt = assemble(step_assembly(spec, fields, history, subquestions[t]), options.ablation);
    CandidateProbabilities probs;
    try {
      probs = backend.score(request_for(prompt, spec));
    } catch (const std::exception& e) {
      throw BackendError("sample '" + sample.id + "' step " + std::to_string(t + 1) + ": " + e.what());
    }
    EvidenceStep step;
    step.index = static_cast<int>(t + 1);
    step.sentence = sentences[t];
    step.subquestion = subquestions[t];
    step.p_yes = probs.at(spec.answer_words.yes);
    step.p_no = probs.at(spec.answer_words.no);
    step.answer = decide_answer(spec.answer_words, step.p_yes, step.p_no);
    history.push_back({step.subquestion, step.answer});
    trace.steps.push_back(std::move(step));
  }
  return trace;
}

double final_score(const EvaluationSample& sample, const DimensionSpec& spec,
                   const EvalOptions& options, EvidenceTrace& trace, ScoreBackend& backend) {
  require_valid(sample, spec);
  const auto subquestions = subquestions_for(sample, spec, options);
  const auto fields = fields_for(sample, spec, options, subquestions);

  std::vector<QaPair> history;
  if (options.ablation.include_decomposition) {
    for (const auto& step : trace.steps) history.push_back({step.subquestion, step.answer});
  }
  const auto prompt = assemble(final_assembly(spec, fields, std::move(history)), options.ablation);
  CandidateProbabilities probs;
  try {
    probs = backend.score(request_for(prompt, spec));
  } catch (const std::exception& e) {
    throw BackendError("sample '" + sample.id + "' recomposition: " + e.what());
  }
  trace.final_question = spec.question;
  trace.final_p_yes = probs.at(spec.answer_words.yes);
  trace.final_p_no = probs.at(spec.answer_words.no);
  return normalized_yes(trace.final_p_yes, trace.final_p_no);
}

ScoreResult evaluate(const EvaluationSample& sample, const DimensionSpec& spec,
                     const EvalOptions& options, ScoreBackend& backend) {
  require_valid(sample, spec);
  ScoreResult result;
  result.sample_id = sample.id;
  result.dimension = spec.name;
  result.ablation = options.ablation;
  result.trace = answer_subquestions(sample, spec, options, backend);
  const double direct = final_score(sample, spec, options, result.trace, backend);

  // Without decomposition there are no per-sentence results to combine.
  const bool per_sentence = spec.aggregation != Aggregation::direct &&
                            options.ablation.include_decomposition && !result.trace.steps.empty();
  if (!per_sentence) {
    result.aggregation = Aggregation::direct;
    result.score = direct;
    return result;
  }

  std::vector<double> scores;
  scores.reserve(result.trace.steps.size());
  for (const auto& step : result.trace.steps) scores.push_back(normalized_yes(step.p_yes, step.p_no));
  const double sum = std::accumulate(scores.begin(), scores.end(), 0.0);
  result.aggregation = spec.aggregation;
  result.score = spec.aggregation == Aggregation::sentence_sum
                     ? sum
                     : sum / static_cast<double>(scores.size());
  result.per_sentence_scores = std::move(scores);
  return result;
}

std::vector<SampleOutcome> evaluate_batch(const std::vector<EvaluationSample>& samples,
                                          const DimensionSpec& spec, const EvalOptions& options,
                                          ScoreBackend& backend, std::size_t parallelism) {
  std::vector<SampleOutcome> outcomes(samples.size());
  auto run_one = [&](std::size_t i) {
    outcomes[i].sample_id = samples[i].id;
    try {
      outcomes[i].result = evaluate(samples[i], spec, options, backend);
    } catch (const std::exception& e) {
      outcomes[i].error = e.what();
      outcomes[i].error_kind = error_kind(e);
    }
  };

  const std::size_t workers = std::min(std::max<std::size_t>(parallelism, 1), samples.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < samples.size(); ++i) run_one(i);
    return outcomes;
  }
  std::atomic<std::size_t> next{0};
  {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (auto i = next.fetch_add(1); i < samples.size(); i = next.fetch_add(1)) run_one(i);
      });
    }
  }
  return outcomes;
}

ordered_json to_json(const ScoreResult& result) {
  ordered_json steps = ordered_json::array();
  for (const auto& step : result.trace.steps) {
    ordered_json s;
    s["index"] = step.index;
    s["sentence"] = step.sentence;
    s["subquestion"] = step.subquestion;
    s["answer"] = step.answer;
    s["p_yes"] = step.p_yes;
    s["p_no"] = step.p_no;
    steps.push_back(std::move(s));
  }
  ordered_json out;
  out["sample_id"] = result.sample_id;
  out["dimension"] = result.dimension;
  out["score"] = result.score;
  out["aggregation"] = to_string(result.aggregation);
  if (result.per_sentence_scores) out["per_sentence_scores"] = *result.per_sentence_scores;
  out["ablation"] = {{"include_instruction", result.ablation.include_instruction},
                     {"include_decomposition", result.ablation.include_decomposition},
                     {"question_position", to_string(result.ablation.question_position)}};
  out["trace"] = {{"steps", std::move(steps)},
                  {"final_question", result.trace.final_question},
                  {"final_p_yes", result.trace.final_p_yes},
                  {"final_p_no", result.trace.final_p_no}};
  return out;
}

ScoreResult score_result_from_json(const json& in) {
  try {
    ScoreResult result;
    result.sample_id = in.at("sample_id").get<std::string>();
    result.dimension = in.at("dimension").get<std::string>();
    result.score = in.at("score").get<double>();
    result.aggregation = parse_aggregation(in.at("aggregation").get<std::string>());
    if (in.contains("per_sentence_scores")) {
      result.per_sentence_scores = in["per_sentence_scores"].get<std::vector<double>>();
    }
    const auto& ablation = in.at("ablation");
    result.ablation.include_instruction = ablation.at("include_instruction").get<bool>();
    result.ablation.include_decomposition = ablation.at("include_decomposition").get<bool>();
    result.ablation.question_position =
        parse_question_position(ablation.at("question_position").get<std::string>());
    const auto& trace = in.at("trace");
    for (const auto& s : trace.at("steps")) {
      result.trace.steps.push_back({s.at("index").get<int>(), s.at("sentence").get<std::string>(),
                                    s.at("subquestion").get<std::string>(),
                                    s.at("answer").get<std::string>(), s.at("p_yes").get<double>(),
                                    s.at("p_no").get<double>()});
    }
    result.trace.final_question = trace.at("final_question").get<std::string>();
    result.trace.final_p_yes = trace.at("final_p_yes").get<double>();
    result.trace.final_p_no = trace.at("final_p_no").get<double>();
    return result;
  } catch (const json::exception& e) {
    throw DataError(std::string("bad score record: ") + e.what());
  }
}

namespace {

std::string fixed(double value, int digits) {
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.*f", digits, value);
  return buffer;
}

}  // namespace

std::string render_evidence(const ScoreResult& result) {
  std::string out;
  out += "sample: " + result.sample_id + "\n";
  out += "dimension: " + result.dimension + "\n";
  out += "aggregation: " + std::string(to_string(result.aggregation)) + "\n";
  out += "score: " + fixed(result.score, 3) + "\n";
  out += "evidence:\n";
  if (result.trace.steps.empty()) out += "  (no subquestions)\n";
  for (const auto& step : result.trace.steps) {
    out += "  " + step.subquestion + " " + step.answer + "  [p_yes=" + fixed(step.p_yes, 4) +
           " p_no=" + fixed(step.p_no, 4) + "]\n";
  }
  out += "final: " + result.trace.final_question + "  [p_yes=" + fixed(result.trace.final_p_yes, 4) +
         " p_no=" + fixed(result.trace.final_p_no, 4) + "]\n";
  if (result.per_sentence_scores) {
    out += "per-sentence:";
    for (double s : *result.per_sentence_scores) out += " " + fixed(s, 3);
    out += "\n";
  }
  return out;
}

}  // namespace decompeval
