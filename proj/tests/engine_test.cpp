#include <atomic>
#include <mutex>

#include <gtest/gtest.h>

#include "decompeval/engine.hpp"
#include "decompeval/errors.hpp"
#include "fixtures.hpp"

namespace decompeval {
namespace {

// Replies with a fixed (p_yes, p_no) sequence in call order and records every
// prompt it sees.
class SequenceBackend final : public ScoreBackend {
 public:
  explicit SequenceBackend(std::vector<std::pair<double, double>> replies)
      : replies_(std::move(replies)) {}

  CandidateProbabilities score(const ScoreRequest& request) override {
    std::lock_guard lock(mutex_);
    prompts.push_back(request.prompt);
    const auto [yes, no] = replies_.at(next_++ % replies_.size());
    CandidateProbabilities p;
    p.values = {{"yes", yes}, {"no", no}};
    return p;
  }
  std::string identity() const override { return "sequence"; }

  std::vector<std::string> prompts;

 private:
  std::vector<std::pair<double, double>> replies_;
  std::size_t next_ = 0;
  std::mutex mutex_;
};

EvaluationSample sample_with_response(std::string response) {
  auto sample = fixtures::soup_sample();
  sample.generated = std::move(response);
  return sample;
}

TEST(NormalizedYes, Basics) {
  EXPECT_DOUBLE_EQ(normalized_yes(0.6, 0.2), 0.75);
  EXPECT_DOUBLE_EQ(normalized_yes(0.3, 0.3), 0.5);
  EXPECT_DOUBLE_EQ(normalized_yes(0.0, 0.4), 0.0);
  EXPECT_THROW(normalized_yes(0.0, 0.0), DegenerateProbabilityError);
}

TEST(NormalizedYes, MonotoneInYesProbability) {
  double previous = -1.0;
  for (int i = 0; i <= 20; ++i) {
    const double score = normalized_yes(i / 20.0, 0.3);
    EXPECT_GT(score, previous);
    previous = score;
  }
}

TEST(DecideAnswer, TiesAnswerNo) {
  const AnswerWords words;
  EXPECT_EQ(decide_answer(words, 0.5, 0.5), "no");
  EXPECT_EQ(decide_answer(words, 0.51, 0.5), "yes");
  EXPECT_EQ(decide_answer(words, 0.2, 0.3), "no");
}

TEST(Evaluate, ScriptedThreeSentenceResponse) {
  SequenceBackend backend({{0.8, 0.1}, {0.3, 0.4}, {0.5, 0.2}, {0.6, 0.2}});
  const auto result = evaluate(fixtures::soup_sample(), fixtures::preset(Task::dialogue, "coherence"),
                               {}, backend);
  ASSERT_EQ(result.trace.steps.size(), 3u);
  EXPECT_EQ(result.trace.steps[0].answer, "yes");
  EXPECT_EQ(result.trace.steps[1].answer, "no");
  EXPECT_EQ(result.trace.steps[2].answer, "yes");
  EXPECT_EQ(result.trace.steps[1].sentence, "Are you talking about the Fort-Reno Concert?");
  EXPECT_DOUBLE_EQ(result.score, 0.75);
  EXPECT_EQ(result.aggregation, Aggregation::direct);
  EXPECT_FALSE(result.per_sentence_scores.has_value());
  EXPECT_EQ(backend.prompts.size(), 4u);
}

TEST(Evaluate, EachStepPromptCarriesPreviousAnswers) {
  SequenceBackend backend({{0.8, 0.1}, {0.3, 0.4}, {0.5, 0.2}, {0.6, 0.2}});
  const auto result = evaluate(fixtures::soup_sample(), fixtures::preset(Task::dialogue, "coherence"),
                               {}, backend);
  const auto& steps = result.trace.steps;
  for (std::size_t t = 0; t < steps.size(); ++t) {
    const auto& prompt = backend.prompts[t];
    EXPECT_EQ(prompt.substr(prompt.size() - steps[t].subquestion.size()), steps[t].subquestion);
    for (std::size_t k = 0; k < t; ++k) {
      EXPECT_NE(prompt.find("\n" + steps[k].subquestion + " " + steps[k].answer + "\n"), std::string::npos)
          << "step " << t + 1 << " lacks pair " << k + 1;
    }
    for (std::size_t k = t + 1; k < steps.size(); ++k) {
      EXPECT_EQ(prompt.find(steps[k].subquestion), std::string::npos);
    }
  }
  const auto& final_prompt = backend.prompts.back();
  EXPECT_EQ(final_prompt.substr(final_prompt.size() - result.trace.final_question.size()),
            result.trace.final_question);
}

TEST(Evaluate, WithoutDecompositionMakesOneCall) {
  SequenceBackend backend({{0.2, 0.6}});
  EvalOptions options;
  options.ablation.include_decomposition = false;
  const auto result = evaluate(fixtures::soup_sample(), fixtures::preset(Task::dialogue, "engagingness"),
                               options, backend);
  EXPECT_EQ(backend.prompts.size(), 1u);
  EXPECT_TRUE(result.trace.steps.empty());
  EXPECT_DOUBLE_EQ(result.score, 0.25);
  EXPECT_EQ(result.aggregation, Aggregation::direct);
}

TEST(Evaluate, SentenceMean) {
  // Normalized step scores 1.0 and 0.5.
  SequenceBackend backend({{0.4, 0.0}, {0.3, 0.3}, {0.1, 0.9}});
  auto sample = fixtures::soup_sample();
  sample.generated = "The summary is short. It has two sentences.";
  const auto result = evaluate(sample, fixtures::preset(Task::summarization, "fluency"), {}, backend);
  EXPECT_EQ(result.aggregation, Aggregation::sentence_mean);
  ASSERT_TRUE(result.per_sentence_scores.has_value());
  EXPECT_EQ(*result.per_sentence_scores, (std::vector<double>{1.0, 0.5}));
  EXPECT_DOUBLE_EQ(result.score, 0.75);
  EXPECT_EQ(backend.prompts.size(), 3u);
}

TEST(Evaluate, SentenceSum) {
  SequenceBackend backend({{0.9, 0.1}});
  const auto result = evaluate(fixtures::soup_sample(), fixtures::preset(Task::dialogue, "engagingness"),
                               {}, backend);
  EXPECT_EQ(result.aggregation, Aggregation::sentence_sum);
  EXPECT_NEAR(result.score, 2.7, 1e-12);
  EXPECT_EQ(backend.prompts.size(), 4u);
}

TEST(Evaluate, SingleSentence) {
  SequenceBackend backend({{0.7, 0.3}, {0.2, 0.2}});
  const auto result = evaluate(sample_with_response("Hello"),
                               fixtures::preset(Task::dialogue, "coherence"), {}, backend);
  ASSERT_EQ(result.trace.steps.size(), 1u);
  EXPECT_EQ(result.trace.steps[0].sentence, "Hello");
  EXPECT_DOUBLE_EQ(result.score, 0.5);
}

TEST(Evaluate, DegenerateFinalProbabilities) {
  SequenceBackend backend({{0.7, 0.3}, {0.7, 0.3}, {0.7, 0.3}, {0.0, 0.0}});
  EXPECT_THROW(evaluate(fixtures::soup_sample(), fixtures::preset(Task::dialogue, "coherence"), {}, backend),
               DegenerateProbabilityError);
}

TEST(Evaluate, InvalidSampleIsDataError) {
  SequenceBackend backend({{0.7, 0.3}});
  auto sample = fixtures::soup_sample();
  sample.context.erase("fact");
  EXPECT_THROW(evaluate(sample, fixtures::preset(Task::dialogue, "engagingness"), {}, backend),
               MissingFieldError);
  EXPECT_TRUE(backend.prompts.empty());
}

TEST(Evaluate, BackendFailureNamesTheStep) {
  std::atomic<int> calls = 0;
  FunctionBackend backend(
      [&calls](const ScoreRequest&) -> CandidateProbabilities {
        if (++calls == 2) throw BackendError("boom");
        CandidateProbabilities p;
        p.values = {{"yes", 0.5}, {"no", 0.1}};
        return p;
      },
      "flaky");
  try {
    evaluate(fixtures::soup_sample(), fixtures::preset(Task::dialogue, "coherence"), {}, backend);
    FAIL();
  } catch (const BackendError& e) {
    EXPECT_NE(std::string(e.what()).find("step 2"), std::string::npos) << e.what();
  }
}

TEST(Evaluate, PromptsFitBudget) {
  auto sample = fixtures::soup_sample();
  std::string history;
  while (history.size() < 12000) history += "Speaker A: more talk about soup and concerts.\n";
  sample.context["dialogue_history"] = history;
  MockBackend inner(1);
  std::vector<std::string> prompts;
  std::mutex mutex;
  FunctionBackend backend(
      [&](const ScoreRequest& request) {
        std::lock_guard lock(mutex);
        prompts.push_back(request.prompt);
        return inner.score(request);
      },
      "recording");
  EvalOptions options;
  options.max_prompt_chars = 3000;
  evaluate(sample, fixtures::preset(Task::dialogue, "coherence"), options, backend);
  ASSERT_EQ(prompts.size(), 4u);
  for (const auto& prompt : prompts) EXPECT_LE(prompt.size(), 3000u);
  // All prompts share one evaluation input, so each step extends the previous.
  const auto input_end = prompts[0].find("\nresponse: ");
  for (const auto& prompt : prompts) EXPECT_EQ(prompt.substr(0, input_end), prompts[0].substr(0, input_end));
}

std::vector<EvaluationSample> varied_samples(int n) {
  std::vector<EvaluationSample> samples;
  for (int i = 0; i < n; ++i) {
    auto sample = fixtures::soup_sample();
    sample.id = "s" + std::to_string(i);
    sample.generated = "Sentence one for " + std::to_string(i) + ". And two" +
                       std::string(static_cast<std::size_t>(i % 3), '!') + " Third one?";
    samples.push_back(sample);
  }
  return samples;
}

TEST(EvaluateBatch, MatchesLoopAndParallelism) {
  const auto samples = varied_samples(30);
  const auto& spec = fixtures::preset(Task::dialogue, "engagingness");
  MockBackend backend(11);
  std::vector<ScoreResult> loop;
  for (const auto& s : samples) loop.push_back(evaluate(s, spec, {}, backend));

  for (std::size_t parallelism : {1u, 8u}) {
    const auto batch = evaluate_batch(samples, spec, {}, backend, parallelism);
    ASSERT_EQ(batch.size(), samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) {
      ASSERT_TRUE(batch[i].ok()) << batch[i].error;
      EXPECT_EQ(batch[i].sample_id, samples[i].id);
      EXPECT_EQ(*batch[i].result, loop[i]);
    }
  }
}

TEST(EvaluateBatch, FailuresAreIsolated) {
  auto samples = varied_samples(5);
  samples[2].generated = "";
  samples[3].context.erase("fact");
  MockBackend backend(2);
  const auto outcomes = evaluate_batch(samples, fixtures::preset(Task::dialogue, "engagingness"), {},
                                       backend, 4);
  EXPECT_TRUE(outcomes[0].ok());
  EXPECT_FALSE(outcomes[2].ok());
  EXPECT_EQ(outcomes[2].error_kind, ErrorKind::data);
  EXPECT_FALSE(outcomes[3].ok());
  EXPECT_EQ(outcomes[3].error_kind, ErrorKind::data);
  EXPECT_TRUE(outcomes[4].ok());
}

TEST(ScoreResultJson, RoundTrip) {
  MockBackend backend(5);
  for (const char* dim : {"coherence", "engagingness"}) {
    const auto result = evaluate(fixtures::soup_sample(), fixtures::preset(Task::dialogue, dim), {}, backend);
    const auto json = to_json(result);
    EXPECT_EQ(score_result_from_json(nlohmann::json::parse(json.dump())), result);
  }
  EXPECT_THROW(score_result_from_json(nlohmann::json::parse(R"({"score": 1})")), DataError);
}

TEST(RenderEvidence, OneLinePerSubquestion) {
  SequenceBackend backend({{0.8, 0.1}, {0.3, 0.4}, {0.5, 0.2}, {0.6, 0.2}});
  const auto result = evaluate(fixtures::soup_sample(), fixtures::preset(Task::dialogue, "coherence"),
                               {}, backend);
  const auto text = render_evidence(result);
  for (const auto& step : result.trace.steps) {
    EXPECT_NE(text.find("  " + step.subquestion + " " + step.answer + "  [p_yes="), std::string::npos);
  }
  EXPECT_NE(text.find("score: 0.750"), std::string::npos);
}

}  // namespace
}  // namespace decompeval
