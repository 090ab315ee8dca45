#include <cmath>
#include <limits>

#include <gtest/gtest.h>

#include "decompeval/core.hpp"
#include "decompeval/errors.hpp"
#include "fixtures.hpp"

namespace decompeval {
namespace {

TEST(ValidateSample, EmptyGeneratedText) {
  EvaluationSample sample;
  sample.id = "s";
  sample.generated = "   \n";
  const auto result = validate_sample(sample, fixtures::preset(Task::summarization, "fluency"));
  ASSERT_FALSE(result.ok());
  EXPECT_EQ(result.violations.front().message, "empty generated");
}

TEST(ValidateSample, MissingFactForEngagingness) {
  auto sample = fixtures::soup_sample();
  sample.context.erase("fact");
  const auto result = validate_sample(sample, fixtures::preset(Task::dialogue, "engagingness"));
  ASSERT_EQ(result.violations.size(), 1u);
  EXPECT_EQ(result.violations.front().message, "missing field fact");
}

TEST(ValidateSample, SoupCaseIsValidForCoherence) {
  const auto sample = fixtures::soup_sample();
  EXPECT_TRUE(validate_sample(sample, fixtures::preset(Task::dialogue, "coherence")).ok());
}

TEST(ValidateSample, NonFiniteHumanScore) {
  auto sample = fixtures::soup_sample();
  sample.human_scores["coherence"] = std::numeric_limits<double>::quiet_NaN();
  const auto result = validate_sample(sample);
  ASSERT_FALSE(result.ok());
  EXPECT_EQ(result.violations.front().message, "non-finite human score coherence");
}

TEST(ValidateSample, ReferenceFieldResolvesOnlyWhenPresent) {
  auto sample = fixtures::soup_sample();
  const auto& relevance = fixtures::preset(Task::summarization, "relevance");
  sample.context["document"] = "doc";
  EXPECT_FALSE(validate_sample(sample, relevance).ok());
  sample.reference = "ref";
  EXPECT_TRUE(validate_sample(sample, relevance).ok());
}

TEST(ValidateSample, IsDeterministic) {
  auto sample = fixtures::soup_sample();
  sample.context.clear();
  const auto& spec = fixtures::preset(Task::dialogue, "engagingness");
  const auto a = validate_sample(sample, spec);
  const auto b = validate_sample(sample, spec);
  EXPECT_EQ(a.violations, b.violations);
  EXPECT_EQ(a.violations.size(), 2u);
}

TEST(ValidateSpec, RejectsBrokenTemplates) {
  DimensionSpec spec = fixtures::preset(Task::dialogue, "coherence");
  EXPECT_NO_THROW(validate_spec(spec));

  auto missing = spec;
  missing.subquestion_template = "Is sentence {t} coherent?";
  EXPECT_THROW(validate_spec(missing), ConfigError);

  auto doubled = spec;
  doubled.subquestion_template = "Is {t} {sentence} {t} ok?";
  EXPECT_THROW(validate_spec(doubled), ConfigError);

  auto label = spec;
  label.input_fields[0].label = "dialogue history";
  EXPECT_THROW(validate_spec(label), ConfigError);

  auto no_fields = spec;
  no_fields.input_fields.clear();
  EXPECT_THROW(validate_spec(no_fields), ConfigError);

  auto words = spec;
  words.answer_words = {"yes", "yes"};
  EXPECT_THROW(validate_spec(words), ConfigError);
}

TEST(EnumNames, RoundTrip) {
  for (auto task : {Task::summarization, Task::dialogue, Task::data2text, Task::custom}) {
    EXPECT_EQ(parse_task(to_string(task)), task);
  }
  for (auto agg : {Aggregation::direct, Aggregation::sentence_mean, Aggregation::sentence_sum}) {
    EXPECT_EQ(parse_aggregation(to_string(agg)), agg);
  }
  EXPECT_THROW(parse_aggregation("median"), ConfigError);
  EXPECT_THROW(parse_question_position("middle"), ConfigError);
}

}  // namespace
}  // namespace decompeval
