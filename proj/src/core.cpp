#include "decompeval/core.hpp"

#include <cctype>
#include <cmath>

#include "decompeval/errors.hpp"

namespace decompeval {

std::string_view to_string(Task task) {
  switch (task) {
    case Task::summarization: return "summarization";
    case Task::dialogue: return "dialogue";
    case Task::data2text: return "data2text";
    case Task::custom: return "custom";
  }
  return "custom";
}

std::string_view to_string(Aggregation aggregation) {
  switch (aggregation) {
    case Aggregation::direct: return "direct";
    case Aggregation::sentence_mean: return "sentence_mean";
    case Aggregation::sentence_sum: return "sentence_sum";
  }
  return "direct";
}

std::string_view to_string(QuestionPosition position) {
  return position == QuestionPosition::prefix ? "prefix" : "suffix";
}

Task parse_task(std::string_view name) {
  if (name == "summarization") return Task::summarization;
  if (name == "dialogue") return Task::dialogue;
  if (name == "data2text") return Task::data2text;
  if (name == "custom") return Task::custom;
  throw ConfigError("unknown task '" + std::string(name) + "'");
}

Aggregation parse_aggregation(std::string_view name) {
  if (name == "direct") return Aggregation::direct;
  if (name == "sentence_mean") return Aggregation::sentence_mean;
  if (name == "sentence_sum") return Aggregation::sentence_sum;
  throw ConfigError("unknown aggregation '" + std::string(name) + "'");
}

QuestionPosition parse_question_position(std::string_view name) {
  if (name == "suffix") return QuestionPosition::suffix;
  if (name == "prefix") return QuestionPosition::prefix;
  throw ConfigError("unknown question position '" + std::string(name) + "'");
}

std::optional<std::string_view> EvaluationSample::field(std::string_view key) const {
  if (key == kGeneratedKey) return std::string_view(generated);
  if (key == kReferenceKey) {
    if (!reference) return std::nullopt;
    return std::string_view(*reference);
  }
  auto it = context.find(std::string(key));
  if (it == context.end()) return std::nullopt;
  return std::string_view(it->second);
}

double CandidateProbabilities::at(const std::string& candidate) const {
  auto it = values.find(candidate);
  if (it == values.end()) throw BackendError("no probability for candidate '" + candidate + "'");
  return it->second;
}

std::string trim(std::string_view text) {
  std::size_t begin = 0;
  std::size_t end = text.size();
  while (begin < end && std::isspace(static_cast<unsigned char>(text[begin]))) ++begin;
  while (end > begin && std::isspace(static_cast<unsigned char>(text[end - 1]))) --end;
  return std::string(text.substr(begin, end - begin));
}

ValidationResult validate_sample(const EvaluationSample& sample) {
  ValidationResult result;
  if (trim(sample.generated).empty()) result.violations.push_back({"empty generated"});
  for (const auto& [dimension, value] : sample.human_scores) {
    if (!std::isfinite(value)) {
      result.violations.push_back({"non-finite human score " + dimension});
    }
  }
  return result;
}

ValidationResult validate_sample(const EvaluationSample& sample, const DimensionSpec& spec) {
  ValidationResult result = validate_sample(sample);
  for (const auto& input : spec.input_fields) {
    if (!sample.field(input.source)) {
      result.violations.push_back({"missing field " + input.source});
    }
  }
  return result;
}

namespace {

std::size_t count_occurrences(std::string_view haystack, std::string_view needle) {
  std::size_t count = 0;
  for (auto pos = haystack.find(needle); pos != std::string_view::npos;
       pos = haystack.find(needle, pos + needle.size())) {
    ++count;
  }
  return count;
}

}  // namespace

void validate_spec(const DimensionSpec& spec) {
  const std::string where = "dimension '" + spec.name + "': ";
  if (spec.name.empty()) throw ConfigError("dimension spec without a name");
  if (trim(spec.question).empty()) throw ConfigError(where + "empty question");
  if (count_occurrences(spec.subquestion_template, "{t}") != 1) {
    throw ConfigError(where + "subquestion template must contain {t} exactly once");
  }
  if (count_occurrences(spec.subquestion_template, "{sentence}") != 1) {
    throw ConfigError(where + "subquestion template must contain {sentence} exactly once");
  }
  if (spec.input_fields.empty()) throw ConfigError(where + "no input fields");
  for (const auto& input : spec.input_fields) {
    if (input.source.empty()) throw ConfigError(where + "input field without a source key");
    if (input.label.empty() || input.label.back() != ':') {
      throw ConfigError(where + "label '" + input.label + "' must end with a colon");
    }
  }
  const auto& words = spec.answer_words;
  if (words.yes.empty() || words.no.empty() || words.yes == words.no) {
    throw ConfigError(where + "answer words must be two distinct non-empty strings");
  }
}

}  // namespace decompeval
