#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace decompeval {

enum class Task { summarization, dialogue, data2text, custom };

// How per-sentence results combine into a dimension score.
enum class Aggregation { direct, sentence_mean, sentence_sum };

enum class QuestionPosition { suffix, prefix };

std::string_view to_string(Task task);
std::string_view to_string(Aggregation aggregation);
std::string_view to_string(QuestionPosition position);

// Throw ConfigError on unknown names.
Task parse_task(std::string_view name);
Aggregation parse_aggregation(std::string_view name);
QuestionPosition parse_question_position(std::string_view name);

inline constexpr std::string_view kDefaultInstruction =
    "Answer the following yes/no question.";

// Source keys that do not live in the context map.
inline constexpr std::string_view kGeneratedKey = "generated";
inline constexpr std::string_view kReferenceKey = "reference";

// One (context, generated text, reference, human scores) record.
struct EvaluationSample {
  std::string id;
  std::string group_id;   // source document / dialogue context
  std::string system_id;  // generating system
  std::map<std::string, std::string> context;
  std::string generated;
  std::optional<std::string> reference;
  std::map<std::string, double> human_scores;

  // Resolves "generated", "reference" or a context key.
  std::optional<std::string_view> field(std::string_view key) const;

  bool operator==(const EvaluationSample&) const = default;
};

struct InputField {
  std::string source;  // "generated", "reference" or a context key
  std::string label;   // e.g. "dialogue history:"

  bool operator==(const InputField&) const = default;
};

struct AnswerWords {
  std::string yes = "yes";
  std::string no = "no";

  bool operator==(const AnswerWords&) const = default;
};

// Everything needed to ask about one quality dimension.
struct DimensionSpec {
  std::string name;
  Task task = Task::custom;
  std::string instruction{kDefaultInstruction};
  std::vector<InputField> input_fields;
  std::string question;
  // Must contain "{t}" (1-based sentence index) and "{sentence}" exactly once.
  std::string subquestion_template;
  Aggregation aggregation = Aggregation::direct;
  AnswerWords answer_words;

  bool operator==(const DimensionSpec&) const = default;
};

struct AblationConfig {
  bool include_instruction = true;
  bool include_decomposition = true;
  QuestionPosition question_position = QuestionPosition::suffix;

  bool operator==(const AblationConfig&) const = default;
};

// Raw model probability of each requested answer word. Values need not sum
// to one.
struct CandidateProbabilities {
  std::map<std::string, double> values;

  double at(const std::string& candidate) const;
  bool operator==(const CandidateProbabilities&) const = default;
};

struct Violation {
  std::string message;
  bool operator==(const Violation&) const = default;
};

struct ValidationResult {
  std::vector<Violation> violations;

  bool ok() const noexcept { return violations.empty(); }
  explicit operator bool() const noexcept { return ok(); }
};

// Structural checks on a sample alone: non-empty generated text and finite
// human scores.
ValidationResult validate_sample(const EvaluationSample& sample);

// Structural checks plus every field the spec references must resolve.
ValidationResult validate_sample(const EvaluationSample& sample,
                                 const DimensionSpec& spec);

// Throws ConfigError describing the first broken invariant.
void validate_spec(const DimensionSpec& spec);

std::string trim(std::string_view text);

}  // namespace decompeval
