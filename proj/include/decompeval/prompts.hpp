#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "decompeval/core.hpp"

namespace decompeval {

// One labeled line of the evaluation input. Context fields may be
// left-trimmed to fit the prompt budget; generated text and reference never
// are.
struct EvaluationField {
  std::string label;
  std::string text;
  bool truncatable = false;

  bool operator==(const EvaluationField&) const = default;
};

struct QaPair {
  std::string subquestion;
  std::string answer;

  bool operator==(const QaPair&) const = default;
};

// The parts of a step prompt I_t or of the final recomposition prompt.
//
// Rendered order: instruction, question (prefix position only), evaluation
// input, Q&A history, then the pending subquestion if set, otherwise the
// question (suffix position only). Parts are joined by single newlines.
struct PromptAssembly {
  std::optional<std::string> instruction;
  std::vector<EvaluationField> evaluation_input;
  std::vector<QaPair> qa_history;
  std::optional<std::string> question;     // the dimension-level yes/no question
  std::optional<std::string> subquestion;  // sq_t while answering step t

  bool operator==(const PromptAssembly&) const = default;
};

std::vector<EvaluationField> evaluation_fields(const EvaluationSample& sample,
                                               const DimensionSpec& spec);

// "label text" per input field in spec order, joined by newlines.
std::string render_evaluation_input(const EvaluationSample& sample,
                                    const DimensionSpec& spec);
std::string render_evaluation_input(const std::vector<EvaluationField>& fields);

// Fills {t} with the index and {sentence} with the quoted sentence.
std::string render_subquestion(const DimensionSpec& spec, int index,
                               std::string_view sentence);

std::string render_qa_line(const QaPair& pair);

std::string assemble(const PromptAssembly& assembly, const AblationConfig& ablation);

// Prompt for answering subquestion `step` (0-based) given earlier answers.
PromptAssembly step_assembly(const DimensionSpec& spec,
                             std::vector<EvaluationField> fields,
                             std::vector<QaPair> history,
                             std::string subquestion);

// Prompt that recomposes the full history with the original question.
PromptAssembly final_assembly(const DimensionSpec& spec,
                              std::vector<EvaluationField> fields,
                              std::vector<QaPair> history);

using PresetKey = std::pair<Task, std::string>;

// Built-in specs for the SummEval, Topical-Chat and SFRES/SFHOT dimensions.
const std::map<PresetKey, DimensionSpec>& preset_specs();

std::vector<DimensionSpec> preset_specs_for(std::optional<Task> task);

// Dimension spec files: {"version": 1, "dimensions": [ {...}, ... ]}.
nlohmann::ordered_json spec_to_json(const DimensionSpec& spec);
DimensionSpec spec_from_json(const nlohmann::json& json);
std::string dump_specs(const std::vector<DimensionSpec>& specs);
std::vector<DimensionSpec> parse_specs(const std::string& text);
void save_specs(const std::filesystem::path& path, const std::vector<DimensionSpec>& specs);
std::vector<DimensionSpec> load_specs(const std::filesystem::path& path);

}  // namespace decompeval
