#include "decompeval/prompts.hpp"

#include <fstream>
#include <sstream>

#include "decompeval/errors.hpp"

namespace decompeval {

using nlohmann::json;
using nlohmann::ordered_json;

std::vector<EvaluationField> evaluation_fields(const EvaluationSample& sample,
                                               const DimensionSpec& spec) {
  std::vector<EvaluationField> fields;
  fields.reserve(spec.input_fields.size());
  for (const auto& input : spec.input_fields) {
    auto text = sample.field(input.source);
    if (!text) throw MissingFieldError(input.source);
    const bool is_context = input.source != kGeneratedKey && input.source != kReferenceKey;
    fields.push_back({input.label, std::string(*text), is_context});
  }
  return fields;
}

std::string render_evaluation_input(const std::vector<EvaluationField>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i > 0) out += '\n';
    out += fields[i].label;
    out += ' ';
    out += fields[i].text;
  }
  return out;
}

std::string render_evaluation_input(const EvaluationSample& sample, const DimensionSpec& spec) {
  return render_evaluation_input(evaluation_fields(sample, spec));
}

std::string render_subquestion(const DimensionSpec& spec, int index, std::string_view sentence) {
  const std::string& tmpl = spec.subquestion_template;
  const auto index_pos = tmpl.find("{t}");
  const auto sentence_pos = tmpl.find("{sentence}");
  if (index_pos == std::string::npos || sentence_pos == std::string::npos) {
    throw ConfigError("dimension '" + spec.name +
                      "': subquestion template needs both {t} and {sentence}");
  }
  if (index < 1) throw DataError("sentence index must be positive");
  if (sentence.empty()) throw DataError("cannot ask about an empty sentence");

  // Single left-to-right pass so placeholder-like text inside the sentence
  // is never substituted.
  std::string out;
  out.reserve(tmpl.size() + sentence.size() + 8);
  std::size_t cursor = 0;
  while (cursor < tmpl.size()) {
    if (cursor == index_pos) {
      out += std::to_string(index);
      cursor += 3;
    } else if (cursor == sentence_pos) {
      out += '"';
      out += sentence;
      out += '"';
      cursor += 10;
    } else {
      out += tmpl[cursor++];
    }
  }
  return out;
}

std::string render_qa_line(const QaPair& pair) { return pair.subquestion + " " + pair.answer; }

std::string assemble(const PromptAssembly& assembly, const AblationConfig& ablation) {
  std::vector<std::string> lines;
  if (ablation.include_instruction && assembly.instruction) lines.push_back(*assembly.instruction);
  const bool prefix = ablation.question_position == QuestionPosition::prefix;
  if (prefix && assembly.question) lines.push_back(*assembly.question);
  if (!assembly.evaluation_input.empty()) {
    lines.push_back(render_evaluation_input(assembly.evaluation_input));
  }
  if (ablation.include_decomposition) {
    for (const auto& pair : assembly.qa_history) lines.push_back(render_qa_line(pair));
  }
  if (assembly.subquestion) {
    lines.push_back(*assembly.subquestion);
  } else if (!prefix && assembly.question) {
    lines.push_back(*assembly.question);
  }

  std::string out;
  for (std::size_t i = 0; i < lines.size(); ++i) {
    if (i > 0) out += '\n';
    out += lines[i];
  }
  return out;
}

PromptAssembly step_assembly(const DimensionSpec& spec, std::vector<EvaluationField> fields,
                             std::vector<QaPair> history, std::string subquestion) {
  PromptAssembly assembly;
  assembly.instruction = spec.instruction;
  assembly.evaluation_input = std::move(fields);
  assembly.qa_history = std::move(history);
  assembly.subquestion = std::move(subquestion);
  return assembly;
}

PromptAssembly final_assembly(const DimensionSpec& spec, std::vector<EvaluationField> fields,
                              std::vector<QaPair> history) {
  PromptAssembly assembly;
  assembly.instruction = spec.instruction;
  assembly.evaluation_input = std::move(fields);
  assembly.qa_history = std::move(history);
  assembly.question = spec.question;
  return assembly;
}

namespace {

DimensionSpec make_spec(Task task, std::string name, std::vector<InputField> fields,
                        std::string question, std::string subquestion,
                        Aggregation aggregation = Aggregation::direct) {
  DimensionSpec spec;
  spec.name = std::move(name);
  spec.task = task;
  spec.input_fields = std::move(fields);
  spec.question = std::move(question);
  spec.subquestion_template = std::move(subquestion);
  spec.aggregation = aggregation;
  return spec;
}

std::map<PresetKey, DimensionSpec> build_presets() {
  const InputField history{"dialogue_history", "dialogue history:"};
  const InputField response{"generated", "response:"};
  const InputField fact{"fact", "fact:"};
  const InputField document{"document", "document:"};
  const InputField reference{"reference", "reference:"};

  std::vector<DimensionSpec> specs = {
      // SummEval
      make_spec(Task::summarization, "coherence", {document, {"generated", "summary:"}},
                "Is this a coherent summary to the document?",
                "Is this summary sentence {t} {sentence} a coherent summary to the document?"),
      make_spec(Task::summarization, "consistency", {{"generated", "claim:"}, document},
                "Is this claim consistent with the document?",
                "Is this claim sentence {t} {sentence} consistent with the document?",
                Aggregation::sentence_mean),
      make_spec(Task::summarization, "fluency", {{"generated", "paragraph:"}},
                "Is this a fluent paragraph?",
                "Is this paragraph sentence {t} {sentence} a fluent paragraph?",
                Aggregation::sentence_mean),
      make_spec(Task::summarization, "relevance", {{"generated", "summary:"}, reference},
                "Is this summary relevant to the reference?",
                "Is this summary sentence {t} {sentence} relevant to the reference?"),
      // Topical-Chat
      make_spec(Task::dialogue, "naturalness", {history, response},
                "Is this response natural to the dialogue history?",
                "Is this response sentence {t} {sentence} natural to the dialogue history?"),
      make_spec(Task::dialogue, "coherence", {history, response},
                "Is this a coherent response given the dialogue history?",
                "Is this response sentence {t} {sentence} a coherent response given the "
                "dialogue history?"),
      make_spec(Task::dialogue, "engagingness", {history, fact, response},
                "Is this an engaging response according to the dialogue history and fact?",
                "Is this response sentence {t} {sentence} an engaging response according to "
                "the dialogue history and fact?",
                Aggregation::sentence_sum),
      make_spec(Task::dialogue, "groundedness", {response, fact},
                "Is this response consistent with knowledge in the fact?",
                "Is this response sentence {t} {sentence} consistent with knowledge in the "
                "fact?"),
      make_spec(Task::dialogue, "understandability", {history, response},
                "Is this an understandable response given the dialogue history?",
                "Is this response sentence {t} {sentence} an understandable response given "
                "the dialogue history?"),
      // SFRES / SFHOT
      make_spec(Task::data2text, "naturalness", {{"generated", "utterance:"}},
                "Is this a fluent utterance?",
                "Is this utterance sentence {t} {sentence} a fluent utterance?"),
      make_spec(Task::data2text, "informativeness", {{"generated", "sentence:"}, reference},
                "Is this sentence informative according to the reference?",
                "Is this sentence {t} {sentence} informative according to the reference?"),
  };

  std::map<PresetKey, DimensionSpec> presets;
  for (auto& spec : specs) {
    validate_spec(spec);
    PresetKey key{spec.task, spec.name};
    presets.emplace(std::move(key), std::move(spec));
  }
  return presets;
}

}  // namespace

const std::map<PresetKey, DimensionSpec>& preset_specs() {
  static const std::map<PresetKey, DimensionSpec> presets = build_presets();
  return presets;
}

std::vector<DimensionSpec> preset_specs_for(std::optional<Task> task) {
  std::vector<DimensionSpec> out;
  for (const auto& [key, spec] : preset_specs()) {
    if (!task || key.first == *task) out.push_back(spec);
  }
  return out;
}

ordered_json spec_to_json(const DimensionSpec& spec) {
  ordered_json fields = ordered_json::array();
  for (const auto& input : spec.input_fields) {
    fields.push_back({{"source", input.source}, {"label", input.label}});
  }
  ordered_json out;
  out["name"] = spec.name;
  out["task"] = to_string(spec.task);
  out["instruction"] = spec.instruction;
  out["input_fields"] = std::move(fields);
  out["question"] = spec.question;
  out["subquestion_template"] = spec.subquestion_template;
  out["aggregation"] = to_string(spec.aggregation);
  out["answer_words"] = {spec.answer_words.yes, spec.answer_words.no};
  return out;
}

DimensionSpec spec_from_json(const json& in) {
  try {
    DimensionSpec spec;
    spec.name = in.at("name").get<std::string>();
    spec.task = parse_task(in.value("task", std::string("custom")));
    spec.instruction = in.value("instruction", std::string(kDefaultInstruction));
    for (const auto& field : in.at("input_fields")) {
      spec.input_fields.push_back(
          {field.at("source").get<std::string>(), field.at("label").get<std::string>()});
    }
    spec.question = in.at("question").get<std::string>();
    spec.subquestion_template = in.at("subquestion_template").get<std::string>();
    spec.aggregation = parse_aggregation(in.value("aggregation", std::string("direct")));
    if (in.contains("answer_words")) {
      const auto& words = in.at("answer_words");
      if (!words.is_array() || words.size() != 2) {
        throw ConfigError("answer_words must be a pair of strings");
      }
      spec.answer_words = {words[0].get<std::string>(), words[1].get<std::string>()};
    }
    validate_spec(spec);
    return spec;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad dimension spec: ") + e.what());
  }
}

std::string dump_specs(const std::vector<DimensionSpec>& specs) {
  ordered_json doc;
  doc["version"] = 1;
  doc["dimensions"] = ordered_json::array();
  for (const auto& spec : specs) doc["dimensions"].push_back(spec_to_json(spec));
  return doc.dump(2) + "\n";
}

std::vector<DimensionSpec> parse_specs(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("cannot parse dimension specs: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("dimensions") || !doc["dimensions"].is_array()) {
    throw ConfigError("dimension spec file needs a \"dimensions\" array");
  }
  if (doc.value("version", 1) != 1) throw ConfigError("unsupported dimension spec version");
  std::vector<DimensionSpec> specs;
  for (const auto& item : doc["dimensions"]) specs.push_back(spec_from_json(item));
  return specs;
}

void save_specs(const std::filesystem::path& path, const std::vector<DimensionSpec>& specs) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << dump_specs(specs);
  if (!out) throw DataError("failed writing " + path.string());
}

std::vector<DimensionSpec> load_specs(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read dimension specs from " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_specs(buffer.str());
}

}  // namespace decompeval
