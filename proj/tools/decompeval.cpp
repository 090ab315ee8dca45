// decompeval: score generated text with sentence-decomposed yes/no questions
// and correlate the scores with human judgments.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "decompeval/core.hpp"
#include "decompeval/datasets.hpp"
#include "decompeval/engine.hpp"
#include "decompeval/errors.hpp"
#include "decompeval/metaeval.hpp"
#include "decompeval/perturb.hpp"
#include "decompeval/prompts.hpp"
#include "decompeval/scorer.hpp"
#include "decompeval/segmentation.hpp"

namespace fs = std::filesystem;
using namespace decompeval;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitBackend = 3;
constexpr int kExitData = 4;

struct RunConfig {
  std::string dataset;
  std::string format;
  std::string task;
  std::string specs_path;
  std::string dimensions;
  std::string backend = "remote";
  std::string endpoint = "http://127.0.0.1:8000";
  double timeout_seconds = 30.0;
  std::size_t max_prompt_chars = 4000;
  std::string cache;
  std::string granularity = "pooled";
  bool no_instruction = false;
  bool no_decomposition = false;
  std::string question_position = "suffix";
  std::size_t parallelism = 1;
  std::optional<std::uint64_t> seed;
  std::string out = ".";
  std::string abbreviations;
  // perturb
  std::string variants;
  std::string coefficient = "pearson";
};

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::config: return kExitConfig;
    case ErrorKind::backend: return kExitBackend;
    case ErrorKind::data: return kExitData;
    case ErrorKind::other: return 1;
  }
  return 1;
}

void add_common_options(CLI::App& app, RunConfig& config) {
  app.add_option("--dataset", config.dataset, "Dataset file or manifest")->required();
  app.add_option("--format", config.format,
                 "canonical_jsonl | summeval_native | topicalchat_native | sf_native");
  app.add_option("--task", config.task, "summarization | dialogue | data2text | custom");
  app.add_option("--specs", config.specs_path, "Dimension spec file (defaults to the built-in presets)");
  app.add_option("--dimensions", config.dimensions, "Comma-separated dimension filter");
  app.add_option("--backend", config.backend, "remote | mock | planted | scripted:<path>");
  app.add_option("--endpoint", config.endpoint, "Scoring sidecar base URL");
  app.add_option("--timeout", config.timeout_seconds, "Request timeout in seconds");
  app.add_option("--max-prompt-chars", config.max_prompt_chars, "Prompt character budget")
      ->check(CLI::Range(std::size_t{256}, std::size_t{1} << 30));
  app.add_option("--cache", config.cache, "Append-only probability cache file");
  app.add_flag("--no-instruction", config.no_instruction, "Drop the instruction line");
  app.add_flag("--no-decomposition", config.no_decomposition, "Ask only the original question");
  app.add_option("--question-position", config.question_position, "suffix | prefix");
  app.add_option("--parallelism", config.parallelism, "Samples scored concurrently")
      ->check(CLI::Range(std::size_t{1}, std::size_t{256}));
  app.add_option("--seed", config.seed, "Seed for the mock backend");
  app.add_option("--out", config.out, "Output directory");
  app.add_option("--abbreviations", config.abbreviations, "Abbreviation list for the sentence splitter");
}

void apply_environment(RunConfig& config) {
  if (const char* endpoint = std::getenv("DECOMPEVAL_ENDPOINT"); endpoint && *endpoint) {
    config.endpoint = endpoint;
  }
  if (const char* timeout = std::getenv("DECOMPEVAL_TIMEOUT"); timeout && *timeout) {
    try {
      config.timeout_seconds = std::stod(timeout);
    } catch (const std::exception&) {
      throw ConfigError(std::string("DECOMPEVAL_TIMEOUT is not a number: ") + timeout);
    }
  }
}

struct LoadedDataset {
  std::string name;
  std::optional<Task> task;
  std::vector<EvaluationSample> samples;
};

LoadedDataset load_dataset(const RunConfig& config) {
  const fs::path path = config.dataset;
  if (!fs::exists(path)) throw DataError("dataset not found: " + path.string());
  LoadedDataset out;
  out.name = path.stem().string();
  if (!config.format.empty()) {
    out.samples = load(path, parse_dataset_format(config.format));
  } else {
    // A JSON object with a "path" key is a manifest.
    std::ifstream in(path);
    nlohmann::json doc = nlohmann::json::parse(in, nullptr, false);
    if (!doc.is_discarded() && doc.is_object() && doc.contains("path")) {
      const auto manifest = DatasetManifest::from_file(path);
      out.name = manifest.name;
      out.task = manifest.task;
      out.samples = load(manifest);
    } else {
      out.samples = load(path, DatasetFormat::canonical_jsonl);
    }
  }
  if (!config.task.empty()) out.task = parse_task(config.task);
  return out;
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> items;
  std::stringstream stream(text);
  std::string item;
  while (std::getline(stream, item, ',')) {
    item = trim(item);
    if (!item.empty()) items.push_back(item);
  }
  return items;
}

std::vector<DimensionSpec> select_specs(const RunConfig& config, const std::optional<Task>& task) {
  std::vector<DimensionSpec> specs;
  if (!config.specs_path.empty()) {
    specs = load_specs(config.specs_path);
  } else {
    if (!task) throw ConfigError("no task known for this dataset; pass --task or --specs");
    specs = preset_specs_for(*task);
  }
  if (config.dimensions.empty()) return specs;
  std::vector<DimensionSpec> selected;
  for (const auto& name : split_list(config.dimensions)) {
    auto it = std::find_if(specs.begin(), specs.end(), [&](const DimensionSpec& s) { return s.name == name; });
    if (it == specs.end()) throw ConfigError("unknown dimension '" + name + "'");
    selected.push_back(*it);
  }
  return selected;
}

// Drops dimensions that no sample has a human score for.
std::vector<DimensionSpec> rated_specs(std::vector<DimensionSpec> specs,
                                       const std::vector<EvaluationSample>& samples) {
  const auto rated = stats(samples).dimensions;
  std::vector<DimensionSpec> kept;
  for (auto& spec : specs) {
    if (rated.count(spec.name)) {
      kept.push_back(std::move(spec));
    } else {
      std::cerr << "note: skipping " << spec.name << " (no human scores in dataset)\n";
    }
  }
  if (kept.empty()) throw DataError("no selected dimension has human scores in this dataset");
  return kept;
}

EvalOptions make_options(const RunConfig& config, const SentenceSplitter* splitter) {
  EvalOptions options;
  options.ablation.include_instruction = !config.no_instruction;
  options.ablation.include_decomposition = !config.no_decomposition;
  options.ablation.question_position = parse_question_position(config.question_position);
  options.max_prompt_chars = config.max_prompt_chars;
  options.splitter = splitter;
  return options;
}

std::shared_ptr<ScoreBackend> make_backend(const RunConfig& config,
                                           const std::vector<EvaluationSample>& samples,
                                           const std::vector<DimensionSpec>& specs,
                                           const EvalOptions& options) {
  std::shared_ptr<ScoreBackend> backend;
  if (config.backend == "remote") {
    ScorerBackendConfig remote;
    remote.endpoint = config.endpoint;
    remote.timeout = std::chrono::milliseconds(static_cast<long long>(config.timeout_seconds * 1000.0));
    remote.max_prompt_chars = config.max_prompt_chars;
    backend = std::make_shared<RemoteBackend>(remote);
  } else if (config.backend == "mock") {
    if (!config.seed) throw ConfigError("--backend mock requires --seed");
    backend = std::make_shared<MockBackend>(*config.seed);
  } else if (config.backend == "planted") {
    backend = planted_backend(samples, specs, options);
  } else if (config.backend.rfind("scripted:", 0) == 0) {
    backend = std::make_shared<ScriptedBackend>(ScriptedBackend::from_file(config.backend.substr(9)));
  } else {
    throw ConfigError("unknown backend '" + config.backend + "'");
  }
  if (!config.cache.empty()) backend = cached(backend, config.cache);
  return backend;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out << content;
  if (!out) throw DataError("failed writing " + path.string());
}

fs::path prepare_out_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec || !fs::is_directory(out)) throw DataError("cannot create output directory " + out);
  return out;
}

std::unique_ptr<SentenceSplitter> make_splitter(const RunConfig& config) {
  if (config.abbreviations.empty()) return std::make_unique<SentenceSplitter>();
  return std::make_unique<SentenceSplitter>(SentenceSplitter::from_file(config.abbreviations));
}

int cmd_evaluate(RunConfig config) {
  apply_environment(config);
  const auto splitter = make_splitter(config);
  const auto options = make_options(config, splitter.get());
  const auto dataset = load_dataset(config);
  const auto specs = select_specs(config, dataset.task);
  auto backend = make_backend(config, dataset.samples, specs, options);
  const auto out_dir = prepare_out_dir(config.out);

  std::string scores, evidence, errors;
  int worst = 0;
  for (const auto& spec : specs) {
    const auto outcomes = evaluate_batch(dataset.samples, spec, options, *backend, config.parallelism);
    for (const auto& outcome : outcomes) {
      if (outcome.ok()) {
        scores += to_json(*outcome.result).dump() + "\n";
        evidence += render_evidence(*outcome.result) + "\n";
      } else {
        nlohmann::ordered_json record;
        record["sample_id"] = outcome.sample_id;
        record["dimension"] = spec.name;
        record["error"] = outcome.error;
        errors += record.dump() + "\n";
        std::cerr << "error: " << spec.name << " " << outcome.sample_id << ": " << outcome.error << "\n";
        worst = std::max(worst, exit_code_for(outcome.error_kind));
      }
    }
  }
  write_file(out_dir / "scores.jsonl", scores);
  write_file(out_dir / "evidence.txt", evidence);
  if (!errors.empty()) write_file(out_dir / "errors.jsonl", errors);
  return worst;
}

int cmd_benchmark(RunConfig config) {
  apply_environment(config);
  const auto splitter = make_splitter(config);
  const auto options = make_options(config, splitter.get());
  const auto granularity = parse_granularity(config.granularity);
  const auto dataset = load_dataset(config);
  const auto specs = rated_specs(select_specs(config, dataset.task), dataset.samples);
  auto backend = make_backend(config, dataset.samples, specs, options);
  const auto out_dir = prepare_out_dir(config.out);

  const auto report = benchmark(dataset.samples, specs, options, *backend, granularity,
                                config.parallelism, dataset.name);
  const auto table = render_table(report);
  write_file(out_dir / "report.json", to_json(report).dump(2) + "\n");
  write_file(out_dir / "report.txt", table);
  std::cout << table;

  int worst = 0;
  for (const auto& row : report.dimensions) {
    for (const auto& warning : row.warnings) std::cerr << "warning: " << row.dimension << ": " << warning << "\n";
    if (row.samples_failed > 0) worst = std::max(worst, kExitBackend);
  }
  return worst;
}

int cmd_perturb(RunConfig config) {
  apply_environment(config);
  if (config.variants.empty()) throw ConfigError("perturb requires --variants");
  const auto splitter = make_splitter(config);
  const auto options = make_options(config, splitter.get());
  const auto granularity = parse_granularity(config.granularity);
  const auto coefficient = parse_coefficient(config.coefficient);
  const auto dataset = load_dataset(config);
  auto families = load_variants(config.variants);
  if (!config.dimensions.empty()) {
    const auto wanted = split_list(config.dimensions);
    std::map<std::string, VariantFamily> selected;
    for (const auto& name : wanted) {
      auto it = families.find(name);
      if (it == families.end()) throw ConfigError("no variant family for '" + name + "'");
      selected.insert(*it);
    }
    families = std::move(selected);
  }
  std::vector<DimensionSpec> all_variants;
  for (const auto& [name, family] : families) {
    all_variants.insert(all_variants.end(), family.variants.begin(), family.variants.end());
  }
  auto backend = make_backend(config, dataset.samples, all_variants, options);
  const auto out_dir = prepare_out_dir(config.out);

  const auto report = sensitivity_report(dataset.samples, families, options, *backend, coefficient,
                                         granularity, config.parallelism);
  const auto table = render_table(report);
  write_file(out_dir / "sensitivity.json", to_json(report).dump(2) + "\n");
  write_file(out_dir / "sensitivity.txt", table);
  std::cout << table;
  return 0;
}

int cmd_export_presets(const std::string& task, const std::string& out) {
  std::optional<Task> filter;
  if (!task.empty()) filter = parse_task(task);
  const auto specs = preset_specs_for(filter);
  if (out.empty() || out == "-") {
    std::cout << dump_specs(specs);
    return 0;
  }
  fs::path target = out;
  if (fs::is_directory(target)) target /= "presets.json";
  write_file(target, dump_specs(specs));
  std::cerr << "wrote " << specs.size() << " dimension specs to " << target.string() << "\n";
  return 0;
}

int cmd_stats(RunConfig config) {
  const auto dataset = load_dataset(config);
  const auto summary = stats(dataset.samples);
  std::cout << "samples: " << summary.count << "\n";
  std::cout << "dimensions:";
  for (const auto& dimension : summary.dimensions) std::cout << " " << dimension;
  std::cout << "\n";
  char buffer[64];
  std::snprintf(buffer, sizeof buffer, "%.1f", summary.mean_generated_words);
  std::cout << "mean generated length (words): " << buffer << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Decomposed yes/no question evaluation of generated text"};
  app.require_subcommand(1);

  RunConfig evaluate_config, benchmark_config, perturb_config, stats_config;
  auto* evaluate = app.add_subcommand("evaluate", "Score samples and write evidence");
  add_common_options(*evaluate, evaluate_config);

  auto* bench = app.add_subcommand("benchmark", "Correlate metric scores with human scores");
  add_common_options(*bench, benchmark_config);
  bench->add_option("--granularity", benchmark_config.granularity, "pooled | grouped");

  auto* perturb = app.add_subcommand("perturb", "Prompt sensitivity over question variants");
  add_common_options(*perturb, perturb_config);
  perturb->add_option("--granularity", perturb_config.granularity, "pooled | grouped");
  perturb->add_option("--variants", perturb_config.variants, "Variant family file")->required();
  perturb->add_option("--coefficient", perturb_config.coefficient, "pearson | spearman | kendall");

  std::string export_task, export_out;
  auto* export_presets = app.add_subcommand("export-presets", "Write the built-in dimension specs");
  export_presets->add_option("--task", export_task, "Only specs for this task");
  export_presets->add_option("--out", export_out, "Output file or directory (default stdout)");

  auto* stats_cmd = app.add_subcommand("stats", "Summarize a dataset");
  stats_cmd->add_option("--dataset", stats_config.dataset, "Dataset file or manifest")->required();
  stats_cmd->add_option("--format", stats_config.format, "Dataset format");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (*evaluate) return cmd_evaluate(evaluate_config);
    if (*bench) return cmd_benchmark(benchmark_config);
    if (*perturb) return cmd_perturb(perturb_config);
    if (*export_presets) return cmd_export_presets(export_task, export_out);
    if (*stats_cmd) return cmd_stats(stats_config);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(error_kind(e));
  }
  return 0;
}
