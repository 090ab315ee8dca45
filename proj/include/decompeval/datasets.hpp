#pragma once

#include <filesystem>
#include <iosfwd>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "decompeval/core.hpp"

namespace decompeval {

enum class DatasetFormat { canonical_jsonl, summeval_native, topicalchat_native, sf_native };

std::string_view to_string(DatasetFormat format);
DatasetFormat parse_dataset_format(std::string_view name);

struct DatasetManifest {
  std::string name;
  Task task = Task::custom;
  std::filesystem::path path;
  DatasetFormat format = DatasetFormat::canonical_jsonl;
  std::vector<std::string> dimensions;

  // Relative `path` entries resolve against the manifest's directory.
  static DatasetManifest from_file(const std::filesystem::path& manifest_path);
};

// Header line written first in canonical files.
inline constexpr std::string_view kCanonicalFormatName = "decompeval-samples";
inline constexpr int kCanonicalVersion = 1;

nlohmann::ordered_json sample_to_json(const EvaluationSample& sample);
// Throws DataError naming the offending field path.
EvaluationSample sample_from_json(const nlohmann::json& json);

// Canonical line-delimited format: optional header line
// {"format": "decompeval-samples", "version": 1}, then one sample per line.
std::vector<EvaluationSample> parse_canonical(std::istream& in, const std::string& source = "<input>");
void write_canonical(std::ostream& out, const std::vector<EvaluationSample>& samples);
void save(const std::filesystem::path& path, const std::vector<EvaluationSample>& samples);

// SummEval "model_annotations.aligned.paired.jsonl" layout: one line per
// (document, system) with "id", "model_id", "decoded", "text", "references"
// and "expert_annotations" (list of per-annotator dimension scores).
std::vector<EvaluationSample> parse_summeval(std::istream& in, const std::string& source = "<input>");

// Topical-Chat USR layout: a JSON array of {"context", "fact", "responses":
// [{"model", "response", "Natural", "Maintains Context", "Engaging",
// "Uses Knowledge", "Understandable"}]}; score entries are lists of
// annotator ratings or a single number.
std::vector<EvaluationSample> parse_topicalchat(std::istream& in, const std::string& source = "<input>");

// SFRES/SFHOT layout: a JSON array of {"src", "ref_output" | "reference",
// "system_output", optional "system_id", "scores": {"naturalness",
// "informativeness"}}. Scores may be lists of annotator ratings.
std::vector<EvaluationSample> parse_sf(std::istream& in, const std::string& source = "<input>");

std::vector<EvaluationSample> load(const std::filesystem::path& path, DatasetFormat format);

// Loads and checks that each declared dimension is scored in at least one
// sample.
std::vector<EvaluationSample> load(const DatasetManifest& manifest);

struct DatasetStats {
  std::size_t count = 0;
  std::set<std::string> dimensions;
  double mean_generated_words = 0.0;
};

DatasetStats stats(const std::vector<EvaluationSample>& samples);

}  // namespace decompeval
