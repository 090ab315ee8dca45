#include "decompeval/datasets.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "decompeval/errors.hpp"

namespace decompeval {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(DatasetFormat format) {
  switch (format) {
    case DatasetFormat::canonical_jsonl: return "canonical_jsonl";
    case DatasetFormat::summeval_native: return "summeval_native";
    case DatasetFormat::topicalchat_native: return "topicalchat_native";
    case DatasetFormat::sf_native: return "sf_native";
  }
  return "canonical_jsonl";
}

DatasetFormat parse_dataset_format(std::string_view name) {
  if (name == "canonical_jsonl" || name == "canonical") return DatasetFormat::canonical_jsonl;
  if (name == "summeval_native" || name == "summeval") return DatasetFormat::summeval_native;
  if (name == "topicalchat_native" || name == "topicalchat") return DatasetFormat::topicalchat_native;
  if (name == "sf_native" || name == "sf") return DatasetFormat::sf_native;
  throw ConfigError("unknown dataset format '" + std::string(name) + "'");
}

DatasetManifest DatasetManifest::from_file(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw DataError("cannot read manifest " + manifest_path.string());
  try {
    const auto doc = json::parse(in);
    DatasetManifest manifest;
    manifest.name = doc.at("name").get<std::string>();
    manifest.task = parse_task(doc.value("task", std::string("custom")));
    manifest.path = doc.at("path").get<std::string>();
    if (manifest.path.is_relative()) manifest.path = manifest_path.parent_path() / manifest.path;
    manifest.format = parse_dataset_format(doc.value("format", std::string("canonical_jsonl")));
    manifest.dimensions = doc.value("dimensions", std::vector<std::string>{});
    return manifest;
  } catch (const json::exception& e) {
    throw DataError("bad manifest " + manifest_path.string() + ": " + e.what());
  }
}

ordered_json sample_to_json(const EvaluationSample& sample) {
  ordered_json out;
  out["id"] = sample.id;
  out["group_id"] = sample.group_id;
  out["system_id"] = sample.system_id;
  out["context"] = ordered_json::object();
  for (const auto& [key, text] : sample.context) out["context"][key] = text;
  out["generated"] = sample.generated;
  if (sample.reference) out["reference"] = *sample.reference;
  out["human_scores"] = ordered_json::object();
  for (const auto& [dimension, value] : sample.human_scores) out["human_scores"][dimension] = value;
  return out;
}

namespace {

const json& require(const json& node, const char* key, const std::string& path) {
  if (!node.contains(key)) throw DataError("missing field " + path + key);
  return node[key];
}

std::string require_string(const json& node, const char* key, const std::string& path) {
  const auto& value = require(node, key, path);
  if (!value.is_string()) throw DataError("field " + path + key + " must be a string");
  return value.get<std::string>();
}

std::string optional_string(const json& node, const char* key, const std::string& path) {
  if (!node.contains(key) || node[key].is_null()) return {};
  if (node[key].is_number()) return node[key].dump();
  if (!node[key].is_string()) throw DataError("field " + path + key + " must be a string");
  return node[key].get<std::string>();
}

// Mean of annotator ratings given either as a number or a list of numbers.
double mean_rating(const json& value, const std::string& path) {
  if (value.is_number()) return value.get<double>();
  if (value.is_array() && !value.empty()) {
    double sum = 0.0;
    for (const auto& item : value) {
      if (!item.is_number()) throw DataError("field " + path + " holds a non-numeric rating");
      sum += item.get<double>();
    }
    return sum / static_cast<double>(value.size());
  }
  throw DataError("field " + path + " must be a number or a non-empty list of numbers");
}

void require_valid_sample(const EvaluationSample& sample, const std::string& where) {
  const auto validation = validate_sample(sample);
  if (!validation.ok()) {
    throw DataError(where + ": sample '" + sample.id + "': " + validation.violations.front().message);
  }
}

json parse_document(std::istream& in, const std::string& source) {
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(source + ": " + e.what());
  }
}

}  // namespace

EvaluationSample sample_from_json(const json& in) {
  if (!in.is_object()) throw DataError("sample record must be an object");
  EvaluationSample sample;
  sample.id = require_string(in, "id", "");
  sample.group_id = optional_string(in, "group_id", "");
  sample.system_id = optional_string(in, "system_id", "");
  if (in.contains("context")) {
    const auto& context = in["context"];
    if (!context.is_object()) throw DataError("field context must be an object");
    for (const auto& [key, value] : context.items()) {
      if (!value.is_string()) throw DataError("field context." + key + " must be a string");
      sample.context[key] = value.get<std::string>();
    }
  }
  sample.generated = require_string(in, "generated", "");
  if (in.contains("reference") && !in["reference"].is_null()) {
    sample.reference = require_string(in, "reference", "");
  }
  if (in.contains("human_scores")) {
    const auto& scores = in["human_scores"];
    if (!scores.is_object()) throw DataError("field human_scores must be an object");
    for (const auto& [dimension, value] : scores.items()) {
      if (!value.is_number()) throw DataError("field human_scores." + dimension + " must be a number");
      sample.human_scores[dimension] = value.get<double>();
    }
  }
  if (sample.group_id.empty()) sample.group_id = sample.id;
  return sample;
}

std::vector<EvaluationSample> parse_canonical(std::istream& in, const std::string& source) {
  std::vector<EvaluationSample> samples;
  std::string line;
  std::size_t line_no = 0;
  bool first_record = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where + ": parse error: " + e.what());
    }
    if (first_record && record.is_object() && record.contains("format")) {
      first_record = false;
      if (record["format"] != kCanonicalFormatName) {
        throw DataError(where + ": not a " + std::string(kCanonicalFormatName) + " file");
      }
      if (record.value("version", 0) != kCanonicalVersion) {
        throw DataError(where + ": unsupported version " + record.value("version", json()).dump());
      }
      continue;
    }
    first_record = false;
    try {
      auto sample = sample_from_json(record);
      require_valid_sample(sample, where);
      samples.push_back(std::move(sample));
    } catch (const DataError& e) {
      if (std::string_view(e.what()).rfind(where, 0) == 0) throw;
      throw DataError(where + ": " + e.what());
    }
  }
  return samples;
}

void write_canonical(std::ostream& out, const std::vector<EvaluationSample>& samples) {
  ordered_json header;
  header["format"] = kCanonicalFormatName;
  header["version"] = kCanonicalVersion;
  out << header.dump() << "\n";
  for (const auto& sample : samples) out << sample_to_json(sample).dump() << "\n";
}

void save(const std::filesystem::path& path, const std::vector<EvaluationSample>& samples) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  write_canonical(out, samples);
}

std::vector<EvaluationSample> parse_summeval(std::istream& in, const std::string& source) {
  static const char* kDimensions[] = {"coherence", "consistency", "fluency", "relevance"};
  std::vector<EvaluationSample> samples;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    const std::string where = source + ":" + std::to_string(line_no);
    json record;
    try {
      record = json::parse(line);
    } catch (const json::parse_error& e) {
      throw DataError(where + ": parse error: " + e.what());
    }
    try {
      EvaluationSample sample;
      sample.group_id = require_string(record, "id", "");
      sample.system_id = require_string(record, "model_id", "");
      sample.id = sample.group_id + "/" + sample.system_id;
      sample.generated = require_string(record, "decoded", "");
      sample.context["document"] = require_string(record, "text", "");
      if (record.contains("references")) {
        const auto& refs = record["references"];
        if (!refs.is_array()) throw DataError("field references must be a list");
        if (!refs.empty()) sample.reference = refs.front().get<std::string>();
      }
      const auto& annotations = require(record, "expert_annotations", "");
      if (!annotations.is_array() || annotations.empty()) {
        throw DataError("field expert_annotations must be a non-empty list");
      }
      for (const char* dimension : kDimensions) {
        double sum = 0.0;
        for (std::size_t a = 0; a < annotations.size(); ++a) {
          const std::string path = "expert_annotations[" + std::to_string(a) + "].";
          const auto& value = require(annotations[a], dimension, path);
          sum += mean_rating(value, path + dimension);
        }
        sample.human_scores[dimension] = sum / static_cast<double>(annotations.size());
      }
      require_valid_sample(sample, where);
      samples.push_back(std::move(sample));
    } catch (const json::exception& e) {
      throw DataError(where + ": " + e.what());
    } catch (const DataError& e) {
      if (std::string_view(e.what()).rfind(where, 0) == 0) throw;
      throw DataError(where + ": " + e.what());
    }
  }
  return samples;
}

std::vector<EvaluationSample> parse_topicalchat(std::istream& in, const std::string& source) {
  static const std::pair<const char*, const char*> kDimensions[] = {
      {"Natural", "naturalness"},
      {"Maintains Context", "coherence"},
      {"Engaging", "engagingness"},
      {"Uses Knowledge", "groundedness"},
      {"Understandable", "understandability"},
  };
  const auto doc = parse_document(in, source);
  if (!doc.is_array()) throw DataError(source + ": expected a JSON array of dialogue contexts");
  std::vector<EvaluationSample> samples;
  for (std::size_t c = 0; c < doc.size(); ++c) {
    const std::string path = "[" + std::to_string(c) + "].";
    const auto& entry = doc[c];
    try {
      const std::string history = require_string(entry, "context", path);
      const std::string fact = optional_string(entry, "fact", path);
      const auto& responses = require(entry, "responses", path);
      if (!responses.is_array()) throw DataError("field " + path + "responses must be a list");
      const std::string group = "tc-" + std::to_string(c);
      for (std::size_t r = 0; r < responses.size(); ++r) {
        const std::string rpath = path + "responses[" + std::to_string(r) + "].";
        const auto& response = responses[r];
        EvaluationSample sample;
        sample.group_id = group;
        sample.system_id = optional_string(response, "model", rpath);
        if (sample.system_id.empty()) sample.system_id = "system-" + std::to_string(r);
        sample.id = group + "/" + sample.system_id;
        sample.context["dialogue_history"] = history;
        sample.context["fact"] = fact;
        sample.generated = trim(require_string(response, "response", rpath));
        for (const auto& [native, dimension] : kDimensions) {
          if (response.contains(native)) {
            sample.human_scores[dimension] = mean_rating(response[native], rpath + native);
          }
        }
        require_valid_sample(sample, source + " " + rpath);
        samples.push_back(std::move(sample));
      }
    } catch (const json::exception& e) {
      throw DataError(source + " " + path + ": " + e.what());
    } catch (const DataError& e) {
      if (std::string_view(e.what()).rfind(source, 0) == 0) throw;
      throw DataError(source + ": " + e.what());
    }
  }
  return samples;
}

std::vector<EvaluationSample> parse_sf(std::istream& in, const std::string& source) {
  const auto doc = parse_document(in, source);
  if (!doc.is_array()) throw DataError(source + ": expected a JSON array of records");
  std::map<std::string, std::size_t> systems_per_group;
  std::vector<EvaluationSample> samples;
  for (std::size_t i = 0; i < doc.size(); ++i) {
    const std::string path = "[" + std::to_string(i) + "].";
    const auto& entry = doc[i];
    try {
      EvaluationSample sample;
      const std::string src = require_string(entry, "src", path);
      sample.group_id = src;
      sample.context["reference_data"] = src;
      if (entry.contains("ref_output")) {
        sample.reference = require_string(entry, "ref_output", path);
      } else if (entry.contains("reference")) {
        sample.reference = require_string(entry, "reference", path);
      } else {
        throw DataError("missing field " + path + "ref_output");
      }
      sample.generated = require_string(entry, "system_output", path);
      const std::size_t ordinal = systems_per_group[src]++;
      sample.system_id = optional_string(entry, "system_id", path);
      if (sample.system_id.empty()) sample.system_id = "system-" + std::to_string(ordinal);
      sample.id = "sf-" + std::to_string(i);
      const auto& scores = require(entry, "scores", path);
      if (!scores.is_object()) throw DataError("field " + path + "scores must be an object");
      for (const char* dimension : {"naturalness", "informativeness"}) {
        if (scores.contains(dimension)) {
          sample.human_scores[dimension] = mean_rating(scores[dimension], path + "scores." + dimension);
        }
      }
      require_valid_sample(sample, source + " " + path);
      samples.push_back(std::move(sample));
    } catch (const json::exception& e) {
      throw DataError(source + " " + path + ": " + e.what());
    } catch (const DataError& e) {
      if (std::string_view(e.what()).rfind(source, 0) == 0) throw;
      throw DataError(source + ": " + e.what());
    }
  }
  return samples;
}

std::vector<EvaluationSample> load(const std::filesystem::path& path, DatasetFormat format) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read dataset " + path.string());
  const std::string source = path.string();
  switch (format) {
    case DatasetFormat::canonical_jsonl: return parse_canonical(in, source);
    case DatasetFormat::summeval_native: return parse_summeval(in, source);
    case DatasetFormat::topicalchat_native: return parse_topicalchat(in, source);
    case DatasetFormat::sf_native: return parse_sf(in, source);
  }
  throw ConfigError("unsupported dataset format");
}

std::vector<EvaluationSample> load(const DatasetManifest& manifest) {
  auto samples = load(manifest.path, manifest.format);
  for (const auto& dimension : manifest.dimensions) {
    const bool present = std::any_of(samples.begin(), samples.end(), [&](const EvaluationSample& s) {
      return s.human_scores.count(dimension) > 0;
    });
    if (!present && !samples.empty()) {
      throw DataError("manifest " + manifest.name + " declares dimension '" + dimension +
                      "' but no sample is scored on it");
    }
  }
  return samples;
}

namespace {

std::size_t word_count(std::string_view text) {
  std::size_t words = 0;
  bool in_word = false;
  for (unsigned char c : text) {
    const bool space = std::isspace(c) != 0;
    if (!space && !in_word) ++words;
    in_word = !space;
  }
  return words;
}

}  // namespace

DatasetStats stats(const std::vector<EvaluationSample>& samples) {
  DatasetStats out;
  out.count = samples.size();
  double words = 0.0;
  for (const auto& sample : samples) {
    words += static_cast<double>(word_count(sample.generated));
    for (const auto& [dimension, value] : sample.human_scores) out.dimensions.insert(dimension);
  }
  if (!samples.empty()) out.mean_generated_words = words / static_cast<double>(samples.size());
  return out;
}

}  // namespace decompeval
