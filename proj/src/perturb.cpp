#include "decompeval/perturb.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "decompeval/errors.hpp"
#include "decompeval/prompts.hpp"

namespace decompeval {

using nlohmann::json;
using nlohmann::ordered_json;

std::string_view to_string(VariantKind kind) {
  switch (kind) {
    case VariantKind::original: return "original";
    case VariantKind::auxiliary_verb: return "auxiliary_verb";
    case VariantKind::synonym: return "synonym";
    case VariantKind::word_reorder: return "word_reorder";
  }
  return "original";
}

VariantKind parse_variant_kind(std::string_view name) {
  if (name == "original") return VariantKind::original;
  if (name == "auxiliary_verb") return VariantKind::auxiliary_verb;
  if (name == "synonym") return VariantKind::synonym;
  if (name == "word_reorder") return VariantKind::word_reorder;
  throw ConfigError("unknown variant kind '" + std::string(name) + "'");
}

void validate_family(const VariantFamily& family) {
  const std::string where = "variant family '" + family.dimension + "': ";
  if (family.variants.empty()) throw ConfigError(where + "no variants");
  if (family.variants.size() != family.kinds.size()) {
    throw ConfigError(where + "variant and kind lists differ in length");
  }
  if (family.kinds.front() != VariantKind::original) {
    throw ConfigError(where + "the first variant must be the original");
  }
  if (std::count(family.kinds.begin(), family.kinds.end(), VariantKind::original) != 1) {
    throw ConfigError(where + "exactly one original variant expected");
  }
  const auto& original = family.variants.front();
  for (std::size_t i = 0; i < family.variants.size(); ++i) {
    const auto& variant = family.variants[i];
    validate_spec(variant);
    const std::string which = where + "variant " + std::to_string(i + 1) + " ";
    if (variant.aggregation != original.aggregation) {
      throw ConfigError(which + "changes the aggregation");
    }
    if (variant.input_fields != original.input_fields) {
      throw ConfigError(which + "changes the input fields");
    }
    if (variant.name != family.dimension) throw ConfigError(which + "names another dimension");
  }
}

std::map<std::string, VariantFamily> parse_variants(const json& doc) {
  if (!doc.is_object() || !doc.contains("families") || !doc["families"].is_array()) {
    throw ConfigError("variant file needs a \"families\" array");
  }
  if (doc.value("version", 1) != 1) throw ConfigError("unsupported variant file version");
  std::map<std::string, VariantFamily> families;
  try {
    for (const auto& node : doc["families"]) {
      VariantFamily family;
      family.dimension = node.at("dimension").get<std::string>();
      const Task task = parse_task(node.value("task", std::string("custom")));

      DimensionSpec base;
      const auto& presets = preset_specs();
      if (auto it = presets.find({task, family.dimension}); it != presets.end()) {
        base = it->second;
      } else {
        base.name = family.dimension;
        base.task = task;
      }

      for (const auto& variant : node.at("variants")) {
        const auto kind = parse_variant_kind(variant.value("kind", std::string("original")));
        const DimensionSpec& defaults = family.variants.empty() ? base : family.variants.front();
        json merged = spec_to_json(defaults);
        for (const auto& [key, value] : variant.items()) {
          if (key != "kind") merged[key] = value;
        }
        merged["name"] = family.dimension;
        if (!family.variants.empty() && variant.contains("question") &&
            variant["question"].get<std::string>() != defaults.question &&
            !variant.contains("subquestion_template")) {
          throw ConfigError("variant family '" + family.dimension +
                            "': a reworded question needs a matching subquestion_template");
        }
        family.variants.push_back(spec_from_json(merged));
        family.kinds.push_back(kind);
      }
      validate_family(family);
      const std::string key = family.dimension;
      if (!families.emplace(key, std::move(family)).second) {
        throw ConfigError("duplicate variant family for dimension '" + key + "'");
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad variant file: ") + e.what());
  }
  return families;
}

std::map<std::string, VariantFamily> load_variants(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read variant file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse variant file " + path.string() + ": " + e.what());
  }
  return parse_variants(doc);
}

std::pair<double, double> mean_stddev(std::vector<double> values) {
  if (values.empty()) throw DegenerateInputError("no values to summarize");
  std::sort(values.begin(), values.end());
  // Offsetting by the smallest value makes k identical inputs return that
  // value exactly with zero spread.
  const double anchor = values.front();
  double offset_sum = 0.0;
  for (double v : values) offset_sum += v - anchor;
  const auto n = static_cast<double>(values.size());
  const double mean = anchor + offset_sum / n;
  double squares = 0.0;
  for (double v : values) squares += (v - mean) * (v - mean);
  return {mean, std::sqrt(squares / n)};
}

SensitivityReport sensitivity_report(const std::vector<EvaluationSample>& samples,
                                     const std::map<std::string, VariantFamily>& families,
                                     const EvalOptions& options, ScoreBackend& backend,
                                     Coefficient coefficient, Granularity granularity,
                                     std::size_t parallelism) {
  if (families.empty()) throw ConfigError("no variant families given");
  SensitivityReport report;
  report.coefficient = coefficient;
  report.granularity = granularity;
  const std::string name(to_string(coefficient));
  for (const auto& [dimension, family] : families) {
    SensitivityRow row;
    row.dimension = dimension;
    std::vector<double> values;
    for (std::size_t i = 0; i < family.variants.size(); ++i) {
      VariantValue entry;
      entry.kind = family.kinds[i];
      entry.question = family.variants[i].question;
      try {
        const auto result =
            benchmark(samples, {family.variants[i]}, options, backend, granularity, parallelism);
        const auto& dim = result.dimensions.front();
        auto it = dim.coefficients.find(name);
        if (it == dim.coefficients.end()) {
          entry.error = dim.warnings.empty() ? name + " unavailable" : dim.warnings.back();
        } else {
          entry.value = it->second;
          values.push_back(it->second);
        }
      } catch (const std::exception& e) {
        entry.error = e.what();
      }
      row.variants.push_back(std::move(entry));
    }
    if (!values.empty()) {
      const auto [mean, stddev] = mean_stddev(values);
      row.mean = mean;
      row.stddev = stddev;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

ordered_json to_json(const SensitivityReport& report) {
  ordered_json out;
  out["coefficient"] = to_string(report.coefficient);
  out["granularity"] = to_string(report.granularity);
  out["dimensions"] = ordered_json::array();
  for (const auto& row : report.rows) {
    ordered_json entry;
    entry["dimension"] = row.dimension;
    entry["mean"] = row.mean ? ordered_json(*row.mean) : ordered_json();
    entry["stddev"] = row.stddev ? ordered_json(*row.stddev) : ordered_json();
    entry["variants"] = ordered_json::array();
    for (const auto& variant : row.variants) {
      ordered_json v;
      v["kind"] = to_string(variant.kind);
      v["question"] = variant.question;
      v["value"] = variant.value ? ordered_json(*variant.value) : ordered_json();
      if (!variant.error.empty()) v["error"] = variant.error;
      entry["variants"].push_back(std::move(v));
    }
    out["dimensions"].push_back(std::move(entry));
  }
  return out;
}

std::string render_table(const SensitivityReport& report) {
  std::size_t width = 9;
  for (const auto& row : report.rows) width = std::max(width, row.dimension.size());
  char buffer[128];
  std::string out = "coefficient: " + std::string(to_string(report.coefficient)) +
                    "  granularity: " + std::string(to_string(report.granularity)) + "\n";
  std::snprintf(buffer, sizeof buffer, "%-*s%10s%10s%10s\n", static_cast<int>(width), "dimension",
                "variants", "mean", "std");
  out += buffer;
  for (const auto& row : report.rows) {
    if (row.mean) {
      std::snprintf(buffer, sizeof buffer, "%-*s%10zu%10.3f%10.3f\n", static_cast<int>(width),
                    row.dimension.c_str(), row.variants.size(), *row.mean, *row.stddev);
    } else {
      std::snprintf(buffer, sizeof buffer, "%-*s%10zu%10s%10s\n", static_cast<int>(width),
                    row.dimension.c_str(), row.variants.size(), "-", "-");
    }
    out += buffer;
  }
  return out;
}

}  // namespace decompeval
