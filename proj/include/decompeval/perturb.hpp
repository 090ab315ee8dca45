#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "decompeval/core.hpp"
#include "decompeval/engine.hpp"
#include "decompeval/metaeval.hpp"

namespace decompeval {

enum class VariantKind { original, auxiliary_verb, synonym, word_reorder };

std::string_view to_string(VariantKind kind);
VariantKind parse_variant_kind(std::string_view name);

// Lexical rewordings of one dimension's question and subquestion template.
struct VariantFamily {
  std::string dimension;
  std::vector<DimensionSpec> variants;  // original first
  std::vector<VariantKind> kinds;
};

// Throws ConfigError unless the family is non-empty, starts with its single
// original, and every variant shares aggregation and input fields with it.
void validate_family(const VariantFamily& family);

// Variant files:
//   {"version": 1, "families": [{"task": "dialogue", "dimension": "naturalness",
//     "variants": [{"kind": "original"}, {"kind": "word_reorder",
//       "question": "...", "subquestion_template": "..."}]}]}
// Missing variant fields are taken from the original, which itself defaults
// to the built-in preset for (task, dimension).
std::map<std::string, VariantFamily> parse_variants(const nlohmann::json& doc);
std::map<std::string, VariantFamily> load_variants(const std::filesystem::path& path);

struct VariantValue {
  VariantKind kind = VariantKind::original;
  std::string question;
  std::optional<double> value;
  std::string error;
};

struct SensitivityRow {
  std::string dimension;
  std::optional<double> mean;
  std::optional<double> stddev;  // population standard deviation
  std::vector<VariantValue> variants;
};

struct SensitivityReport {
  Coefficient coefficient = Coefficient::pearson;
  Granularity granularity = Granularity::pooled;
  std::vector<SensitivityRow> rows;
};

// Population mean and standard deviation, independent of input order.
std::pair<double, double> mean_stddev(std::vector<double> values);

// Runs one benchmark per variant and summarizes the chosen coefficient.
SensitivityReport sensitivity_report(const std::vector<EvaluationSample>& samples,
                                     const std::map<std::string, VariantFamily>& families,
                                     const EvalOptions& options, ScoreBackend& backend,
                                     Coefficient coefficient, Granularity granularity,
                                     std::size_t parallelism = 1);

nlohmann::ordered_json to_json(const SensitivityReport& report);
std::string render_table(const SensitivityReport& report);

}  // namespace decompeval
