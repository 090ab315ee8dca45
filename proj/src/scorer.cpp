#include "decompeval/scorer.hpp"

#include <cmath>
#include <set>
#include <sstream>

#include "decompeval/errors.hpp"

namespace decompeval {

using nlohmann::json;

void validate_request(const ScoreRequest& request) {
  if (request.candidates.empty()) throw DataError("score request without candidates");
  std::set<std::string> seen;
  for (const auto& candidate : request.candidates) {
    if (candidate.empty()) throw DataError("empty candidate answer word");
    if (!seen.insert(candidate).second) {
      throw DataError("duplicate candidate answer word '" + candidate + "'");
    }
  }
}

void check_probabilities(const ScoreRequest& request,
                         const CandidateProbabilities& probabilities) {
  if (probabilities.values.size() != request.candidates.size()) {
    throw BackendError("backend returned " + std::to_string(probabilities.values.size()) +
                       " probabilities for " + std::to_string(request.candidates.size()) +
                       " candidates");
  }
  for (const auto& candidate : request.candidates) {
    const double p = probabilities.at(candidate);
    if (!std::isfinite(p) || p < 0.0 || p > 1.0) {
      std::ostringstream msg;
      msg << "probability for '" << candidate << "' out of range: " << p;
      throw BackendError(msg.str());
    }
  }
}

std::vector<ScoreOutcome> ScoreBackend::score_batch(std::span<const ScoreRequest> requests) {
  std::vector<ScoreOutcome> out(requests.size());
  for (std::size_t i = 0; i < requests.size(); ++i) {
    try {
      out[i].probabilities = score(requests[i]);
    } catch (const std::exception& e) {
      out[i].error = e.what();
    }
  }
  return out;
}

namespace {

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

CandidateProbabilities MockBackend::score(const ScoreRequest& request) {
  validate_request(request);
  const std::uint64_t prompt_hash = fnv1a(request.prompt, splitmix64(seed_));
  CandidateProbabilities out;
  for (const auto& candidate : request.candidates) {
    const std::uint64_t bits = splitmix64(fnv1a(candidate, prompt_hash));
    out.values[candidate] = static_cast<double>(bits >> 11) * 0x1.0p-53;
  }
  return out;
}

std::string MockBackend::identity() const { return "mock:seed=" + std::to_string(seed_); }

CandidateProbabilities FunctionBackend::score(const ScoreRequest& request) {
  validate_request(request);
  auto out = fn_(request);
  check_probabilities(request, out);
  return out;
}

namespace {

std::map<std::string, double> parse_probability_map(const json& node) {
  if (!node.is_object()) throw ConfigError("scripted probabilities must be an object");
  std::map<std::string, double> out;
  for (const auto& [word, value] : node.items()) {
    if (!value.is_number()) throw ConfigError("scripted probability for '" + word + "' is not a number");
    out[word] = value.get<double>();
  }
  return out;
}

ScriptedBackend::Match parse_match(const std::string& name) {
  if (name == "suffix") return ScriptedBackend::Match::suffix;
  if (name == "prefix") return ScriptedBackend::Match::prefix;
  if (name == "contains") return ScriptedBackend::Match::contains;
  throw ConfigError("unknown scripted match kind '" + name + "'");
}

bool matches(const ScriptedBackend::Rule& rule, std::string_view prompt) {
  switch (rule.match) {
    case ScriptedBackend::Match::suffix:
      return prompt.size() >= rule.pattern.size() &&
             prompt.substr(prompt.size() - rule.pattern.size()) == rule.pattern;
    case ScriptedBackend::Match::prefix:
      return prompt.substr(0, rule.pattern.size()) == rule.pattern;
    case ScriptedBackend::Match::contains:
      return prompt.find(rule.pattern) != std::string_view::npos;
  }
  return false;
}

}  // namespace

ScriptedBackend ScriptedBackend::from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("scripted backend file must hold an object");
  ScriptedBackend backend;
  const bool structured = doc.contains("prompts") || doc.contains("rules") || doc.contains("default");
  if (!structured) {
    for (const auto& [prompt, probs] : doc.items()) backend.add_prompt(prompt, parse_probability_map(probs));
    return backend;
  }
  if (doc.contains("prompts")) {
    for (const auto& [prompt, probs] : doc["prompts"].items()) {
      backend.add_prompt(prompt, parse_probability_map(probs));
    }
  }
  if (doc.contains("rules")) {
    for (const auto& node : doc["rules"]) {
      Rule rule;
      rule.match = parse_match(node.value("match", std::string("contains")));
      rule.pattern = node.at("pattern").get<std::string>();
      rule.probabilities = parse_probability_map(node.at("probabilities"));
      backend.add_rule(std::move(rule));
    }
  }
  if (doc.contains("default")) backend.set_default(parse_probability_map(doc["default"]));
  return backend;
}

ScriptedBackend ScriptedBackend::from_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read scripted backend file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse scripted backend file " + path.string() + ": " + e.what());
  }
  auto backend = from_json(doc);
  backend.source_ = path.filename().string() + "#" + std::to_string(fnv1a(doc.dump()));
  return backend;
}

void ScriptedBackend::add_prompt(std::string prompt, std::map<std::string, double> probabilities) {
  prompts_[std::move(prompt)] = std::move(probabilities);
}

void ScriptedBackend::add_rule(Rule rule) { rules_.push_back(std::move(rule)); }

void ScriptedBackend::set_default(std::map<std::string, double> probabilities) {
  default_ = std::move(probabilities);
}

CandidateProbabilities ScriptedBackend::score(const ScoreRequest& request) {
  validate_request(request);
  const std::map<std::string, double>* table = nullptr;
  if (auto it = prompts_.find(request.prompt); it != prompts_.end()) {
    table = &it->second;
  } else {
    for (const auto& rule : rules_) {
      if (matches(rule, request.prompt)) {
        table = &rule.probabilities;
        break;
      }
    }
  }
  if (table == nullptr && default_) table = &*default_;
  if (table == nullptr) {
    throw BackendError("scripted backend has no entry for prompt: " +
                       request.prompt.substr(0, 120));
  }
  CandidateProbabilities out;
  for (const auto& candidate : request.candidates) {
    auto it = table->find(candidate);
    if (it == table->end()) throw BackendError("scripted entry lacks candidate '" + candidate + "'");
    out.values[candidate] = it->second;
  }
  check_probabilities(request, out);
  return out;
}

std::string ScriptedBackend::identity() const { return "scripted:" + source_; }

void ScorerBackendConfig::validate() const {
  if (endpoint.empty()) throw ConfigError("empty scorer endpoint");
  if (timeout.count() <= 0) throw ConfigError("scorer timeout must be positive");
  if (max_retries < 0 || max_retries > 20) throw ConfigError("max_retries must be in [0, 20]");
  if (max_prompt_chars < 256) throw ConfigError("max_prompt_chars must be at least 256");
  if (max_batch == 0) throw ConfigError("max_batch must be positive");
}

}  // namespace decompeval
