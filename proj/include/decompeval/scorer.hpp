#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "decompeval/core.hpp"
#include "decompeval/prompts.hpp"

namespace decompeval {

struct ScoreRequest {
  std::string prompt;
  std::vector<std::string> candidates;

  bool operator==(const ScoreRequest&) const = default;
};

// Throws DataError unless candidates are non-empty, distinct and non-empty
// strings.
void validate_request(const ScoreRequest& request);

// Throws BackendError unless `probabilities` holds exactly the requested
// candidates with finite values in [0, 1].
void check_probabilities(const ScoreRequest& request,
                         const CandidateProbabilities& probabilities);

// Result slot of a batched call. Exactly one of probabilities / error is set.
struct ScoreOutcome {
  std::optional<CandidateProbabilities> probabilities;
  std::string error;

  bool ok() const noexcept { return probabilities.has_value(); }
};

// Returns the generation probability of each candidate answer word given a
// prompt. Implementations must tolerate concurrent calls.
class ScoreBackend {
 public:
  virtual ~ScoreBackend() = default;

  virtual CandidateProbabilities score(const ScoreRequest& request) = 0;

  // Order-preserving; a failing item does not affect the others. The default
  // maps score() over the requests.
  virtual std::vector<ScoreOutcome> score_batch(std::span<const ScoreRequest> requests);

  // Stable description used in cache keys, e.g. "mock:seed=7".
  virtual std::string identity() const = 0;
};

// Probabilities derived from a seeded hash of (prompt, candidate).
class MockBackend final : public ScoreBackend {
 public:
  explicit MockBackend(std::uint64_t seed) : seed_(seed) {}

  CandidateProbabilities score(const ScoreRequest& request) override;
  std::string identity() const override;

 private:
  std::uint64_t seed_;
};

// Answers from a user-supplied function. Handy for planted metrics and
// instrumented tests.
class FunctionBackend final : public ScoreBackend {
 public:
  using Function = std::function<CandidateProbabilities(const ScoreRequest&)>;

  FunctionBackend(Function fn, std::string identity)
      : fn_(std::move(fn)), identity_(std::move(identity)) {}

  CandidateProbabilities score(const ScoreRequest& request) override;
  std::string identity() const override { return identity_; }

 private:
  Function fn_;
  std::string identity_;
};

// Fixture scorer. Lookup order: exact prompt, then the first rule whose
// pattern matches, then the default. Anything else is a BackendError.
//
// File forms:
//   {"p1": {"yes": 0.8, "no": 0.1}, ...}                       (exact prompts)
//   {"prompts": {...}, "rules": [{"match": "suffix"|"prefix"|"contains",
//     "pattern": "...", "probabilities": {...}}], "default": {...}}
class ScriptedBackend final : public ScoreBackend {
 public:
  enum class Match { suffix, prefix, contains };
  struct Rule {
    Match match = Match::contains;
    std::string pattern;
    std::map<std::string, double> probabilities;
  };

  ScriptedBackend() = default;

  static ScriptedBackend from_json(const nlohmann::json& doc);
  static ScriptedBackend from_file(const std::filesystem::path& path);

  void add_prompt(std::string prompt, std::map<std::string, double> probabilities);
  void add_rule(Rule rule);
  void set_default(std::map<std::string, double> probabilities);

  CandidateProbabilities score(const ScoreRequest& request) override;
  std::string identity() const override;

 private:
  std::map<std::string, std::map<std::string, double>> prompts_;
  std::vector<Rule> rules_;
  std::optional<std::map<std::string, double>> default_;
  std::string source_ = "inline";
};

struct ScorerBackendConfig {
  std::string endpoint = "http://127.0.0.1:8000";
  std::chrono::milliseconds timeout{30000};
  int max_retries = 3;
  std::size_t max_prompt_chars = 4000;
  std::size_t max_batch = 16;
  std::optional<std::filesystem::path> cache_path;

  // Throws ConfigError on an unusable configuration.
  void validate() const;
};

// Client for the sidecar wire protocol:
//   POST /v1/score {"items":[{"prompt":..., "candidates":[...]}]}
//   -> {"results":[{"probabilities":[...]}]}
// Transport errors and 5xx responses are retried with exponential backoff;
// 400 and 422 are not.
class RemoteBackend final : public ScoreBackend {
 public:
  explicit RemoteBackend(ScorerBackendConfig config);

  CandidateProbabilities score(const ScoreRequest& request) override;
  std::vector<ScoreOutcome> score_batch(std::span<const ScoreRequest> requests) override;
  std::string identity() const override;

  std::uint64_t http_calls() const noexcept { return http_calls_.load(); }

 private:
  std::vector<ScoreOutcome> post_chunk(std::span<const ScoreRequest> requests);

  ScorerBackendConfig config_;
  std::string host_;
  std::atomic<std::uint64_t> next_request_id_{1};
  std::atomic<std::uint64_t> http_calls_{0};
};

// Write-through disk cache around another backend. One JSON record per line:
//   {"key": sha256, "candidates": [...], "probabilities": [...], "timestamp": s}
class CachedBackend final : public ScoreBackend {
 public:
  CachedBackend(std::shared_ptr<ScoreBackend> inner, std::filesystem::path cache_path);

  CandidateProbabilities score(const ScoreRequest& request) override;
  std::vector<ScoreOutcome> score_batch(std::span<const ScoreRequest> requests) override;
  std::string identity() const override { return inner_->identity(); }

  std::size_t entries() const;
  std::size_t skipped_lines() const noexcept { return skipped_lines_; }

  // Hex SHA-256 over the backend identity, prompt and candidates.
  static std::string cache_key(const std::string& identity, const ScoreRequest& request);

 private:
  std::optional<CandidateProbabilities> lookup(const std::string& key) const;
  void store(const std::string& key, const ScoreRequest& request,
             const CandidateProbabilities& probabilities);

  std::shared_ptr<ScoreBackend> inner_;
  std::filesystem::path path_;
  mutable std::mutex mutex_;
  std::map<std::string, CandidateProbabilities> entries_;
  std::ofstream out_;
  std::size_t skipped_lines_ = 0;
};

std::shared_ptr<ScoreBackend> cached(std::shared_ptr<ScoreBackend> backend,
                                     const std::filesystem::path& cache_path);

// Left-trims the longest truncatable context field, snapping the cut forward
// to a whitespace boundary, until the rendered prompt fits `budget` bytes.
// Throws BudgetExceededError when emptying every context field is not enough.
PromptAssembly truncate_prompt(PromptAssembly assembly, std::size_t budget,
                               const AblationConfig& ablation = {});

}  // namespace decompeval
