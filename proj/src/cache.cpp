#include <chrono>
#include <cmath>
#include <iomanip>
#include <sstream>

#include <openssl/evp.h>
#include <spdlog/spdlog.h>

#include "decompeval/errors.hpp"
#include "decompeval/scorer.hpp"

namespace decompeval {

using nlohmann::json;

namespace {

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &length, EVP_sha256(), nullptr) != 1) {
    throw Error("SHA-256 computation failed");
  }
  std::ostringstream hex;
  hex << std::hex << std::setfill('0');
  for (unsigned int i = 0; i < length; ++i) hex << std::setw(2) << static_cast<int>(digest[i]);
  return hex.str();
}

}  // namespace

std::string CachedBackend::cache_key(const std::string& identity, const ScoreRequest& request) {
  // Length-prefixed fields keep the encoding unambiguous.
  std::string material;
  auto append = [&material](std::string_view part) {
    material += std::to_string(part.size());
    material += ':';
    material += part;
  };
  append(identity);
  append(request.prompt);
  for (const auto& candidate : request.candidates) append(candidate);
  return sha256_hex(material);
}

CachedBackend::CachedBackend(std::shared_ptr<ScoreBackend> inner, std::filesystem::path cache_path)
    : inner_(std::move(inner)), path_(std::move(cache_path)) {
  if (!inner_) throw ConfigError("cache needs a backend to wrap");
  if (std::ifstream in{path_}) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (trim(line).empty()) continue;
      try {
        const auto record = json::parse(line);
        const auto key = record.at("key").get<std::string>();
        const auto candidates = record.at("candidates").get<std::vector<std::string>>();
        const auto probs = record.at("probabilities").get<std::vector<double>>();
        if (candidates.size() != probs.size()) throw std::runtime_error("length mismatch");
        CandidateProbabilities cp;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
          if (!std::isfinite(probs[i]) || probs[i] < 0.0 || probs[i] > 1.0) {
            throw std::runtime_error("probability out of range");
          }
          cp.values[candidates[i]] = probs[i];
        }
        entries_[key] = std::move(cp);
      } catch (const std::exception& e) {
        ++skipped_lines_;
        spdlog::warn("{}:{}: skipping corrupt cache line ({})", path_.string(), line_no, e.what());
      }
    }
  }
  out_.open(path_, std::ios::app | std::ios::binary);
  if (!out_) throw ConfigError("cache file not writable: " + path_.string());
}

std::size_t CachedBackend::entries() const {
  std::lock_guard lock(mutex_);
  return entries_.size();
}

std::optional<CandidateProbabilities> CachedBackend::lookup(const std::string& key) const {
  std::lock_guard lock(mutex_);
  auto it = entries_.find(key);
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void CachedBackend::store(const std::string& key, const ScoreRequest& request,
                          const CandidateProbabilities& probabilities) {
  json record;
  record["key"] = key;
  record["candidates"] = request.candidates;
  std::vector<double> probs;
  for (const auto& candidate : request.candidates) probs.push_back(probabilities.at(candidate));
  record["probabilities"] = probs;
  record["timestamp"] = std::chrono::duration_cast<std::chrono::seconds>(
                            std::chrono::system_clock::now().time_since_epoch())
                            .count();
  const std::string line = record.dump() + "\n";

  std::lock_guard lock(mutex_);
  if (entries_.emplace(key, probabilities).second) {
    out_ << line;
    out_.flush();
  }
}

CandidateProbabilities CachedBackend::score(const ScoreRequest& request) {
  const auto key = cache_key(inner_->identity(), request);
  if (auto hit = lookup(key)) return *hit;
  auto result = inner_->score(request);
  store(key, request, result);
  return result;
}

std::vector<ScoreOutcome> CachedBackend::score_batch(std::span<const ScoreRequest> requests) {
  std::vector<ScoreOutcome> out(requests.size());
  std::vector<std::string> keys(requests.size());
  std::vector<std::size_t> missing;
  std::vector<ScoreRequest> to_fetch;
  for (std::size_t i = 0; i < requests.size(); ++i) {
    keys[i] = cache_key(inner_->identity(), requests[i]);
    if (auto hit = lookup(keys[i])) {
      out[i].probabilities = std::move(hit);
    } else {
      missing.push_back(i);
      to_fetch.push_back(requests[i]);
    }
  }
  if (to_fetch.empty()) return out;
  auto fetched = inner_->score_batch(to_fetch);
  for (std::size_t j = 0; j < missing.size(); ++j) {
    const auto i = missing[j];
    if (fetched[j].ok()) store(keys[i], requests[i], *fetched[j].probabilities);
    out[i] = std::move(fetched[j]);
  }
  return out;
}

std::shared_ptr<ScoreBackend> cached(std::shared_ptr<ScoreBackend> backend,
                                     const std::filesystem::path& cache_path) {
  return std::make_shared<CachedBackend>(std::move(backend), cache_path);
}

}  // namespace decompeval
