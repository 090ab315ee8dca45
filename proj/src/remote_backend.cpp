#include <thread>

#include <httplib.h>

#include "decompeval/errors.hpp"
#include "decompeval/scorer.hpp"

namespace decompeval {

using nlohmann::json;

namespace {

// Splits "http://host:port/base" into ("http://host:port", "/base").
std::pair<std::string, std::string> split_endpoint(const std::string& endpoint) {
  const auto scheme = endpoint.find("://");
  const auto path_start = endpoint.find('/', scheme == std::string::npos ? 0 : scheme + 3);
  if (path_start == std::string::npos) return {endpoint, ""};
  std::string base = endpoint.substr(path_start);
  while (!base.empty() && base.back() == '/') base.pop_back();
  return {endpoint.substr(0, path_start), base};
}

}  // namespace

RemoteBackend::RemoteBackend(ScorerBackendConfig config) : config_(std::move(config)) {
  config_.validate();
  if (config_.endpoint.rfind("https://", 0) == 0) {
    throw ConfigError("https endpoints are not supported; put a TLS proxy in front of the sidecar");
  }
}

std::string RemoteBackend::identity() const { return "remote:" + config_.endpoint; }

CandidateProbabilities RemoteBackend::score(const ScoreRequest& request) {
  auto outcome = post_chunk(std::span<const ScoreRequest>(&request, 1));
  if (!outcome.front().ok()) throw BackendError(outcome.front().error);
  return *outcome.front().probabilities;
}

std::vector<ScoreOutcome> RemoteBackend::score_batch(std::span<const ScoreRequest> requests) {
  std::vector<ScoreOutcome> out;
  out.reserve(requests.size());
  for (std::size_t begin = 0; begin < requests.size(); begin += config_.max_batch) {
    const auto count = std::min(config_.max_batch, requests.size() - begin);
    auto chunk = post_chunk(requests.subspan(begin, count));
    for (auto& item : chunk) out.push_back(std::move(item));
  }
  return out;
}

std::vector<ScoreOutcome> RemoteBackend::post_chunk(std::span<const ScoreRequest> requests) {
  std::vector<ScoreOutcome> out(requests.size());
  if (requests.empty()) return out;

  const std::string request_id = "req-" + std::to_string(next_request_id_.fetch_add(1));
  auto fail_all = [&](const std::string& message) {
    for (auto& item : out) item.error = request_id + ": " + message;
    return out;
  };

  json body;
  body["items"] = json::array();
  for (std::size_t i = 0; i < requests.size(); ++i) {
    try {
      validate_request(requests[i]);
    } catch (const std::exception& e) {
      return fail_all(e.what());
    }
    body["items"].push_back({{"prompt", requests[i].prompt}, {"candidates", requests[i].candidates}});
  }

  const auto [host, base_path] = split_endpoint(config_.endpoint);
  httplib::Client client(host);
  const auto seconds = config_.timeout.count() / 1000;
  const auto micros = (config_.timeout.count() % 1000) * 1000;
  client.set_connection_timeout(seconds, micros);
  client.set_read_timeout(seconds, micros);
  client.set_write_timeout(seconds, micros);
  const httplib::Headers headers = {{"X-Request-Id", request_id}};
  const std::string payload = body.dump();

  std::string last_error;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(std::chrono::milliseconds(50) * (1 << (attempt - 1)));
    http_calls_.fetch_add(1);
    auto response = client.Post(base_path + "/v1/score", headers, payload, "application/json");
    if (!response) {
      last_error = "transport error: " + httplib::to_string(response.error());
      continue;
    }
    if (response->status >= 500) {
      last_error = "HTTP " + std::to_string(response->status) + ": " + response->body;
      continue;
    }
    if (response->status == 400 || response->status == 422) {
      // Isolate the offending item(s) so the rest of the batch still scores.
      if (requests.size() > 1) {
        for (std::size_t i = 0; i < requests.size(); ++i) {
          out[i] = std::move(post_chunk(requests.subspan(i, 1)).front());
        }
        return out;
      }
      return fail_all("HTTP " + std::to_string(response->status) + ": " + response->body);
    }
    if (response->status != 200) {
      return fail_all("unexpected HTTP " + std::to_string(response->status));
    }

    json parsed;
    try {
      parsed = json::parse(response->body);
      const auto& results = parsed.at("results");
      if (!results.is_array() || results.size() != requests.size()) {
        return fail_all("malformed response: expected " + std::to_string(requests.size()) +
                        " results");
      }
      for (std::size_t i = 0; i < requests.size(); ++i) {
        const auto& probs = results[i].at("probabilities");
        if (!probs.is_array() || probs.size() != requests[i].candidates.size()) {
          out[i].error = request_id + ": malformed response: probabilities not aligned with candidates";
          continue;
        }
        CandidateProbabilities cp;
        bool numeric = true;
        for (std::size_t c = 0; c < probs.size(); ++c) {
          if (!probs[c].is_number()) {
            numeric = false;
            break;
          }
          cp.values[requests[i].candidates[c]] = probs[c].get<double>();
        }
        if (!numeric) {
          out[i].error = request_id + ": malformed response: non-numeric probability";
          continue;
        }
        try {
          check_probabilities(requests[i], cp);
          out[i].probabilities = std::move(cp);
        } catch (const BackendError& e) {
          out[i].error = request_id + ": malformed response: " + e.what();
        }
      }
      return out;
    } catch (const json::exception& e) {
      return fail_all(std::string("malformed response: ") + e.what());
    }
  }
  return fail_all(last_error + " (after " + std::to_string(config_.max_retries + 1) + " attempts)");
}

}  // namespace decompeval
