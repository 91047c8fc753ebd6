#pragma once

#include <chrono>
#include <cstdlib>
#include <semaphore>
#include <string>
#include <thread>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "stepwise/policy.hpp"

namespace stepwise {

// Prompt for a goal: "[GOAL]\n<goal>\n[PROOFSTEP]\n".
inline std::string proofstep_prompt(std::string_view goal_text) {
  std::string out = "[GOAL]\n";
  out += goal_text;
  out += "\n[PROOFSTEP]\n";
  return out;
}

// Client for an OpenAI-style /v1/completions endpoint.
//
// Beams are requested as n-best completions with per-token logprobs; a
// candidate's logprob is the sum over its tokens. Constrained decoding forces
// each tactic as a prompt suffix (echo + logprobs) and scores the forced
// prefix plus its completion, keeping the best beam_size tactics.
class RemotePolicy final : public PolicyBackend {
public:
  struct Options {
    std::string base_url = "http://127.0.0.1:8000";
    std::string path = "/v1/completions";
    std::string model = "policy";
    std::string api_key_env = "STEPWISE_API_KEY";
    int max_tokens = 128;
    std::chrono::seconds timeout{60};
    int retries = 2;
    Millis backoff{250};
    std::ptrdiff_t max_in_flight = 8;
    double fallback_logprob = -30.0;
  };

  explicit RemotePolicy(Options opts) : opts_(std::move(opts)), in_flight_(opts_.max_in_flight) {
    if (const char* key = std::getenv(opts_.api_key_env.c_str())) api_key_ = key;
  }

  std::vector<ScoredCandidate> propose(const ProofState& state, std::size_t beam_size,
                                       std::uint64_t seed) override {
    nlohmann::json body = base_body(proofstep_prompt(state.goal()), seed);
    body["n"] = beam_size;
    body["best_of"] = beam_size;
    body["use_beam_search"] = true;
    body["temperature"] = 0.0;
    const auto resp = post(body);
    std::vector<ScoredCandidate> raw;
    for (const auto& choice : resp.value("choices", nlohmann::json::array())) {
      const std::string text = choice.value("text", "");
      const std::string first_line = text.substr(0, text.find('\n'));
      raw.push_back({ProofStep::parse(first_line), sum_logprobs(choice, 0)});
    }
    return normalize_candidates(std::move(raw), beam_size);
  }

  std::vector<TacticCandidate> propose_tactics(const ProofState& state, std::size_t beam_size,
                                               const TacticSet& tactics, std::uint64_t seed) override {
    const std::string prompt = proofstep_prompt(state.goal());
    std::vector<TacticCandidate> raw;
    std::size_t failures = 0;
    for (const auto& t : tactics.tactics()) {
      nlohmann::json body = base_body(prompt + t, seed);
      body["echo"] = true;
      body["n"] = 1;
      body["temperature"] = 0.0;
      try {
        const auto resp = post(body);
        const auto& choices = resp.at("choices");
        if (choices.empty()) continue;
        raw.push_back({t, sum_logprobs(choices[0], prompt.size())});
      } catch (const TransportError&) {
        ++failures;
      }
    }
    if (failures == tactics.size()) throw TransportError("all constrained decoding requests failed");
    return constrain_tactics(raw, beam_size, tactics, opts_.fallback_logprob);
  }

  std::vector<PremiseCompletion> complete_premises(const ProofState& state, const std::vector<std::string>& tactics,
                                                   std::uint64_t seed) override {
    const std::string prompt = proofstep_prompt(state.goal());
    std::vector<PremiseCompletion> out;
    for (const auto& t : tactics) {
      nlohmann::json body = base_body(prompt + t, seed);
      body["n"] = 1;
      body["temperature"] = 0.0;
      try {
        const auto resp = post(body);
        const auto& choices = resp.at("choices");
        std::string text = choices.empty() ? std::string() : choices[0].value("text", "");
        text = text.substr(0, text.find('\n'));
        out.push_back({ProofStep(t, trim(text)), false});
      } catch (const Error&) {
        out.push_back({ProofStep(t, ""), true});
      } catch (const nlohmann::json::exception&) {
        out.push_back({ProofStep(t, ""), true});
      }
    }
    return out;
  }

private:
  nlohmann::json base_body(const std::string& prompt, std::uint64_t seed) const {
    return {{"model", opts_.model}, {"prompt", prompt}, {"max_tokens", opts_.max_tokens},
            {"logprobs", 1},        {"stop", nlohmann::json::array({"\n"})},   {"seed", seed}};
  }

  // Sum of token logprobs for tokens starting at or after text offset `from`.
  static double sum_logprobs(const nlohmann::json& choice, std::size_t from) {
    if (!choice.contains("logprobs") || !choice["logprobs"].is_object()) return 0.0;
    const auto& lp = choice["logprobs"];
    const auto tokens = lp.value("token_logprobs", nlohmann::json::array());
    const auto offsets = lp.value("text_offset", nlohmann::json::array());
    double sum = 0.0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (!tokens[i].is_number()) continue;
      if (from > 0 && i < offsets.size() && offsets[i].get<std::size_t>() < from) continue;
      sum += tokens[i].get<double>();
    }
    return std::min(sum, 0.0);
  }

  nlohmann::json post(const nlohmann::json& body) {
    std::string last_error;
    for (int attempt = 0; attempt <= opts_.retries; ++attempt) {
      if (attempt > 0) std::this_thread::sleep_for(opts_.backoff * (1 << (attempt - 1)));
      in_flight_.acquire();
      httplib::Result res = [&] {
        httplib::Client cli(opts_.base_url);
        cli.set_connection_timeout(opts_.timeout);
        cli.set_read_timeout(opts_.timeout);
        cli.set_write_timeout(opts_.timeout);
        httplib::Headers headers;
        if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
        return cli.Post(opts_.path, headers, body.dump(), "application/json");
      }();
      in_flight_.release();
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        last_error = "HTTP " + std::to_string(res->status);
        continue;
      }
      try {
        return nlohmann::json::parse(res->body);
      } catch (const nlohmann::json::exception& e) {
        last_error = e.what();
      }
    }
    throw TransportError("policy endpoint " + opts_.base_url + opts_.path + ": " + last_error);
  }

  Options opts_;
  std::string api_key_;
  std::counting_semaphore<> in_flight_;
};

} // namespace stepwise
