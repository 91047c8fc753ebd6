#pragma once

#include <fstream>
#include <random>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include <fnmatch.h>

#include <nlohmann/json.hpp>

#include "stepwise/policy.hpp"

namespace stepwise {

// Table-driven policy. The table is JSONL:
//
//   {"settings": {"noise": 0.2, "fallback_logprob": -30,
//                 "tactics": ["rw add_zero", ...]}}                  optional
//   {"goal": "x + 0 = x", "candidates": [{"step": "rw add_zero l", "logprob": -0.1}]}
//   {"goal": "* = *", "match": "glob", "candidates": [...]}
//   {"goal": "...", "seeds": [2], "candidates": [...]}             only for those seeds
//
// Goals are compared after normalization; exact rules win over glob rules,
// earlier lines over later ones. With noise > 0 every logprob is lowered by
// noise * u, u in [0, 1) drawn from a hash of (seed, goal, step), so results
// depend only on their inputs and concurrent use is safe.
class ScriptedPolicy final : public PolicyBackend {
public:
  struct Rule {
    std::string goal;
    bool glob = false;
    std::vector<std::uint64_t> seeds; // empty: any seed
    std::vector<ScoredCandidate> candidates;
  };

  ScriptedPolicy() = default;
  explicit ScriptedPolicy(std::vector<Rule> rules, double noise = 0.0, double fallback_logprob = -30.0)
      : rules_(std::move(rules)), noise_(noise), fallback_(fallback_logprob) {}

  static ScriptedPolicy from_jsonl(std::istream& in) {
    std::vector<Rule> rules;
    double noise = 0.0;
    double fallback = -30.0;
    std::optional<TacticSet> vocabulary;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (trim(line).empty()) continue;
      try {
        const auto j = nlohmann::json::parse(line);
        if (j.contains("settings")) {
          noise = j["settings"].value("noise", noise);
          fallback = j["settings"].value("fallback_logprob", fallback);
          if (j["settings"].contains("tactics"))
            vocabulary.emplace(j["settings"]["tactics"].get<std::vector<std::string>>());
          continue;
        }
        Rule r;
        r.goal = normalize_goal(j.at("goal").get<std::string>());
        r.glob = j.value("match", "exact") == "glob";
        if (j.contains("seeds")) r.seeds = j["seeds"].get<std::vector<std::uint64_t>>();
        for (const auto& c : j.at("candidates")) {
          ProofStep step = c.contains("step")
                               ? (vocabulary ? vocabulary->split(c["step"].get<std::string>())
                                             : ProofStep::parse(c["step"].get<std::string>()))
                               : ProofStep(c.at("tactic").get<std::string>(),
                                                          c.value("premise", std::string()));
          const double lp = c.at("logprob").get<double>();
          if (lp > 0.0) throw FormatError("logprob must be <= 0");
          r.candidates.push_back({std::move(step), lp});
        }
        rules.push_back(std::move(r));
      } catch (const nlohmann::json::exception& e) {
        throw FormatError("policy table line " + std::to_string(lineno) + ": " + e.what());
      } catch (const Error& e) {
        throw FormatError("policy table line " + std::to_string(lineno) + ": " + e.what());
      }
    }
    if (noise < 0.0) throw FormatError("noise must be >= 0");
    return ScriptedPolicy(std::move(rules), noise, fallback);
  }

  static ScriptedPolicy from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open policy table '" + path + "'");
    return from_jsonl(in);
  }

  double noise() const { return noise_; }

  std::vector<ScoredCandidate> propose(const ProofState& state, std::size_t beam_size,
                                       std::uint64_t seed) override {
    return normalize_candidates(noisy(state, seed), beam_size);
  }

  std::vector<TacticCandidate> propose_tactics(const ProofState& state, std::size_t beam_size,
                                               const TacticSet& tactics, std::uint64_t seed) override {
    std::vector<TacticCandidate> raw;
    for (const auto& c : noisy(state, seed)) {
      if (auto t = tactics.tactic_of(c.step.full_text())) raw.push_back({*t, c.logprob});
    }
    return constrain_tactics(raw, beam_size, tactics, fallback_);
  }

  std::vector<PremiseCompletion> complete_premises(const ProofState& state, const std::vector<std::string>& tactics,
                                                   std::uint64_t seed) override {
    const auto cands = noisy(state, seed);
    std::vector<PremiseCompletion> out;
    out.reserve(tactics.size());
    for (const auto& raw : tactics) {
      const std::string t = normalize_step_text(raw);
      const ScoredCandidate* best = nullptr;
      for (const auto& c : cands) {
        const auto& text = c.step.full_text();
        const bool hit = text == t || (text.size() > t.size() && text.compare(0, t.size(), t) == 0 &&
                                       text[t.size()] == ' ');
        if (hit && (!best || c.logprob > best->logprob)) best = &c;
      }
      if (best) {
        out.push_back({ProofStep(t, trim(std::string_view(best->step.full_text()).substr(t.size()))), false});
      } else {
        out.push_back({ProofStep(t, ""), true});
      }
    }
    return out;
  }

private:
  const Rule* lookup(const std::string& goal, std::uint64_t seed) const {
    auto applies = [&](const Rule& r) {
      return r.seeds.empty() || std::find(r.seeds.begin(), r.seeds.end(), seed) != r.seeds.end();
    };
    for (const auto& r : rules_)
      if (!r.glob && r.goal == goal && applies(r)) return &r;
    for (const auto& r : rules_)
      if (r.glob && applies(r) && ::fnmatch(r.goal.c_str(), goal.c_str(), 0) == 0) return &r;
    return nullptr;
  }

  std::vector<ScoredCandidate> noisy(const ProofState& state, std::uint64_t seed) const {
    const std::string goal = normalize_goal(state.goal());
    const Rule* r = lookup(goal, seed);
    if (!r) return {};
    std::vector<ScoredCandidate> out = r->candidates;
    if (noise_ > 0.0) {
      for (auto& c : out) {
        std::mt19937_64 rng(mix_seed(mix_seed(seed, goal), c.step.full_text()));
        c.logprob -= noise_ * std::uniform_real_distribution<double>(0.0, 1.0)(rng);
      }
    }
    return out;
  }

  std::vector<Rule> rules_;
  double noise_ = 0.0;
  double fallback_ = -30.0;
};

} // namespace stepwise
