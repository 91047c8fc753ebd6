#pragma once

#include <algorithm>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "stepwise/error.hpp"
#include "stepwise/state.hpp"

namespace stepwise {

struct TacticSetProvenance {
  std::string source;
  double threshold = 1.0;
};

// Ordered, duplicate-free set of tactic tokens used for constrained decoding.
class TacticSet {
public:
  using Provenance = TacticSetProvenance;

  TacticSet(std::vector<std::string> tactics, Provenance provenance = {})
      : provenance_(std::move(provenance)) {
    std::unordered_set<std::string> seen;
    for (auto& t : tactics) {
      std::string norm = normalize_step_text(t);
      if (norm.empty()) throw Error("empty tactic token");
      if (!seen.insert(norm).second) throw Error("duplicate tactic '" + norm + "'");
      tactics_.push_back(std::move(norm));
    }
    if (tactics_.empty()) throw Error("tactic set is empty");
  }

  const std::vector<std::string>& tactics() const { return tactics_; }
  const Provenance& provenance() const { return provenance_; }
  std::size_t size() const { return tactics_.size(); }

  bool contains(std::string_view tactic) const {
    return std::find(tactics_.begin(), tactics_.end(), tactic) != tactics_.end();
  }

  // Longest member that is a whole-word prefix of the step text.
  std::optional<std::string> tactic_of(std::string_view step_text) const {
    const std::string norm = normalize_step_text(step_text);
    std::optional<std::string> best;
    for (const auto& t : tactics_) {
      const bool prefix = norm.size() == t.size() ? norm == t
                                                  : norm.size() > t.size() && norm.compare(0, t.size(), t) == 0 &&
                                                        norm[t.size()] == ' ';
      if (prefix && (!best || t.size() > best->size())) best = t;
    }
    return best;
  }

  // Splits a step into (tactic, premise) using the longest matching member;
  // falls back to the first token.
  ProofStep split(std::string_view step_text) const {
    const std::string norm = normalize_step_text(step_text);
    if (auto t = tactic_of(norm)) {
      std::string_view rest = std::string_view(norm).substr(t->size());
      return ProofStep(*t, trim(rest));
    }
    return ProofStep::parse(norm);
  }

private:
  std::vector<std::string> tactics_;
  Provenance provenance_;
};

struct TacticCandidate {
  std::string tactic;
  double logprob = 0.0;
};

struct PremiseCompletion {
  ProofStep step;
  // set when the policy produced no premise for this tactic
  bool failed = false;
};

// Policy model contract. Implementations must tolerate concurrent calls.
class PolicyBackend {
public:
  virtual ~PolicyBackend() = default;

  // At most beam_size distinct candidates, logprob descending.
  // Throws TransportError when the model cannot be reached.
  virtual std::vector<ScoredCandidate> propose(const ProofState& state, std::size_t beam_size,
                                               std::uint64_t seed) = 0;

  // Exactly min(beam_size, |tactics|) distinct members of tactics.
  virtual std::vector<TacticCandidate> propose_tactics(const ProofState& state, std::size_t beam_size,
                                                       const TacticSet& tactics, std::uint64_t seed) = 0;

  // One step per tactic, same order.
  virtual std::vector<PremiseCompletion> complete_premises(const ProofState& state,
                                                           const std::vector<std::string>& tactics,
                                                           std::uint64_t seed) = 0;
};

// Merges candidates whose normalized text coincides (keeping the highest
// logprob at the position of the first occurrence), sorts by logprob
// descending with ties in first-appearance order, and truncates.
inline std::vector<ScoredCandidate> normalize_candidates(std::vector<ScoredCandidate> raw,
                                                         std::size_t beam_size) {
  std::vector<ScoredCandidate> merged;
  std::unordered_map<std::string, std::size_t> index;
  for (auto& c : raw) {
    c.logprob = std::min(c.logprob, 0.0);
    if (c.step.full_text().empty()) continue;
    auto [it, inserted] = index.try_emplace(c.step.full_text(), merged.size());
    if (inserted) {
      merged.push_back(std::move(c));
    } else {
      merged[it->second].logprob = std::max(merged[it->second].logprob, c.logprob);
    }
  }
  std::stable_sort(merged.begin(), merged.end(),
                   [](const ScoredCandidate& a, const ScoredCandidate& b) { return a.logprob > b.logprob; });
  if (merged.size() > beam_size) merged.resize(beam_size);
  return merged;
}

// Keeps only members of the set, best logprob per tactic, then fills up to
// min(beam, |set|) with the unseen members at fallback_logprob in set order.
inline std::vector<TacticCandidate> constrain_tactics(const std::vector<TacticCandidate>& raw,
                                                      std::size_t beam_size, const TacticSet& tactics,
                                                      double fallback_logprob) {
  std::vector<TacticCandidate> out;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& c : raw) {
    if (!tactics.contains(c.tactic)) continue;
    auto [it, inserted] = index.try_emplace(c.tactic, out.size());
    if (inserted) {
      out.push_back({c.tactic, std::min(c.logprob, 0.0)});
    } else {
      out[it->second].logprob = std::max(out[it->second].logprob, std::min(c.logprob, 0.0));
    }
  }
  for (const auto& t : tactics.tactics())
    if (!index.contains(t)) {
      index.emplace(t, out.size());
      out.push_back({t, std::min(fallback_logprob, 0.0)});
    }
  std::stable_sort(out.begin(), out.end(),
                   [](const TacticCandidate& a, const TacticCandidate& b) { return a.logprob > b.logprob; });
  out.resize(std::min(beam_size, tactics.size()));
  return out;
}

} // namespace stepwise
