#pragma once

#include "stepwise/policy.hpp"
#include "stepwise/toy_prover.hpp"

namespace stepwise::toy {

inline TacticSet default_tactic_set() {
  return TacticSet(tactic_tokens(), {"toy rewrite rules", 1.0});
}

// Proposes every step the toy prover accepts (left-to-right rules and refl).
// Without noise all steps share one logprob, and FIFO tie-breaking turns
// best-first search into breadth-first search. With noise each logprob is
// lowered by noise * u, u in [0, 1) hashed from (seed, goal, step).
class ExhaustivePolicy final : public PolicyBackend {
public:
  explicit ExhaustivePolicy(double logprob = -1.0, double fallback_logprob = -30.0, double noise = 0.0)
      : logprob_(logprob), fallback_(fallback_logprob), noise_(noise) {
    if (noise < 0.0) throw Error("noise must be >= 0");
  }

  std::vector<ScoredCandidate> propose(const ProofState& state, std::size_t beam_size, std::uint64_t seed) override {
    std::vector<ScoredCandidate> raw;
    for (const auto& s : steps(state)) raw.push_back({split(s), score(state, s, seed)});
    return normalize_candidates(std::move(raw), beam_size);
  }

  std::vector<TacticCandidate> propose_tactics(const ProofState& state, std::size_t beam_size,
                                               const TacticSet& tactics, std::uint64_t seed) override {
    std::vector<TacticCandidate> raw;
    for (const auto& s : steps(state))
      if (auto t = tactics.tactic_of(s)) raw.push_back({*t, score(state, s, seed)});
    return constrain_tactics(raw, beam_size, tactics, fallback_);
  }

  std::vector<PremiseCompletion> complete_premises(const ProofState& state, const std::vector<std::string>& tactics,
                                                   std::uint64_t) override {
    const auto all = steps(state);
    std::vector<PremiseCompletion> out;
    for (const auto& t : tactics) {
      auto it = std::find_if(all.begin(), all.end(), [&](const std::string& s) {
        return s == t || (s.size() > t.size() && s.compare(0, t.size(), t) == 0 && s[t.size()] == ' ');
      });
      if (it == all.end()) {
        out.push_back({ProofStep(t, ""), true});
      } else {
        out.push_back({ProofStep(t, trim(std::string_view(*it).substr(t.size()))), false});
      }
    }
    return out;
  }

private:
  static std::vector<std::string> steps(const ProofState& state) {
    try {
      return applicable_steps(parse_goal(state.goal()));
    } catch (const FormatError&) {
      return {};
    }
  }

  static ProofStep split(const std::string& s) {
    static const TacticSet vocab = default_tactic_set();
    return vocab.split(s);
  }

  double score(const ProofState& state, const std::string& step, std::uint64_t seed) const {
    if (noise_ == 0.0) return logprob_;
    const std::uint64_t h = mix_seed(mix_seed(seed, normalize_goal(state.goal())), step);
    return logprob_ - noise_ * static_cast<double>(h >> 11) * 0x1.0p-53;
  }

  double logprob_;
  double fallback_;
  double noise_;
};

} // namespace stepwise::toy
