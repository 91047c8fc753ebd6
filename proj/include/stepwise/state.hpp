#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "stepwise/error.hpp"
#include "stepwise/text.hpp"

namespace stepwise {

struct StateId {
  std::uint64_t value = 0;
  friend auto operator<=>(const StateId&, const StateId&) = default;
};

// Immutable snapshot of a goal under proof.
class ProofState {
public:
  ProofState(StateId id, std::string goal_text, int depth)
      : id_(id), goal_(std::move(goal_text)), depth_(depth),
        key_(canonical_state_key(goal_)) {}

  StateId id() const { return id_; }
  const std::string& goal() const { return goal_; }
  int depth() const { return depth_; }
  const StateKey& key() const { return key_; }

private:
  StateId id_;
  std::string goal_;
  int depth_;
  StateKey key_;
};

// A tactic token plus its premise. full_text is what the prover receives.
class ProofStep {
public:
  ProofStep() = default;

  ProofStep(std::string_view tactic, std::string_view premise)
      : tactic_(normalize_step_text(tactic)), premise_(normalize_step_text(premise)) {
    full_ = premise_.empty() ? tactic_ : tactic_ + " " + premise_;
  }

  // Splits at the first space: leading token is the tactic, the rest the premise.
  static ProofStep parse(std::string_view text) {
    const std::string norm = normalize_step_text(text);
    const auto sp = norm.find(' ');
    if (sp == std::string::npos) return ProofStep(norm, "");
    return ProofStep(std::string_view(norm).substr(0, sp),
                     std::string_view(norm).substr(sp + 1));
  }

  const std::string& tactic() const { return tactic_; }
  const std::string& premise() const { return premise_; }
  const std::string& full_text() const { return full_; }

  friend bool operator==(const ProofStep& a, const ProofStep& b) {
    return a.full_ == b.full_;
  }

private:
  std::string tactic_;
  std::string premise_;
  std::string full_;
};

struct ScoredCandidate {
  ProofStep step;
  double logprob = 0.0; // <= 0
};

enum class ErrorKind { Syntax, Inapplicable, Timeout, Crash, CyclePruned };

inline std::string_view to_string(ErrorKind k) {
  switch (k) {
  case ErrorKind::Syntax: return "syntax";
  case ErrorKind::Inapplicable: return "inapplicable";
  case ErrorKind::Timeout: return "timeout";
  case ErrorKind::Crash: return "crash";
  case ErrorKind::CyclePruned: return "cycle-pruned";
  }
  return "syntax";
}

inline ErrorKind error_kind_from_string(std::string_view s) {
  if (s == "syntax") return ErrorKind::Syntax;
  if (s == "inapplicable") return ErrorKind::Inapplicable;
  if (s == "timeout") return ErrorKind::Timeout;
  if (s == "crash") return ErrorKind::Crash;
  if (s == "cycle-pruned") return ErrorKind::CyclePruned;
  throw FormatError("unknown error kind: " + std::string(s));
}

struct NewState {
  ProofState state;
};
struct Finished {};
struct StepFailure {
  ErrorKind kind = ErrorKind::Syntax;
  std::string message;
};
struct StepTimeout {};

using StepResult = std::variant<NewState, Finished, StepFailure, StepTimeout>;

inline bool is_new_state(const StepResult& r) { return std::holds_alternative<NewState>(r); }
inline bool is_finished(const StepResult& r) { return std::holds_alternative<Finished>(r); }
inline bool is_valid(const StepResult& r) { return is_new_state(r) || is_finished(r); }

// Error counterpart of a failing result; nullopt for NewState / Finished.
inline std::optional<StepFailure> failure_of(const StepResult& r) {
  if (const auto* f = std::get_if<StepFailure>(&r)) return *f;
  if (std::holds_alternative<StepTimeout>(r))
    return StepFailure{ErrorKind::Timeout, "step timed out"};
  return std::nullopt;
}

struct TheoremSpec {
  std::string name;
  std::string statement;
};

} // namespace stepwise
