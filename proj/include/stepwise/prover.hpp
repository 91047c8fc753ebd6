#pragma once

#include <chrono>
#include <span>
#include <vector>

#include "stepwise/state.hpp"

namespace stepwise {

using Millis = std::chrono::milliseconds;

inline constexpr Millis kDefaultStepTimeout{20'000};

// Prover environment. One instance serves one search at a time.
class ProverBackend {
public:
  virtual ~ProverBackend() = default;

  // Throws InitError when the statement is rejected.
  virtual ProofState init_theorem(const TheoremSpec& spec) = 0;

  // States must come from this instance. Never throws for step-level faults;
  // those are reported through the StepResult.
  virtual StepResult run_step(const ProofState& state, const ProofStep& step, Millis timeout) = 0;
};

// Applies steps from the root state. Returns the first non-NewState result,
// or the final NewState.
inline StepResult replay(ProverBackend& prover, const TheoremSpec& spec,
                         std::span<const ProofStep> steps, Millis timeout = kDefaultStepTimeout) {
  StepResult cur = NewState{prover.init_theorem(spec)};
  for (const auto& step : steps) {
    const auto& state = std::get<NewState>(cur).state;
    StepResult next = prover.run_step(state, step, timeout);
    if (!is_new_state(next)) return next;
    cur = std::move(next);
  }
  return cur;
}

} // namespace stepwise
