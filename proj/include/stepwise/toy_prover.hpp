#pragma once

#include <algorithm>
#include <array>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "stepwise/prover.hpp"
#include "stepwise/toy_term.hpp"

namespace stepwise::toy {

struct Rule {
  std::string_view name;
  std::string_view from;
  std::string_view to;
};

inline constexpr std::array<Rule, 8> kRules{{
    {"comm_add", "A + B", "B + A"},
    {"assoc_add", "A + B + C", "A + (B + C)"},
    {"comm_mul", "A * B", "B * A"},
    {"assoc_mul", "A * B * C", "A * (B * C)"},
    {"add_zero", "A + 0", "A"},
    {"mul_one", "A * 1", "A"},
    {"mul_zero", "A * 0", "0"},
    {"distrib", "A * (B + C)", "A * B + A * C"},
}};

// The toy tactic vocabulary, spin excluded.
inline std::vector<std::string> tactic_tokens() {
  std::vector<std::string> out{"refl"};
  for (const auto& r : kRules) out.push_back("rw " + std::string(r.name));
  return out;
}

inline const Rule* find_rule(std::string_view name) {
  for (const auto& r : kRules)
    if (r.name == name) return &r;
  return nullptr;
}

struct Location {
  char side = 'l';
  std::vector<int> path;
};

inline std::string render_location(const Location& loc) {
  std::string out(1, loc.side);
  for (int i : loc.path) {
    out.push_back('.');
    out.push_back(static_cast<char>('0' + i));
  }
  return out;
}

inline std::optional<Location> parse_location(std::string_view s) {
  if (s.empty() || (s[0] != 'l' && s[0] != 'r')) return std::nullopt;
  Location loc{s[0], {}};
  std::size_t i = 1;
  while (i < s.size()) {
    if (s[i] != '.' || i + 1 >= s.size() || (s[i + 1] != '0' && s[i + 1] != '1')) return std::nullopt;
    loc.path.push_back(s[i + 1] - '0');
    i += 2;
  }
  return loc;
}

// Outcome of applying one toy step to a goal, independent of timing.
struct Application {
  enum class Kind { NewGoal, Finished, Syntax, Inapplicable, Spin } kind;
  std::optional<Goal> goal;
  std::string message;
};

inline Application apply_step(const Goal& goal, std::string_view step_text) {
  std::istringstream in{std::string(step_text)};
  std::vector<std::string> words;
  for (std::string w; in >> w;) words.push_back(w);
  using K = Application::Kind;
  if (words.empty()) return {K::Syntax, {}, "empty step"};
  if (words[0] == "spin") return {K::Spin, {}, {}};
  if (words[0] == "refl") {
    if (words.size() != 1) return {K::Syntax, {}, "refl takes no premise"};
    if (goal.lhs == goal.rhs) return {K::Finished, {}, {}};
    return {K::Inapplicable, {}, "sides differ"};
  }
  if (words[0] != "rw") return {K::Syntax, {}, "unknown tactic '" + words[0] + "'"};
  if (words.size() < 3 || words.size() > 4) return {K::Syntax, {}, "usage: rw <rule> <l|r>[.path] [rev]"};
  const Rule* rule = find_rule(words[1]);
  if (!rule) return {K::Syntax, {}, "unknown rule '" + words[1] + "'"};
  const auto loc = parse_location(words[2]);
  if (!loc) return {K::Syntax, {}, "bad location '" + words[2] + "'"};
  bool reverse = false;
  if (words.size() == 4) {
    if (words[3] != "rev") return {K::Syntax, {}, "unexpected '" + words[3] + "'"};
    reverse = true;
  }
  Term from = parse_term(rule->from, true);
  Term to = parse_term(rule->to, true);
  if (reverse) std::swap(from, to);
  std::vector<char> bound, needed;
  collect_metas(from, bound);
  collect_metas(to, needed);
  for (char m : needed)
    if (std::find(bound.begin(), bound.end(), m) == bound.end())
      return {K::Inapplicable, {}, "rule cannot be applied right-to-left"};

  const Term& side = goal.side(loc->side);
  const Term* sub = subterm_at(side, loc->path);
  if (!sub) return {K::Inapplicable, {}, "no subterm at " + words[2]};
  Bindings b;
  if (!match(from, *sub, b)) return {K::Inapplicable, {}, "pattern does not match at " + words[2]};
  Term rewritten = replace_at(side, loc->path, instantiate(to, b));
  Goal next = goal;
  (loc->side == 'l' ? next.lhs : next.rhs) = std::move(rewritten);
  return {K::NewGoal, std::move(next), {}};
}

// Steps the toy prover accepts at goal, left-to-right rules only, plus refl
// when it finishes. Order: refl, then rules in table order, l before r,
// paths in preorder.
inline std::vector<std::string> applicable_steps(const Goal& goal) {
  std::vector<std::string> out;
  if (goal.lhs == goal.rhs) out.emplace_back("refl");
  for (const auto& rule : kRules) {
    const Term from = parse_term(rule.from, true);
    for (char side : {'l', 'r'}) {
      std::vector<std::vector<int>> paths;
      std::vector<int> prefix;
      enumerate_paths(goal.side(side), prefix, paths);
      for (const auto& p : paths) {
        Bindings b;
        if (match(from, *subterm_at(goal.side(side), p), b))
          out.push_back("rw " + std::string(rule.name) + " " + render_location({side, p}));
      }
    }
  }
  return out;
}

// Deterministic rewrite prover over toy goals "lhs = rhs".
class ToyProver final : public ProverBackend {
public:
  ProofState init_theorem(const TheoremSpec& spec) override {
    try {
      return ProofState(next_id(), parse_goal(spec.statement).render(), 0);
    } catch (const FormatError& e) {
      throw InitError("cannot initialize '" + spec.name + "': " + e.what());
    }
  }

  StepResult run_step(const ProofState& state, const ProofStep& step, Millis timeout) override {
    std::optional<Goal> goal;
    try {
      goal = parse_goal(state.goal());
    } catch (const FormatError& e) {
      return StepFailure{ErrorKind::Crash, std::string("state is not a toy goal: ") + e.what()};
    }
    Application app = apply_step(*goal, step.full_text());
    switch (app.kind) {
    case Application::Kind::NewGoal: return NewState{ProofState(next_id(), app.goal->render(), state.depth() + 1)};
    case Application::Kind::Finished: return Finished{};
    case Application::Kind::Syntax: return StepFailure{ErrorKind::Syntax, app.message};
    case Application::Kind::Inapplicable: return StepFailure{ErrorKind::Inapplicable, app.message};
    case Application::Kind::Spin:
      std::this_thread::sleep_for(timeout + Millis(1));
      return StepTimeout{};
    }
    return StepFailure{ErrorKind::Crash, "unreachable"};
  }

private:
  StateId next_id() { return StateId{counter_++}; }
  std::uint64_t counter_ = 0;
};

} // namespace stepwise::toy
