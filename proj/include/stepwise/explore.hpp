#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <deque>
#include <iterator>
#include <numeric>
#include <random>
#include <set>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "stepwise/policy.hpp"
#include "stepwise/prover.hpp"
#include "stepwise/schedule.hpp"

namespace stepwise {

// One executed step during exploration: (parent state, step, child).
struct Transition {
  std::string seed_name;
  std::string seed_statement;
  std::vector<std::string> parent_path; // steps from the seed's root state to the parent
  std::string parent_goal;
  ProofStep step;
  double logprob = 0.0;
  std::string status; // state | finished | error
  std::optional<std::string> child_goal;
  std::string message;
  bool valid = false; // child is a proof state or proof finish
};

struct ExploreConfig {
  std::size_t beam = 32;
  double alpha = 0.25;
  std::optional<std::size_t> beta; // default ceil(ceil(alpha * beam) / 2)
  double gamma = 0.9;
  std::size_t budget = 100;
  std::uint64_t seed = 0;
  Millis step_timeout{20'000};

  // Branches kept per expansion: ceil(alpha * beam).
  std::size_t quota() const {
    return static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(beam) - 1e-9));
  }

  std::size_t resolved_beta() const { return beta ? *beta : (quota() + 1) / 2; }

  void validate() const {
    if (beam < 1) throw Error("exploration beam must be >= 1");
    if (!(alpha > 0.0 && alpha <= 1.0)) throw Error("alpha must be in (0, 1]");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw Error("gamma must be in (0, 1]");
    if (resolved_beta() > quota()) throw Error("beta must not exceed ceil(alpha * B)");
  }
};

// Indices of the children kept from one expansion. With more than `quota`
// children: the `beta` highest logprobs (ties by position), followed by a
// uniform sample of quota - beta of the rest in their original order.
template <class URBG>
std::vector<std::size_t> prune_branch_indices(std::span<const double> logprobs, std::size_t quota, std::size_t beta,
                                              URBG& rng) {
  if (beta > quota) throw Error("beta must not exceed the branch quota");
  std::vector<std::size_t> idx(logprobs.size());
  std::iota(idx.begin(), idx.end(), 0);
  if (logprobs.size() <= quota) return idx;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return logprobs[a] > logprobs[b]; });
  std::vector<std::size_t> kept(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(beta));
  std::vector<std::size_t> rest(idx.begin() + static_cast<std::ptrdiff_t>(beta), idx.end());
  std::sort(rest.begin(), rest.end());
  std::sample(rest.begin(), rest.end(), std::back_inserter(kept), quota - beta, rng);
  return kept;
}

template <class T, class URBG>
std::vector<T> prune_branches(const std::vector<std::pair<T, double>>& children, double alpha, std::size_t beam,
                              std::size_t beta, URBG& rng) {
  const auto quota = static_cast<std::size_t>(std::ceil(alpha * static_cast<double>(beam) - 1e-9));
  std::vector<double> lps;
  lps.reserve(children.size());
  for (const auto& c : children) lps.push_back(c.second);
  std::vector<T> out;
  for (std::size_t i : prune_branch_indices(std::span<const double>(lps), quota, beta, rng))
    out.push_back(children[i].first);
  return out;
}

struct ExploreResult {
  std::vector<Transition> transitions;
  std::size_t expansions = 0;
  std::vector<std::size_t> budget_trace; // remaining budget after each expansion
  std::vector<std::size_t> enqueued_per_expansion;
  std::size_t distinct_finishes = 0;
};

// Budget after an expansion that found a new proof path: floor(budget * gamma).
inline std::size_t decay_budget(std::size_t budget, double gamma) {
  return static_cast<std::size_t>(std::floor(static_cast<double>(budget) * gamma + 1e-9));
}

// Proof-state exploration of one seed theorem. States are taken FIFO; each
// expansion decodes B distinct tactics from the set, completes their premises
// and runs every step, recording all of them. New valid states are pruned to
// ceil(alpha * B) and enqueued once per canonical key. The budget shrinks by
// gamma after every expansion that reached a proof finish along a step
// sequence not seen before. Exploration continues past proof finishes.
inline ExploreResult explore_theorem(const TheoremSpec& seed, PolicyBackend& policy, ProverBackend& prover,
                                     const ExploreConfig& cfg, const TacticSet& tactics) {
  cfg.validate();
  struct Item {
    ProofState state;
    std::vector<std::string> path;
  };
  ExploreResult out;
  std::size_t remaining = cfg.budget;
  if (remaining == 0) return out;

  ProofState root = prover.init_theorem(seed);
  std::unordered_set<StateKey, StateKeyHash> enqueued{root.key()};
  std::deque<Item> queue;
  queue.push_back({std::move(root), {}});
  std::set<std::vector<std::string>> finish_paths;
  std::mt19937_64 rng(mix_seed(cfg.seed, seed.name));

  while (!queue.empty() && out.expansions < remaining) {
    Item item = std::move(queue.front());
    queue.pop_front();

    std::vector<TacticCandidate> decoded;
    std::vector<PremiseCompletion> steps;
    try {
      decoded = policy.propose_tactics(item.state, cfg.beam, tactics, cfg.seed);
      std::vector<std::string> names;
      for (const auto& d : decoded) names.push_back(d.tactic);
      if (!names.empty()) steps = policy.complete_premises(item.state, names, cfg.seed);
    } catch (const TransportError&) {
      decoded.clear();
      steps.clear();
    }

    std::vector<std::pair<Item, double>> children;
    std::unordered_set<StateKey, StateKeyHash> seen_here;
    bool new_finish = false;
    for (std::size_t j = 0; j < steps.size() && j < decoded.size(); ++j) {
      const ProofStep& step = steps[j].step;
      StepResult result = prover.run_step(item.state, step, cfg.step_timeout);
      Transition t;
      t.seed_name = seed.name;
      t.seed_statement = seed.statement;
      t.parent_path = item.path;
      t.parent_goal = item.state.goal();
      t.step = step;
      t.logprob = decoded[j].logprob;
      t.valid = is_valid(result);
      if (const auto* ns = std::get_if<NewState>(&result)) {
        t.status = "state";
        t.child_goal = ns->state.goal();
        if (!enqueued.contains(ns->state.key()) && seen_here.insert(ns->state.key()).second) {
          std::vector<std::string> path = item.path;
          path.push_back(step.full_text());
          children.push_back({Item{ns->state, std::move(path)}, t.logprob});
        }
      } else if (is_finished(result)) {
        t.status = "finished";
        std::vector<std::string> path = item.path;
        path.push_back(step.full_text());
        if (finish_paths.insert(std::move(path)).second) new_finish = true;
      } else {
        t.status = "error";
        t.message = failure_of(result)->message;
      }
      out.transitions.push_back(std::move(t));
    }

    auto kept = prune_branches(children, cfg.alpha, cfg.beam, cfg.resolved_beta(), rng);
    out.enqueued_per_expansion.push_back(kept.size());
    for (auto& k : kept) {
      enqueued.insert(k.state.key());
      queue.push_back(std::move(k));
    }
    ++out.expansions;
    if (new_finish) remaining = decay_budget(remaining, cfg.gamma);
    out.budget_trace.push_back(remaining);
  }
  out.distinct_finishes = finish_paths.size();
  return out;
}

struct TacticSetReport {
  std::vector<std::pair<std::string, std::size_t>> counts; // descending
  std::size_t total = 0;
  std::size_t skipped = 0;
  std::size_t kept = 0;
};

// Leading token of a proof step, or empty when the text does not start with
// an identifier.
inline std::string leading_tactic(std::string_view step_text) {
  const std::string norm = normalize_step_text(step_text);
  if (norm.empty()) return {};
  const unsigned char c0 = static_cast<unsigned char>(norm[0]);
  if (!(std::isalpha(c0) || c0 == '_')) return {};
  return norm.substr(0, norm.find(' '));
}

// Frequency-ranked tactic tokens truncated to the shortest prefix whose
// cumulative share reaches p.
inline TacticSet build_tactic_set(const std::vector<std::string>& step_corpus, double p,
                                  TacticSetReport* report = nullptr, std::string source = "step corpus") {
  if (!(p > 0.0 && p <= 1.0)) throw Error("p must be in (0, 1]");
  std::vector<std::pair<std::string, std::size_t>> counts;
  std::unordered_map<std::string, std::size_t> index;
  std::size_t skipped = 0;
  for (const auto& s : step_corpus) {
    std::string t = leading_tactic(s);
    if (t.empty()) {
      ++skipped;
      continue;
    }
    auto [it, inserted] = index.try_emplace(t, counts.size());
    if (inserted) counts.emplace_back(std::move(t), 0);
    ++counts[it->second].second;
  }
  if (counts.empty()) throw Error("step corpus has no parseable steps");
  std::stable_sort(counts.begin(), counts.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<double> weights;
  std::size_t total = 0;
  for (const auto& [t, n] : counts) {
    weights.push_back(static_cast<double>(n));
    total += n;
  }
  const std::size_t keep = nucleus_prefix_length(weights, p);
  std::vector<std::string> tactics;
  for (std::size_t i = 0; i < keep; ++i) tactics.push_back(counts[i].first);
  if (report) *report = TacticSetReport{counts, total, skipped, keep};
  return TacticSet(std::move(tactics), {std::move(source), p});
}

// Transition dump line.
inline nlohmann::ordered_json transition_json(const Transition& t) {
  nlohmann::ordered_json j;
  j["seed"] = t.seed_name;
  j["parent_goal"] = t.parent_goal;
  j["tactic"] = t.step.tactic();
  j["premise"] = t.step.premise();
  j["step"] = t.step.full_text();
  j["logprob"] = t.logprob;
  j["child_goal"] = t.child_goal ? nlohmann::ordered_json(*t.child_goal) : nlohmann::ordered_json(nullptr);
  j["status"] = t.status;
  j["valid"] = t.valid;
  j["seed_statement"] = t.seed_statement;
  j["path"] = t.parent_path;
  if (!t.message.empty()) j["message"] = t.message;
  return j;
}

inline Transition transition_from_json(const nlohmann::json& j) {
  Transition t;
  t.seed_name = j.at("seed").get<std::string>();
  t.parent_goal = j.at("parent_goal").get<std::string>();
  t.step = ProofStep(j.at("tactic").get<std::string>(), j.value("premise", std::string()));
  if (j.contains("step") && normalize_step_text(j["step"].get<std::string>()) != t.step.full_text())
    t.step = ProofStep::parse(j["step"].get<std::string>());
  t.logprob = j.value("logprob", 0.0);
  if (j.contains("child_goal") && j["child_goal"].is_string()) t.child_goal = j["child_goal"].get<std::string>();
  t.status = j.at("status").get<std::string>();
  t.valid = j.at("valid").get<bool>();
  t.seed_statement = j.value("seed_statement", std::string());
  if (j.contains("path")) t.parent_path = j["path"].get<std::vector<std::string>>();
  t.message = j.value("message", std::string());
  return t;
}

} // namespace stepwise
