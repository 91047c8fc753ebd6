#pragma once

#include <chrono>
#include <cmath>
#include <optional>
#include <queue>
#include <string>
#include <vector>

#include "stepwise/dag.hpp"
#include "stepwise/policy.hpp"
#include "stepwise/prover.hpp"
#include "stepwise/schedule.hpp"

namespace stepwise {

enum class Scorer { PathSum, MeanBeamLogprob };

inline std::string_view to_string(Scorer s) { return s == Scorer::PathSum ? "path-sum" : "mean-beam"; }

struct SearchConfig {
  std::size_t attempts = 1;         // K, searches per theorem
  std::size_t max_expansions = 600; // E
  BeamSchedule schedule;
  Scorer scorer = Scorer::PathSum;
  Millis global_timeout{1'800'000};
  Millis step_timeout{20'000};
  double error_abort_fraction = 0.5;
  std::uint64_t seed = 0;
  std::size_t rounds = 3; // evaluation repetitions for mean +- sd

  void validate() const {
    if (attempts < 1) throw Error("K must be >= 1");
    if (max_expansions < 1) throw Error("E must be >= 1");
    if (rounds < 1) throw Error("rounds must be >= 1");
    if (!(error_abort_fraction > 0.0 && error_abort_fraction <= 1.0))
      throw Error("error-abort fraction must be in (0, 1]");
    if (global_timeout.count() <= 0 || step_timeout.count() <= 0) throw Error("timeouts must be positive");
    schedule.validate();
  }
};

// Child scores for one expansion. PathSum adds each candidate's logprob to
// the parent score; MeanBeamLogprob gives every child the parent score plus
// the beam's mean logprob.
inline std::vector<double> score_candidates(Scorer scorer, double parent_score,
                                            const std::vector<ScoredCandidate>& beam) {
  std::vector<double> out;
  out.reserve(beam.size());
  if (scorer == Scorer::PathSum) {
    for (const auto& c : beam) out.push_back(compute_score(parent_score, c.logprob));
    return out;
  }
  if (beam.empty()) return out;
  double sum = 0.0;
  for (const auto& c : beam) sum += c.logprob;
  const double mean = sum / static_cast<double>(beam.size());
  out.assign(beam.size(), compute_score(parent_score, mean));
  return out;
}

// Error children an expansion of `beam` candidates may produce before the
// node is discarded: the node goes once errors exceed ceil(fraction * beam).
inline std::size_t error_abort_threshold(double fraction, std::size_t beam) {
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(beam) - 1e-9));
}

struct SearchStats {
  std::size_t expansions = 0;
  std::size_t steps_executed = 0;
  std::size_t discarded_nodes = 0;
  std::int64_t wall_ms = 0;
  std::size_t open_nodes = 0;
  std::size_t error_nodes = 0;
  std::size_t finished_nodes = 0;
  int max_depth = 0;
};

struct SearchOutcome {
  enum class Kind { Proved, Exhausted, TimedOut };

  Kind kind = Kind::Exhausted;
  std::vector<ProofStep> proof;
  SearchDag dag;
  SearchStats stats;
  // requested beam size per expansion, in expansion order
  std::vector<std::size_t> beam_trace;

  bool proved() const { return kind == Kind::Proved; }
};

inline std::string_view to_string(SearchOutcome::Kind k) {
  switch (k) {
  case SearchOutcome::Kind::Proved: return "proved";
  case SearchOutcome::Kind::Exhausted: return "exhausted";
  case SearchOutcome::Kind::TimedOut: return "timeout";
  }
  return "exhausted";
}

namespace detail {

struct FrontierEntry {
  double score;
  std::uint64_t seq;
  NodeId node;
};

// Highest score first; FIFO among equal scores.
struct FrontierOrder {
  bool operator()(const FrontierEntry& a, const FrontierEntry& b) const {
    if (a.score != b.score) return a.score < b.score;
    return a.seq > b.seq;
  }
};

inline void fill_stats(const SearchDag& dag, SearchStats& st) {
  st.open_nodes = st.error_nodes = st.finished_nodes = 0;
  st.max_depth = 0;
  for (const auto& n : dag.nodes()) {
    switch (n.status) {
    case NodeStatus::Open: ++st.open_nodes; break;
    case NodeStatus::Error: ++st.error_nodes; break;
    case NodeStatus::ProofFinished: ++st.finished_nodes; break;
    }
    st.max_depth = std::max(st.max_depth, n.depth);
  }
}

} // namespace detail

// Best-first search: repeatedly expand the highest-scoring open node, asking
// the policy for size_at(e) candidates and executing them in order. Stops at
// the first ProofFinished child, when the frontier empties, after E
// expansions, or when the global timeout passes (checked between steps).
// Throws InitError when the theorem cannot be initialized.
inline SearchOutcome best_first_search(const TheoremSpec& spec, PolicyBackend& policy, ProverBackend& prover,
                                       const SearchConfig& cfg) {
  using clock = std::chrono::steady_clock;
  cfg.validate();
  const auto start = clock::now();
  auto elapsed = [&] { return std::chrono::duration_cast<Millis>(clock::now() - start); };

  SearchOutcome out{SearchOutcome::Kind::Exhausted, {}, SearchDag(prover.init_theorem(spec)), {}, {}};
  SearchDag& dag = out.dag;
  std::priority_queue<detail::FrontierEntry, std::vector<detail::FrontierEntry>, detail::FrontierOrder> frontier;
  std::uint64_t seq = 0;
  frontier.push({0.0, seq++, dag.root()});

  auto finish = [&](SearchOutcome::Kind kind) {
    out.kind = kind;
    out.stats.expansions = dag.expansions();
    out.stats.wall_ms = elapsed().count();
    detail::fill_stats(dag, out.stats);
    return std::move(out);
  };

  for (std::size_t e = 0; e < cfg.max_expansions; ++e) {
    if (elapsed() >= cfg.global_timeout) return finish(SearchOutcome::Kind::TimedOut);
    if (frontier.empty()) return finish(SearchOutcome::Kind::Exhausted);
    const NodeId current = frontier.top().node;
    frontier.pop();
    const ProofState state = *dag.node(current).state;
    const double parent_score = dag.node(current).score;

    const std::size_t beam = cfg.schedule.size_at(e, cfg.max_expansions);
    out.beam_trace.push_back(beam);
    std::vector<ScoredCandidate> candidates;
    try {
      candidates = policy.propose(state, beam, cfg.seed);
    } catch (const TransportError&) {
      candidates.clear();
    }
    if (candidates.size() > beam) candidates.resize(beam);
    if (cfg.schedule.top_p) candidates = top_p_filter(std::move(candidates), *cfg.schedule.top_p);
    dag.mark_expanded(current);
    const std::vector<double> scores = score_candidates(cfg.scorer, parent_score, candidates);

    const std::size_t abort_after = error_abort_threshold(cfg.error_abort_fraction, beam);
    std::size_t errors = 0;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
      if (elapsed() >= cfg.global_timeout) return finish(SearchOutcome::Kind::TimedOut);
      const auto& cand = candidates[i];
      const auto step_start = clock::now();
      StepResult result = prover.run_step(state, cand.step, cfg.step_timeout);
      if (clock::now() - step_start > cfg.step_timeout && !std::holds_alternative<StepTimeout>(result))
        result = StepTimeout{};
      ++out.stats.steps_executed;

      const ChildInsert ins = dag.add_child(current, cand.step, cand.logprob, result, scores[i]);
      if (is_finished(result)) {
        out.proof = extract_proof(dag, ins.node);
        return finish(SearchOutcome::Kind::Proved);
      }
      if (is_new_state(result)) {
        if (ins.created && dag.node(ins.node).status == NodeStatus::Open)
          frontier.push({dag.node(ins.node).score, seq++, ins.node});
        continue;
      }
      if (++errors > abort_after) {
        dag.mark_discarded(current);
        ++out.stats.discarded_nodes;
        break;
      }
    }
  }
  return finish(SearchOutcome::Kind::Exhausted);
}

} // namespace stepwise
