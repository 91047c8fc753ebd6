#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <string>
#include <unordered_set>
#include <vector>

#include <nlohmann/json.hpp>

#include "stepwise/explore.hpp"
#include "stepwise/prover.hpp"
#include "stepwise/remote_policy.hpp"

namespace stepwise {

// Whitespace split with ASCII punctuation and brackets detached as their own
// tokens. Multi-byte characters stay inside their word.
inline std::vector<std::string> bleu_tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string cur;
  auto flush = [&] {
    if (!cur.empty()) out.push_back(std::move(cur));
    cur.clear();
  };
  for (char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c)) {
      flush();
    } else if (c < 0x80 && std::ispunct(c) && c != '_' && c != '\'') {
      flush();
      out.emplace_back(1, ch);
    } else {
      cur.push_back(ch);
    }
  }
  flush();
  return out;
}

enum class Smoothing { AddOne, None };

// Sentence BLEU over n = 1..4 with uniform weights and brevity penalty
// min(1, exp(1 - |ref|/|cand|)). AddOne replaces an order with zero matches
// by 1 / (count + 1). Orders longer than the candidate are left out of the
// mean. No shared unigram means no shared n-gram at all: the score is 0.
inline double bleu(std::string_view candidate, std::string_view reference, Smoothing smoothing = Smoothing::AddOne) {
  const auto cand = bleu_tokenize(candidate);
  const auto ref = bleu_tokenize(reference);
  if (cand.empty() || ref.empty()) return 0.0;
  double log_sum = 0.0;
  std::size_t orders = 0;
  for (std::size_t n = 1; n <= 4; ++n) {
    if (cand.size() < n) continue;
    ++orders;
    std::map<std::vector<std::string>, std::size_t> ref_counts, cand_counts;
    for (std::size_t i = 0; i + n <= ref.size(); ++i) ++ref_counts[{ref.begin() + i, ref.begin() + i + n}];
    for (std::size_t i = 0; i + n <= cand.size(); ++i) ++cand_counts[{cand.begin() + i, cand.begin() + i + n}];
    std::size_t matches = 0;
    for (const auto& [gram, c] : cand_counts) {
      auto it = ref_counts.find(gram);
      if (it != ref_counts.end()) matches += std::min(c, it->second);
    }
    const std::size_t total = cand.size() - n + 1;
    double p;
    if (matches > 0) {
      p = static_cast<double>(matches) / static_cast<double>(total);
    } else if (n == 1) {
      return 0.0;
    } else if (smoothing == Smoothing::AddOne) {
      p = 1.0 / static_cast<double>(total + 1);
    } else {
      return 0.0;
    }
    log_sum += std::log(p);
  }
  const double bp = std::min(1.0, std::exp(1.0 - static_cast<double>(ref.size()) / static_cast<double>(cand.size())));
  return bp * std::exp(log_sum / static_cast<double>(orders));
}

// First occurrence per (parent canonical key, normalized step text).
inline std::vector<Transition> dedup(const std::vector<Transition>& in) {
  std::unordered_set<std::string> seen;
  std::vector<Transition> out;
  for (const auto& t : in) {
    std::string key = canonical_state_key(t.parent_goal).hex();
    key += '\n';
    key += t.step.full_text();
    if (seen.insert(std::move(key)).second) out.push_back(t);
  }
  return out;
}

struct Removal {
  std::size_t index = 0; // position in the input
  std::string field;     // seed_statement | parent_goal
  std::size_t benchmark = 0;
  double score = 0.0;
};

struct DecontaminationResult {
  std::vector<Transition> kept;
  std::vector<Transition> removed;
  std::vector<Removal> report;
};

// Drops transitions whose seed statement or parent goal reaches BLEU >=
// threshold against any benchmark statement.
inline DecontaminationResult decontaminate(const std::vector<Transition>& in,
                                           const std::vector<std::string>& benchmark, double threshold) {
  if (!(threshold > 0.0 && threshold <= 1.0)) throw Error("BLEU threshold must be in (0, 1]");
  DecontaminationResult out;
  std::map<std::string, std::optional<Removal>> cache;
  auto check = [&](const std::string& text, const char* field) -> std::optional<Removal> {
    if (text.empty()) return std::nullopt;
    auto it = cache.find(text);
    if (it == cache.end()) {
      std::optional<Removal> hit;
      for (std::size_t b = 0; b < benchmark.size() && !hit; ++b) {
        const double s = bleu(text, benchmark[b]);
        if (s >= threshold) hit = Removal{0, {}, b, s};
      }
      it = cache.emplace(text, hit).first;
    }
    if (!it->second) return std::nullopt;
    Removal r = *it->second;
    r.field = field;
    return r;
  };
  for (std::size_t i = 0; i < in.size(); ++i) {
    auto hit = check(in[i].seed_statement, "seed_statement");
    if (!hit) hit = check(in[i].parent_goal, "parent_goal");
    if (hit) {
      hit->index = i;
      out.report.push_back(*hit);
      out.removed.push_back(in[i]);
    } else {
      out.kept.push_back(in[i]);
    }
  }
  return out;
}

struct RejectionReport {
  std::size_t flagged_invalid = 0; // dropped without replay
  std::size_t mismatched = 0;      // replay disagreed with the record
  std::size_t infrastructure = 0;  // replay could not run
  std::vector<std::string> reasons;
};

// Keeps the transitions whose step, replayed at the parent state, reproduces
// the recorded result: same status, and for new states the same child key.
// Parents are rebuilt by replaying the recorded path from the seed statement.
inline std::vector<Transition> reject_invalid(const std::vector<Transition>& in, ProverBackend& prover,
                                              Millis step_timeout = kDefaultStepTimeout,
                                              RejectionReport* report = nullptr) {
  RejectionReport local;
  RejectionReport& rep = report ? *report : local;
  std::map<std::pair<std::string, std::vector<std::string>>, std::optional<ProofState>> parents;
  std::vector<Transition> out;
  for (const auto& t : in) {
    if (!t.valid || t.status == "error") {
      ++rep.flagged_invalid;
      continue;
    }
    try {
      auto key = std::make_pair(t.seed_statement, t.parent_path);
      auto it = parents.find(key);
      if (it == parents.end()) {
        std::optional<ProofState> parent;
        const TheoremSpec spec{t.seed_name, t.seed_statement};
        if (t.parent_path.empty()) {
          parent = prover.init_theorem(spec);
        } else {
          std::vector<ProofStep> steps;
          for (const auto& s : t.parent_path) steps.push_back(ProofStep::parse(s));
          StepResult r = replay(prover, spec, steps, step_timeout);
          if (const auto* ns = std::get_if<NewState>(&r)) parent = ns->state;
        }
        it = parents.emplace(std::move(key), std::move(parent)).first;
      }
      if (!it->second) {
        ++rep.mismatched;
        rep.reasons.push_back(t.seed_name + ": recorded path does not reach a proof state");
        continue;
      }
      const ProofState& parent = *it->second;
      if (canonical_state_key(parent.goal()) != canonical_state_key(t.parent_goal)) {
        ++rep.mismatched;
        rep.reasons.push_back(t.seed_name + ": parent goal differs on replay");
        continue;
      }
      StepResult r = prover.run_step(parent, t.step, step_timeout);
      bool ok = false;
      if (const auto* ns = std::get_if<NewState>(&r)) {
        ok = t.status == "state" && t.child_goal &&
             canonical_state_key(*t.child_goal) == ns->state.key();
      } else if (is_finished(r)) {
        ok = t.status == "finished";
      }
      if (ok) {
        out.push_back(t);
      } else {
        ++rep.mismatched;
        rep.reasons.push_back(t.seed_name + ": step '" + t.step.full_text() + "' does not replay as recorded");
      }
    } catch (const Error& e) {
      ++rep.infrastructure;
      rep.reasons.push_back(t.seed_name + ": " + e.what());
    }
  }
  return out;
}

inline nlohmann::ordered_json training_record(const Transition& t) {
  nlohmann::ordered_json j;
  j["prompt"] = proofstep_prompt(t.parent_goal);
  j["completion"] = t.step.full_text();
  return j;
}

struct PipelineCounts {
  std::size_t input = 0;
  std::size_t after_dedup = 0;
  std::size_t after_decontamination = 0;
  std::size_t after_rejection = 0;
};

struct PipelineResult {
  std::vector<Transition> records;
  PipelineCounts counts;
  DecontaminationResult decontamination;
  RejectionReport rejection;
};

// dedup -> decontaminate -> reject_invalid.
inline PipelineResult curate(const std::vector<Transition>& in, const std::vector<std::string>& benchmark,
                             double bleu_threshold, ProverBackend& prover, Millis step_timeout = kDefaultStepTimeout) {
  PipelineResult res;
  res.counts.input = in.size();
  auto unique = dedup(in);
  res.counts.after_dedup = unique.size();
  res.decontamination = decontaminate(unique, benchmark, bleu_threshold);
  res.counts.after_decontamination = res.decontamination.kept.size();
  res.records = reject_invalid(res.decontamination.kept, prover, step_timeout, &res.rejection);
  res.counts.after_rejection = res.records.size();
  return res;
}

} // namespace stepwise
