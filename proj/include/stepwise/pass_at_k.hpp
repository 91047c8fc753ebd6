#pragma once

#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "stepwise/search.hpp"

namespace stepwise {

using ProverFactory = std::function<std::unique_ptr<ProverBackend>()>;

struct AttemptRecord {
  std::string theorem;
  std::size_t round = 0;
  std::size_t attempt = 0;
  std::uint64_t seed = 0;
  std::string outcome; // proved | exhausted | timeout | error
  std::vector<std::string> proof;
  std::size_t expansions = 0;
  std::int64_t wall_ms = 0;
  int max_depth = 0;
  std::string message;
  std::optional<SearchDag> dag;
};

struct PassAtKReport {
  std::size_t theorems = 0;
  std::size_t k = 1;
  std::size_t rounds = 1;
  std::vector<AttemptRecord> records; // round-major, then theorem, then attempt
  std::vector<std::vector<bool>> passed; // [round][theorem]
  std::vector<double> pass_rates;        // per round
  double mean = 0.0;
  double stddev = 0.0; // sample standard deviation; 0 for a single round
};

struct EvalOptions {
  std::size_t workers = 1;
  bool keep_dags = false;
  // Called once per attempt, in record order, as soon as every earlier
  // record is done. The record's dag is released afterwards unless keep_dags.
  std::function<void(AttemptRecord&)> on_record;
};

// Seed of attempt k in round r; distinct for every (r, k).
inline std::uint64_t attempt_seed(std::uint64_t base, std::size_t round, std::size_t k, std::size_t K) {
  return base + static_cast<std::uint64_t>(round * K + k);
}

inline void summarize_rates(PassAtKReport& report) {
  report.pass_rates.clear();
  for (const auto& row : report.passed) {
    std::size_t n = 0;
    for (bool b : row) n += b ? 1 : 0;
    report.pass_rates.push_back(row.empty() ? 0.0 : static_cast<double>(n) / static_cast<double>(row.size()));
  }
  const double R = static_cast<double>(report.pass_rates.size());
  double sum = 0.0;
  for (double r : report.pass_rates) sum += r;
  report.mean = R > 0 ? sum / R : 0.0;
  double ss = 0.0;
  for (double r : report.pass_rates) ss += (r - report.mean) * (r - report.mean);
  report.stddev = report.pass_rates.size() > 1 ? std::sqrt(ss / (R - 1.0)) : 0.0;
}

// Runs K searches per theorem (distinct seeds) in each of R rounds. A theorem
// passes a round when any of its K searches proves it. Theorems are spread
// over `workers` threads; each task builds its own prover and the policy is
// shared.
inline PassAtKReport evaluate_pass_at_k(const std::vector<TheoremSpec>& corpus, PolicyBackend& policy,
                                        const ProverFactory& make_prover, const SearchConfig& cfg,
                                        EvalOptions opts = {}) {
  cfg.validate();
  if (corpus.empty()) throw Error("corpus is empty");
  PassAtKReport report;
  report.theorems = corpus.size();
  report.k = cfg.attempts;
  report.rounds = cfg.rounds;
  const std::size_t K = cfg.attempts;
  const std::size_t tasks = cfg.rounds * corpus.size();
  report.records.resize(tasks * K);
  report.passed.assign(cfg.rounds, std::vector<bool>(corpus.size(), false));

  std::atomic<std::size_t> next{0};
  std::mutex passed_mu;
  std::vector<char> done(tasks, 0);
  std::size_t emitted = 0;
  const bool capture = opts.keep_dags || static_cast<bool>(opts.on_record);
  auto worker = [&] {
    for (std::size_t task = next++; task < tasks; task = next++) {
      const std::size_t round = task / corpus.size();
      const std::size_t ti = task % corpus.size();
      const TheoremSpec& spec = corpus[ti];
      bool any = false;
      for (std::size_t k = 0; k < K; ++k) {
        AttemptRecord& rec = report.records[task * K + k];
        rec.theorem = spec.name;
        rec.round = round;
        rec.attempt = k;
        rec.seed = attempt_seed(cfg.seed, round, k, K);
        SearchConfig one = cfg;
        one.seed = rec.seed;
        try {
          auto prover = make_prover();
          SearchOutcome res = best_first_search(spec, policy, *prover, one);
          rec.outcome = std::string(to_string(res.kind));
          for (const auto& s : res.proof) rec.proof.push_back(s.full_text());
          rec.expansions = res.stats.expansions;
          rec.wall_ms = res.stats.wall_ms;
          rec.max_depth = res.stats.max_depth;
          if (capture) rec.dag = std::move(res.dag);
          any = any || res.proved();
        } catch (const Error& e) {
          rec.outcome = "error";
          rec.message = e.what();
        }
      }
      std::lock_guard lock(passed_mu);
      report.passed[round][ti] = any;
      done[task] = 1;
      for (; emitted < tasks && done[emitted]; ++emitted) {
        for (std::size_t k = 0; k < K; ++k) {
          AttemptRecord& rec = report.records[emitted * K + k];
          if (opts.on_record) opts.on_record(rec);
          if (!opts.keep_dags) rec.dag.reset();
        }
      }
    }
  };
  const std::size_t n = std::max<std::size_t>(1, std::min(opts.workers, tasks));
  if (n == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t i = 0; i < n; ++i) pool.emplace_back(worker);
  }
  summarize_rates(report);
  return report;
}

// One JSONL line per search attempt. wall_ms is written as 0 unless
// with_timing is set, which keeps reports byte-reproducible.
inline nlohmann::ordered_json attempt_json(const AttemptRecord& rec, bool with_timing) {
  nlohmann::ordered_json j;
  j["theorem"] = rec.theorem;
  j["outcome"] = rec.outcome;
  j["proof"] = rec.proof;
  j["expansions"] = rec.expansions;
  j["wall_ms"] = with_timing ? rec.wall_ms : 0;
  j["max_depth"] = rec.max_depth;
  j["round"] = rec.round;
  j["attempt"] = rec.attempt;
  j["seed"] = rec.seed;
  if (!rec.message.empty()) j["message"] = rec.message;
  return j;
}

inline std::string format_rate(double mean, double sd) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f%% \xc2\xb1 %.2f%%", 100.0 * mean, 100.0 * sd);
  return buf;
}

inline nlohmann::ordered_json aggregate_json(const PassAtKReport& r, const SearchConfig& cfg) {
  nlohmann::ordered_json a;
  a["theorems"] = r.theorems;
  a["k"] = r.k;
  a["rounds"] = r.rounds;
  a["expansions"] = cfg.max_expansions;
  a["beam"] = cfg.schedule.describe();
  a["scorer"] = std::string(to_string(cfg.scorer));
  a["seed"] = cfg.seed;
  std::vector<std::size_t> proved;
  for (const auto& row : r.passed) {
    std::size_t n = 0;
    for (bool b : row) n += b ? 1 : 0;
    proved.push_back(n);
  }
  a["proved_per_round"] = proved;
  a["pass_rates"] = r.pass_rates;
  a["mean"] = r.mean;
  a["std"] = r.stddev;
  a["summary"] = format_rate(r.mean, r.stddev);
  nlohmann::ordered_json wrap;
  wrap["aggregate"] = std::move(a);
  return wrap;
}

} // namespace stepwise
