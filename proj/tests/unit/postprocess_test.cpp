#include <cmath>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace sw = stepwise;

namespace {

sw::Transition make(const std::string& seed, const std::string& statement, const std::string& parent,
                    const std::string& step, const std::string& status,
                    std::optional<std::string> child = std::nullopt, std::vector<std::string> path = {}) {
  sw::Transition t;
  t.seed_name = seed;
  t.seed_statement = statement;
  t.parent_goal = parent;
  t.parent_path = std::move(path);
  t.step = sw::ProofStep::parse(step);
  t.status = status;
  t.child_goal = std::move(child);
  t.valid = status != "error";
  return t;
}

std::string words(std::size_t n, std::size_t changed = SIZE_MAX) {
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += i == changed ? "zz" : "w" + std::to_string(i);
  }
  return out;
}

} // namespace

TEST(BleuTokenize, DetachesPunctuation) {
  EXPECT_EQ(sw::bleu_tokenize("f(x)+1=x'"), (std::vector<std::string>{"f", "(", "x", ")", "+", "1", "=", "x'"}));
  EXPECT_EQ(sw::bleu_tokenize("  a_b ⊢ c  "), (std::vector<std::string>{"a_b", "⊢", "c"}));
  EXPECT_TRUE(sw::bleu_tokenize("   ").empty());
}

TEST(Bleu, Examples) {
  EXPECT_DOUBLE_EQ(sw::bleu("x + 0 = x", "x + 0 = x"), 1.0);
  EXPECT_NEAR(sw::bleu("a b c d", "a b c d e"), std::exp(1.0 - 5.0 / 4.0), 1e-6);
  EXPECT_NEAR(sw::bleu("a b c d", "a b c d e"), 0.7788, 1e-4);
  EXPECT_EQ(sw::bleu("a b c d", "e f g h", sw::Smoothing::None), 0.0);
  EXPECT_LT(sw::bleu("a b c d", "e f g h"), 0.8);
  EXPECT_EQ(sw::bleu("", "a"), 0.0);
  EXPECT_EQ(sw::bleu("a", "   "), 0.0);
}

TEST(Bleu, ShortCandidatesAndDisjointVocabulary) {
  EXPECT_EQ(sw::bleu("z9", "b3"), 0.0);
  EXPECT_EQ(sw::bleu("z9 z8", "b3 b4"), 0.0);
  // only the orders a candidate can have enter the mean
  EXPECT_NEAR(sw::bleu("a", "a b"), std::exp(1.0 - 2.0), 1e-12);
  EXPECT_NEAR(sw::bleu("a b", "a c"), std::sqrt(0.5 * 0.5), 1e-12);
  EXPECT_NEAR(sw::bleu("a b c", "a b d"), std::cbrt(2.0 / 3 * 1.0 / 2 * 1.0 / 2), 1e-12);
}

TEST(Bleu, OneChangedTokenInTwenty) {
  // hand-count: 19/20 unigrams, 17/19 bigrams, 15/18 trigrams, 13/17 4-grams
  const double expected =
      std::exp((std::log(19.0 / 20) + std::log(17.0 / 19) + std::log(15.0 / 18) + std::log(13.0 / 17)) / 4.0);
  const double got = sw::bleu(words(20, 10), words(20));
  EXPECT_NEAR(got, expected, 1e-12);
  EXPECT_GT(got, 0.8);
}

TEST(Bleu, IdentityOnRandomTexts) {
  for (const auto& spec : testing_support::toy_corpus()) EXPECT_DOUBLE_EQ(sw::bleu(spec.statement, spec.statement), 1.0);
}

TEST(Dedup, Examples) {
  const auto a = make("s1", "x + 0 = x", "x + 0 = x", "rw add_zero l", "state", "x = x");
  const auto b = make("s2", "x + 0 = x", "x  + 0 = x", "rw  add_zero l", "state", "x = x");
  const auto c = make("s1", "x + 0 = x", "x + 0 = x", "rw add_zero r", "error");
  const auto out = sw::dedup({a, b, c});
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].seed_name, "s1");
  EXPECT_EQ(out[1].step.full_text(), "rw add_zero r");
  EXPECT_TRUE(sw::dedup({}).empty());
  EXPECT_EQ(sw::dedup(out).size(), out.size());
}

TEST(Decontaminate, Examples) {
  const std::vector<std::string> bench{words(20), "x + 0 = x"};
  const auto verbatim = make("s", "x + 0 = x", "q = q", "refl", "finished");
  const auto disjoint = make("d", "alpha beta gamma delta epsilon", "alpha beta gamma delta epsilon", "refl", "error");
  const auto near = make("n", "a = a", words(20, 10), "refl", "error");
  const auto res = sw::decontaminate({verbatim, disjoint, near}, bench, 0.8);
  ASSERT_EQ(res.kept.size(), 1u);
  EXPECT_EQ(res.kept[0].seed_name, "d");
  ASSERT_EQ(res.report.size(), 2u);
  EXPECT_EQ(res.report[0].index, 0u);
  EXPECT_EQ(res.report[0].field, "seed_statement");
  EXPECT_EQ(res.report[0].benchmark, 1u);
  EXPECT_DOUBLE_EQ(res.report[0].score, 1.0);
  EXPECT_EQ(res.report[1].field, "parent_goal");
  // verbatim copies go at any threshold
  EXPECT_EQ(sw::decontaminate({verbatim}, bench, 1.0).kept.size(), 0u);
  // clean data stays clean
  EXPECT_EQ(sw::decontaminate(res.kept, bench, 0.8).kept.size(), res.kept.size());
  EXPECT_THROW(sw::decontaminate({}, bench, 0.0), sw::Error);
}

TEST(RejectInvalid, KeepsConsistentDropsFlaggedAndCorrupted) {
  sw::toy::ToyProver prover;
  const std::string seed = "0 + x = x";
  const auto good = make("s", seed, "0 + x = x", "rw comm_add l", "state", "x + 0 = x");
  const auto deep = make("s", seed, "x + 0 = x", "rw add_zero l", "state", "x = x", {"rw comm_add l"});
  const auto fin = make("s", seed, "x = x", "refl", "finished", std::nullopt, {"rw comm_add l", "rw add_zero l"});
  const auto flagged = make("s", seed, "0 + x = x", "refl", "error");
  auto corrupted_child = good;
  corrupted_child.child_goal = "x = 0";
  auto corrupted_status = deep;
  corrupted_status.status = "finished";
  corrupted_status.child_goal.reset();
  auto corrupted_parent = deep;
  corrupted_parent.parent_goal = "x + 1 = x";
  auto bad_path = deep;
  bad_path.parent_path = {"refl"};
  sw::RejectionReport report;
  const auto kept = sw::reject_invalid(
      {good, deep, fin, flagged, corrupted_child, corrupted_status, corrupted_parent, bad_path}, prover,
      sw::Millis(1000), &report);
  ASSERT_EQ(kept.size(), 3u);
  EXPECT_EQ(kept[2].status, "finished");
  EXPECT_EQ(report.flagged_invalid, 1u);
  EXPECT_EQ(report.mismatched, 4u);
  EXPECT_EQ(report.infrastructure, 0u);
  EXPECT_EQ(report.reasons.size(), 4u);
}

TEST(RejectInvalid, InfrastructureFailureDrops) {
  sw::toy::ToyProver prover;
  sw::RejectionReport report;
  const auto kept = sw::reject_invalid({make("b", "x + = x", "x + = x", "refl", "finished")}, prover,
                                       sw::Millis(1000), &report);
  EXPECT_TRUE(kept.empty());
  EXPECT_EQ(report.infrastructure, 1u);
}

TEST(TrainingRecord, ByteExactTemplate) {
  const auto t = make("s", "x = x", "x = x", "refl", "finished");
  EXPECT_EQ(sw::training_record(t).dump(), R"({"prompt":"[GOAL]\nx = x\n[PROOFSTEP]\n","completion":"refl"})");
  const auto multi = make("s", "s", "h : a = b\n⊢ b = a", "rw comm_add l", "state", "q");
  EXPECT_EQ(sw::training_record(multi)["prompt"], "[GOAL]\nh : a = b\n⊢ b = a\n[PROOFSTEP]\n");
  EXPECT_EQ(sw::training_record(multi)["completion"], "rw comm_add l");
}

TEST(Pipeline, CountsAreMonotoneAndRecordsReplay) {
  sw::toy::ExhaustivePolicy policy;
  const auto corpus = testing_support::toy_corpus();
  std::vector<sw::Transition> all;
  for (std::size_t i = 0; i < 8; ++i) {
    sw::toy::ToyProver prover;
    sw::ExploreConfig cfg;
    cfg.beam = 9;
    cfg.budget = 6;
    cfg.step_timeout = sw::Millis(200);
    auto res = sw::explore_theorem(corpus[i], policy, prover, cfg, sw::toy::default_tactic_set());
    all.insert(all.end(), res.transitions.begin(), res.transitions.end());
  }
  // duplicate a slice to give dedup work
  all.insert(all.end(), all.begin(), all.begin() + 10);
  const std::vector<std::string> bench{corpus[0].statement, corpus[1].statement};
  sw::toy::ToyProver prover;
  const auto res = sw::curate(all, bench, 0.8, prover, sw::Millis(200));
  EXPECT_EQ(res.counts.input, all.size());
  EXPECT_LT(res.counts.after_dedup, res.counts.input);
  EXPECT_LT(res.counts.after_decontamination, res.counts.after_dedup);
  EXPECT_LT(res.counts.after_rejection, res.counts.after_decontamination);
  EXPECT_GT(res.counts.after_rejection, 0u);
  EXPECT_EQ(res.rejection.mismatched, 0u);
  sw::toy::ToyProver check;
  for (const auto& t : res.records) {
    const auto parent = check.init_theorem({"p", t.parent_goal});
    EXPECT_TRUE(sw::is_valid(check.run_step(parent, t.step, sw::Millis(200))));
    for (const auto& b : bench) EXPECT_LT(sw::bleu(t.seed_statement, b), 0.8);
  }
}
