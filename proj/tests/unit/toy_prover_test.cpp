#include <chrono>
#include <random>

#include <gtest/gtest.h>

#include "test_support.hpp"

namespace sw = stepwise;
namespace toy = stepwise::toy;

namespace {

constexpr std::uint64_t kPrime = 1'000'000'007ULL;

std::uint64_t eval(const toy::Term& t, const std::map<char, std::uint64_t>& env) {
  switch (t.kind()) {
  case toy::Term::Kind::Num: return t.value() % kPrime;
  case toy::Term::Kind::Var: return env.at(t.name());
  case toy::Term::Kind::Add: return (eval(t.left(), env) + eval(t.right(), env)) % kPrime;
  case toy::Term::Kind::Mul: return (eval(t.left(), env) * eval(t.right(), env)) % kPrime;
  default: throw std::logic_error("metavariable in goal");
  }
}

sw::StepResult run(sw::ProverBackend& p, const std::string& goal, const std::string& step,
                   sw::Millis timeout = sw::Millis(1000)) {
  const auto s = p.init_theorem({"t", goal});
  return p.run_step(s, sw::ProofStep::parse(step), timeout);
}

std::string goal_of(const sw::StepResult& r) { return std::get<sw::NewState>(r).state.goal(); }

} // namespace

TEST(ToyTerm, RenderUsesMinimalParentheses) {
  EXPECT_EQ(toy::parse_term("(a + b) + c").render(), "a + b + c");
  EXPECT_EQ(toy::parse_term("a + (b + c)").render(), "a + (b + c)");
  EXPECT_EQ(toy::parse_term("a * (b + c)").render(), "a * (b + c)");
  EXPECT_EQ(toy::parse_term("(a*b)+c").render(), "a * b + c");
  EXPECT_EQ(toy::parse_goal(" x+0 =x ").render(), "x + 0 = x");
}

TEST(ToyTerm, MalformedInputThrows) {
  for (const char* bad : {"x + = x", "x", "x = y = z", "(x = x", "x + 0 = ", "x ? y = x"})
    EXPECT_THROW(toy::parse_goal(bad), sw::FormatError) << bad;
}

TEST(ToyProver, RuleExamples) {
  toy::ToyProver p;
  EXPECT_EQ(goal_of(run(p, "x + 0 = x", "rw add_zero l")), "x = x");
  EXPECT_TRUE(sw::is_finished(run(p, "x = x", "refl")));
  EXPECT_EQ(goal_of(run(p, "a + b = b + a", "rw comm_add l")), "b + a = b + a");
  EXPECT_EQ(goal_of(run(p, "a + b + c = a", "rw assoc_add l")), "a + (b + c) = a");
  EXPECT_EQ(goal_of(run(p, "a * (b + c) = d", "rw distrib l")), "a * b + a * c = d");
  EXPECT_EQ(goal_of(run(p, "y = x * 1 + 0", "rw mul_one r.0")), "y = x + 0");
  EXPECT_EQ(goal_of(run(p, "x = x", "rw add_zero l rev")), "x + 0 = x");
}

TEST(ToyProver, FailureKinds) {
  toy::ToyProver p;
  auto kind = [&](const std::string& goal, const std::string& step) {
    return sw::failure_of(run(p, goal, step))->kind;
  };
  EXPECT_EQ(kind("x = y", "refl"), sw::ErrorKind::Inapplicable);
  EXPECT_EQ(kind("x = x", "rw add_zero l"), sw::ErrorKind::Inapplicable);
  EXPECT_EQ(kind("x = x", "rw add_zero l.0"), sw::ErrorKind::Inapplicable);
  EXPECT_EQ(kind("x = x", "frobnicate"), sw::ErrorKind::Syntax);
  EXPECT_EQ(kind("x = x", "rw frobnicate l"), sw::ErrorKind::Syntax);
  EXPECT_EQ(kind("x = x", "rw add_zero q"), sw::ErrorKind::Syntax);
  EXPECT_EQ(kind("x = x", "refl x"), sw::ErrorKind::Syntax);
  // right-to-left mul_zero would invent a term
  EXPECT_EQ(kind("0 = 0", "rw mul_zero l rev"), sw::ErrorKind::Inapplicable);
}

TEST(ToyProver, SpinTimesOut) {
  toy::ToyProver p;
  const auto start = std::chrono::steady_clock::now();
  const auto r = run(p, "x = x", "spin", sw::Millis(50));
  const auto elapsed = std::chrono::steady_clock::now() - start;
  EXPECT_TRUE(std::holds_alternative<sw::StepTimeout>(r));
  EXPECT_GE(elapsed, std::chrono::milliseconds(50));
  EXPECT_LT(elapsed, std::chrono::seconds(2));
}

TEST(ToyProver, MalformedInitThrows) {
  toy::ToyProver p;
  EXPECT_THROW(p.init_theorem({"bad", "x + = x"}), sw::InitError);
}

TEST(ToyProver, ReplayExamples) {
  toy::ToyProver p;
  const sw::TheoremSpec spec{"t", "0 + x = x"};
  auto steps = [](std::initializer_list<const char*> texts) {
    std::vector<sw::ProofStep> out;
    for (auto t : texts) out.push_back(sw::ProofStep::parse(t));
    return out;
  };
  EXPECT_TRUE(sw::is_finished(sw::replay(p, spec, steps({"rw comm_add l", "rw add_zero l", "refl"}))));
  EXPECT_EQ(goal_of(sw::replay(p, spec, steps({"rw comm_add l"}))), "x + 0 = x");
  EXPECT_EQ(goal_of(sw::replay(p, spec, {})), "0 + x = x");
  // stops at the first failure
  EXPECT_EQ(sw::failure_of(sw::replay(p, spec, steps({"refl", "rw comm_add l"})))->kind, sw::ErrorKind::Inapplicable);
}

TEST(ToyProver, ApplicableStepsAllApply) {
  toy::ToyProver p;
  for (const auto& spec : testing_support::toy_corpus()) {
    const auto root = p.init_theorem(spec);
    for (const auto& s : toy::applicable_steps(toy::parse_goal(root.goal())))
      EXPECT_TRUE(sw::is_valid(p.run_step(root, sw::ProofStep::parse(s), sw::Millis(100))))
          << spec.statement << " / " << s;
  }
}

// Every rewrite preserves the value of both sides modulo a large prime.
TEST(ToyProver, RewritesAreSound) {
  std::mt19937_64 rng(11);
  toy::ToyProver p;
  const char* goals[] = {"a * (b + c) + 0 = a * 1 * (c + b * 1)", "x + y * 0 + (z + 0) * 1 = x * (y + z)",
                         "a + b + c + d = d * 1 * 1", "0 * a + a * (0 + b) = b"};
  for (const char* g : goals) {
    const auto root = p.init_theorem({"g", g});
    const auto parsed = toy::parse_goal(root.goal());
    for (const auto& s : toy::applicable_steps(parsed)) {
      const auto r = p.run_step(root, sw::ProofStep::parse(s), sw::Millis(100));
      if (!sw::is_new_state(r)) continue;
      const auto next = toy::parse_goal(goal_of(r));
      for (int trial = 0; trial < 1000; ++trial) {
        std::map<char, std::uint64_t> env;
        for (char v = 'a'; v <= 'z'; ++v) env[v] = rng() % kPrime;
        ASSERT_EQ(eval(parsed.lhs, env), eval(next.lhs, env)) << g << " / " << s;
        ASSERT_EQ(eval(parsed.rhs, env), eval(next.rhs, env)) << g << " / " << s;
      }
    }
  }
}

TEST(ToyCorpus, LoadsAndRejectsDuplicates) {
  const auto corpus = testing_support::toy_corpus();
  EXPECT_EQ(corpus.size(), 40u);
  std::istringstream dup(R"({"name":"a","statement":"x = x"}
{"name":"a","statement":"y = y"}
)");
  EXPECT_THROW(sw::read_corpus(dup, "dup"), sw::FormatError);
}
