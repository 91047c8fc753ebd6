#include <thread>

#include <gtest/gtest.h>
#include <httplib.h>

#include "test_support.hpp"

namespace sw = stepwise;
using testing_support::policy_from;

namespace {

sw::ProofState st(const std::string& goal) { return sw::ProofState(sw::StateId{0}, goal, 0); }

const char* kTable = R"({"goal": "x = x", "candidates": [{"step": "refl", "logprob": -0.1}]}
{"goal": "x + 0 = x", "candidates": [{"step": "rw comm_add l", "logprob": -0.9}, {"step": "rw add_zero l", "logprob": -0.2}, {"step": "rw add_zero  l", "logprob": -0.05}, {"step": "refl", "logprob": -2.0}]}
{"goal": "a + b = *", "match": "glob", "candidates": [{"step": "rw comm_add l", "logprob": -0.3}]}
{"goal": "a + b = b + a", "seeds": [2], "candidates": [{"step": "rw comm_add r", "logprob": -0.4}]}
)";

// Minimal completion endpoint on a loopback port.
class FakeCompletionServer {
public:
  explicit FakeCompletionServer(std::function<nlohmann::json(const nlohmann::json&)> reply) {
    server_.Post("/v1/completions", [reply, this](const httplib::Request& req, httplib::Response& res) {
      const auto body = nlohmann::json::parse(req.body);
      {
        std::lock_guard lock(mu_);
        requests_.push_back(body);
      }
      res.set_content(reply(body).dump(), "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }
  ~FakeCompletionServer() {
    server_.stop();
    thread_.join();
  }

  std::string url() const { return "http://127.0.0.1:" + std::to_string(port_); }
  std::vector<nlohmann::json> requests() {
    std::lock_guard lock(mu_);
    return requests_;
  }

private:
  httplib::Server server_;
  int port_ = 0;
  std::thread thread_;
  std::mutex mu_;
  std::vector<nlohmann::json> requests_;
};

nlohmann::json choice(const std::string& text, std::vector<double> token_lps) {
  return {{"text", text}, {"logprobs", {{"token_logprobs", token_lps}}}};
}

sw::RemotePolicy::Options options_for(const std::string& url) {
  sw::RemotePolicy::Options o;
  o.base_url = url;
  o.retries = 0;
  o.timeout = std::chrono::seconds(5);
  return o;
}

} // namespace

TEST(ScriptedPolicy, ExactLookup) {
  auto p = policy_from(kTable);
  const auto c = p.propose(st("x  = x"), 8, 0);
  ASSERT_EQ(c.size(), 1u);
  EXPECT_EQ(c[0].step.full_text(), "refl");
  EXPECT_EQ(c[0].step.premise(), "");
  EXPECT_EQ(c[0].logprob, -0.1);
}

TEST(ScriptedPolicy, MergesSortsAndTruncates) {
  auto p = policy_from(kTable);
  const auto c = p.propose(st("x + 0 = x"), 2, 0);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].step.full_text(), "rw add_zero l");
  EXPECT_EQ(c[0].logprob, -0.05);
  EXPECT_EQ(c[1].step.full_text(), "rw comm_add l");
  EXPECT_EQ(p.propose(st("x + 0 = x"), 10, 0).size(), 3u);
}

TEST(ScriptedPolicy, GlobAndSeedRules) {
  auto p = policy_from(kTable);
  EXPECT_EQ(p.propose(st("a + b = b + a"), 4, 0)[0].step.full_text(), "rw comm_add l");
  EXPECT_EQ(p.propose(st("a + b = b + a"), 4, 2)[0].step.full_text(), "rw comm_add r");
  EXPECT_TRUE(p.propose(st("q = q"), 4, 0).empty());
}

TEST(ScriptedPolicy, NoiseIsSeededAndNonPositive) {
  auto p = policy_from(std::string(R"({"settings": {"noise": 0.5}})") + "\n" + kTable);
  const auto a = p.propose(st("x + 0 = x"), 8, 3);
  const auto b = p.propose(st("x + 0 = x"), 8, 3);
  const auto c = p.propose(st("x + 0 = x"), 8, 4);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].step, b[i].step);
    EXPECT_EQ(a[i].logprob, b[i].logprob);
    EXPECT_LE(a[i].logprob, 0.0);
  }
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) differs = differs || a[i].logprob != c[i].logprob;
  EXPECT_TRUE(differs);
}

TEST(ScriptedPolicy, RejectsBadTables) {
  EXPECT_THROW(policy_from(R"({"goal": "x", "candidates": [{"step": "a", "logprob": 0.5}]})"), sw::FormatError);
  EXPECT_THROW(policy_from("not json"), sw::FormatError);
  EXPECT_THROW(policy_from(R"({"settings": {"noise": -1}})"), sw::FormatError);
  EXPECT_THROW(sw::ScriptedPolicy::from_file("/nonexistent/policy.jsonl"), sw::FormatError);
}

TEST(ScriptedPolicy, ConstrainedDecoding) {
  auto p = policy_from(kTable);
  const auto tactics = sw::toy::default_tactic_set();
  const auto all = p.propose_tactics(st("x + 0 = x"), tactics.size(), tactics, 0);
  ASSERT_EQ(all.size(), tactics.size());
  EXPECT_EQ(all[0].tactic, "rw add_zero");
  std::set<std::string> seen;
  for (const auto& t : all) {
    EXPECT_TRUE(tactics.contains(t.tactic));
    EXPECT_TRUE(seen.insert(t.tactic).second);
    EXPECT_LE(t.logprob, 0.0);
  }
  EXPECT_EQ(p.propose_tactics(st("x + 0 = x"), 32, tactics, 0).size(), 9u);
  EXPECT_EQ(p.propose_tactics(st("x + 0 = x"), 2, tactics, 0).size(), 2u);
}

TEST(ScriptedPolicy, PremiseCompletion) {
  auto p = policy_from(kTable);
  auto r = p.complete_premises(st("x + 0 = x"), {"rw add_zero"}, 0);
  ASSERT_EQ(r.size(), 1u);
  EXPECT_EQ(r[0].step, sw::ProofStep("rw add_zero", "l"));
  EXPECT_FALSE(r[0].failed);
  r = p.complete_premises(st("x = x"), {"refl"}, 0);
  EXPECT_EQ(r[0].step.full_text(), "refl");
  EXPECT_FALSE(r[0].failed);
  r = p.complete_premises(st("x + 0 = x"), {"rw comm_add", "rw mul_one", "refl"}, 0);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].step.full_text(), "rw comm_add l");
  EXPECT_TRUE(r[1].failed);
  EXPECT_EQ(r[1].step.full_text(), "rw mul_one");
  EXPECT_EQ(r[2].step.full_text(), "refl");
}

TEST(TacticSetType, Invariants) {
  EXPECT_THROW(sw::TacticSet({}), sw::Error);
  EXPECT_THROW(sw::TacticSet({"simp", "simp "}), sw::Error);
  const sw::TacticSet t({"rw", "rw add_zero", "simp"});
  EXPECT_EQ(t.tactic_of("rw add_zero l"), "rw add_zero");
  EXPECT_EQ(t.tactic_of("rw comm_add l"), "rw");
  EXPECT_EQ(t.tactic_of("rwx"), std::nullopt);
  EXPECT_EQ(t.split("rw add_zero l").premise(), "l");
}

TEST(ExhaustivePolicy, ProposesEveryApplicableStep) {
  sw::toy::ExhaustivePolicy p;
  const auto c = p.propose(st("x + 0 = x + 0"), 100, 0);
  ASSERT_EQ(c.size(), 5u); // refl, comm_add l/r, add_zero l/r
  EXPECT_EQ(c[0].step.full_text(), "refl");
  for (const auto& x : c) EXPECT_EQ(x.logprob, -1.0);
  EXPECT_EQ(c[1].step.tactic(), "rw comm_add");
  EXPECT_THROW(sw::toy::ExhaustivePolicy(-1, -30, -0.5), sw::Error);
}

TEST(RemotePolicyClient, PromptTemplate) {
  EXPECT_EQ(sw::proofstep_prompt("x = x"), "[GOAL]\nx = x\n[PROOFSTEP]\n");
}

TEST(RemotePolicyClient, MergesDuplicateBeams) {
  FakeCompletionServer server([](const nlohmann::json&) {
    return nlohmann::json{{"choices", {choice("simp", {-0.5, -0.3}), choice("simp ", {-0.1, -0.1}),
                                       choice("rw foo\nextra", {-1.0})}}};
  });
  sw::RemotePolicy policy(options_for(server.url()));
  const auto c = policy.propose(st("x = x"), 4, 7);
  ASSERT_EQ(c.size(), 2u);
  EXPECT_EQ(c[0].step.full_text(), "simp");
  EXPECT_NEAR(c[0].logprob, -0.2, 1e-12);
  EXPECT_EQ(c[1].step.full_text(), "rw foo");
  const auto reqs = server.requests();
  ASSERT_EQ(reqs.size(), 1u);
  EXPECT_EQ(reqs[0]["prompt"], "[GOAL]\nx = x\n[PROOFSTEP]\n");
  EXPECT_EQ(reqs[0]["n"], 4);
  EXPECT_EQ(reqs[0]["seed"], 7);
}

TEST(RemotePolicyClient, PremiseBatchKeepsOrder) {
  FakeCompletionServer server([](const nlohmann::json& body) {
    const std::string prompt = body["prompt"];
    const std::string tactic = prompt.substr(prompt.rfind('\n') + 1);
    return nlohmann::json{{"choices", {choice(" premise_for_" + tactic.substr(tactic.find(' ') + 1), {-0.1})}}};
  });
  sw::RemotePolicy policy(options_for(server.url()));
  const auto r = policy.complete_premises(st("x = x"), {"rw a", "rw b", "rw c"}, 0);
  ASSERT_EQ(r.size(), 3u);
  EXPECT_EQ(r[0].step.full_text(), "rw a premise_for_a");
  EXPECT_EQ(r[1].step.full_text(), "rw b premise_for_b");
  EXPECT_EQ(r[2].step.full_text(), "rw c premise_for_c");
}

TEST(RemotePolicyClient, ConstrainedDecodingStaysInSet) {
  FakeCompletionServer server([](const nlohmann::json& body) {
    const std::string prompt = body["prompt"];
    const double lp = prompt.ends_with("refl") ? -0.1 : -2.0;
    return nlohmann::json{{"choices", {{{"text", prompt}, {"logprobs", {{"token_logprobs", {nullptr, lp}},
                                                                         {"text_offset", {0, 25}}}}}}}};
  });
  sw::RemotePolicy policy(options_for(server.url()));
  const auto tactics = sw::toy::default_tactic_set();
  const auto t = policy.propose_tactics(st("x = x"), 32, tactics, 0);
  ASSERT_EQ(t.size(), 9u);
  EXPECT_EQ(t[0].tactic, "refl");
  EXPECT_NEAR(t[0].logprob, -0.1, 1e-12);
  for (const auto& c : t) EXPECT_TRUE(tactics.contains(c.tactic));
}

TEST(RemotePolicyClient, UnreachableIsTransportError) {
  auto o = options_for("http://127.0.0.1:1");
  o.timeout = std::chrono::seconds(1);
  sw::RemotePolicy policy(o);
  EXPECT_THROW(policy.propose(st("x = x"), 2, 0), sw::TransportError);
}
