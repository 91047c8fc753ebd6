#pragma once

#include <memory>
#include <string>
#include <unordered_map>
#include <vector>

#include <nlohmann/json.hpp>

#include "stepwise/line_channel.hpp"
#include "stepwise/prover.hpp"

namespace stepwise {

// Adapter for an external prover REPL speaking newline-delimited JSON:
//
//   -> {"cmd":"init","id":1,"theorem":"..."}
//   -> {"cmd":"run","id":2,"state":<remote id>,"step":"..."}
//   -> {"cmd":"shutdown","id":3}
//   <- {"id":1,"ok":true,"result":{"kind":"state"|"finished"|"error",
//                                  "state":<remote id>,"goal":"...","message":"..."}}
//
// Local state ids are stable across restarts. Each local state remembers the
// tree path that produced it; after a step timeout the remote process is
// restarted and the interrupted state is rebuilt by replaying that path.
class ExternalProver final : public ProverBackend {
public:
  struct Options {
    Millis init_timeout{60'000};
  };

  explicit ExternalProver(std::unique_ptr<LineChannel> channel)
      : ExternalProver(std::move(channel), Options{}) {}

  ExternalProver(std::unique_ptr<LineChannel> channel, Options opts)
      : channel_(std::move(channel)), opts_(opts) {
    channel_->open();
  }

  ~ExternalProver() override {
    try {
      channel_->send_line(nlohmann::json{{"cmd", "shutdown"}, {"id", next_request_++}}.dump());
    } catch (const Error&) {
    }
    channel_->close();
  }

  ExternalProver(const ExternalProver&) = delete;
  ExternalProver& operator=(const ExternalProver&) = delete;

  std::size_t restarts() const { return restarts_; }

  ProofState init_theorem(const TheoremSpec& spec) override {
    nlohmann::json result;
    try {
      result = request({{"cmd", "init"}, {"theorem", spec.statement}}, opts_.init_timeout);
    } catch (const RemoteFailure& e) {
      throw InitError("prover rejected '" + spec.name + "': " + e.what());
    } catch (const Error& e) {
      throw InitError("cannot initialize '" + spec.name + "': " + e.what());
    }
    if (result.value("kind", "") != "state")
      throw InitError("prover rejected '" + spec.name + "': " + result.value("message", "no root state"));
    const StateId id{next_local_++};
    records_[id.value] = Record{spec.statement, {}, result.at("state"), generation_};
    return ProofState(id, result.value("goal", ""), 0);
  }

  StepResult run_step(const ProofState& state, const ProofStep& step, Millis timeout) override {
    auto it = records_.find(state.id().value);
    if (it == records_.end()) return StepFailure{ErrorKind::Crash, "state not produced by this adapter"};
    const std::uint64_t local = it->first;
    try {
      if (!ensure_live(local)) return StepFailure{ErrorKind::Crash, "could not restore context"};
      const Record& rec = records_.at(local);
      nlohmann::json result =
          request({{"cmd", "run"}, {"state", rec.remote}, {"step", step.full_text()}}, timeout);
      const std::string kind = result.value("kind", "");
      if (kind == "finished") return Finished{};
      if (kind == "error") return StepFailure{ErrorKind::Syntax, result.value("message", "")};
      if (kind != "state") return StepFailure{ErrorKind::Crash, "unknown result kind '" + kind + "'"};
      const StateId id{next_local_++};
      Record child{rec.theorem, rec.path, result.at("state"), generation_};
      child.path.push_back(step.full_text());
      records_[id.value] = std::move(child);
      return NewState{ProofState(id, result.value("goal", ""), state.depth() + 1)};
    } catch (const Timeout&) {
      recover();
      ensure_live_quietly(local);
      return StepTimeout{};
    } catch (const RemoteFailure& e) {
      return StepFailure{ErrorKind::Syntax, e.what()};
    } catch (const Error& e) {
      recover();
      return StepFailure{ErrorKind::Crash, e.what()};
    }
  }

private:
  struct Record {
    std::string theorem;
    std::vector<std::string> path;
    nlohmann::json remote;
    std::uint64_t generation = 0;
  };

  struct Timeout : Error {
    Timeout() : Error("request timed out") {}
  };
  struct RemoteFailure : Error {
    using Error::Error;
  };

  nlohmann::json request(nlohmann::json msg, Millis timeout) {
    const std::int64_t id = next_request_++;
    msg["id"] = id;
    channel_->send_line(msg.dump());
    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + timeout;
    for (;;) {
      const auto left = std::chrono::duration_cast<Millis>(deadline - clock::now());
      if (left.count() <= 0) throw Timeout();
      auto line = channel_->read_line(left);
      if (!line) throw Timeout();
      nlohmann::json resp;
      try {
        resp = nlohmann::json::parse(*line);
      } catch (const nlohmann::json::exception& e) {
        throw TransportError(std::string("malformed response: ") + e.what());
      }
      if (!resp.is_object() || resp.value("id", nlohmann::json()) != id) continue;
      if (!resp.value("ok", false)) {
        std::string message = resp.value("message", "");
        if (resp.contains("result") && resp["result"].is_object())
          message = resp["result"].value("message", message);
        throw RemoteFailure(message.empty() ? "request failed" : message);
      }
      if (!resp.contains("result") || !resp["result"].is_object())
        throw TransportError("response without result");
      return resp["result"];
    }
  }

  void recover() {
    ++restarts_;
    ++generation_;
    channel_->restart();
  }

  // Re-creates the remote state for `local` when it belongs to an older
  // process generation.
  bool ensure_live(std::uint64_t local) {
    Record& rec = records_.at(local);
    if (rec.generation == generation_) return true;
    nlohmann::json cur = request({{"cmd", "init"}, {"theorem", rec.theorem}}, opts_.init_timeout);
    if (cur.value("kind", "") != "state") return false;
    for (const auto& step : rec.path) {
      cur = request({{"cmd", "run"}, {"state", cur.at("state")}, {"step", step}}, opts_.init_timeout);
      if (cur.value("kind", "") != "state") return false;
    }
    rec.remote = cur.at("state");
    rec.generation = generation_;
    return true;
  }

  void ensure_live_quietly(std::uint64_t local) {
    try {
      ensure_live(local);
    } catch (const Error&) {
    }
  }

  std::unique_ptr<LineChannel> channel_;
  Options opts_;
  std::unordered_map<std::uint64_t, Record> records_;
  std::uint64_t next_local_ = 0;
  std::int64_t next_request_ = 1;
  std::uint64_t generation_ = 0;
  std::size_t restarts_ = 0;
};

} // namespace stepwise
