// Line-oriented JSON server for the toy rewrite prover. Speaks the external
// prover protocol on stdin/stdout, or on TCP with --listen (one session per
// connection).

#include <csignal>
#include <cstdio>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "stepwise/toy_prover.hpp"

namespace {

using nlohmann::json;
namespace toy = stepwise::toy;

struct Behaviour {
  std::vector<std::string> hang_on;  // steps that never answer
  std::vector<std::string> crash_on; // steps that terminate the process
};

bool listed(const std::vector<std::string>& v, const std::string& s) {
  for (const auto& x : v)
    if (stepwise::normalize_step_text(x) == s) return true;
  return false;
}

[[noreturn]] void hang() {
  for (;;) std::this_thread::sleep_for(std::chrono::hours(1));
}

class Session {
public:
  explicit Session(const Behaviour& b) : behaviour_(b) {}

  // Returns false on shutdown.
  bool handle(const std::string& line, std::string& reply) {
    json req;
    try {
      req = json::parse(line);
    } catch (const json::exception&) {
      reply = json{{"id", nullptr}, {"ok", false}, {"message", "malformed request"}}.dump();
      return true;
    }
    const json id = req.value("id", json());
    const std::string cmd = req.value("cmd", "");
    if (cmd == "shutdown") {
      reply = json{{"id", id}, {"ok", true}, {"result", {{"kind", "bye"}}}}.dump();
      return false;
    }
    if (cmd == "init") {
      reply = json{{"id", id}, {"ok", true}, {"result", init(req.value("theorem", ""))}}.dump();
      return true;
    }
    if (cmd == "run") {
      const auto sid = req.value("state", -1);
      if (sid < 0 || static_cast<std::size_t>(sid) >= goals_.size()) {
        reply = json{{"id", id}, {"ok", false}, {"message", "unknown state"}}.dump();
        return true;
      }
      reply = json{{"id", id}, {"ok", true}, {"result", run(goals_[static_cast<std::size_t>(sid)],
                                                            req.value("step", ""))}}
                  .dump();
      return true;
    }
    reply = json{{"id", id}, {"ok", false}, {"message", "unknown command '" + cmd + "'"}}.dump();
    return true;
  }

private:
  json init(const std::string& statement) {
    try {
      return state(toy::parse_goal(statement).render());
    } catch (const stepwise::Error& e) {
      return {{"kind", "error"}, {"message", e.what()}};
    }
  }

  json run(const std::string& goal_text, const std::string& raw_step) {
    const std::string step = stepwise::normalize_step_text(raw_step);
    if (listed(behaviour_.crash_on, step)) std::_Exit(3);
    if (step == "spin" || listed(behaviour_.hang_on, step)) hang();
    const auto app = toy::apply_step(toy::parse_goal(goal_text), step);
    switch (app.kind) {
    case toy::Application::Kind::NewGoal: return state(app.goal->render());
    case toy::Application::Kind::Finished: return {{"kind", "finished"}};
    default: return {{"kind", "error"}, {"message", app.message}};
    }
  }

  json state(std::string goal) {
    goals_.push_back(goal);
    return {{"kind", "state"}, {"state", goals_.size() - 1}, {"goal", std::move(goal)}};
  }

  const Behaviour& behaviour_;
  std::vector<std::string> goals_;
};

void serve_stdio(const Behaviour& b) {
  Session s(b);
  std::string line, reply;
  while (std::getline(std::cin, line)) {
    if (line.empty()) continue;
    const bool more = s.handle(line, reply);
    std::cout << reply << '\n' << std::flush;
    if (!more) break;
  }
}

void serve_socket(int fd, const Behaviour& b) {
  Session s(b);
  std::string buf, reply;
  char chunk[4096];
  for (;;) {
    const ssize_t n = ::read(fd, chunk, sizeof chunk);
    if (n <= 0) break;
    buf.append(chunk, static_cast<std::size_t>(n));
    for (auto nl = buf.find('\n'); nl != std::string::npos; nl = buf.find('\n')) {
      const std::string line = buf.substr(0, nl);
      buf.erase(0, nl + 1);
      if (line.empty()) continue;
      const bool more = s.handle(line, reply);
      reply.push_back('\n');
      if (::write(fd, reply.data(), reply.size()) < 0 || !more) {
        ::close(fd);
        return;
      }
    }
  }
  ::close(fd);
}

int serve_tcp(int port, const Behaviour& b) {
  const int srv = ::socket(AF_INET, SOCK_STREAM, 0);
  if (srv < 0) return 1;
  int on = 1;
  ::setsockopt(srv, SOL_SOCKET, SO_REUSEADDR, &on, sizeof on);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(INADDR_LOOPBACK);
  addr.sin_port = htons(static_cast<uint16_t>(port));
  if (::bind(srv, reinterpret_cast<sockaddr*>(&addr), sizeof addr) != 0 || ::listen(srv, 16) != 0) {
    std::perror("toy_repl");
    return 1;
  }
  socklen_t len = sizeof addr;
  ::getsockname(srv, reinterpret_cast<sockaddr*>(&addr), &len);
  std::cerr << "listening on 127.0.0.1:" << ntohs(addr.sin_port) << std::endl;
  for (;;) {
    const int fd = ::accept(srv, nullptr, nullptr);
    if (fd < 0) continue;
    std::thread(serve_socket, fd, std::cref(b)).detach();
  }
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"toy rewrite prover REPL"};
  Behaviour b;
  int port = -1;
  app.add_option("--listen", port, "serve TCP on 127.0.0.1:PORT instead of stdin/stdout (0 picks a port)");
  app.add_option("--hang-on", b.hang_on, "step text that never returns")->take_all();
  app.add_option("--crash-on", b.crash_on, "step text that kills the process")->take_all();
  CLI11_PARSE(app, argc, argv);
  std::signal(SIGPIPE, SIG_IGN);
  if (port >= 0) return serve_tcp(port, b);
  serve_stdio(b);
  return 0;
}
