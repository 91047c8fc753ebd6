#pragma once

#include <cerrno>
#include <chrono>
#include <csignal>
#include <cstring>
#include <optional>
#include <string>

#include <fcntl.h>
#include <netdb.h>
#include <poll.h>
#include <sys/socket.h>
#include <sys/types.h>
#include <sys/wait.h>
#include <unistd.h>

#include "stepwise/error.hpp"
#include "stepwise/prover.hpp"

namespace stepwise {

// Newline-delimited text transport to a remote prover process.
class LineChannel {
public:
  virtual ~LineChannel() = default;

  virtual void open() = 0;
  virtual void close() = 0;
  virtual std::string describe() const = 0;

  void restart() {
    close();
    open();
  }

  void send_line(const std::string& line) {
    std::string buf = line;
    buf.push_back('\n');
    std::size_t off = 0;
    while (off < buf.size()) {
      const ssize_t n = write_some(buf.data() + off, buf.size() - off);
      if (n < 0) {
        if (errno == EINTR) continue;
        throw TransportError(describe() + ": write failed: " + std::strerror(errno));
      }
      off += static_cast<std::size_t>(n);
    }
  }

  // nullopt on timeout; TransportError once the peer has gone away.
  std::optional<std::string> read_line(Millis timeout) {
    using clock = std::chrono::steady_clock;
    const auto deadline = clock::now() + timeout;
    for (;;) {
      if (auto nl = buffer_.find('\n'); nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        return line;
      }
      const auto left = std::chrono::duration_cast<Millis>(deadline - clock::now()).count();
      if (left <= 0) return std::nullopt;
      pollfd pfd{read_fd(), POLLIN, 0};
      const int rc = ::poll(&pfd, 1, static_cast<int>(left));
      if (rc < 0) {
        if (errno == EINTR) continue;
        throw TransportError(describe() + ": poll failed: " + std::strerror(errno));
      }
      if (rc == 0) return std::nullopt;
      char chunk[4096];
      const ssize_t n = ::read(read_fd(), chunk, sizeof chunk);
      if (n < 0) {
        if (errno == EINTR || errno == EAGAIN) continue;
        throw TransportError(describe() + ": read failed: " + std::strerror(errno));
      }
      if (n == 0) throw TransportError(describe() + ": connection closed by peer");
      buffer_.append(chunk, static_cast<std::size_t>(n));
    }
  }

protected:
  virtual int read_fd() const = 0;
  virtual ssize_t write_some(const char* data, std::size_t len) = 0;
  void clear_buffer() { buffer_.clear(); }

private:
  std::string buffer_;
};

// Child process spoken to over its stdin/stdout. The command runs under
// /bin/sh in its own process group so restart() kills the whole tree.
class ProcessChannel final : public LineChannel {
public:
  explicit ProcessChannel(std::string command) : command_(std::move(command)) {
    std::signal(SIGPIPE, SIG_IGN);
  }
  ~ProcessChannel() override { close(); }

  ProcessChannel(const ProcessChannel&) = delete;
  ProcessChannel& operator=(const ProcessChannel&) = delete;

  void open() override {
    int to_child[2];
    int from_child[2];
    if (::pipe2(to_child, O_CLOEXEC) != 0) throw TransportError("pipe failed");
    if (::pipe2(from_child, O_CLOEXEC) != 0) {
      ::close(to_child[0]);
      ::close(to_child[1]);
      throw TransportError("pipe failed");
    }
    const pid_t pid = ::fork();
    if (pid < 0) throw TransportError("fork failed");
    if (pid == 0) {
      ::setpgid(0, 0);
      ::dup2(to_child[0], STDIN_FILENO);
      ::dup2(from_child[1], STDOUT_FILENO);
      ::execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
      ::_exit(127);
    }
    ::setpgid(pid, pid);
    ::close(to_child[0]);
    ::close(from_child[1]);
    pid_ = pid;
    write_fd_ = to_child[1];
    read_fd_ = from_child[0];
    clear_buffer();
  }

  void close() override {
    if (write_fd_ >= 0) ::close(write_fd_);
    if (read_fd_ >= 0) ::close(read_fd_);
    write_fd_ = read_fd_ = -1;
    if (pid_ > 0) {
      ::kill(-pid_, SIGKILL);
      ::kill(pid_, SIGKILL);
      int status = 0;
      ::waitpid(pid_, &status, 0);
      pid_ = -1;
    }
    clear_buffer();
  }

  std::string describe() const override { return "process '" + command_ + "'"; }

protected:
  int read_fd() const override { return read_fd_; }
  ssize_t write_some(const char* data, std::size_t len) override { return ::write(write_fd_, data, len); }

private:
  std::string command_;
  pid_t pid_ = -1;
  int write_fd_ = -1;
  int read_fd_ = -1;
};

// TCP connection; restart() reconnects and the server is expected to start a
// fresh session per connection.
class TcpChannel final : public LineChannel {
public:
  TcpChannel(std::string host, std::string port) : host_(std::move(host)), port_(std::move(port)) {}
  ~TcpChannel() override { close(); }

  TcpChannel(const TcpChannel&) = delete;
  TcpChannel& operator=(const TcpChannel&) = delete;

  void open() override {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    addrinfo* res = nullptr;
    if (const int rc = ::getaddrinfo(host_.c_str(), port_.c_str(), &hints, &res); rc != 0)
      throw TransportError(describe() + ": " + ::gai_strerror(rc));
    int fd = -1;
    for (addrinfo* p = res; p; p = p->ai_next) {
      fd = ::socket(p->ai_family, p->ai_socktype | SOCK_CLOEXEC, p->ai_protocol);
      if (fd < 0) continue;
      if (::connect(fd, p->ai_addr, p->ai_addrlen) == 0) break;
      ::close(fd);
      fd = -1;
    }
    ::freeaddrinfo(res);
    if (fd < 0) throw TransportError(describe() + ": connect failed");
    fd_ = fd;
    clear_buffer();
  }

  void close() override {
    if (fd_ >= 0) {
      ::shutdown(fd_, SHUT_RDWR);
      ::close(fd_);
    }
    fd_ = -1;
    clear_buffer();
  }

  std::string describe() const override { return "tcp " + host_ + ":" + port_; }

protected:
  int read_fd() const override { return fd_; }
  ssize_t write_some(const char* data, std::size_t len) override {
    return ::send(fd_, data, len, MSG_NOSIGNAL);
  }

private:
  std::string host_;
  std::string port_;
  int fd_ = -1;
};

} // namespace stepwise
