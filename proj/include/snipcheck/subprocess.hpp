#pragma once

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <chrono>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace snipcheck {

struct ProcessResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

class SubprocessError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::vector<char*> make_argv(const std::vector<std::string>& args) {
  std::vector<char*> argv;
  argv.reserve(args.size() + 1);
  for (auto& a : args) argv.push_back(const_cast<char*>(a.c_str()));
  argv.push_back(nullptr);
  return argv;
}

}  // namespace detail

// Runs a command, feeding `input` to stdin and capturing stdout/stderr.
inline ProcessResult run_capture(const std::vector<std::string>& args, const std::string& input) {
  if (args.empty()) throw SubprocessError("empty argv");
  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (pipe(in_pipe) || pipe(out_pipe) || pipe(err_pipe))
    throw SubprocessError("pipe() failed");
  pid_t pid = fork();
  if (pid < 0) throw SubprocessError("fork() failed");
  if (pid == 0) {
    dup2(in_pipe[0], 0);
    dup2(out_pipe[1], 1);
    dup2(err_pipe[1], 2);
    close(in_pipe[0]); close(in_pipe[1]);
    close(out_pipe[0]); close(out_pipe[1]);
    close(err_pipe[0]); close(err_pipe[1]);
    auto argv = detail::make_argv(args);
    execvp(argv[0], argv.data());
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  close(err_pipe[1]);

  // Write input while draining outputs to avoid pipe deadlock.
  size_t written = 0;
  ProcessResult result;
  bool out_open = true, err_open = true;
  fcntl(in_pipe[1], F_SETFL, O_NONBLOCK);
  while (written < input.size() || out_open || err_open) {
    struct pollfd fds[3];
    int n = 0;
    int in_idx = -1, out_idx = -1, err_idx = -1;
    if (written < input.size()) { fds[n] = {in_pipe[1], POLLOUT, 0}; in_idx = n++; }
    if (out_open) { fds[n] = {out_pipe[0], POLLIN, 0}; out_idx = n++; }
    if (err_open) { fds[n] = {err_pipe[0], POLLIN, 0}; err_idx = n++; }
    if (n == 0) break;
    if (poll(fds, n, -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    char buf[8192];
    if (in_idx >= 0 && (fds[in_idx].revents & (POLLOUT | POLLERR | POLLHUP))) {
      ssize_t w = write(in_pipe[1], input.data() + written, input.size() - written);
      if (w > 0) written += static_cast<size_t>(w);
      else if (w < 0 && errno != EAGAIN && errno != EINTR) written = input.size();
      if (written >= input.size()) close(in_pipe[1]);
    }
    if (out_idx >= 0 && (fds[out_idx].revents & (POLLIN | POLLHUP))) {
      ssize_t r = read(out_pipe[0], buf, sizeof buf);
      if (r > 0) result.out.append(buf, static_cast<size_t>(r));
      else { out_open = false; close(out_pipe[0]); }
    }
    if (err_idx >= 0 && (fds[err_idx].revents & (POLLIN | POLLHUP))) {
      ssize_t r = read(err_pipe[0], buf, sizeof buf);
      if (r > 0) result.err.append(buf, static_cast<size_t>(r));
      else { err_open = false; close(err_pipe[0]); }
    }
  }
  if (written < input.size()) close(in_pipe[1]);
  int status = 0;
  waitpid(pid, &status, 0);
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -WTERMSIG(status);
  return result;
}

// A long-lived child process with line-oriented stdin/stdout, used for the
// SMT solver. Reads support deadlines; on timeout the caller usually kills
// and respawns.
class PipeProcess {
 public:
  PipeProcess() = default;
  explicit PipeProcess(std::vector<std::string> args) : args_(std::move(args)) { start(); }
  ~PipeProcess() { stop(); }

  PipeProcess(const PipeProcess&) = delete;
  PipeProcess& operator=(const PipeProcess&) = delete;

  bool running() const { return pid_ > 0; }

  void start() {
    if (args_.empty()) throw SubprocessError("empty argv");
    int in_pipe[2], out_pipe[2];
    if (pipe(in_pipe) || pipe(out_pipe)) throw SubprocessError("pipe() failed");
    pid_ = fork();
    if (pid_ < 0) throw SubprocessError("fork() failed");
    if (pid_ == 0) {
      dup2(in_pipe[0], 0);
      dup2(out_pipe[1], 1);
      close(in_pipe[0]); close(in_pipe[1]);
      close(out_pipe[0]); close(out_pipe[1]);
      auto argv = detail::make_argv(args_);
      execvp(argv[0], argv.data());
      _exit(127);
    }
    close(in_pipe[0]);
    close(out_pipe[1]);
    stdin_fd_ = in_pipe[1];
    stdout_fd_ = out_pipe[0];
    buffer_.clear();
  }

  void restart() {
    stop();
    start();
  }

  void stop() {
    if (pid_ > 0) {
      close(stdin_fd_);
      close(stdout_fd_);
      kill(pid_, SIGKILL);
      int status = 0;
      waitpid(pid_, &status, 0);
      pid_ = -1;
      stdin_fd_ = stdout_fd_ = -1;
    }
  }

  void write_all(std::string_view data) {
    size_t off = 0;
    while (off < data.size()) {
      ssize_t w = ::write(stdin_fd_, data.data() + off, data.size() - off);
      if (w < 0) {
        if (errno == EINTR) continue;
        throw SubprocessError("write to child failed");
      }
      off += static_cast<size_t>(w);
    }
  }

  // Reads one \n-terminated line; nullopt on timeout or EOF.
  std::optional<std::string> read_line(std::chrono::milliseconds timeout) {
    auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
      size_t nl = buffer_.find('\n');
      if (nl != std::string::npos) {
        std::string line = buffer_.substr(0, nl);
        buffer_.erase(0, nl + 1);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        return line;
      }
      auto now = std::chrono::steady_clock::now();
      if (now >= deadline) return std::nullopt;
      auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - now);
      struct pollfd fd = {stdout_fd_, POLLIN, 0};
      int pr = poll(&fd, 1, static_cast<int>(wait.count()));
      if (pr <= 0) {
        if (pr < 0 && errno == EINTR) continue;
        return std::nullopt;
      }
      char buf[8192];
      ssize_t r = read(stdout_fd_, buf, sizeof buf);
      if (r <= 0) return std::nullopt;
      buffer_.append(buf, static_cast<size_t>(r));
    }
  }

  const std::vector<std::string>& args() const { return args_; }

 private:
  std::vector<std::string> args_;
  pid_t pid_ = -1;
  int stdin_fd_ = -1;
  int stdout_fd_ = -1;
  std::string buffer_;
};

}  // namespace snipcheck
