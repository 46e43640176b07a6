#pragma once

// Pluggable signing. The normalized blob is an ordinary byte string, so any
// detached-signature tool can sign it; GpgSigner drives an external
// OpenPGP executable in armored detached mode.

#include <fcntl.h>
#include <poll.h>
#include <pthread.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <csignal>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "esisig/error.hpp"

namespace esisig {

struct SignerVerdict {
  bool valid = false;
  std::string diagnostic;
};

class Signer {
 public:
  virtual ~Signer() = default;

  // Returns an ASCII-armored detached signature over `bytes`.
  // Throws SignerFailure.
  virtual std::string sign(std::string_view bytes) = 0;

  virtual SignerVerdict verify(std::string_view bytes, std::string_view armored) = 0;
};

struct ProcessResult {
  int exit_code = -1;
  std::string out;
  std::string err;
};

// Runs argv[0] (looked up on PATH) feeding `input` on stdin and capturing
// stdout and stderr.
inline ProcessResult run_process(const std::vector<std::string>& argv, std::string_view input) {
  if (argv.empty()) throw SignerFailure("empty command");
  int in_pipe[2], out_pipe[2], err_pipe[2];
  if (pipe(in_pipe) != 0) throw SignerFailure(std::strerror(errno));
  if (pipe(out_pipe) != 0) {
    close(in_pipe[0]), close(in_pipe[1]);
    throw SignerFailure(std::strerror(errno));
  }
  if (pipe(err_pipe) != 0) {
    close(in_pipe[0]), close(in_pipe[1]), close(out_pipe[0]), close(out_pipe[1]);
    throw SignerFailure(std::strerror(errno));
  }
  std::vector<char*> args;
  for (const auto& a : argv) args.push_back(const_cast<char*>(a.c_str()));
  args.push_back(nullptr);

  const pid_t pid = fork();
  if (pid < 0) throw SignerFailure(std::string("fork: ") + std::strerror(errno));
  if (pid == 0) {
    dup2(in_pipe[0], 0);
    dup2(out_pipe[1], 1);
    dup2(err_pipe[1], 2);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1], err_pipe[0], err_pipe[1]}) close(fd);
    execvp(args[0], args.data());
    const std::string msg = std::string("cannot execute ") + args[0] + ": " + std::strerror(errno) + "\n";
    [[maybe_unused]] auto n = write(2, msg.data(), msg.size());
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  close(err_pipe[1]);

  // A child that exits early must not kill us on write. SIGPIPE is blocked
  // for this thread only and any pending instance is consumed afterwards.
  sigset_t pipe_set, previous_mask;
  sigemptyset(&pipe_set);
  sigaddset(&pipe_set, SIGPIPE);
  pthread_sigmask(SIG_BLOCK, &pipe_set, &previous_mask);

  ProcessResult result;
  int in_fd = in_pipe[1];
  if (input.empty()) {
    close(in_fd);
    in_fd = -1;
  } else {
    fcntl(in_fd, F_SETFL, fcntl(in_fd, F_GETFL) | O_NONBLOCK);
  }
  int out_fd = out_pipe[0];
  int err_fd = err_pipe[0];
  std::size_t written = 0;
  char buffer[65536];
  while (in_fd >= 0 || out_fd >= 0 || err_fd >= 0) {
    pollfd fds[3];
    nfds_t n = 0;
    if (in_fd >= 0) fds[n++] = {in_fd, POLLOUT, 0};
    if (out_fd >= 0) fds[n++] = {out_fd, POLLIN, 0};
    if (err_fd >= 0) fds[n++] = {err_fd, POLLIN, 0};
    if (poll(fds, n, -1) < 0) {
      if (errno == EINTR) continue;
      break;
    }
    for (nfds_t k = 0; k < n; ++k) {
      if (fds[k].revents == 0) continue;
      if (fds[k].fd == in_fd) {
        const ssize_t w = write(in_fd, input.data() + written, input.size() - written);
        if (w > 0) written += static_cast<std::size_t>(w);
        if (w < 0 && errno != EAGAIN) written = input.size();
        if (written == input.size()) {
          close(in_fd);
          in_fd = -1;
        }
      } else {
        const ssize_t r = read(fds[k].fd, buffer, sizeof buffer);
        if (r > 0) {
          (fds[k].fd == out_fd ? result.out : result.err).append(buffer, static_cast<std::size_t>(r));
        } else if (r == 0 || errno != EAGAIN) {
          close(fds[k].fd);
          (fds[k].fd == out_fd ? out_fd : err_fd) = -1;
        }
      }
    }
  }
  sigset_t pending;
  sigpending(&pending);
  if (sigismember(&pending, SIGPIPE)) {
    const timespec zero{0, 0};
    sigtimedwait(&pipe_set, nullptr, &zero);
  }
  pthread_sigmask(SIG_SETMASK, &previous_mask, nullptr);
  int status = 0;
  while (waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  result.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
  return result;
}

// A file in the temporary directory, removed on destruction.
class TempFile {
 public:
  explicit TempFile(std::string_view contents) {
    std::string pattern = (std::filesystem::temp_directory_path() / "esisig-XXXXXX").string();
    const int fd = mkstemp(pattern.data());
    if (fd < 0) throw SignerFailure(std::string("mkstemp: ") + std::strerror(errno));
    path_ = pattern;
    std::size_t done = 0;
    while (done < contents.size()) {
      const ssize_t w = write(fd, contents.data() + done, contents.size() - done);
      if (w <= 0) {
        close(fd);
        throw SignerFailure("cannot write temporary file");
      }
      done += static_cast<std::size_t>(w);
    }
    close(fd);
  }

  TempFile(const TempFile&) = delete;
  TempFile& operator=(const TempFile&) = delete;

  ~TempFile() {
    std::error_code ec;
    std::filesystem::remove(path_, ec);
  }

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

inline std::string trim_diagnostic(std::string s) {
  while (!s.empty() && (s.back() == '\n' || s.back() == '\r' || s.back() == ' ')) s.pop_back();
  return s;
}

struct GpgOptions {
  std::string executable = "gpg";
  std::optional<std::string> homedir;
  std::optional<std::string> local_user;
};

// Signs and verifies via an OpenPGP command-line tool compatible with gpg.
class GpgSigner : public Signer {
 public:
  explicit GpgSigner(GpgOptions options = {}) : options_(std::move(options)) {}

  std::string sign(std::string_view bytes) override {
    auto argv = base_args();
    argv.insert(argv.end(), {"--armor", "--detach-sign", "--output", "-"});
    if (options_.local_user) argv.insert(argv.end(), {"--local-user", *options_.local_user});
    argv.emplace_back("-");
    auto result = run_process(argv, bytes);
    if (result.exit_code != 0 || result.out.find("-----BEGIN PGP SIGNATURE-----") == std::string::npos) {
      throw SignerFailure("signing failed: " + trim_diagnostic(result.err));
    }
    return trim_diagnostic(std::move(result.out));
  }

  SignerVerdict verify(std::string_view bytes, std::string_view armored) override {
    TempFile signature(armored);
    auto argv = base_args();
    argv.insert(argv.end(), {"--verify", signature.path(), "-"});
    auto result = run_process(argv, bytes);
    return {result.exit_code == 0, trim_diagnostic(std::move(result.err))};
  }

  const GpgOptions& options() const noexcept { return options_; }

 private:
  std::vector<std::string> base_args() const {
    std::vector<std::string> argv{options_.executable, "--batch", "--yes", "--no-tty"};
    if (options_.homedir) argv.insert(argv.end(), {"--homedir", *options_.homedir});
    return argv;
  }

  GpgOptions options_;
};

}  // namespace esisig
