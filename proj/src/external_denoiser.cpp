#include "pnp/external_denoiser.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <spawn.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <thread>

#include "pnp/wire.hpp"

extern char** environ;

namespace pnp {
namespace {

using Clock = std::chrono::steady_clock;

// Blocks SIGPIPE for the calling thread while writing to the adapter and
// swallows any SIGPIPE raised meanwhile, so a dead adapter shows up as EPIPE.
class SigpipeGuard {
 public:
  SigpipeGuard() {
    sigemptyset(&pipe_set_);
    sigaddset(&pipe_set_, SIGPIPE);
    sigset_t pending;
    sigpending(&pending);
    was_pending_ = sigismember(&pending, SIGPIPE) == 1;
    pthread_sigmask(SIG_BLOCK, &pipe_set_, &old_);
  }
  ~SigpipeGuard() {
    if (!was_pending_) {
      sigset_t pending;
      sigpending(&pending);
      if (sigismember(&pending, SIGPIPE) == 1) {
        const timespec zero{0, 0};
        sigtimedwait(&pipe_set_, nullptr, &zero);
      }
    }
    pthread_sigmask(SIG_SETMASK, &old_, nullptr);
  }

 private:
  sigset_t pipe_set_{};
  sigset_t old_{};
  bool was_pending_ = false;
};

void close_fd(int& fd) {
  if (fd >= 0) ::close(fd);
  fd = -1;
}

}  // namespace

struct ExternalDenoiser::Session {
  std::string command;
  std::chrono::milliseconds timeout;
  pid_t pid = -1;
  int to_child = -1;
  int from_child = -1;
  bool broken = false;

  int remaining_ms(Clock::time_point deadline) const {
    const auto left = std::chrono::duration_cast<std::chrono::milliseconds>(deadline - Clock::now());
    return left.count() > 0 ? static_cast<int>(left.count()) : 0;
  }

  template <typename E>
  [[noreturn]] void fail(const std::string& what) {
    broken = true;
    throw E("external denoiser '" + command + "': " + what);
  }

  template <typename E>
  void write_all(std::span<const std::uint8_t> bytes, Clock::time_point deadline) {
    SigpipeGuard guard;
    std::size_t done = 0;
    while (done < bytes.size()) {
      pollfd pfd{to_child, POLLOUT, 0};
      const int ready = ::poll(&pfd, 1, remaining_ms(deadline));
      if (ready < 0 && errno == EINTR) continue;
      if (ready == 0) fail<TimeoutError>("timed out writing to adapter");
      if (ready < 0) fail<E>(std::string("poll failed: ") + std::strerror(errno));
      const ssize_t n = ::write(to_child, bytes.data() + done, bytes.size() - done);
      if (n < 0 && (errno == EINTR || errno == EAGAIN)) continue;
      if (n <= 0) fail<E>(std::string("write failed: ") + std::strerror(errno));
      done += static_cast<std::size_t>(n);
    }
  }

  template <typename E>
  void read_exact(std::span<std::uint8_t> bytes, Clock::time_point deadline) {
    std::size_t done = 0;
    while (done < bytes.size()) {
      pollfd pfd{from_child, POLLIN, 0};
      const int ready = ::poll(&pfd, 1, remaining_ms(deadline));
      if (ready < 0 && errno == EINTR) continue;
      if (ready == 0) fail<TimeoutError>("timed out waiting for adapter");
      if (ready < 0) fail<E>(std::string("poll failed: ") + std::strerror(errno));
      const ssize_t n = ::read(from_child, bytes.data() + done, bytes.size() - done);
      if (n < 0 && (errno == EINTR || errno == EAGAIN)) continue;
      if (n < 0) fail<E>(std::string("read failed: ") + std::strerror(errno));
      if (n == 0)
        fail<E>("adapter closed its output after " + std::to_string(done) + " of " +
                std::to_string(bytes.size()) + " bytes");
      done += static_cast<std::size_t>(n);
    }
  }

  void start() {
    int in_pipe[2], out_pipe[2];
    if (::pipe2(in_pipe, O_CLOEXEC) != 0) throw HandshakeError("pipe failed");
    if (::pipe2(out_pipe, O_CLOEXEC) != 0) {
      ::close(in_pipe[0]);
      ::close(in_pipe[1]);
      throw HandshakeError("pipe failed");
    }
    posix_spawn_file_actions_t actions;
    posix_spawn_file_actions_init(&actions);
    posix_spawn_file_actions_adddup2(&actions, in_pipe[0], STDIN_FILENO);
    posix_spawn_file_actions_adddup2(&actions, out_pipe[1], STDOUT_FILENO);
    // Own process group, so the whole shell pipeline can be killed.
    posix_spawnattr_t attr;
    posix_spawnattr_init(&attr);
    posix_spawnattr_setflags(&attr, POSIX_SPAWN_SETPGROUP);
    posix_spawnattr_setpgroup(&attr, 0);
    const char* argv[] = {"/bin/sh", "-c", command.c_str(), nullptr};
    const int rc = ::posix_spawn(&pid, "/bin/sh", &actions, &attr,
                                 const_cast<char* const*>(argv), environ);
    posix_spawnattr_destroy(&attr);
    posix_spawn_file_actions_destroy(&actions);
    ::close(in_pipe[0]);
    ::close(out_pipe[1]);
    to_child = in_pipe[1];
    from_child = out_pipe[0];
    if (rc != 0) {
      pid = -1;
      close_fd(to_child);
      close_fd(from_child);
      throw HandshakeError("cannot start adapter '" + command + "': " + std::strerror(rc));
    }

    const auto deadline = Clock::now() + timeout;
    wire::Bytes hello(protocol::kMagic, protocol::kMagic + 4);
    wire::append_u32(hello, protocol::kVersion);
    write_all<HandshakeError>(hello, deadline);
    wire::Bytes echo(8);
    read_exact<HandshakeError>(echo, deadline);
    if (echo != hello) fail<HandshakeError>("handshake mismatch");
  }

  void stop() {
    close_fd(to_child);
    close_fd(from_child);
    if (pid <= 0) return;
    int status = 0;
    for (int attempt = 0; attempt < 200; ++attempt) {
      const pid_t r = ::waitpid(pid, &status, WNOHANG);
      if (r == pid || r < 0) {
        ::kill(-pid, SIGKILL);
        pid = -1;
        return;
      }
      std::this_thread::sleep_for(std::chrono::milliseconds(10));
    }
    ::kill(-pid, SIGKILL);
    ::waitpid(pid, &status, 0);
    pid = -1;
  }
};

ExternalDenoiser::ExternalDenoiser(const std::string& command, std::chrono::milliseconds timeout)
    : session_(std::make_unique<Session>()) {
  session_->command = command;
  session_->timeout = timeout;
  try {
    session_->start();
  } catch (...) {
    session_->stop();
    throw;
  }
}

ExternalDenoiser::~ExternalDenoiser() { session_->stop(); }

const std::string& ExternalDenoiser::command() const { return session_->command; }

ImageTensor ExternalDenoiser::denoise(const ImageTensor& u, const NoiseLevelMap& s) {
  Session& session = *session_;
  if (session.broken) throw ProtocolError("external denoiser session is closed after an error");

  const ImageF image = u.cast<float>();
  const ImageF map = s.cast<float>();
  const auto n = static_cast<std::size_t>(u.size());
  wire::Bytes frame{protocol::kDenoiseRequest};
  frame.reserve(13 + 8 * n);
  wire::append_u32(frame, static_cast<std::uint32_t>(u.height()));
  wire::append_u32(frame, static_cast<std::uint32_t>(u.width()));
  wire::append_u32(frame, static_cast<std::uint32_t>(u.channels()));
  wire::append_f32(frame, {image.data(), n});
  wire::append_f32(frame, {map.data(), n});

  const auto deadline = Clock::now() + session.timeout;
  session.write_all<ProtocolError>(frame, deadline);
  std::uint8_t status = 0;
  session.read_exact<ProtocolError>({&status, 1}, deadline);
  if (status != protocol::kStatusOk)
    throw AdapterError(status, "external denoiser '" + session.command +
                                   "' returned error status " + std::to_string(status));
  wire::Bytes payload(4 * n);
  session.read_exact<ProtocolError>(payload, deadline);
  ImageF result(u.shape());
  wire::read_f32(payload, {result.data(), n});
  return result.cast<double>();
}

}  // namespace pnp
