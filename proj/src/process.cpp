#include "sega/process.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>

#include "sega/error.hpp"

namespace sega {

namespace {

void drain(int fd, std::string& sink) {
  char buf[4096];
  for (;;) {
    ssize_t n = ::read(fd, buf, sizeof(buf));
    if (n > 0) {
      sink.append(buf, static_cast<std::size_t>(n));
    } else {
      break;  // EOF or EAGAIN; poll loop decides what happens next
    }
  }
}

}  // namespace

ProcessResult run_process(const std::vector<std::string>& argv,
                          const std::filesystem::path& cwd, int timeout_s) {
  if (argv.empty()) raise(ErrorKind::precondition, "run_process: empty argv");

  int out_pipe[2];
  int err_pipe[2];
  if (::pipe(out_pipe) != 0 || ::pipe(err_pipe) != 0) {
    raise(ErrorKind::io, "run_process: pipe() failed");
  }

  pid_t pid = ::fork();
  if (pid < 0) raise(ErrorKind::io, "run_process: fork() failed");

  if (pid == 0) {
    ::setpgid(0, 0);  // own process group so a timeout kill reaps grandchildren
    ::dup2(out_pipe[1], STDOUT_FILENO);
    ::dup2(err_pipe[1], STDERR_FILENO);
    ::close(out_pipe[0]);
    ::close(out_pipe[1]);
    ::close(err_pipe[0]);
    ::close(err_pipe[1]);
    if (!cwd.empty() && ::chdir(cwd.c_str()) != 0) _exit(127);
    std::vector<char*> cargv;
    cargv.reserve(argv.size() + 1);
    for (const auto& a : argv) cargv.push_back(const_cast<char*>(a.c_str()));
    cargv.push_back(nullptr);
    ::execvp(cargv[0], cargv.data());
    _exit(127);
  }

  ::close(out_pipe[1]);
  ::close(err_pipe[1]);
  ::fcntl(out_pipe[0], F_SETFL, O_NONBLOCK);
  ::fcntl(err_pipe[0], F_SETFL, O_NONBLOCK);

  ProcessResult result;
  const auto deadline =
      std::chrono::steady_clock::now() + std::chrono::seconds(timeout_s);
  bool child_done = false;
  int status = 0;

  while (true) {
    struct pollfd fds[2] = {{out_pipe[0], POLLIN, 0}, {err_pipe[0], POLLIN, 0}};
    ::poll(fds, 2, 50);
    drain(out_pipe[0], result.out);
    drain(err_pipe[0], result.err);

    pid_t waited = ::waitpid(pid, &status, WNOHANG);
    if (waited == pid) {
      child_done = true;
      break;
    }
    if (std::chrono::steady_clock::now() >= deadline) {
      ::kill(-pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      result.timed_out = true;
      break;
    }
  }

  drain(out_pipe[0], result.out);
  drain(err_pipe[0], result.err);
  ::close(out_pipe[0]);
  ::close(err_pipe[0]);

  if (child_done && WIFEXITED(status)) {
    result.exit_code = WEXITSTATUS(status);
  } else if (child_done && WIFSIGNALED(status)) {
    result.exit_code = 128 + WTERMSIG(status);
  }
  return result;
}

bool program_available(const std::string& program) {
  try {
    ProcessResult r = run_process({program, "--version"}, {}, 20);
    return !r.timed_out && r.exit_code == 0;
  } catch (const Error&) {
    return false;
  }
}

}  // namespace sega
