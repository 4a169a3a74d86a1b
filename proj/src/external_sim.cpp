#include "lsbo/external_sim.hpp"

#include <fcntl.h>
#include <poll.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cmath>
#include <cstring>
#include <mutex>
#include <json.hpp>
#include <stdexcept>

namespace lsbo {
namespace {

using json = nlohmann::json;
using clock_type = std::chrono::steady_clock;

void ignore_sigpipe_once() {
  // A child that exits before reading its stdin must not kill the campaign.
  static std::once_flag flag;
  std::call_once(flag, [] { ::signal(SIGPIPE, SIG_IGN); });
}

std::string build_request(const DesignSpace& space, const DesignPoint& p) {
  json vars = json::object();
  for (std::size_t n = 0; n < space.num_vars(); ++n) {
    const LevelValue& v = space.value(p, n);
    if (v.is_number())
      vars[space.var(n).name] = v.number();
    else
      vars[space.var(n).name] = v.label();
  }
  json req;
  req["variables"] = std::move(vars);
  return req.dump() + "\n";
}

// First non-empty line of the child's stdout is the reply; anything after it
// is ignored so children may chatter once the result is out.
bool parse_reply(const std::string& text, std::vector<double>& f,
                 std::string& err) {
  std::size_t begin = 0;
  std::string line;
  while (begin < text.size()) {
    std::size_t end = text.find('\n', begin);
    if (end == std::string::npos) end = text.size();
    line = text.substr(begin, end - begin);
    if (line.find_first_not_of(" \t\r") != std::string::npos) break;
    line.clear();
    begin = end + 1;
  }
  if (line.empty()) {
    err = "malformed output: empty reply";
    return false;
  }
  json reply = json::parse(line, nullptr, false);
  if (reply.is_discarded() || !reply.is_object()) {
    err = "malformed output: not a JSON object";
    return false;
  }
  if (reply.contains("error")) {
    err = "child error: " + reply["error"].dump();
    return false;
  }
  if (!reply.contains("objectives") || !reply["objectives"].is_array()) {
    err = "malformed output: missing objectives array";
    return false;
  }
  for (const json& v : reply["objectives"]) {
    if (!v.is_number()) {
      err = "malformed output: non-numeric objective";
      return false;
    }
    f.push_back(v.get<double>());
  }
  if (f.empty()) {
    err = "malformed output: empty objectives array";
    return false;
  }
  return true;
}

struct ChildResult {
  bool launched = false;
  bool timed_out = false;
  int exit_status = -1;   // waitpid status
  std::string stdout_text;
  std::string launch_error;
};

ChildResult run_child(const std::string& command, const std::string& request,
                      std::uint64_t timeout_ms) {
  ChildResult res;
  int in_pipe[2], out_pipe[2];
  if (::pipe(in_pipe) != 0) {
    res.launch_error = std::strerror(errno);
    return res;
  }
  if (::pipe(out_pipe) != 0) {
    res.launch_error = std::strerror(errno);
    ::close(in_pipe[0]);
    ::close(in_pipe[1]);
    return res;
  }

  pid_t pid = ::fork();
  if (pid < 0) {
    res.launch_error = std::strerror(errno);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    return res;
  }
  if (pid == 0) {
    // New process group so a timeout can kill the whole shell pipeline.
    ::setpgid(0, 0);
    ::dup2(in_pipe[0], STDIN_FILENO);
    ::dup2(out_pipe[1], STDOUT_FILENO);
    for (int fd : {in_pipe[0], in_pipe[1], out_pipe[0], out_pipe[1]}) ::close(fd);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), (char*)nullptr);
    _exit(127);
  }

  res.launched = true;
  ::close(in_pipe[0]);
  ::close(out_pipe[1]);

  // The request is one short line; write it and close so the child sees EOF.
  std::size_t off = 0;
  while (off < request.size()) {
    ssize_t w = ::write(in_pipe[1], request.data() + off, request.size() - off);
    if (w < 0) {
      if (errno == EINTR) continue;
      break;  // EPIPE: child exited early, keep going and read what it said
    }
    off += std::size_t(w);
  }
  ::close(in_pipe[1]);

  const auto deadline = clock_type::now() + std::chrono::milliseconds(timeout_ms);
  char buf[4096];
  bool open = true;
  while (open) {
    auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
        deadline - clock_type::now());
    if (left.count() <= 0) {
      res.timed_out = true;
      break;
    }
    struct pollfd pfd{out_pipe[0], POLLIN, 0};
    int pr = ::poll(&pfd, 1, int(left.count()));
    if (pr < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (pr == 0) {
      res.timed_out = true;
      break;
    }
    ssize_t r = ::read(out_pipe[0], buf, sizeof buf);
    if (r < 0) {
      if (errno == EINTR) continue;
      break;
    }
    if (r == 0) {
      open = false;
    } else {
      res.stdout_text.append(buf, std::size_t(r));
    }
  }
  ::close(out_pipe[0]);

  if (res.timed_out) ::kill(-pid, SIGKILL);
  int status = 0;
  while (::waitpid(pid, &status, 0) < 0 && errno == EINTR) {
  }
  res.exit_status = status;
  return res;
}

}  // namespace

Simulator make_external_simulator(ExternalSimOptions opts) {
  if (opts.command.empty())
    throw std::invalid_argument("external simulator: empty command");
  ignore_sigpipe_once();
  return [opts](const DesignSpace& space, const DesignPoint& p) {
    SimOutcome out;
    std::string request = build_request(space, p);
    auto t0 = clock_type::now();
    ChildResult child = run_child(opts.command, request, opts.timeout_ms);
    out.wall_ms = std::uint64_t(std::chrono::duration_cast<std::chrono::milliseconds>(
                                    clock_type::now() - t0)
                                    .count());
    if (!child.launched) {
      out.error = "launch failure: " + child.launch_error;
      return out;
    }
    if (child.timed_out) {
      out.error = "timeout after " + std::to_string(opts.timeout_ms) + " ms";
      return out;
    }
    if (WIFEXITED(child.exit_status) && WEXITSTATUS(child.exit_status) == 127) {
      out.error = "launch failure: command not found";
      return out;
    }
    if (!WIFEXITED(child.exit_status) || WEXITSTATUS(child.exit_status) != 0) {
      int code = WIFEXITED(child.exit_status) ? WEXITSTATUS(child.exit_status)
                                              : -WTERMSIG(child.exit_status);
      out.error = "child failed: status " + std::to_string(code);
      return out;
    }
    std::string err;
    if (!parse_reply(child.stdout_text, out.f, err)) {
      out.error = err;
      return out;
    }
    out.ok = true;
    return out;
  };
}

}  // namespace lsbo
