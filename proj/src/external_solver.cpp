#include <fcntl.h>
#include <signal.h>
#include <sys/wait.h>
#include <unistd.h>

#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include "h2grid/error.hpp"
#include "h2grid/solver.hpp"

namespace h2grid {

namespace fs = std::filesystem;

std::optional<std::string> resolve_solver_command(const std::string& explicit_command) {
  if (!explicit_command.empty()) return explicit_command;
  if (const char* env = std::getenv(kSolverEnvVar); env && *env) return std::string(env);
  return std::nullopt;
}

namespace {

constexpr double kGraceSeconds = 10.0;

std::string quoted(const fs::path& p) {
  std::string out = "'";
  for (char c : p.string()) {
    if (c == '\'') out += "'\\''";
    else out += c;
  }
  return out + "'";
}

void replace_all(std::string& s, const std::string& what, const std::string& with) {
  for (std::size_t pos = s.find(what); pos != std::string::npos; pos = s.find(what, pos + with.size())) {
    s.replace(pos, what.size(), with);
  }
}

std::string tail(const fs::path& p, std::size_t max_bytes = 2000) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  auto s = buf.str();
  if (s.size() > max_bytes) s = "..." + s.substr(s.size() - max_bytes);
  return s;
}

class ScratchDir {
 public:
  ScratchDir() {
    static std::atomic<unsigned> counter{0};
    path_ = fs::temp_directory_path() /
            ("h2grid-" + std::to_string(::getpid()) + "-" + std::to_string(counter.fetch_add(1)));
    fs::create_directories(path_);
  }
  ~ScratchDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
  }
  ScratchDir(const ScratchDir&) = delete;
  ScratchDir& operator=(const ScratchDir&) = delete;

  const fs::path& path() const { return path_; }

 private:
  fs::path path_;
};

struct ProcessOutcome {
  bool timed_out = false;
  int exit_code = -1;
};

ProcessOutcome run_shell(const std::string& command, const fs::path& out_file, const fs::path& err_file,
                         double timeout_s) {
  const pid_t pid = ::fork();
  if (pid < 0) throw Error(ErrorCode::solver, "fork failed");
  if (pid == 0) {
    ::setpgid(0, 0);
    const int out = ::open(out_file.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    const int err = ::open(err_file.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
    if (out >= 0) ::dup2(out, STDOUT_FILENO);
    if (err >= 0) ::dup2(err, STDERR_FILENO);
    ::execl("/bin/sh", "sh", "-c", command.c_str(), static_cast<char*>(nullptr));
    ::_exit(127);
  }
  ::setpgid(pid, pid);
  const auto deadline = std::chrono::steady_clock::now() + std::chrono::duration<double>(timeout_s);
  ProcessOutcome outcome;
  for (;;) {
    int status = 0;
    const pid_t done = ::waitpid(pid, &status, WNOHANG);
    if (done == pid) {
      outcome.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : 128 + WTERMSIG(status);
      return outcome;
    }
    if (std::chrono::steady_clock::now() > deadline) {
      ::kill(-pid, SIGKILL);
      ::waitpid(pid, &status, 0);
      outcome.timed_out = true;
      return outcome;
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
  }
}

}  // namespace

SolveResult invoke_external_solver(const MilpModel& model, const ExternalSolverConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  const auto elapsed = [&] { return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count(); };
  SolveResult res;
  res.backend = "external";
  if (config.command.empty()) {
    res.message = std::string("no solver command configured (set ") + kSolverEnvVar + " or --solver-cmd)";
    return res;
  }

  ScratchDir scratch;
  const auto lp = scratch.path() / "model.lp";
  const auto sol = scratch.path() / "model.sol";
  try {
    write_lp_file(model, lp);
  } catch (const Error& e) {
    res.message = e.what();
    return res;
  }

  std::string cmd = config.command;
  replace_all(cmd, "{lp}", quoted(lp));
  replace_all(cmd, "{sol}", quoted(sol));
  {
    std::ostringstream tl, gap;
    tl << config.time_limit_s;
    gap << config.mip_gap;
    replace_all(cmd, "{time_limit}", tl.str());
    replace_all(cmd, "{gap}", gap.str());
  }

  const auto outcome = run_shell(cmd, scratch.path() / "stdout.txt", scratch.path() / "stderr.txt",
                                 config.time_limit_s + kGraceSeconds);
  res.wall_seconds = elapsed();
  if (outcome.timed_out) {
    res.message = "solver timed out after " + std::to_string(res.wall_seconds) + " s: " +
                  tail(scratch.path() / "stderr.txt");
    return res;
  }
  if (outcome.exit_code != 0) {
    res.message = "solver exited with code " + std::to_string(outcome.exit_code) + ": " +
                  tail(scratch.path() / "stderr.txt");
    return res;
  }
  std::ifstream in(sol);
  if (!in) {
    res.message = "solver wrote no solution file: " + tail(scratch.path() / "stderr.txt");
    return res;
  }
  auto parsed = parse_solution(in, model.num_variables());
  parsed.backend = res.backend;
  parsed.wall_seconds = res.wall_seconds;
  if (parsed.status == SolveStatus::error && parsed.message.empty()) {
    parsed.message = tail(scratch.path() / "stderr.txt");
  }
  return parsed;
}

}  // namespace h2grid
