#include "mstl/solver_backend.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <cstdio>
#include <cstring>
#include <sstream>

namespace mstl::milp {

ExternalSolver::ExternalSolver(std::string command) : command_(std::move(command)) {}

ExternalSolver::~ExternalSolver() {
  if (to_child_ >= 0) close(to_child_);
  if (from_child_ >= 0) close(from_child_);
  if (pid_ > 0) {
    int status = 0;
    waitpid(static_cast<pid_t>(pid_), &status, 0);
  }
}

void ExternalSolver::ensure_started() {
  if (pid_ > 0) return;
  int in_pipe[2], out_pipe[2];
  if (pipe(in_pipe) != 0 || pipe(out_pipe) != 0)
    throw Error("external solver: pipe() failed");
  pid_t pid = fork();
  if (pid < 0) throw Error("external solver: fork() failed");
  if (pid == 0) {
    dup2(in_pipe[0], STDIN_FILENO);
    dup2(out_pipe[1], STDOUT_FILENO);
    close(in_pipe[0]);
    close(in_pipe[1]);
    close(out_pipe[0]);
    close(out_pipe[1]);
    execl("/bin/sh", "sh", "-c", command_.c_str(), static_cast<char*>(nullptr));
    std::perror("exec external solver");
    _exit(127);
  }
  close(in_pipe[0]);
  close(out_pipe[1]);
  to_child_ = in_pipe[1];
  from_child_ = out_pipe[0];
  pid_ = pid;
}

namespace {

void write_all(int fd, const std::string& data) {
  std::size_t off = 0;
  while (off < data.size()) {
    ssize_t n = write(fd, data.data() + off, data.size() - off);
    if (n <= 0) throw Error("external solver: write failed");
    off += static_cast<std::size_t>(n);
  }
}

std::string read_line(int fd) {
  std::string line;
  char c;
  while (true) {
    ssize_t n = read(fd, &c, 1);
    if (n <= 0) throw Error("external solver: unexpected EOF");
    if (c == '\n') return line;
    line += c;
  }
}

}  // namespace

MilpSolution ExternalSolver::solve(const MilpModel& model, const SolveParams& params) {
  ensure_started();
  std::string lp = export_lp(model);
  std::ostringstream head;
  head << "SOLVE " << lp.size() << " " << params.time_limit_seconds << "\n";
  write_all(to_child_, head.str());
  write_all(to_child_, lp);

  MilpSolution sol;
  std::string status_line = read_line(from_child_);
  if (status_line.rfind("STATUS ", 0) != 0)
    throw Error("external solver: bad reply '" + status_line + "'");
  std::string status = status_line.substr(7);
  if (status == "Optimal")
    sol.status = SolveStatus::Optimal;
  else if (status == "Feasible")
    sol.status = SolveStatus::Feasible;
  else if (status == "Infeasible")
    sol.status = SolveStatus::Infeasible;
  else if (status == "Unbounded")
    sol.status = SolveStatus::Unbounded;
  else
    sol.status = SolveStatus::IterLimit;

  std::string obj_line = read_line(from_child_);
  sol.objective = std::strtod(obj_line.c_str() + 4, nullptr);
  std::ostringstream values;
  while (true) {
    std::string line = read_line(from_child_);
    if (line == "END") break;
    values << line << "\n";
  }
  if (sol.status == SolveStatus::Optimal || sol.status == SolveStatus::Feasible) {
    sol.x = import_solution(model, values.str());
    // Trust but verify: imported answers must pass the arithmetic check.
    auto viol = verify(model, sol.x, 1e-5);
    if (!viol.empty())
      throw Error("external solver returned an infeasible point (" +
                  viol.front().what + ")");
  }
  return sol;
}

MilpSolution RoutingSolver::solve(const MilpModel& model, const SolveParams& params) {
  if (model.num_binary() <= threshold_ || !external_) {
    if (model.num_binary() > threshold_)
      std::fprintf(stderr,
                   "warning: %d binaries exceeds the embedded scope (%d); "
                   "no external solver configured, trying anyway\n",
                   model.num_binary(), threshold_);
    return embedded_->solve(model, params);
  }
  return external_->solve(model, params);
}

}  // namespace mstl::milp
