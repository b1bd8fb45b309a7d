#pragma once

#include "mstl/milp.hpp"

#include <memory>
#include <string>

namespace mstl::milp {

class SolverBackend {
 public:
  virtual ~SolverBackend() = default;
  virtual MilpSolution solve(const MilpModel& model, const SolveParams& params) = 0;
  virtual std::string name() const = 0;
};

class EmbeddedSolver : public SolverBackend {
 public:
  MilpSolution solve(const MilpModel& model, const SolveParams& params) override {
    return milp::solve(model, params);
  }
  std::string name() const override { return "embedded"; }
};

/// Routes models through a long-lived co-process (one LP-text model per
/// request, `name value` lines back).  Used for instances beyond the
/// embedded solver's intended scope.
class ExternalSolver : public SolverBackend {
 public:
  explicit ExternalSolver(std::string command);
  ~ExternalSolver() override;
  ExternalSolver(const ExternalSolver&) = delete;
  ExternalSolver& operator=(const ExternalSolver&) = delete;

  MilpSolution solve(const MilpModel& model, const SolveParams& params) override;
  std::string name() const override { return "external:" + command_; }

 private:
  void ensure_started();
  std::string command_;
  int to_child_ = -1;
  int from_child_ = -1;
  long pid_ = -1;
};

/// Embedded below the binary-count threshold, external above it (when an
/// external command is configured; otherwise the embedded solver is used
/// regardless, with a warning).
class RoutingSolver : public SolverBackend {
 public:
  RoutingSolver(std::unique_ptr<SolverBackend> embedded,
                std::unique_ptr<SolverBackend> external, int binary_threshold = 300)
      : embedded_(std::move(embedded)),
        external_(std::move(external)),
        threshold_(binary_threshold) {}

  MilpSolution solve(const MilpModel& model, const SolveParams& params) override;
  std::string name() const override { return "routing"; }

 private:
  std::unique_ptr<SolverBackend> embedded_;
  std::unique_ptr<SolverBackend> external_;
  int threshold_;
};

}  // namespace mstl::milp
