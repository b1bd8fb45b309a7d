#pragma once

#include "mstl/synth.hpp"

#include <optional>

namespace mstl::mpc {

/// Piecewise-affine nondecreasing stage cost: per predicted stage k the term
/// gamma^k * (x_coef' x_k + r_coef' r_k + u_coef' u_k), plus -zeta * rho over
/// the stitched window.  Min/max compositions enter through the system's
/// auxiliary block (r holds flows for the traffic cost).
struct MpcCost {
  double zeta = 0.0;
  double gamma = 1.0;
  Vec x_coef;       // size n (empty = zero)
  Vec r_coef;       // size n_r
  Vec u_real_coef;  // size m_r
};

struct MpcConfig {
  int horizon = 1;  // H >= h^phi
  stl::FormulaPtr phi;
  synth::LowerSetUnion omega;
  MpcCost cost;
  milp::SolveParams solve;
  milp::SolverBackend* backend = nullptr;
  encode::EncodeOptions enc;
  bool terminal = true;         // drop the RCI terminal constraint when false
  bool zero_pad_history = true; // clip-interval alternative when false
};

struct MpcState {
  long t = 0;
  std::vector<Vec> history;  // the last h^phi - 1 realized states (oldest first)
  double cumulative_cost = 0.0;
};

class MpcInfeasible : public Error {
 public:
  MpcInfeasible(long t, std::string msg) : Error(std::move(msg)), t_(t) {}
  long time() const { return t_; }

 private:
  long t_;
};

struct MpcStepResult {
  mld::ControlInput u;
  stl::Signal predicted;  // stitched window (history + predictions)
  double objective = 0.0;
  int anchor = -1;  // chosen anchor index, -1 without terminal constraint
  std::vector<milp::SolveStatus> anchor_status;
  double wall_seconds = 0.0;
};

/// One receding-horizon step: per-anchor MILPs over the maximal system with
/// the G[0,H-1] window constraint on the stitched history; returns the best
/// feasible anchor's first control.  Throws MpcInfeasible when every anchor
/// (or the unconstrained program) is infeasible.
MpcStepResult mpc_step(const MpcConfig& cfg, const mld::MldSystem& sys,
                       const MpcState& st, const Vec& x_t);

struct MpcStepLog {
  long t = 0;
  mld::ControlInput u;
  Vec x_realized;
  double objective = 0.0;
  int anchor = -1;
  double wall_seconds = 0.0;
};

struct MpcRunResult {
  stl::Signal trajectory;  // realized states x_0 .. x_steps
  std::vector<mld::ControlInput> controls;
  std::vector<mld::Disturbance> disturbances;
  std::vector<MpcStepLog> logs;
  bool infeasible = false;
  long infeasible_at = -1;
};

/// Closed-loop run with realized (seeded / maximal / explicit) disturbances.
/// When stop_on_infeasible is set the run returns the truncated trajectory
/// instead of throwing.
MpcRunResult mpc_run(const MpcConfig& cfg, const mld::MldSystem& sys, const Vec& x0,
                     int steps, const mld::WSource& w_source,
                     bool stop_on_infeasible = false);

std::string run_log_csv(const mld::MldSystem& sys, const MpcRunResult& run);

}  // namespace mstl::mpc
