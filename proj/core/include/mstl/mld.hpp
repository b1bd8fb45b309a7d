#pragma once

#include "mstl/common.hpp"
#include "mstl/milp.hpp"
#include "mstl/stl.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace mstl::mld {

struct ControlInput {
  Vec real;              // size m_r
  std::vector<int> bin;  // size m_b, entries in {0,1}
};

struct Disturbance {
  Vec real;              // size q_r
  std::vector<int> bin;  // size q_b
};

/// Linear inequality over the stacked control (real part, then binary part):
/// a_real^T u_r + a_bin^T u_b <= b.
struct ControlCoupling {
  Vec a_real;
  Vec a_bin;
  double b = 0.0;
};

/// Mixed-logical-dynamical system
///   x+ = A x + B_u u + B_w w + D_delta delta + D_r r
///   E_delta delta + E_r r <= E_x x + E_u u + E_w w + e
/// with binary auxiliaries delta and real auxiliaries r.  Controls and
/// disturbances stack their real parts before their binary parts in the
/// B_u/B_w/E_u/E_w columns.
///
/// A system may also carry a closed-form evaluator (attached by builders that
/// start from a piecewise-affine description); step() prefers it and the
/// constraint block is what MILP encodings consume.
struct MldSystem {
  int n = 0;
  int m_r = 0, m_b = 0;
  int q_r = 0, q_b = 0;
  int n_delta = 0, n_r = 0;

  Mat A, B_u, B_w, D_delta, D_r;
  Mat E_delta, E_r, E_x, E_u, E_w;
  Vec e;

  Vec K;  // state upper bound; X = [0, K]
  Vec w_star_real;
  std::vector<int> w_star_bin;

  Vec u_real_lo, u_real_hi;
  std::vector<ControlCoupling> u_couplings;

  /// Box bounds for the real auxiliaries (needed by the box-bounded MILP).
  Vec r_lo, r_hi;

  std::function<Vec(const Vec&, const ControlInput&, const Disturbance&)> evaluator;
  /// Closed-form witness for the constraint block: auxiliary (delta, r)
  /// values consistent with one exact step.  Enables MILP incumbent repair.
  struct AuxAssignment {
    Vec delta;
    Vec r;
  };
  std::function<AuxAssignment(const Vec&, const ControlInput&, const Disturbance&)>
      aux_evaluator;
  /// Draws states for sampling-based checks; defaults to uniform over [0,K].
  std::function<Vec(Rng&)> state_sampler;

  std::string name;

  Disturbance maximal_disturbance() const;
  bool control_admissible(const ControlInput& u, double tol = 1e-9) const;
  void validate() const;
};

/// One transition.  Uses the closed-form evaluator when present, otherwise
/// solves the auxiliary feasibility MILP.  Throws on inadmissible inputs or
/// an infeasible (ill-posed) auxiliary system.
Vec step(const MldSystem& sys, const Vec& x, const ControlInput& u, const Disturbance& w);

/// Always goes through the constraint block; used by well-posedness checks.
/// Solves twice with objectives +-1^T x+ and reports the gap.
struct MilpStepResult {
  Vec x_next;
  double ambiguity = 0.0;  // |max 1'x+ - min 1'x+|
};
MilpStepResult step_via_milp(const MldSystem& sys, const Vec& x, const ControlInput& u,
                             const Disturbance& w);

Vec step_maximal(const MldSystem& sys, const Vec& x, const ControlInput& u);

enum class WSourceKind { Maximal, SeededUniform, Explicit };

struct WSource {
  WSourceKind kind = WSourceKind::Maximal;
  std::uint64_t seed = 0;
  std::vector<Disturbance> sequence;  // for Explicit

  static WSource maximal() { return {WSourceKind::Maximal, 0, {}}; }
  static WSource seeded(std::uint64_t s) { return {WSourceKind::SeededUniform, s, {}}; }
  static WSource explicit_seq(std::vector<Disturbance> seq) {
    return {WSourceKind::Explicit, 0, std::move(seq)};
  }
};

/// Draws the disturbance for step t of a run (deterministic given seed).
Disturbance draw_disturbance(const MldSystem& sys, const WSource& src, std::uint64_t seed_mix,
                             int t);

stl::Signal simulate(const MldSystem& sys, const Vec& x0,
                     const std::vector<ControlInput>& controls, const WSource& w_source);

struct MonotoneReport {
  bool ok = true;
  long samples = 0;
  // witness when ok == false
  Vec x_lo, x_hi;
  ControlInput u;
  Disturbance w;
};

/// Falsification-style monotonicity check: samples pairs x' <= x inside the
/// sampler's region plus random (u, w) and looks for order violations.
MonotoneReport check_monotone(const MldSystem& sys, long samples, std::uint64_t seed);

std::string to_json(const MldSystem& sys);
MldSystem from_json(const std::string& json_text);

/// Trajectory CSV: header t,x0..x{n-1},u...,w... one row per step.
std::string trajectory_csv(const MldSystem& sys, const stl::Signal& traj,
                           const std::vector<ControlInput>& controls,
                           const std::vector<Disturbance>& ws);

}  // namespace mstl::mld
