#pragma once

#include "mstl/milp.hpp"
#include "mstl/mld.hpp"
#include "mstl/stl.hpp"

#include <map>
#include <optional>

namespace mstl::encode {

enum class ObjectiveKind {
  Feasibility,
  MaxRho,
  /// Largest symmetric corner: maximize t subject to t <= x0_i for all i.
  /// This is the box objective used for the demo instances; the containing
  /// lower set L(x0) then has inf-norm radius t.
  MaxX0Corner,
  MaxX0L1,
  CustomLinear,
};

struct Objective {
  ObjectiveKind kind = ObjectiveKind::Feasibility;
  Vec custom_x0;  // coefficients over x0 for CustomLinear
};

struct EncodeOptions {
  /// Lower the root satisfaction constraint by pinning instead of a z chain.
  bool pin_root = true;
  /// One-binary lowering for pinned two-way disjunctions over predicate
  /// conjunctions (keeps Or-heavy congestion formulas compact).
  bool mode_a = true;
  bool origin_tags = true;
};

struct BuildOptions {
  int window = -1;  // number of dynamic steps; defaults to horizon(f)
  std::optional<Vec> x0;
  /// Dynamics rows are emitted for steps dyn_start..window-1; earlier states
  /// are free in [0,K] (used by the sequence search prefixes).
  int dyn_start = 0;
  /// Pins states 0..size-1 to known values (receding-horizon history);
  /// implies dyn_start = size-1, so dynamics start from the last pinned
  /// state and no control variables exist in the past.
  std::vector<Vec> fixed_prefix;
  Objective objective;
  EncodeOptions enc;
};

/// Records how an encoder-created indicator variable is grounded in the
/// formula, so incumbent repair can recompute it from a decoded trajectory.
struct ZBinding {
  enum class Kind { Node, UntilWitness, Branch };
  Kind kind = Kind::Node;
  const stl::Formula* node = nullptr;
  int t = 0;
  int t2 = 0;  // witness time for UntilWitness
  int var = 0;
};

/// A built MILP plus the variable layout needed to decode solutions and to
/// bolt on extra constraint blocks (wrap inequalities, terminal sets).
struct BuiltModel {
  milp::MilpModel model;
  const mld::MldSystem* sys = nullptr;
  stl::FormulaPtr formula;
  int window = 0;
  int dyn_start = 0;

  std::vector<std::vector<int>> x;       // [k][i], k = 0..window
  std::vector<std::vector<int>> u_real;  // [k][j], k = 0..window-1
  std::vector<std::vector<int>> u_bin;
  std::vector<std::vector<int>> w;       // pinned to w* via bounds
  std::vector<std::vector<int>> dvar;    // per-step binary auxiliaries
  std::vector<std::vector<int>> rvar;    // per-step real auxiliaries
  int rho = -1;
  int root_z = -1;   // -1 when the root was pinned
  int obj_aux = -1;  // corner objective helper variable
  ObjectiveKind objective_kind = ObjectiveKind::Feasibility;
  std::vector<ZBinding> bindings;

  stl::Signal decode_state(const std::vector<double>& sol) const;
  std::vector<mld::ControlInput> decode_controls(const std::vector<double>& sol) const;
  double decode_rho(const std::vector<double>& sol) const;

  /// Adds x[to + k] <= x[from + k] componentwise for k = 0..len-1.
  void add_wrap_rows(int from, int to, int len);

  /// Installs a branch-and-bound incumbent repair that re-simulates the
  /// rounded controls through the system evaluator and rebuilds every
  /// variable consistently.  No-op when the system has no evaluator.
  void install_repair();
};

/// Big-M registry rule: M >= max(a^T K, b) plus the robustness headroom.
double big_m_for(const stl::Predicate& p, const Vec& K, double rho_cap);

/// Low-level encoding context exposed for tests and custom builders.
struct EncodingContext {
  BuiltModel* built = nullptr;
  EncodeOptions opts;
  double rho_cap = 0.0;  // upper bound on rho over the formula's predicates
  std::map<std::pair<const stl::Formula*, int>, int> memo;

  int state_var(int k, int i) const;
  std::string tag(const std::string& base, int t) const;
};

/// Emits the paper's two-row big-M relation for one predicate at step k and
/// returns the binary z variable.
int encode_predicate(EncodingContext& ctx, const stl::Predicate& p, int k);

/// Recursive z-mode encoding; returns the z variable of (f, t).
int encode_formula(EncodingContext& ctx, const stl::FormulaPtr& f, int t);

/// Full Problem-1 style model: maximal-system dynamics over the window,
/// formula satisfaction pinned at time 0, objective as requested.
BuiltModel build_bounded_problem(const mld::MldSystem& sys, const stl::FormulaPtr& f,
                                 const BuildOptions& opts = {});

}  // namespace mstl::encode
