#pragma once

#include "mstl/encode.hpp"
#include "mstl/solver_backend.hpp"

#include <optional>

namespace mstl::synth {

struct SynthOptions {
  encode::Objective objective;
  milp::SolveParams solve;
  milp::SolverBackend* backend = nullptr;  // nullptr: embedded
  encode::EncodeOptions enc;
};

struct BoundedResult {
  milp::SolveStatus status = milp::SolveStatus::Infeasible;
  std::vector<mld::ControlInput> controls;
  stl::Signal witness;
  double rho = 0.0;
  double objective = 0.0;
  long nodes = 0;

  bool feasible() const {
    return status == milp::SolveStatus::Optimal ||
           status == milp::SolveStatus::Feasible ||
           (status == milp::SolveStatus::IterLimit && !witness.samples.empty());
  }
};

/// Problem-1 solve: open-loop controls for the maximal system over the
/// formula horizon.  The witness is monitor-checked before returning.
BoundedResult solve_bounded(const mld::MldSystem& sys, const stl::FormulaPtr& f,
                            const std::optional<Vec>& x0, const SynthOptions& opts = {});

/// Window sequences of states; anchor windows for the lower-set union.
struct LowerSetUnion {
  int window_len = 0;  // h + 1 states per anchor
  std::vector<std::vector<Vec>> anchors;

  bool contains(const std::vector<Vec>& window, double tol = 1e-9) const;
};

struct SSequence {
  int T = 0;
  int h = 0;
  std::vector<mld::ControlInput> controls;  // u^s_0 .. u^s_{T-1}
  stl::Signal witness;                      // x^s_0 .. x^s_{T+h}
  LowerSetUnion omega() const;
};

struct SearchAttempt {
  int T = 0;
  int T0 = -1;
  milp::SolveStatus status = milp::SolveStatus::Infeasible;
};

struct SearchReport {
  std::vector<SearchAttempt> attempts;
};

std::optional<SSequence> find_s_sequence(const mld::MldSystem& sys,
                                         const stl::FormulaPtr& f, int t_max,
                                         const SynthOptions& opts = {},
                                         SearchReport* report = nullptr);

struct PhiSequence {
  stl::BoundedGlobalSpec spec;
  int T = 0;
  int T0 = 0;
  int h_g = 0;
  Vec x0;
  std::vector<mld::ControlInput> controls;  // u^phi_0 .. u^phi_{Delta+T+h_g-1}
  stl::Signal witness;                      // maximal-system trajectory
  LowerSetUnion omega() const;
};

std::optional<PhiSequence> find_phi_sequence(const mld::MldSystem& sys,
                                             const stl::BoundedGlobalSpec& spec,
                                             int t_max, const SynthOptions& opts = {},
                                             SearchReport* report = nullptr,
                                             const std::optional<Vec>& x0 = {});

/// Periodic unrolling of a sequence policy to `horizon` control steps.
std::vector<mld::ControlInput> unroll_policy(const SSequence& seq, int horizon);
std::vector<mld::ControlInput> unroll_policy(const PhiSequence& seq, int horizon);

bool rci_contains(const LowerSetUnion& omega, const std::vector<Vec>& window,
                  double tol = 1e-9);

struct Orbit {
  std::vector<Vec> states;  // one period, length T - T0
  int cycles = 0;
  double gap = 0.0;
  bool converged = false;
};

/// Iterates the maximal system under the unrolled policy until successive
/// periods agree within tol (infinity norm).
Orbit limit_orbit(const mld::MldSystem& sys, const PhiSequence& seq, double tol,
                  int max_cycles);

/// Pigeonhole bound on the searchable period: N = ceil((a*/eps)^(n (h_g+1))).
double fragility_bound(int n, int h_g, double a_star, double eps);
/// Inverse relation: the perturbation margin implied by exhausting T <= N.
double fragility_epsilon(int n, int h_g, double a_star, double n_max);

std::string to_json(const SSequence& seq, const std::string& witness_csv_path);
std::string to_json(const PhiSequence& seq, const std::string& witness_csv_path);
std::string anchors_csv(const LowerSetUnion& omega);

}  // namespace mstl::synth
