#include "mstl/synth.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <sstream>

namespace mstl::synth {

using milp::SolveStatus;

namespace {

milp::EmbeddedSolver& default_backend() {
  static milp::EmbeddedSolver s;
  return s;
}

milp::MilpSolution run_solver(const encode::BuiltModel& built, const SynthOptions& opts) {
  milp::SolverBackend* backend = opts.backend ? opts.backend : &default_backend();
  return backend->solve(built.model, opts.solve);
}

}  // namespace

BoundedResult solve_bounded(const mld::MldSystem& sys, const stl::FormulaPtr& f,
                            const std::optional<Vec>& x0, const SynthOptions& opts) {
  encode::BuildOptions b;
  b.objective = opts.objective;
  b.enc = opts.enc;
  b.x0 = x0;
  encode::BuiltModel built = encode::build_bounded_problem(sys, f, b);
  built.install_repair();
  milp::MilpSolution sol = run_solver(built, opts);
  BoundedResult out;
  out.status = sol.status;
  out.nodes = sol.nodes;
  if (sol.x.empty()) return out;
  out.controls = built.decode_controls(sol.x);
  out.witness = built.decode_state(sol.x);
  out.rho = built.decode_rho(sol.x);
  out.objective = sol.objective;
  if (!stl::eval_bool(out.witness, f, 0))
    throw Error("solver returned a witness the monitor rejects");
  return out;
}

bool LowerSetUnion::contains(const std::vector<Vec>& window, double tol) const {
  if (static_cast<int>(window.size()) != window_len) return false;
  for (const auto& anchor : anchors) {
    bool ok = true;
    for (std::size_t k = 0; k < window.size() && ok; ++k)
      ok = leq(window[k], anchor[k], tol);
    if (ok) return true;
  }
  return false;
}

bool rci_contains(const LowerSetUnion& omega, const std::vector<Vec>& window, double tol) {
  return omega.contains(window, tol);
}

LowerSetUnion SSequence::omega() const {
  LowerSetUnion u;
  u.window_len = h + 1;
  for (int k = 0; k < T; ++k) {
    std::vector<Vec> anchor;
    for (int j = 0; j <= h; ++j)
      anchor.push_back(witness.samples[static_cast<std::size_t>(k + j)]);
    u.anchors.push_back(std::move(anchor));
  }
  return u;
}

LowerSetUnion PhiSequence::omega() const {
  LowerSetUnion u;
  u.window_len = h_g + 1;
  int delta = spec.delta;
  for (int i = 0; i < T - T0; ++i) {
    std::vector<Vec> anchor;
    for (int j = 0; j <= h_g; ++j)
      anchor.push_back(witness.samples[static_cast<std::size_t>(delta + T0 + i + j)]);
    u.anchors.push_back(std::move(anchor));
  }
  return u;
}

namespace {

// Re-simulates the maximal system over the dynamic suffix and checks the
// decoded witness step by step; MILP answers never enter the artifact
// unverified.
void verify_maximal_suffix(const mld::MldSystem& sys, const stl::Signal& witness,
                           const std::vector<mld::ControlInput>& controls, int dyn_start,
                           double tol = 1e-5) {
  Vec x = witness.samples[static_cast<std::size_t>(dyn_start)];
  for (std::size_t k = 0; k < controls.size(); ++k) {
    x = mld::step_maximal(sys, x, controls[k]);
    const Vec& expect = witness.samples[static_cast<std::size_t>(dyn_start) + k + 1];
    if ((x - expect).cwiseAbs().maxCoeff() > tol)
      throw Error("decoded witness is not a maximal-system trajectory");
  }
}

}  // namespace

std::optional<SSequence> find_s_sequence(const mld::MldSystem& sys,
                                         const stl::FormulaPtr& f, int t_max,
                                         const SynthOptions& opts, SearchReport* report) {
  stl::Horizon hor = stl::horizon(f);
  if (hor.unbounded) throw ModelError("s-sequence needs a bounded formula");
  int h = hor.steps;
  for (int T = 1; T <= t_max; ++T) {
    encode::BuildOptions b;
    b.window = T + h;
    b.dyn_start = h;  // the first h+1 states are free (not a trajectory)
    b.objective = opts.objective;
    b.enc = opts.enc;
    auto g = stl::Formula::always(f, {0, T, false});
    encode::BuiltModel built = encode::build_bounded_problem(sys, g, b);
    built.add_wrap_rows(0, T, h + 1);
    built.install_repair();
    milp::MilpSolution sol = run_solver(built, opts);
    if (report) report->attempts.push_back({T, -1, sol.status});
    if (sol.x.empty()) continue;
    SSequence seq;
    seq.T = T;
    seq.h = h;
    seq.controls = built.decode_controls(sol.x);
    seq.witness = built.decode_state(sol.x);
    verify_maximal_suffix(sys, seq.witness, seq.controls, h);
    for (int k = 0; k <= T; ++k) {
      stl::Signal win;
      win.start_time = 0;
      for (int j = 0; j <= h; ++j)
        win.samples.push_back(seq.witness.samples[static_cast<std::size_t>(k + j)]);
      if (!stl::eval_bool(win, f, 0))
        throw Error("s-sequence witness fails the formula at offset " + std::to_string(k));
    }
    for (int j = 0; j <= h; ++j)
      if (!leq(seq.witness.samples[static_cast<std::size_t>(T + j)],
               seq.witness.samples[static_cast<std::size_t>(j)], 1e-7))
        throw Error("s-sequence wrap inequality fails");
    return seq;
  }
  return std::nullopt;
}

std::optional<PhiSequence> find_phi_sequence(const mld::MldSystem& sys,
                                             const stl::BoundedGlobalSpec& spec,
                                             int t_max, const SynthOptions& opts,
                                             SearchReport* report,
                                             const std::optional<Vec>& x0) {
  stl::Horizon hb = stl::horizon(spec.phi_b);
  stl::Horizon hg = stl::horizon(spec.phi_g);
  if (hb.unbounded || hg.unbounded)
    throw ModelError("bounded-global spec must have bounded parts");
  int h_g = hg.steps;
  for (int T = 1; T <= t_max; ++T) {
    for (int T0 = 0; T0 < T; ++T0) {
      encode::BuildOptions b;
      b.window = std::max(hb.steps, spec.delta + T + h_g);
      b.objective = opts.objective;
      b.enc = opts.enc;
      b.x0 = x0;
      stl::FormulaPtr cond1;
      if (spec.phi_g->is_truth()) {
        cond1 = spec.phi_b;
      } else {
        auto gpart =
            stl::Formula::always(spec.phi_g, {spec.delta, spec.delta + T, false});
        cond1 = spec.phi_b->is_truth() ? gpart
                                       : stl::Formula::conj({spec.phi_b, gpart});
      }
      encode::BuiltModel built = encode::build_bounded_problem(sys, cond1, b);
      built.add_wrap_rows(spec.delta + T0, spec.delta + T, h_g + 1);
      built.install_repair();
      milp::MilpSolution sol = run_solver(built, opts);
      if (report) report->attempts.push_back({T, T0, sol.status});
      if (sol.x.empty()) continue;
      PhiSequence seq;
      seq.spec = spec;
      seq.T = T;
      seq.T0 = T0;
      seq.h_g = h_g;
      seq.controls = built.decode_controls(sol.x);
      seq.witness = built.decode_state(sol.x);
      seq.x0 = seq.witness.samples.front();
      verify_maximal_suffix(sys, seq.witness, seq.controls, 0);
      if (!stl::eval_bool(seq.witness, cond1, 0))
        throw Error("phi-sequence witness fails condition 1");
      for (int j = 0; j <= h_g; ++j)
        if (!leq(seq.witness.samples[static_cast<std::size_t>(spec.delta + T + j)],
                 seq.witness.samples[static_cast<std::size_t>(spec.delta + T0 + j)], 1e-7))
          throw Error("phi-sequence wrap inequality fails");
      return seq;
    }
  }
  return std::nullopt;
}

std::vector<mld::ControlInput> unroll_policy(const SSequence& seq, int horizon) {
  std::vector<mld::ControlInput> out;
  for (int t = 0; t < horizon; ++t)
    out.push_back(seq.controls[static_cast<std::size_t>(t % seq.T)]);
  return out;
}

std::vector<mld::ControlInput> unroll_policy(const PhiSequence& seq, int horizon) {
  std::vector<mld::ControlInput> out;
  int delta = seq.spec.delta;
  int head = delta + seq.T0 + seq.h_g;          // initialization segment length
  int period = seq.T - seq.T0;                  // repetitive segment
  for (int t = 0; t < horizon; ++t) {
    int idx = t < head ? t : head + ((t - head) % period);
    out.push_back(seq.controls[static_cast<std::size_t>(idx)]);
  }
  return out;
}

Orbit limit_orbit(const mld::MldSystem& sys, const PhiSequence& seq, double tol,
                  int max_cycles) {
  int period = seq.T - seq.T0;
  Orbit orbit;
  // Continue the witness run under the periodic tail and compare blocks.
  Vec x = seq.witness.samples.back();
  int t = static_cast<int>(seq.witness.samples.size()) - 1;
  auto policy = [&](int time) {
    int head = seq.spec.delta + seq.T0 + seq.h_g;
    int idx = time < head
                  ? time
                  : head + ((time - head) % period);
    return seq.controls[static_cast<std::size_t>(idx)];
  };
  std::vector<Vec> prev_block;
  for (int j = 0; j < period; ++j) {
    prev_block.push_back(x);
    x = mld::step_maximal(sys, x, policy(t));
    ++t;
  }
  for (int cycle = 1; cycle <= max_cycles; ++cycle) {
    std::vector<Vec> block;
    for (int j = 0; j < period; ++j) {
      block.push_back(x);
      x = mld::step_maximal(sys, x, policy(t));
      ++t;
    }
    double gap = 0.0;
    for (int j = 0; j < period; ++j) {
      gap = std::max(gap, (block[static_cast<std::size_t>(j)] -
                           prev_block[static_cast<std::size_t>(j)])
                              .cwiseAbs()
                              .maxCoeff());
      // The subsampled phase sequences decrease monotonically.
      if (!leq(block[static_cast<std::size_t>(j)], prev_block[static_cast<std::size_t>(j)],
               1e-7))
        throw Error("limit orbit iteration is not monotonically nonincreasing");
    }
    orbit.cycles = cycle;
    orbit.gap = gap;
    if (gap < tol) {
      orbit.converged = true;
      orbit.states = block;
      return orbit;
    }
    prev_block = std::move(block);
  }
  orbit.converged = false;
  orbit.states = prev_block;
  return orbit;
}

double fragility_bound(int n, int h_g, double a_star, double eps) {
  if (eps <= 0.0 || a_star <= 0.0) throw ModelError("fragility bound needs positive inputs");
  return std::ceil(std::pow(a_star / eps, static_cast<double>(n) * (h_g + 1)));
}

double fragility_epsilon(int n, int h_g, double a_star, double n_max) {
  if (n_max < 1.0) throw ModelError("fragility inverse needs N >= 1");
  return a_star / std::pow(n_max, 1.0 / (static_cast<double>(n) * (h_g + 1)));
}

namespace {

nlohmann::json controls_json(const std::vector<mld::ControlInput>& us) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& u : us) {
    nlohmann::json one;
    one["real"] = std::vector<double>(u.real.data(), u.real.data() + u.real.size());
    one["bin"] = u.bin;
    arr.push_back(std::move(one));
  }
  return arr;
}

}  // namespace

std::string to_json(const SSequence& seq, const std::string& witness_csv_path) {
  nlohmann::json j;
  j["T"] = seq.T;
  j["T0"] = 0;
  j["delta"] = 0;
  j["h"] = seq.h;
  j["controls"] = controls_json(seq.controls);
  j["witness_csv"] = witness_csv_path;
  return j.dump(2);
}

std::string to_json(const PhiSequence& seq, const std::string& witness_csv_path) {
  nlohmann::json j;
  j["T"] = seq.T;
  j["T0"] = seq.T0;
  j["delta"] = seq.spec.delta;
  j["h_g"] = seq.h_g;
  j["controls"] = controls_json(seq.controls);
  j["witness_csv"] = witness_csv_path;
  std::vector<double> x0(seq.x0.data(), seq.x0.data() + seq.x0.size());
  j["x0"] = x0;
  return j.dump(2);
}

std::string anchors_csv(const LowerSetUnion& omega) {
  std::ostringstream out;
  out << "anchor,offset";
  if (!omega.anchors.empty() && !omega.anchors[0].empty())
    for (Eigen::Index i = 0; i < omega.anchors[0][0].size(); ++i) out << ",x" << i;
  out << "\n";
  for (std::size_t a = 0; a < omega.anchors.size(); ++a)
    for (std::size_t k = 0; k < omega.anchors[a].size(); ++k) {
      out << a << "," << k;
      const Vec& v = omega.anchors[a][k];
      for (Eigen::Index i = 0; i < v.size(); ++i) out << "," << format_double(v[i]);
      out << "\n";
    }
  return out.str();
}

}  // namespace mstl::synth
