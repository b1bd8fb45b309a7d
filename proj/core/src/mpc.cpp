#include "mstl/mpc.hpp"

#include <chrono>
#include <sstream>

namespace mstl::mpc {

using milp::SolveStatus;

namespace {

milp::EmbeddedSolver& default_backend() {
  static milp::EmbeddedSolver s;
  return s;
}

struct StitchedWindow {
  std::vector<Vec> prefix;  // h states: padded history + current
  int h = 0;
};

StitchedWindow stitched_prefix(const MpcConfig& cfg, const MpcState& st, const Vec& x_t,
                               int n) {
  stl::Horizon hor = stl::horizon(cfg.phi);
  if (hor.unbounded) throw ModelError("mpc needs a bounded stage formula");
  int h = hor.steps;
  StitchedWindow out;
  out.h = h;
  // h states before the first prediction: x_{t-h+1} .. x_t.
  for (int k = h - 1; k >= 1; --k) {
    long idx = static_cast<long>(st.history.size()) - k;
    if (idx < 0) {
      if (!cfg.zero_pad_history)
        throw ModelError("history too short; zero padding disabled");
      out.prefix.push_back(Vec::Zero(n));
    } else {
      out.prefix.push_back(st.history[static_cast<std::size_t>(idx)]);
    }
  }
  out.prefix.push_back(x_t);
  return out;
}

struct AnchorSolve {
  SolveStatus status = SolveStatus::Infeasible;
  double objective = 0.0;
  std::vector<double> x;
  encode::BuiltModel built;
};

AnchorSolve solve_one(const MpcConfig& cfg, const mld::MldSystem& sys,
                      const StitchedWindow& win, const std::vector<Vec>* anchor) {
  int h = win.h;
  int H = cfg.horizon;
  encode::BuildOptions b;
  b.window = h - 1 + H;  // states: h pinned + H predicted
  b.fixed_prefix = win.prefix;
  b.enc = cfg.enc;
  auto g = stl::Formula::always(cfg.phi, {0, H - 1, false});
  AnchorSolve out;
  out.built = encode::build_bounded_problem(sys, g, b);
  auto& built = out.built;
  if (anchor != nullptr) {
    // Terminal window x[t+H-h : t+H] inside L(anchor): upper-bound tightening.
    for (int k = 0; k <= h; ++k) {
      int wk = H - 1 + k;  // window index of x_{t+H-h+k}
      for (int i = 0; i < sys.n; ++i) {
        auto& v = built.model.vars[static_cast<std::size_t>(
            built.x[static_cast<std::size_t>(wk)][static_cast<std::size_t>(i)])];
        double cap = (*anchor)[static_cast<std::size_t>(k)][i];
        v.ub = std::min(v.ub, cap);
        if (v.lb > v.ub + 1e-9) {
          out.status = SolveStatus::Infeasible;  // pinned history above anchor
          return out;
        }
        v.lb = std::min(v.lb, v.ub);
      }
    }
  }
  // Discounted stage costs over predictions plus the robustness term.
  std::vector<milp::RowEntry> obj;
  double scale = 1.0;
  for (int k = 0; k < H; ++k) {
    int wk = h - 1 + k;  // stage k measures x_{t+k} and the step-k flows
    if (cfg.cost.x_coef.size() == sys.n && wk >= static_cast<int>(win.prefix.size())) {
      for (int i = 0; i < sys.n; ++i)
        if (cfg.cost.x_coef[i] != 0.0)
          obj.push_back({built.x[static_cast<std::size_t>(wk)][static_cast<std::size_t>(i)],
                         scale * cfg.cost.x_coef[i]});
    }
    if (cfg.cost.r_coef.size() == sys.n_r) {
      const auto& rv = built.rvar[static_cast<std::size_t>(wk)];
      for (int j = 0; j < sys.n_r; ++j)
        if (cfg.cost.r_coef[j] != 0.0)
          obj.push_back({rv[static_cast<std::size_t>(j)], scale * cfg.cost.r_coef[j]});
    }
    if (cfg.cost.u_real_coef.size() == sys.m_r) {
      const auto& uv = built.u_real[static_cast<std::size_t>(wk)];
      for (int j = 0; j < sys.m_r; ++j)
        if (cfg.cost.u_real_coef[j] != 0.0)
          obj.push_back({uv[static_cast<std::size_t>(j)], scale * cfg.cost.u_real_coef[j]});
    }
    scale *= cfg.cost.gamma;
  }
  if (cfg.cost.zeta != 0.0) obj.push_back({built.rho, -cfg.cost.zeta});
  built.model.set_objective(milp::ObjSense::Minimize, std::move(obj));
  built.install_repair();

  milp::SolverBackend* backend = cfg.backend ? cfg.backend : &default_backend();
  auto sol = backend->solve(built.model, cfg.solve);
  out.status = sol.status;
  out.objective = sol.objective;
  out.x = std::move(sol.x);
  return out;
}

}  // namespace

MpcStepResult mpc_step(const MpcConfig& cfg, const mld::MldSystem& sys, const MpcState& st,
                       const Vec& x_t) {
  auto t0 = std::chrono::steady_clock::now();
  StitchedWindow win = stitched_prefix(cfg, st, x_t, sys.n);
  if (cfg.horizon < win.h) throw ModelError("mpc horizon must cover the formula horizon");

  MpcStepResult res;
  std::optional<AnchorSolve> best;
  int best_anchor = -1;
  if (!cfg.terminal) {
    auto one = solve_one(cfg, sys, win, nullptr);
    res.anchor_status.push_back(one.status);
    if (!one.x.empty()) {
      best = std::move(one);
    }
  } else {
    if (cfg.omega.anchors.empty()) throw ModelError("terminal constraint needs anchors");
    for (std::size_t a = 0; a < cfg.omega.anchors.size(); ++a) {
      auto one = solve_one(cfg, sys, win, &cfg.omega.anchors[a]);
      res.anchor_status.push_back(one.status);
      if (one.x.empty()) continue;
      if (!best || one.objective < best->objective - 1e-12) {
        best = std::move(one);
        best_anchor = static_cast<int>(a);
      }
    }
  }
  if (!best) {
    std::ostringstream msg;
    msg << "mpc step at t=" << st.t << " infeasible for every terminal anchor";
    throw MpcInfeasible(st.t, msg.str());
  }
  res.u = best->built.decode_controls(best->x).front();
  res.predicted = best->built.decode_state(best->x);
  res.objective = best->objective;
  res.anchor = best_anchor;
  res.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

MpcRunResult mpc_run(const MpcConfig& cfg, const mld::MldSystem& sys, const Vec& x0,
                     int steps, const mld::WSource& w_source, bool stop_on_infeasible) {
  MpcRunResult run;
  run.trajectory.start_time = 0;
  run.trajectory.samples.push_back(x0);
  MpcState st;
  Vec x = x0;
  for (int t = 0; t < steps; ++t) {
    st.t = t;
    MpcStepResult step_res;
    try {
      step_res = mpc_step(cfg, sys, st, x);
    } catch (const MpcInfeasible&) {
      if (!stop_on_infeasible) throw;
      run.infeasible = true;
      run.infeasible_at = t;
      return run;
    }
    mld::Disturbance w = mld::draw_disturbance(sys, w_source, 0, t);
    Vec xn = mld::step(sys, x, step_res.u, w);
    run.controls.push_back(step_res.u);
    run.disturbances.push_back(w);
    run.logs.push_back({t, step_res.u, xn, step_res.objective, step_res.anchor,
                        step_res.wall_seconds});
    run.trajectory.samples.push_back(xn);
    st.history.push_back(x);
    stl::Horizon hor = stl::horizon(cfg.phi);
    while (static_cast<int>(st.history.size()) > std::max(hor.steps - 1, 0))
      st.history.erase(st.history.begin());
    x = xn;
  }
  return run;
}

std::string run_log_csv(const mld::MldSystem& sys, const MpcRunResult& run) {
  std::ostringstream out;
  out << "t";
  for (int i = 0; i < sys.m_r; ++i) out << ",ur" << i;
  for (int i = 0; i < sys.m_b; ++i) out << ",ub" << i;
  for (int i = 0; i < sys.n; ++i) out << ",x" << i;
  out << ",objective,anchor,wall_seconds\n";
  for (const auto& log : run.logs) {
    out << log.t;
    for (int i = 0; i < sys.m_r; ++i) out << "," << format_double(log.u.real[i]);
    for (int i = 0; i < sys.m_b; ++i)
      out << "," << log.u.bin[static_cast<std::size_t>(i)];
    for (int i = 0; i < sys.n; ++i) out << "," << format_double(log.x_realized[i]);
    out << "," << format_double(log.objective) << "," << log.anchor << ","
        << format_double(log.wall_seconds) << "\n";
  }
  return out.str();
}

}  // namespace mstl::mpc
