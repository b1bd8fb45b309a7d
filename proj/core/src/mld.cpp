#include "mstl/mld.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <sstream>

namespace mstl::mld {

namespace {

Vec stack_input(const Vec& real, const std::vector<int>& bin) {
  Vec out(real.size() + static_cast<Eigen::Index>(bin.size()));
  out.head(real.size()) = real;
  for (std::size_t i = 0; i < bin.size(); ++i)
    out[real.size() + static_cast<Eigen::Index>(i)] = bin[i];
  return out;
}

}  // namespace

Disturbance MldSystem::maximal_disturbance() const {
  return {w_star_real, w_star_bin};
}

bool MldSystem::control_admissible(const ControlInput& u, double tol) const {
  if (u.real.size() != m_r || static_cast<int>(u.bin.size()) != m_b) return false;
  for (int j = 0; j < m_r; ++j)
    if (u.real[j] < u_real_lo[j] - tol || u.real[j] > u_real_hi[j] + tol) return false;
  for (int b : u.bin)
    if (b != 0 && b != 1) return false;
  for (const auto& c : u_couplings) {
    double lhs = c.a_real.dot(u.real);
    for (std::size_t i = 0; i < u.bin.size(); ++i)
      lhs += c.a_bin[static_cast<Eigen::Index>(i)] * u.bin[i];
    if (lhs > c.b + tol) return false;
  }
  return true;
}

void MldSystem::validate() const {
  auto want = [](const Mat& m, int rows, int cols, const char* name) {
    if (m.rows() != rows || m.cols() != cols)
      throw ModelError(std::string("MLD matrix ") + name + " has wrong shape");
  };
  want(A, n, n, "A");
  want(B_u, n, m_r + m_b, "B_u");
  want(B_w, n, q_r + q_b, "B_w");
  want(D_delta, n, n_delta, "D_delta");
  want(D_r, n, n_r, "D_r");
  int rows = static_cast<int>(e.size());
  want(E_delta, rows, n_delta, "E_delta");
  want(E_r, rows, n_r, "E_r");
  want(E_x, rows, n, "E_x");
  want(E_u, rows, m_r + m_b, "E_u");
  want(E_w, rows, q_r + q_b, "E_w");
  if (K.size() != n) throw ModelError("state bound K has wrong dimension");
  if (w_star_real.size() != q_r || static_cast<int>(w_star_bin.size()) != q_b)
    throw ModelError("maximal disturbance has wrong dimension");
  if (u_real_lo.size() != m_r || u_real_hi.size() != m_r)
    throw ModelError("control bounds have wrong dimension");
  if (r_lo.size() != n_r || r_hi.size() != n_r)
    throw ModelError("auxiliary bounds have wrong dimension");
}

Vec step(const MldSystem& sys, const Vec& x, const ControlInput& u, const Disturbance& w) {
  if (x.size() != sys.n) throw ModelError("state dimension mismatch");
  if (!leq(Vec::Zero(sys.n), x, 1e-9) || !leq(x, sys.K, 1e-9))
    throw ModelError("state outside [0, K]");
  if (!sys.control_admissible(u)) throw ModelError("inadmissible control input");
  if (sys.evaluator) {
    Vec next = sys.evaluator(x, u, w);
    if (!geq_zero(next, 1e-9))
      throw ModelError("transition left the positive orthant");
    return next;
  }
  return step_via_milp(sys, x, u, w).x_next;
}

MilpStepResult step_via_milp(const MldSystem& sys, const Vec& x, const ControlInput& u,
                             const Disturbance& w) {
  sys.validate();
  milp::MilpModel model;
  std::vector<int> xn(static_cast<std::size_t>(sys.n));
  for (int i = 0; i < sys.n; ++i)
    xn[static_cast<std::size_t>(i)] =
        model.add_continuous(-1e9, 1e9, "xnext" + std::to_string(i));
  std::vector<int> dd(static_cast<std::size_t>(sys.n_delta));
  for (int i = 0; i < sys.n_delta; ++i)
    dd[static_cast<std::size_t>(i)] = model.add_binary("delta" + std::to_string(i));
  std::vector<int> rr(static_cast<std::size_t>(sys.n_r));
  for (int i = 0; i < sys.n_r; ++i)
    rr[static_cast<std::size_t>(i)] =
        model.add_continuous(sys.r_lo[i], sys.r_hi[i], "r" + std::to_string(i));

  Vec uv = stack_input(u.real, u.bin);
  Vec wv = stack_input(w.real, w.bin);
  Vec dyn_const = sys.A * x + sys.B_u * uv + sys.B_w * wv;
  for (int i = 0; i < sys.n; ++i) {
    std::vector<milp::RowEntry> terms{{xn[static_cast<std::size_t>(i)], 1.0}};
    for (int j = 0; j < sys.n_delta; ++j)
      if (sys.D_delta(i, j) != 0.0)
        terms.push_back({dd[static_cast<std::size_t>(j)], -sys.D_delta(i, j)});
    for (int j = 0; j < sys.n_r; ++j)
      if (sys.D_r(i, j) != 0.0)
        terms.push_back({rr[static_cast<std::size_t>(j)], -sys.D_r(i, j)});
    model.add_row(std::move(terms), milp::RowSense::EQ, dyn_const[i],
                  "dyn" + std::to_string(i));
  }
  Vec rhs = sys.E_x * x + sys.E_u * uv + sys.E_w * wv + sys.e;
  for (int i = 0; i < static_cast<int>(sys.e.size()); ++i) {
    std::vector<milp::RowEntry> terms;
    for (int j = 0; j < sys.n_delta; ++j)
      if (sys.E_delta(i, j) != 0.0)
        terms.push_back({dd[static_cast<std::size_t>(j)], sys.E_delta(i, j)});
    for (int j = 0; j < sys.n_r; ++j)
      if (sys.E_r(i, j) != 0.0)
        terms.push_back({rr[static_cast<std::size_t>(j)], sys.E_r(i, j)});
    model.add_row(std::move(terms), milp::RowSense::LE, rhs[i], "E" + std::to_string(i));
  }

  milp::SolveParams sp;
  sp.node_limit = 20000;
  auto solve_dir = [&](double sign) {
    std::vector<milp::RowEntry> obj;
    for (int i = 0; i < sys.n; ++i) obj.push_back({xn[static_cast<std::size_t>(i)], sign});
    model.set_objective(milp::ObjSense::Minimize, obj);
    return milp::solve(model, sp);
  };
  auto lo = solve_dir(1.0);
  if (lo.status != milp::SolveStatus::Optimal && lo.status != milp::SolveStatus::Feasible)
    throw ModelError("auxiliary system infeasible (ill-posed MLD step)");
  auto hi = solve_dir(-1.0);
  MilpStepResult out;
  out.x_next = Vec(sys.n);
  for (int i = 0; i < sys.n; ++i)
    out.x_next[i] = lo.x[static_cast<std::size_t>(xn[static_cast<std::size_t>(i)])];
  out.ambiguity = std::abs(-hi.objective - lo.objective);
  return out;
}

Vec step_maximal(const MldSystem& sys, const Vec& x, const ControlInput& u) {
  return step(sys, x, u, sys.maximal_disturbance());
}

Disturbance draw_disturbance(const MldSystem& sys, const WSource& src,
                             std::uint64_t seed_mix, int t) {
  switch (src.kind) {
    case WSourceKind::Maximal:
      return sys.maximal_disturbance();
    case WSourceKind::Explicit: {
      if (t < 0 || t >= static_cast<int>(src.sequence.size()))
        throw ModelError("explicit disturbance sequence too short");
      return src.sequence[static_cast<std::size_t>(t)];
    }
    case WSourceKind::SeededUniform: {
      Rng rng(src.seed ^ (seed_mix + 0x9e3779b97f4a7c15ULL * (static_cast<std::uint64_t>(t) + 1)));
      Disturbance w;
      w.real = Vec(sys.q_r);
      for (int i = 0; i < sys.q_r; ++i) w.real[i] = rng.uniform(0.0, sys.w_star_real[i]);
      w.bin.resize(static_cast<std::size_t>(sys.q_b));
      for (int i = 0; i < sys.q_b; ++i)
        w.bin[static_cast<std::size_t>(i)] = rng.coin() ? sys.w_star_bin[static_cast<std::size_t>(i)] : 0;
      return w;
    }
  }
  throw Error("unreachable");
}

stl::Signal simulate(const MldSystem& sys, const Vec& x0,
                     const std::vector<ControlInput>& controls, const WSource& w_source) {
  stl::Signal sig;
  sig.start_time = 0;
  sig.samples.push_back(x0);
  Vec x = x0;
  for (std::size_t k = 0; k < controls.size(); ++k) {
    Disturbance w = draw_disturbance(sys, w_source, 0, static_cast<int>(k));
    x = step(sys, x, controls[k], w);
    sig.samples.push_back(x);
  }
  return sig;
}

namespace {

ControlInput random_control(const MldSystem& sys, Rng& rng) {
  ControlInput u;
  u.real = Vec(sys.m_r);
  for (int i = 0; i < sys.m_r; ++i) u.real[i] = rng.uniform(sys.u_real_lo[i], sys.u_real_hi[i]);
  u.bin.resize(static_cast<std::size_t>(sys.m_b));
  for (int i = 0; i < sys.m_b; ++i) u.bin[static_cast<std::size_t>(i)] = rng.coin() ? 1 : 0;
  return u;
}

}  // namespace

MonotoneReport check_monotone(const MldSystem& sys, long samples, std::uint64_t seed) {
  Rng rng(seed);
  MonotoneReport rep;
  auto sample_state = [&](Rng& r) {
    if (sys.state_sampler) return sys.state_sampler(r);
    Vec x(sys.n);
    for (int i = 0; i < sys.n; ++i) x[i] = r.uniform(0.0, sys.K[i]);
    return x;
  };
  for (long s = 0; s < samples; ++s) {
    Vec hi = sample_state(rng);
    Vec lo(sys.n);
    for (int i = 0; i < sys.n; ++i) lo[i] = rng.uniform(0.0, hi[i]);
    ControlInput u = random_control(sys, rng);
    Disturbance w = draw_disturbance(sys, WSource::seeded(rng.next()), 1, 0);
    Vec fx_hi = step(sys, hi, u, w);
    Vec fx_lo = step(sys, lo, u, w);
    ++rep.samples;
    if (!leq(fx_lo, fx_hi, 1e-7)) {
      rep.ok = false;
      rep.x_lo = lo;
      rep.x_hi = hi;
      rep.u = u;
      rep.w = w;
      return rep;
    }
  }
  return rep;
}

namespace {

nlohmann::json mat_to_json(const Mat& m) {
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    nlohmann::json row = nlohmann::json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

Mat mat_from_json(const nlohmann::json& j, int rows, int cols) {
  Mat m = Mat::Zero(rows, cols);
  if (j.is_null()) return m;
  int i = 0;
  for (const auto& row : j) {
    int c = 0;
    for (const auto& v : row) m(i, c++) = v.get<double>();
    ++i;
  }
  return m;
}

nlohmann::json vec_to_json(const Vec& v) {
  nlohmann::json out = nlohmann::json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

Vec vec_from_json(const nlohmann::json& j) {
  Vec v(static_cast<Eigen::Index>(j.size()));
  Eigen::Index i = 0;
  for (const auto& x : j) v[i++] = x.get<double>();
  return v;
}

}  // namespace

std::string to_json(const MldSystem& sys) {
  nlohmann::json j;
  j["n"] = sys.n;
  j["m_r"] = sys.m_r;
  j["m_b"] = sys.m_b;
  j["q_r"] = sys.q_r;
  j["q_b"] = sys.q_b;
  j["n_delta"] = sys.n_delta;
  j["n_r"] = sys.n_r;
  j["A"] = mat_to_json(sys.A);
  j["B_u"] = mat_to_json(sys.B_u);
  j["B_w"] = mat_to_json(sys.B_w);
  j["D_delta"] = mat_to_json(sys.D_delta);
  j["D_r"] = mat_to_json(sys.D_r);
  j["E_delta"] = mat_to_json(sys.E_delta);
  j["E_r"] = mat_to_json(sys.E_r);
  j["E_x"] = mat_to_json(sys.E_x);
  j["E_u"] = mat_to_json(sys.E_u);
  j["E_w"] = mat_to_json(sys.E_w);
  j["e"] = vec_to_json(sys.e);
  j["K"] = vec_to_json(sys.K);
  j["w_star"] = vec_to_json(stack_input(sys.w_star_real, sys.w_star_bin));
  j["u_lo"] = vec_to_json(sys.u_real_lo);
  j["u_hi"] = vec_to_json(sys.u_real_hi);
  j["r_lo"] = vec_to_json(sys.r_lo);
  j["r_hi"] = vec_to_json(sys.r_hi);
  nlohmann::json couplings = nlohmann::json::array();
  for (const auto& c : sys.u_couplings) {
    nlohmann::json a = vec_to_json(c.a_real);
    for (Eigen::Index i = 0; i < c.a_bin.size(); ++i) a.push_back(c.a_bin[i]);
    couplings.push_back({{"a_u", a}, {"b", c.b}});
  }
  j["u_couplings"] = couplings;
  if (!sys.name.empty()) j["name"] = sys.name;
  return j.dump(2);
}

MldSystem from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  MldSystem s;
  s.n = j.at("n").get<int>();
  s.m_r = j.at("m_r").get<int>();
  s.m_b = j.at("m_b").get<int>();
  s.q_r = j.at("q_r").get<int>();
  s.q_b = j.at("q_b").get<int>();
  s.n_delta = j.at("n_delta").get<int>();
  s.n_r = j.at("n_r").get<int>();
  int rows = static_cast<int>(j.at("e").size());
  s.A = mat_from_json(j.at("A"), s.n, s.n);
  s.B_u = mat_from_json(j.at("B_u"), s.n, s.m_r + s.m_b);
  s.B_w = mat_from_json(j.at("B_w"), s.n, s.q_r + s.q_b);
  s.D_delta = mat_from_json(j.at("D_delta"), s.n, s.n_delta);
  s.D_r = mat_from_json(j.at("D_r"), s.n, s.n_r);
  s.E_delta = mat_from_json(j.at("E_delta"), rows, s.n_delta);
  s.E_r = mat_from_json(j.at("E_r"), rows, s.n_r);
  s.E_x = mat_from_json(j.at("E_x"), rows, s.n);
  s.E_u = mat_from_json(j.at("E_u"), rows, s.m_r + s.m_b);
  s.E_w = mat_from_json(j.at("E_w"), rows, s.q_r + s.q_b);
  s.e = vec_from_json(j.at("e"));
  s.K = vec_from_json(j.at("K"));
  Vec wstar = vec_from_json(j.at("w_star"));
  s.w_star_real = wstar.head(s.q_r);
  s.w_star_bin.resize(static_cast<std::size_t>(s.q_b));
  for (int i = 0; i < s.q_b; ++i)
    s.w_star_bin[static_cast<std::size_t>(i)] =
        wstar[s.q_r + i] > 0.5 ? 1 : 0;
  s.u_real_lo = j.contains("u_lo") ? vec_from_json(j["u_lo"]) : Vec::Zero(s.m_r);
  s.u_real_hi = j.contains("u_hi") ? vec_from_json(j["u_hi"])
                                   : Vec::Constant(s.m_r, 1e6);
  s.r_lo = j.contains("r_lo") ? vec_from_json(j["r_lo"]) : Vec::Constant(s.n_r, -1e6);
  s.r_hi = j.contains("r_hi") ? vec_from_json(j["r_hi"]) : Vec::Constant(s.n_r, 1e6);
  if (j.contains("u_couplings")) {
    for (const auto& c : j["u_couplings"]) {
      ControlCoupling cc;
      Vec a = vec_from_json(c.at("a_u"));
      cc.a_real = a.head(s.m_r);
      cc.a_bin = a.tail(s.m_b);
      cc.b = c.at("b").get<double>();
      s.u_couplings.push_back(std::move(cc));
    }
  }
  if (j.contains("name")) s.name = j["name"].get<std::string>();
  s.validate();
  return s;
}

std::string trajectory_csv(const MldSystem& sys, const stl::Signal& traj,
                           const std::vector<ControlInput>& controls,
                           const std::vector<Disturbance>& ws) {
  std::ostringstream out;
  out << "t";
  for (int i = 0; i < sys.n; ++i) out << ",x" << i;
  for (int i = 0; i < sys.m_r; ++i) out << ",ur" << i;
  for (int i = 0; i < sys.m_b; ++i) out << ",ub" << i;
  for (int i = 0; i < sys.q_r; ++i) out << ",wr" << i;
  for (int i = 0; i < sys.q_b; ++i) out << ",wb" << i;
  out << "\n";
  for (std::size_t k = 0; k < traj.samples.size(); ++k) {
    out << (traj.start_time + static_cast<int>(k));
    for (int i = 0; i < sys.n; ++i) out << "," << format_double(traj.samples[k][i]);
    bool have_u = k < controls.size();
    for (int i = 0; i < sys.m_r; ++i)
      out << "," << (have_u ? format_double(controls[k].real[i]) : "");
    for (int i = 0; i < sys.m_b; ++i)
      out << "," << (have_u ? std::to_string(controls[k].bin[static_cast<std::size_t>(i)]) : "");
    bool have_w = k < ws.size();
    for (int i = 0; i < sys.q_r; ++i)
      out << "," << (have_w ? format_double(ws[k].real[i]) : "");
    for (int i = 0; i < sys.q_b; ++i)
      out << "," << (have_w ? std::to_string(ws[k].bin[static_cast<std::size_t>(i)]) : "");
    out << "\n";
  }
  return out.str();
}

}  // namespace mstl::mld
