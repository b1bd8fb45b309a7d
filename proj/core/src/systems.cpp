#include "mstl/systems.hpp"

#include <unsupported/Eigen/MatrixFunctions>

namespace mstl::systems {

namespace {

constexpr double kTau = 0.1;
constexpr double kBigM = 60.0;
constexpr double kBox = 20.0;

Mat a_matrix(int mode) {
  Mat a(2, 2);
  if (mode == 1)
    a << 1.0, 1.0, 1.0, -5.0;
  else
    a << -8.0, 1.0, 1.0, 2.0;
  return a;
}

}  // namespace

Switched2dData switched_2d_data() {
  Switched2dData d;
  Mat a1 = a_matrix(1), a2 = a_matrix(2);
  d.phi1 = (kTau * a1).exp();
  d.phi2 = (kTau * a2).exp();
  // Zero-order-hold disturbance gain: int_0^tau e^{A s} ds = A^-1 (e^{A tau} - I).
  d.bw1 = a1.inverse() * (d.phi1 - Mat::Identity(2, 2));
  d.bw2 = a2.inverse() * (d.phi2 - Mat::Identity(2, 2));
  d.w_star = Vec(2);
  d.w_star << 1.5, 1.0;
  return d;
}

mld::MldSystem switched_2d() {
  auto d = switched_2d_data();
  mld::MldSystem s;
  s.name = "switched-2d";
  s.n = 2;
  s.m_r = 0;
  s.m_b = 1;  // 1 = first mode, 0 = second mode
  s.q_r = 2;
  s.q_b = 0;
  s.n_delta = 0;
  s.n_r = 2;
  s.A = d.phi2;
  s.B_u = Mat::Zero(2, 1);
  s.B_w = d.bw2;
  s.D_delta = Mat::Zero(2, 0);
  s.D_r = Mat::Identity(2, 2);
  Mat dphi = d.phi1 - d.phi2;
  Mat dbw = d.bw1 - d.bw2;

  // r = (phi1-phi2) x + (bw1-bw2) w when the mode bit is set, else 0.
  int rows = 8;
  s.E_delta = Mat::Zero(rows, 0);
  s.E_r = Mat::Zero(rows, 2);
  s.E_x = Mat::Zero(rows, 2);
  s.E_u = Mat::Zero(rows, 1);
  s.E_w = Mat::Zero(rows, 2);
  s.e = Vec::Zero(rows);
  for (int i = 0; i < 2; ++i) {
    // r_i - dphi x - dbw w + M u <= M
    s.E_r(i, i) = 1.0;
    s.E_x.row(i) = dphi.row(i);
    s.E_w.row(i) = dbw.row(i);
    s.E_u(i, 0) = -kBigM;
    s.e[i] = kBigM;
    // -r_i + dphi x + dbw w + M u <= M
    s.E_r(2 + i, i) = -1.0;
    s.E_x.row(2 + i) = -dphi.row(i);
    s.E_w.row(2 + i) = -dbw.row(i);
    s.E_u(2 + i, 0) = -kBigM;
    s.e[2 + i] = kBigM;
    // r_i <= M u ; -r_i <= M u
    s.E_r(4 + i, i) = 1.0;
    s.E_u(4 + i, 0) = kBigM;
    s.E_r(6 + i, i) = -1.0;
    s.E_u(6 + i, 0) = kBigM;
  }
  s.K = Vec::Constant(2, kBox);
  s.w_star_real = d.w_star;
  s.u_real_lo = Vec(0);
  s.u_real_hi = Vec(0);
  double r_cap = (dphi.cwiseAbs() * s.K + dbw.cwiseAbs() * d.w_star).maxCoeff() + 1.0;
  s.r_lo = Vec::Constant(2, -r_cap);
  s.r_hi = Vec::Constant(2, r_cap);
  s.evaluator = [d](const Vec& x, const mld::ControlInput& u, const mld::Disturbance& w) {
    bool mode1 = !u.bin.empty() && u.bin[0] == 1;
    return mode1 ? Vec(d.phi1 * x + d.bw1 * w.real) : Vec(d.phi2 * x + d.bw2 * w.real);
  };
  s.aux_evaluator = [d, dphi, dbw](const Vec& x, const mld::ControlInput& u,
                                   const mld::Disturbance& w) {
    mld::MldSystem::AuxAssignment aux;
    aux.delta = Vec(0);
    bool mode1 = !u.bin.empty() && u.bin[0] == 1;
    aux.r = mode1 ? Vec(dphi * x + dbw * w.real) : Vec(Vec::Zero(2));
    return aux;
  };
  return s;
}

stl::PredicateTable switched_2d_predicates() {
  stl::PredicateTable t;
  Vec e1(2), e2(2);
  e1 << 1, 0;
  e2 << 0, 1;
  t.emplace("p1a", stl::make_predicate(e1, 1.0, "p1a"));
  t.emplace("p1b", stl::make_predicate(e2, 5.0, "p1b"));
  t.emplace("p2a", stl::make_predicate(e1, 5.0, "p2a"));
  t.emplace("p2b", stl::make_predicate(e2, 1.0, "p2b"));
  return t;
}

namespace {

stl::FormulaPtr box1() {
  auto t = switched_2d_predicates();
  return stl::Formula::conj(
      {stl::Formula::pred(t.at("p1a")), stl::Formula::pred(t.at("p1b"))});
}

stl::FormulaPtr box2() {
  auto t = switched_2d_predicates();
  return stl::Formula::conj(
      {stl::Formula::pred(t.at("p2a")), stl::Formula::pred(t.at("p2b"))});
}

}  // namespace

stl::FormulaPtr switched_2d_reach_formula() {
  auto p1 = box1();
  auto p2 = box2();
  std::vector<stl::FormulaPtr> disjuncts;
  for (int T = 0; T <= 10; ++T) {
    disjuncts.push_back(stl::Formula::conj(
        {stl::Formula::eventually(p1, {0, T, false}),
         stl::Formula::eventually(p2, {T, T, false})}));
  }
  return stl::Formula::disj(std::move(disjuncts));
}

stl::FormulaPtr switched_2d_stay_formula() {
  return stl::Formula::disj({box1(), box2()});
}

stl::BoundedGlobalSpec switched_2d_bounded_global() {
  auto p1 = box1();
  auto p2 = box2();
  stl::BoundedGlobalSpec spec;
  spec.phi_b = stl::Formula::eventually(p1, {0, 5, false});
  spec.phi_g = stl::Formula::conj({stl::Formula::eventually(p1, {0, 6, false}),
                                   stl::Formula::eventually(p2, {0, 6, false})});
  spec.delta = 5;
  return spec;
}

mld::MldSystem scalar_toy() {
  mld::MldSystem s;
  s.name = "scalar-toy";
  s.n = 1;
  s.m_r = 0;
  s.m_b = 0;
  s.q_r = 1;
  s.q_b = 0;
  s.n_delta = 0;
  s.n_r = 0;
  s.A = Mat::Constant(1, 1, 0.5);
  s.B_u = Mat::Zero(1, 0);
  s.B_w = Mat::Identity(1, 1);
  s.D_delta = Mat::Zero(1, 0);
  s.D_r = Mat::Zero(1, 0);
  s.E_delta = Mat::Zero(0, 0);
  s.E_r = Mat::Zero(0, 0);
  s.E_x = Mat::Zero(0, 1);
  s.E_u = Mat::Zero(0, 0);
  s.E_w = Mat::Zero(0, 1);
  s.e = Vec::Zero(0);
  s.K = Vec::Constant(1, 2.0);
  s.w_star_real = Vec::Constant(1, 0.25);
  s.u_real_lo = Vec(0);
  s.u_real_hi = Vec(0);
  s.r_lo = Vec(0);
  s.r_hi = Vec(0);
  s.evaluator = [](const Vec& x, const mld::ControlInput&, const mld::Disturbance& w) {
    return Vec(0.5 * x + w.real);
  };
  return s;
}

}  // namespace mstl::systems
