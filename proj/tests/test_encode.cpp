#include <doctest.h>

#include "generators.hpp"
#include "mstl/encode.hpp"
#include "mstl/systems.hpp"

#include <cmath>

using namespace mstl;
using namespace mstl::encode;

namespace {

// 1-D shell system, no controls, frozen state; for predicate-row checks.
mld::MldSystem frozen_1d(double k_bound) {
  mld::MldSystem s;
  s.n = 1;
  s.q_r = 1;
  s.A = Mat::Identity(1, 1);
  s.B_u = Mat::Zero(1, 0);
  s.B_w = Mat::Zero(1, 1);
  s.D_delta = Mat::Zero(1, 0);
  s.D_r = Mat::Zero(1, 0);
  s.E_delta = Mat::Zero(0, 0);
  s.E_r = Mat::Zero(0, 0);
  s.E_x = Mat::Zero(0, 1);
  s.E_u = Mat::Zero(0, 0);
  s.E_w = Mat::Zero(0, 1);
  s.e = Vec::Zero(0);
  s.K = Vec::Constant(1, k_bound);
  s.w_star_real = Vec::Zero(1);
  s.u_real_lo = Vec(0);
  s.u_real_hi = Vec(0);
  s.r_lo = Vec(0);
  s.r_hi = Vec(0);
  s.evaluator = [](const Vec& x, const mld::ControlInput&, const mld::Disturbance&) {
    return x;
  };
  return s;
}

}  // namespace

TEST_CASE("predicate rows implement the big-M relation") {
  auto sys = frozen_1d(20.0);
  Vec a(1);
  a << 1.0;
  auto pred = stl::make_predicate(a, 10.0, "p");
  auto f = stl::Formula::pred(pred);

  // registry rule: M >= max(a'K, b)
  CHECK(big_m_for(pred, sys.K, 0.0) >= 20.0);

  BuildOptions opts;
  opts.window = 0;
  opts.enc.pin_root = false;
  BuiltModel built = build_bounded_problem(sys, f, opts);
  REQUIRE(built.root_z >= 0);

  // z = 1 forces x + rho <= 10: maximizing x subject to z pinned hits 10 - rho.
  auto& m = built.model;
  m.add_row({{built.root_z, 1.0}}, milp::RowSense::GE, 1.0, "force");
  m.add_row({{built.rho, 1.0}}, milp::RowSense::GE, 0.0, "rho0");
  m.set_objective(milp::ObjSense::Maximize, {{built.x[0][0], 1.0}});
  auto sol = milp::solve(m);
  REQUIRE(sol.status == milp::SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(10.0));
}

TEST_CASE("max rho over a pinned predicate equals its margin") {
  auto sys = frozen_1d(20.0);
  Vec a(1);
  a << 1.0;
  auto f = stl::Formula::pred(stl::make_predicate(a, 10.0, "p"));
  BuildOptions opts;
  opts.window = 0;
  Vec x0 = Vec::Constant(1, 4.0);
  opts.x0 = x0;
  opts.objective.kind = ObjectiveKind::MaxRho;
  BuiltModel built = build_bounded_problem(sys, f, opts);
  auto sol = milp::solve(built.model);
  REQUIRE(sol.status == milp::SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(6.0));  // b - a'x
}

TEST_CASE("structure: conjunction emits one row per child in z-mode") {
  auto sys = frozen_1d(20.0);
  Vec a(1);
  a << 1.0;
  std::vector<stl::FormulaPtr> ch;
  for (int i = 0; i < 3; ++i)
    ch.push_back(stl::Formula::pred(stl::make_predicate(a, 2.0 + i, "p" + std::to_string(i))));
  auto f = stl::Formula::conj(std::move(ch));

  BuildOptions opts;
  opts.window = 0;
  opts.enc.pin_root = false;
  BuiltModel built = build_bounded_problem(sys, f, opts);
  int and_rows = 0;
  for (const auto& r : built.model.rows)
    if (r.name.rfind("and", 0) == 0) ++and_rows;
  CHECK(and_rows == 3);
  // negation-free: no lower-bound rows for connectives
  for (const auto& r : built.model.rows) {
    CHECK(r.name.rfind("andL", 0) != 0);
  }
}

TEST_CASE("infeasible-by-construction predicates are rejected early") {
  Vec a(1);
  a << 1.0;
  CHECK_THROWS_AS(stl::make_predicate(a, -1.0, "bad"), ModelError);
}

TEST_CASE("window shorter than the horizon is rejected") {
  auto sys = frozen_1d(20.0);
  Vec a(1);
  a << 1.0;
  auto f = stl::Formula::always(stl::Formula::pred(stl::make_predicate(a, 5.0, "p")),
                                {0, 4, false});
  BuildOptions opts;
  opts.window = 2;
  CHECK_THROWS_AS(build_bounded_problem(sys, f, opts), ModelError);
}

namespace {

// Exhaustive oracle over mode strings for tiny two-mode systems.
bool any_mode_string_satisfies(const mld::MldSystem& sys, const stl::FormulaPtr& f,
                               const Vec& x0, int h) {
  for (long mask = 0; mask < (1L << h); ++mask) {
    Vec x = x0;
    stl::Signal sig;
    sig.samples.push_back(x);
    bool in_box = true;
    for (int k = 0; k < h && in_box; ++k) {
      mld::ControlInput u{Vec(0), {static_cast<int>((mask >> k) & 1)}};
      x = mld::step_maximal(sys, x, u);
      in_box = leq(x, sys.K, 0.0);
      sig.samples.push_back(x);
    }
    if (in_box && stl::eval_bool(sig, f, 0)) return true;
  }
  return false;
}

}  // namespace

TEST_CASE("soundness against exhaustive control enumeration (tiny instances)") {
  Rng rng(404);
  int done = 0;
  int infeasible_seen = 0;
  while (done < 120) {
    auto sys = testgen::random_mode_system(rng, 2);
    auto f = testgen::random_small_formula(rng, 2, 4);
    int h = stl::horizon(f).steps;
    Vec x0(2);
    x0 << rng.uniform(0.0, 1.5), rng.uniform(0.0, 1.5);

    bool oracle = any_mode_string_satisfies(sys, f, x0, h);

    BuildOptions opts;
    opts.x0 = x0;
    BuiltModel built = build_bounded_problem(sys, f, opts);
    built.install_repair();
    auto sol = milp::solve(built.model);
    bool feas = sol.status == milp::SolveStatus::Optimal ||
                sol.status == milp::SolveStatus::Feasible;
    CHECK(feas == oracle);
    if (feas) {
      // Prop 1(i): decoded witness satisfies the formula
      CHECK(verify(built.model, sol.x).empty());
      auto sig = built.decode_state(sol.x);
      CHECK(stl::eval_bool(sig, f, 0));
    } else {
      ++infeasible_seen;
    }
    ++done;
  }
  CHECK(infeasible_seen > 5);
}

TEST_CASE("optimal rho agrees with the monitor on tiny instances") {
  Rng rng(405);
  int done = 0;
  while (done < 60) {
    auto sys = testgen::random_mode_system(rng, 2);
    auto f = testgen::random_small_formula(rng, 2, 3);
    int h = stl::horizon(f).steps;
    Vec x0(2);
    x0 << rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0);

    BuildOptions opts;
    opts.x0 = x0;
    opts.objective.kind = ObjectiveKind::MaxRho;
    BuiltModel built = build_bounded_problem(sys, f, opts);
    built.install_repair();
    auto sol = milp::solve(built.model);
    if (sol.status != milp::SolveStatus::Optimal) continue;

    // brute-force: max over mode strings of the monitor robustness
    double best = -1e18;
    for (long mask = 0; mask < (1L << h); ++mask) {
      Vec x = x0;
      stl::Signal sig;
      sig.samples.push_back(x);
      bool in_box = true;
      for (int k = 0; k < h && in_box; ++k) {
        mld::ControlInput u{Vec(0), {static_cast<int>((mask >> k) & 1)}};
        x = mld::step_maximal(sys, x, u);
        in_box = leq(x, sys.K, 0.0);
        sig.samples.push_back(x);
      }
      if (in_box) best = std::max(best, stl::eval_rho(sig, f, 0));
    }
    CHECK(sol.objective == doctest::Approx(best).epsilon(1e-6));
    ++done;
  }
}

TEST_CASE("binary-variable count follows the formula-derived tally") {
  // For a mode system with n_delta = 0: binaries = window * (m_b + q_b)
  // + per (node,time) predicate z in z-mode.
  auto sys = systems::switched_2d();
  auto table = systems::switched_2d_predicates();
  auto p1a = stl::Formula::pred(table.at("p1a"));

  SUBCASE("single predicate, window 0, z-mode") {
    BuildOptions opts;
    opts.window = 0;
    opts.enc.pin_root = false;
    auto built = build_bounded_problem(sys, p1a, opts);
    CHECK(built.model.num_binary() == 1);  // one predicate z, no control steps
  }
  SUBCASE("G[0,3] over one predicate in z-mode") {
    BuildOptions opts;
    opts.window = 3;
    opts.enc.pin_root = false;
    auto built =
        build_bounded_problem(sys, stl::Formula::always(p1a, {0, 3, false}), opts);
    // 3 mode bits + 4 predicate z's
    CHECK(built.model.num_binary() == 3 + 4);
  }
  SUBCASE("pinned conjunction of predicates needs no z at all") {
    BuildOptions opts;
    opts.window = 2;
    auto f = stl::Formula::always(
        stl::Formula::conj({p1a, stl::Formula::pred(table.at("p1b"))}), {0, 2, false});
    auto built = build_bounded_problem(sys, f, opts);
    CHECK(built.model.num_binary() == 2);  // just the mode bits
  }
}

TEST_CASE("subformula sharing: overlapping intervals reuse z variables") {
  auto sys = systems::switched_2d();
  auto table = systems::switched_2d_predicates();
  auto p = stl::Formula::pred(table.at("p1a"));
  // F[0,3] p  OR  F[2,5] p  share p's z at times 2..3
  auto f = stl::Formula::disj({stl::Formula::eventually(p, {0, 3, false}),
                               stl::Formula::eventually(p, {2, 5, false})});
  BuildOptions opts;
  opts.window = 5;
  opts.enc.pin_root = false;
  auto built = build_bounded_problem(sys, f, opts);
  int pred_z = 0;
  for (const auto& v : built.model.vars)
    if (v.name.rfind("z.p1a", 0) == 0) ++pred_z;
  CHECK(pred_z == 6);  // times 0..5, not 4 + 4
}
