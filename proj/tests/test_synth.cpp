#include <doctest.h>

#include "mstl/synth.hpp"
#include "mstl/systems.hpp"

#include <cmath>

using namespace mstl;
using namespace mstl::synth;

namespace {

stl::FormulaPtr scalar_cap(double b) {
  Vec a(1);
  a << 1.0;
  return stl::Formula::pred(stl::make_predicate(a, b, "cap"));
}

}  // namespace

TEST_CASE("scalar toy: T = 1 s-sequence with anchor in [0.5, 1]") {
  auto sys = systems::scalar_toy();
  auto f = scalar_cap(1.0);
  SearchReport rep;
  auto seq = find_s_sequence(sys, f, 3, {}, &rep);
  REQUIRE(seq.has_value());
  CHECK(seq->T == 1);
  double x0 = seq->witness.samples[0][0];
  CHECK(x0 >= 0.5 - 1e-9);
  CHECK(x0 <= 1.0 + 1e-9);
  CHECK(rep.attempts.front().T == 1);

  SUBCASE("windows of seeded runs stay inside omega") {
    auto omega = seq->omega();
    auto controls = unroll_policy(*seq, 200);
    for (std::uint64_t seed : {11ull, 22ull}) {
      auto run = mld::simulate(sys, seq->witness.samples[0], controls,
                               mld::WSource::seeded(seed));
      for (const auto& x : run.samples) {
        CHECK(rci_contains(omega, {x}, 1e-9));
        CHECK(x[0] <= 1.0 + 1e-9);
      }
    }
  }
}

TEST_CASE("scalar toy: T_max below the minimum reports all-infeasible") {
  auto sys = systems::scalar_toy();
  // cap so tight that no wrap exists: x <= 0.4 but fixed point is 0.5
  auto f = scalar_cap(0.4);
  SearchReport rep;
  auto seq = find_s_sequence(sys, f, 4, {}, &rep);
  CHECK_FALSE(seq.has_value());
  CHECK(rep.attempts.size() == 4);
  for (const auto& a : rep.attempts) CHECK(a.status == milp::SolveStatus::Infeasible);
}

TEST_CASE("vacuous formula accepts any controls") {
  auto sys = systems::scalar_toy();
  Vec a(1);
  a << 0.0;
  auto f = stl::Formula::pred(stl::make_predicate(a, 1.0, "vac"));
  auto res = solve_bounded(sys, f, Vec(Vec::Constant(1, 0.3)), {});
  CHECK(res.feasible());
}

TEST_CASE("scalar toy phi-sequence reduces to solve_bounded when phi_g is true") {
  auto sys = systems::scalar_toy();
  stl::BoundedGlobalSpec spec;
  spec.phi_b = stl::Formula::always(scalar_cap(1.0), {0, 2, false});
  spec.phi_g = stl::Formula::truth();
  spec.delta = 2;
  auto seq = find_phi_sequence(sys, spec, 3, {});
  REQUIRE(seq.has_value());
  CHECK(stl::eval_bool(seq->witness, spec.phi_b, 0));
}

TEST_CASE("scalar toy phi-sequence and its limit orbit") {
  auto sys = systems::scalar_toy();
  stl::BoundedGlobalSpec spec;
  spec.phi_b = stl::Formula::truth();
  spec.phi_g = scalar_cap(1.0);
  spec.delta = 0;
  SynthOptions opts;
  auto seq = find_phi_sequence(sys, spec, 4, opts);
  REQUIRE(seq.has_value());
  CHECK(seq->T == 1);
  auto orbit = limit_orbit(sys, *seq, 1e-9, 300);
  REQUIRE(orbit.converged);
  REQUIRE(orbit.states.size() == 1);
  CHECK(orbit.states[0][0] == doctest::Approx(0.5).epsilon(1e-6));
  // orbit windows lie inside omega
  auto omega = seq->omega();
  CHECK(rci_contains(omega, {orbit.states[0]}, 1e-6));
}

TEST_CASE("fragility arithmetic") {
  CHECK(fragility_bound(2, 0, 3.0, 0.25) == doctest::Approx(144.0));
  CHECK(fragility_bound(1, 0, 3.0, 3.0) == doctest::Approx(1.0));
  CHECK(fragility_epsilon(2, 0, 3.0, 144.0) == doctest::Approx(0.25));
  CHECK_THROWS_AS(fragility_bound(2, 0, 3.0, 0.0), ModelError);
}

TEST_CASE("unroll_policy shapes") {
  auto sys = systems::scalar_toy();
  auto f = scalar_cap(1.0);
  auto seq = find_s_sequence(sys, f, 2, {});
  REQUIRE(seq.has_value());
  CHECK(unroll_policy(*seq, 0).empty());
  auto us = unroll_policy(*seq, 5);
  CHECK(us.size() == 5);
}

TEST_CASE("rci_contains boundary behavior") {
  LowerSetUnion omega;
  omega.window_len = 1;
  Vec anchor = Vec::Constant(2, 1.0);
  omega.anchors.push_back({anchor});
  CHECK(rci_contains(omega, {anchor}));
  Vec above = anchor;
  above[1] += 1e-3;
  CHECK_FALSE(rci_contains(omega, {above}));
  Vec below = anchor * 0.5;
  CHECK(rci_contains(omega, {below}));
}

TEST_CASE("X0max is a lower set: dominated starts reuse the same controls") {
  auto sys = systems::switched_2d();
  auto f = systems::switched_2d_reach_formula();
  SynthOptions opts;
  opts.objective.kind = encode::ObjectiveKind::MaxX0Corner;
  opts.solve.node_limit = 300;  // the repair finds the optimum early
  auto res = solve_bounded(sys, f, std::nullopt, opts);
  REQUIRE(res.feasible());
  Vec x0 = res.witness.samples[0];
  Rng rng(606);
  for (int i = 0; i < 50; ++i) {
    Vec x(2);
    x << rng.uniform(0.0, x0[0]), rng.uniform(0.0, x0[1]);
    auto run = mld::simulate(sys, x, res.controls, mld::WSource::seeded(rng.next()));
    CHECK(stl::eval_bool(run, f, 0));
  }
}
