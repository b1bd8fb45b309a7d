#include <doctest.h>

#include "generators.hpp"
#include "mstl/mld.hpp"
#include "mstl/systems.hpp"

#include <cmath>

using namespace mstl;
using namespace mstl::mld;

namespace {

// Plain Taylor-series oracle for the matrix exponential pieces.
Mat expm_taylor(const Mat& a, int terms = 60) {
  Mat acc = Mat::Identity(a.rows(), a.cols());
  Mat power = Mat::Identity(a.rows(), a.cols());
  double fact = 1.0;
  for (int k = 1; k <= terms; ++k) {
    power = power * a;
    fact *= k;
    acc += power / fact;
  }
  return acc;
}

}  // namespace

TEST_CASE("switched system constants match the series oracle") {
  auto d = systems::switched_2d_data();
  Mat a1(2, 2), a2(2, 2);
  a1 << 1, 1, 1, -5;
  a2 << -8, 1, 1, 2;
  CHECK((d.phi1 - expm_taylor(0.1 * a1)).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((d.phi2 - expm_taylor(0.1 * a2)).cwiseAbs().maxCoeff() < 1e-10);
  // integral form: A^-1 (e^{A tau} - I)
  CHECK((a1 * d.bw1 - (d.phi1 - Mat::Identity(2, 2))).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((a2 * d.bw2 - (d.phi2 - Mat::Identity(2, 2))).cwiseAbs().maxCoeff() < 1e-10);
  // Metzler exponentials stay elementwise nonnegative
  CHECK(d.phi1.minCoeff() >= 0.0);
  CHECK(d.bw1.minCoeff() >= 0.0);
}

TEST_CASE("switched step from the origin equals the disturbance gain") {
  auto sys = systems::switched_2d();
  auto d = systems::switched_2d_data();
  ControlInput mode1{Vec(0), {1}};
  Vec next = step(sys, Vec::Zero(2), mode1, sys.maximal_disturbance());
  CHECK((next - d.bw1 * d.w_star).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("maximal step dominates every sampled disturbance") {
  auto sys = systems::switched_2d();
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    Vec x(2);
    x << rng.uniform(0, 5), rng.uniform(0, 5);
    ControlInput u{Vec(0), {rng.coin() ? 1 : 0}};
    Disturbance w{Vec(2), {}};
    w.real << rng.uniform(0, 1.5), rng.uniform(0, 1.0);
    CHECK(leq(step(sys, x, u, w), step_maximal(sys, x, u), 1e-9));
  }
}

TEST_CASE("simulate: maximal source, dominance, empty controls") {
  auto sys = systems::switched_2d();
  Vec x0(2);
  x0 << 2.0, 1.0;
  std::vector<ControlInput> us;
  for (int k = 0; k < 8; ++k) us.push_back({Vec(0), {k % 2}});

  auto maximal = simulate(sys, x0, us, WSource::maximal());
  Vec x = x0;
  for (const auto& u : us) x = step_maximal(sys, x, u);
  CHECK((maximal.samples.back() - x).cwiseAbs().maxCoeff() < 1e-12);

  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    auto run = simulate(sys, x0, us, WSource::seeded(seed));
    for (std::size_t k = 0; k < run.samples.size(); ++k) {
      CHECK(leq(run.samples[k], maximal.samples[k], 1e-9));
      CHECK(geq_zero(run.samples[k]));
    }
    // determinism
    auto rerun = simulate(sys, x0, us, WSource::seeded(seed));
    CHECK((run.samples.back() - rerun.samples.back()).cwiseAbs().maxCoeff() == 0.0);
  }

  auto empty = simulate(sys, x0, {}, WSource::maximal());
  CHECK(empty.samples.size() == 1);
}

TEST_CASE("monotonicity holds for the switched Metzler system") {
  auto sys = systems::switched_2d();
  auto rep = check_monotone(sys, 1000, 11);
  CHECK(rep.ok);
  CHECK(rep.samples == 1000);
}

TEST_CASE("well-posedness: the constraint block pins a unique next state") {
  auto sys = systems::switched_2d();
  Rng rng(21);
  for (int i = 0; i < 100; ++i) {
    Vec x(2);
    x << rng.uniform(0, 10), rng.uniform(0, 10);
    ControlInput u{Vec(0), {rng.coin() ? 1 : 0}};
    Disturbance w{Vec(2), {}};
    w.real << rng.uniform(0, 1.5), rng.uniform(0, 1.0);
    auto res = step_via_milp(sys, x, u, w);
    CHECK(res.ambiguity < 1e-6);
    CHECK((res.x_next - step(sys, x, u, w)).cwiseAbs().maxCoeff() < 1e-6);
  }
}

TEST_CASE("random mode systems: milp step agrees with the evaluator") {
  Rng rng(31);
  for (int rep = 0; rep < 10; ++rep) {
    auto sys = testgen::random_mode_system(rng, 2);
    for (int i = 0; i < 20; ++i) {
      Vec x(2);
      x << rng.uniform(0, 3), rng.uniform(0, 3);
      ControlInput u{Vec(0), {rng.coin() ? 1 : 0}};
      Disturbance w{Vec(2), {}};
      w.real << rng.uniform(0, sys.w_star_real[0]), rng.uniform(0, sys.w_star_real[1]);
      auto res = step_via_milp(sys, x, u, w);
      CHECK(res.ambiguity < 1e-6);
      CHECK((res.x_next - sys.evaluator(x, u, w)).cwiseAbs().maxCoeff() < 1e-6);
    }
  }
}

TEST_CASE("json round trip preserves the system") {
  auto sys = systems::switched_2d();
  auto text = to_json(sys);
  auto back = from_json(text);
  CHECK(back.n == sys.n);
  CHECK((back.A - sys.A).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((back.E_x - sys.E_x).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((back.w_star_real - sys.w_star_real).cwiseAbs().maxCoeff() < 1e-15);
  // loaded systems step through the constraint block
  Vec x(2);
  x << 1.0, 2.0;
  ControlInput u{Vec(0), {1}};
  Vec a = step(sys, x, u, sys.maximal_disturbance());
  Vec b = step(back, x, u, back.maximal_disturbance());
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("scalar toy steps and trajectory csv") {
  auto sys = systems::scalar_toy();
  Vec x0 = Vec::Constant(1, 1.0);
  std::vector<ControlInput> us(3, ControlInput{Vec(0), {}});
  auto sig = simulate(sys, x0, us, WSource::maximal());
  CHECK(sig.samples[1][0] == doctest::Approx(0.75));
  CHECK(sig.samples[3][0] == doctest::Approx(0.5 * 0.5 * 0.75 + 0.25 * 1.5));
  std::vector<Disturbance> ws(3, sys.maximal_disturbance());
  auto csv = trajectory_csv(sys, sig, us, ws);
  CHECK(csv.rfind("t,x0,wr0\n", 0) == 0);
}
