#include <doctest.h>

#include "mstl/milp.hpp"

#include <cmath>

using namespace mstl;
using namespace mstl::milp;

TEST_CASE("single-variable LP") {
  MilpModel m;
  int x = m.add_continuous(0.0, 10.0, "x");
  m.add_row({{x, 1.0}}, RowSense::LE, 3.0, "cap");
  m.set_objective(ObjSense::Maximize, {{x, 1.0}});
  auto sol = solve(m);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(3.0));
  CHECK(verify(m, sol.x).empty());
}

TEST_CASE("binary toy: max 2x + y with y <= 2.5 - x") {
  MilpModel m;
  int x = m.add_binary("x");
  int y = m.add_continuous(0.0, 10.0, "y");
  m.add_row({{y, 1.0}, {x, 1.0}}, RowSense::LE, 2.5, "budget");
  m.set_objective(ObjSense::Maximize, {{x, 2.0}, {y, 1.0}});
  auto sol = solve(m);
  REQUIRE(sol.status == SolveStatus::Optimal);
  CHECK(sol.objective == doctest::Approx(3.5));
  CHECK(sol.x[static_cast<std::size_t>(x)] == doctest::Approx(1.0));
  CHECK(sol.x[static_cast<std::size_t>(y)] == doctest::Approx(1.5));
}

TEST_CASE("infeasible toy") {
  MilpModel m;
  int x = m.add_continuous(0.0, 10.0, "x");
  m.add_row({{x, 1.0}}, RowSense::LE, 1.0);
  m.add_row({{x, 1.0}}, RowSense::GE, 2.0);
  auto sol = solve(m);
  CHECK(sol.status == SolveStatus::Infeasible);
}

TEST_CASE("verify flags violations with slack amounts") {
  MilpModel m;
  int x = m.add_continuous(0.0, 10.0, "x");
  int b = m.add_binary("b");
  m.add_row({{x, 1.0}, {b, 1.0}}, RowSense::LE, 3.0, "row0");
  CHECK(verify(m, {2.0, 1.0}).empty());
  auto bad = verify(m, {4.0, 0.5});
  REQUIRE(bad.size() == 2);  // fractional binary + violated row
  CHECK(bad[0].amount == doctest::Approx(0.5));
  CHECK(bad[1].amount == doctest::Approx(1.5));
}

namespace {

MilpModel random_model(Rng& rng, int n_bin, int n_cont) {
  MilpModel m;
  for (int i = 0; i < n_bin; ++i) m.add_binary("b" + std::to_string(i));
  for (int i = 0; i < n_cont; ++i)
    m.add_continuous(-2.0, 3.0, "c" + std::to_string(i));
  int rows = 2 + static_cast<int>(rng.pick(5));
  for (int r = 0; r < rows; ++r) {
    std::vector<RowEntry> terms;
    for (int j = 0; j < m.num_vars(); ++j)
      if (rng.pick(3) != 0) terms.push_back({j, rng.uniform(-2.0, 2.0)});
    if (terms.empty()) terms.push_back({0, 1.0});
    RowSense sense = rng.pick(4) == 0 ? RowSense::GE : RowSense::LE;
    m.add_row(std::move(terms), sense, rng.uniform(-1.0, 4.0));
  }
  std::vector<RowEntry> obj;
  for (int j = 0; j < m.num_vars(); ++j) obj.push_back({j, rng.uniform(-1.0, 1.0)});
  m.set_objective(rng.coin() ? ObjSense::Maximize : ObjSense::Minimize, std::move(obj));
  return m;
}

// Exhaustive oracle: enumerate binary assignments, solve each residual LP
// through the same simplex core with the binaries bound-fixed.
struct BruteResult {
  bool feasible = false;
  double objective = 0.0;
};

BruteResult brute_force(const MilpModel& m) {
  int n_bin = 0;
  std::vector<int> bins;
  for (int j = 0; j < m.num_vars(); ++j)
    if (m.vars[static_cast<std::size_t>(j)].kind == VarKind::Binary) bins.push_back(j);
  n_bin = static_cast<int>(bins.size());
  BruteResult best;
  for (long mask = 0; mask < (1L << n_bin); ++mask) {
    MilpModel fixed = m;
    fixed.repair = nullptr;
    for (int i = 0; i < n_bin; ++i) {
      auto& v = fixed.vars[static_cast<std::size_t>(bins[static_cast<std::size_t>(i)])];
      v.kind = VarKind::Continuous;
      v.lb = v.ub = ((mask >> i) & 1) ? 1.0 : 0.0;
    }
    SolveParams p;
    auto sol = solve(fixed, p);
    if (sol.status != SolveStatus::Optimal) continue;
    bool better = m.obj_sense == ObjSense::Maximize ? sol.objective > best.objective
                                                    : sol.objective < best.objective;
    if (!best.feasible || better) {
      best.feasible = true;
      best.objective = sol.objective;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("branch-and-bound matches exhaustive enumeration") {
  Rng rng(1234);
  int done = 0;
  for (int i = 0; i < 1000; ++i) {
    int n_bin = 1 + static_cast<int>(rng.pick(i % 50 == 0 ? 12 : 7));
    int n_cont = static_cast<int>(rng.pick(4));
    MilpModel m = random_model(rng, n_bin, n_cont);
    auto brute = brute_force(m);
    auto sol = solve(m);
    if (brute.feasible) {
      REQUIRE(sol.status == SolveStatus::Optimal);
      CHECK(sol.objective == doctest::Approx(brute.objective).epsilon(1e-6));
      CHECK(verify(m, sol.x).empty());
    } else {
      CHECK(sol.status == SolveStatus::Infeasible);
    }
    ++done;
  }
  CHECK(done == 1000);
}

TEST_CASE("determinism: identical model and params give identical runs") {
  Rng rng(99);
  for (int i = 0; i < 20; ++i) {
    MilpModel m = random_model(rng, 6, 3);
    auto a = solve(m);
    auto b = solve(m);
    CHECK(a.status == b.status);
    CHECK(a.nodes == b.nodes);
    if (a.status == SolveStatus::Optimal) CHECK(a.objective == b.objective);
  }
}

TEST_CASE("parallel tree search returns the same objective") {
  Rng rng(77);
  for (int i = 0; i < 10; ++i) {
    MilpModel m = random_model(rng, 9, 3);
    SolveParams serial;
    SolveParams par;
    par.threads = 4;
    auto a = solve(m, serial);
    auto b = solve(m, par);
    CHECK(a.status == b.status);
    if (a.status == SolveStatus::Optimal)
      CHECK(a.objective == doctest::Approx(b.objective).epsilon(1e-9));
  }
}

TEST_CASE("LP export round-trips to an identical constraint matrix") {
  MilpModel m;
  int x = m.add_continuous(0.0, 4.0, "x");
  int y = m.add_continuous(-1.0, 2.0, "y");
  int b = m.add_binary("flag");
  m.add_row({{x, 1.0}, {y, -2.5}, {b, 1.0}}, RowSense::LE, 3.0, "r0");
  m.add_row({{x, 1.0}, {y, 1.0}}, RowSense::EQ, 1.0, "r1");
  m.add_row({{y, 1.0}, {b, -1.0}}, RowSense::GE, -0.5, "r2");
  m.set_objective(ObjSense::Maximize, {{x, 2.0}, {b, 0.5}});

  auto text = export_lp(m);
  auto back = parse_lp(text);
  REQUIRE(back.num_vars() == m.num_vars());
  REQUIRE(back.num_rows() == m.num_rows());
  // Same matrix up to variable identity by name (the parser assigns ids in
  // first-appearance order).
  auto coef_map = [](const MilpModel& model) {
    std::map<std::pair<std::string, std::string>, double> out;
    for (const auto& r : model.rows)
      for (const auto& t : r.terms)
        out[{r.name, model.vars[static_cast<std::size_t>(t.var)].name}] += t.coef;
    return out;
  };
  auto ma = coef_map(m);
  auto mb = coef_map(back);
  REQUIRE(ma.size() == mb.size());
  for (const auto& [key, coef] : ma) {
    REQUIRE(mb.count(key) == 1);
    CHECK(mb[key] == doctest::Approx(coef));
  }
  for (int r = 0; r < m.num_rows(); ++r) {
    CHECK(m.rows[static_cast<std::size_t>(r)].sense ==
          back.rows[static_cast<std::size_t>(r)].sense);
    CHECK(m.rows[static_cast<std::size_t>(r)].rhs ==
          doctest::Approx(back.rows[static_cast<std::size_t>(r)].rhs));
  }
  std::map<std::string, const Variable*> by_name;
  for (const auto& v : back.vars) by_name[v.name] = &v;
  for (const auto& v : m.vars) {
    REQUIRE(by_name.count(v.name) == 1);
    CHECK(v.lb == doctest::Approx(by_name[v.name]->lb));
    CHECK(v.ub == doctest::Approx(by_name[v.name]->ub));
    CHECK(v.kind == by_name[v.name]->kind);
  }
  // solve both and compare
  auto s1 = solve(m);
  auto s2 = solve(back);
  REQUIRE(s1.status == SolveStatus::Optimal);
  REQUIRE(s2.status == SolveStatus::Optimal);
  CHECK(s1.objective == doctest::Approx(s2.objective));
}

TEST_CASE("solution files import and verify") {
  MilpModel m;
  int x = m.add_binary("x");
  int y = m.add_continuous(0.0, 10.0, "y");
  m.add_row({{y, 1.0}, {x, 1.0}}, RowSense::LE, 2.5, "budget");
  m.set_objective(ObjSense::Maximize, {{x, 2.0}, {y, 1.0}});
  // the enumerated optimum, written by hand
  std::string text = "# toy optimum\nx 1\ny 1.5\n";
  auto xs = import_solution(m, text);
  CHECK(verify(m, xs).empty());
  CHECK_THROWS_AS(import_solution(m, "x 1\n"), Error);
  CHECK_THROWS_AS(parse_solution_file("x\n"), ParseError);

  auto corrupted = import_solution(m, "x 1\ny 2.5\n");
  CHECK_FALSE(verify(m, corrupted).empty());
}
