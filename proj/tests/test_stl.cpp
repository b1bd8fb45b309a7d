#include <doctest.h>

#include "generators.hpp"
#include "mstl/stl.hpp"

#include <cmath>

using namespace mstl;
using namespace mstl::stl;

namespace {

PredicateTable demo_table() {
  PredicateTable t;
  Vec a1(1), a2(1);
  a1 << 1.0;
  a2 << 2.0;
  t.emplace("p", make_predicate(a1, 10.0, "p"));
  t.emplace("p1", make_predicate(a1, 1.0, "p1"));
  t.emplace("p2", make_predicate(a2, 5.0, "p2"));
  return t;
}

}  // namespace

TEST_CASE("predicate invariants") {
  Vec a(2);
  a << 1.0, -0.5;
  CHECK_THROWS_AS(make_predicate(a, 1.0), ModelError);
  a << 1.0, 0.5;
  CHECK_THROWS_AS(make_predicate(a, -1.0), ModelError);
  CHECK_NOTHROW(make_predicate(a, 0.0));
}

TEST_CASE("parser maps grammar to the AST") {
  auto table = demo_table();
  auto f = parse_formula("G[0,3] p", table);
  REQUIRE(f->kind() == NodeKind::Always);
  CHECK(f->interval().lo == 0);
  CHECK(f->interval().hi == 3);
  CHECK(f->children()[0]->kind() == NodeKind::Pred);

  auto g = parse_formula("F[0,5] p1 & G[5,inf] (F[0,6] p1 & F[0,6] p2)", table);
  REQUIRE(g->kind() == NodeKind::And);
  REQUIRE(g->children().size() == 2);
  CHECK(g->children()[0]->kind() == NodeKind::Eventually);
  CHECK(g->children()[1]->kind() == NodeKind::Always);
  CHECK(g->children()[1]->interval().unbounded);

  CHECK_THROWS_AS(parse_formula("!p", table), ParseError);
  CHECK_THROWS_AS(parse_formula("G[3,1] p", table), ParseError);
  CHECK_THROWS_AS(parse_formula("G[-1,2] p", table), ParseError);
  CHECK_THROWS_AS(parse_formula("G[0,2] nosuch", table), ParseError);

  // precedence: U binds tighter than &, & tighter than |
  auto u = parse_formula("p U[0,2] p1 & p2 | p", table);
  CHECK(u->kind() == NodeKind::Or);
  CHECK(u->children()[0]->kind() == NodeKind::And);
  CHECK(u->children()[0]->children()[0]->kind() == NodeKind::Until);
}

TEST_CASE("parse round-trips through pretty printing") {
  auto table = demo_table();
  const char* cases[] = {
      "G[0,3] p",
      "F[0,5] p1 & G[5,inf] (F[0,6] p1 & F[0,6] p2)",
      "p U[1,4] p1 | p2",
      "(p | p1) & F[2,2] p2",
  };
  for (const char* c : cases) {
    auto f = parse_formula(c, table);
    auto g = parse_formula(pretty(f), table);
    CHECK(pretty(f) == pretty(g));
  }
}

TEST_CASE("horizon recursion") {
  auto table = demo_table();
  CHECK(horizon(Formula::pred(table.at("p"))).steps == 0);
  auto f = parse_formula("F[0,3] G[2,4] p", table);
  CHECK(horizon(f).steps == 7);
  auto g = parse_formula("F[0,5] p1 & G[5,inf] (F[0,6] p1 & F[0,6] p2)", table);
  CHECK(horizon(g).unbounded);
  auto u = parse_formula("p U[0,2] (F[0,3] p1)", table);
  CHECK(horizon(u).steps == 5);
}

TEST_CASE("margin-channel monitor reproduces the squared-ramp values") {
  // r_k = k with margins 10 - r_k^2 supplied as a channel ("pi" atom).
  Vec a(1);
  a << 0.0;
  Predicate pi = make_predicate(a, 0.0, "pi");
  auto G = Formula::always(Formula::pred(pi), {0, 3, false});
  auto F = Formula::eventually(Formula::pred(pi), {4, 6, false});

  Signal sig;
  sig.start_time = 0;
  for (int k = 0; k <= 6; ++k) {
    Vec x(1);
    x << k;
    sig.samples.push_back(x);
  }
  MarginTable margins;
  margins.start_time = 0;
  for (int k = 0; k <= 6; ++k)
    margins.channels["pi"].push_back(10.0 - static_cast<double>(k) * k);

  CHECK(eval_rho(sig, G, 0, &margins) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(eval_rho(sig, F, 0, &margins) == doctest::Approx(-6.0).epsilon(1e-12));
  CHECK(eval_bool(sig, G, 0, &margins));
  CHECK_FALSE(eval_bool(sig, F, 0, &margins));
}

TEST_CASE("until follows the exact recursion") {
  Vec a(1);
  a << 0.0;
  Predicate q1 = make_predicate(a, 0.0, "m1");
  Predicate q2 = make_predicate(a, 0.0, "m2");
  auto u = Formula::until(Formula::pred(q1), Formula::pred(q2), {0, 2, false});
  Signal sig;
  sig.start_time = 0;
  for (int k = 0; k < 3; ++k) sig.samples.push_back(Vec::Zero(1));
  MarginTable margins;
  margins.channels["m1"] = {5, 5, 5};
  margins.channels["m2"] = {-1, -1, 3};
  CHECK(eval_rho(sig, u, 0, &margins) == doctest::Approx(3.0));
  margins.channels["m2"] = {-1, -1, -2};
  CHECK(eval_rho(sig, u, 0, &margins) == doctest::Approx(-1.0));
}

TEST_CASE("origin satisfies every lower-set predicate") {
  Rng rng(7);
  for (int i = 0; i < 50; ++i) {
    auto p = testgen::random_predicate(rng, 3);
    Signal sig;
    sig.samples.assign(5, Vec::Zero(3));
    CHECK(eval_bool(sig, Formula::pred(p), 0));
  }
}

TEST_CASE("conjunction idempotence") {
  Rng rng(8);
  auto p = Formula::pred(testgen::random_predicate(rng, 2));
  auto pp = Formula::conj({p, p});
  for (int i = 0; i < 100; ++i) {
    auto sig = testgen::random_signal(rng, 2, 3);
    CHECK(eval_bool(sig, pp, 0) == eval_bool(sig, p, 0));
    CHECK(eval_rho(sig, pp, 0) == doctest::Approx(eval_rho(sig, p, 0)));
  }
}

TEST_CASE("rho sign consistency over random instances") {
  Rng rng(42);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    auto f = testgen::random_formula(rng, 2, 2);
    auto h = horizon(f);
    if (h.unbounded) continue;
    auto sig = testgen::random_signal(rng, 2, h.steps + 1);
    double rho = eval_rho(sig, f, 0);
    bool sat = eval_bool(sig, f, 0);
    if (rho > 0) CHECK(sat);
    if (rho < 0) CHECK_FALSE(sat);
    ++checked;
  }
  CHECK(checked > 900);
}

TEST_CASE("monotone satisfaction (negation-free lower-set formulas)") {
  Rng rng(43);
  for (int i = 0; i < 1000; ++i) {
    auto f = testgen::random_formula(rng, 2, 2);
    auto h = horizon(f);
    if (h.unbounded) continue;
    auto sig = testgen::random_signal(rng, 2, h.steps + 1);
    auto lower = testgen::dominated_signal(rng, sig);
    if (eval_bool(sig, f, 0)) CHECK(eval_bool(lower, f, 0));
    CHECK(eval_rho(lower, f, 0) >= eval_rho(sig, f, 0) - 1e-12);
  }
}

TEST_CASE("horizon agreement: samples past t + h are irrelevant") {
  Rng rng(44);
  for (int i = 0; i < 300; ++i) {
    auto f = testgen::random_formula(rng, 2, 2);
    auto h = horizon(f);
    if (h.unbounded) continue;
    auto sig = testgen::random_signal(rng, 2, h.steps + 1);
    auto extended = sig;
    auto extra = testgen::random_signal(rng, 2, 3);
    for (auto& x : extra.samples) extended.samples.push_back(x);
    CHECK(eval_bool(sig, f, 0) == eval_bool(extended, f, 0));
    CHECK(eval_rho(sig, f, 0) == doctest::Approx(eval_rho(extended, f, 0)));
  }
}

TEST_CASE("monitor rejects too-short signals") {
  auto table = demo_table();
  auto f = parse_formula("G[0,3] p", table);
  Signal sig;
  sig.samples.assign(2, Vec::Zero(1));
  CHECK_THROWS_AS(eval_bool(sig, f, 0), Error);
}

TEST_CASE("normalize_safety shapes") {
  auto table = demo_table();
  Rng rng(45);

  SUBCASE("reach-and-stay splits into per-time disjuncts") {
    auto f = parse_formula("F[0,2] G[0,inf] p", table);
    auto specs = normalize_safety(f);
    REQUIRE(specs.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
      CHECK(specs[i].phi_b->is_truth());
      CHECK(specs[i].delta == static_cast<int>(i));
      CHECK_FALSE(specs[i].phi_g->is_truth());
    }
  }
  SUBCASE("bounded input reduces to a single bounded spec") {
    auto f = parse_formula("F[0,4] p1 & G[0,3] p2", table);
    auto specs = normalize_safety(f);
    REQUIRE(specs.size() == 1);
    CHECK(specs[0].phi_g->is_truth());
    CHECK(specs[0].delta == horizon(f).steps);
  }
  SUBCASE("already in target form") {
    auto f = parse_formula("G[3,inf] p", table);
    auto specs = normalize_safety(f);
    REQUIRE(specs.size() == 1);
    CHECK(specs[0].phi_b->is_truth());
    CHECK(specs[0].delta == 3);
  }
  SUBCASE("nested unbounded always is rejected") {
    auto f = parse_formula("G[0,inf] (p | G[2,inf] p1)", table);
    CHECK_THROWS_AS(normalize_safety(f), ModelError);
  }
}

namespace {

// Truncation oracle: replace every G[d,inf] with G[d,K] and evaluate.
FormulaPtr truncate_unbounded(const FormulaPtr& f, int K) {
  switch (f->kind()) {
    case NodeKind::Pred:
      return f;
    case NodeKind::And: {
      std::vector<FormulaPtr> ch;
      for (const auto& c : f->children()) ch.push_back(truncate_unbounded(c, K));
      return Formula::conj(std::move(ch));
    }
    case NodeKind::Or: {
      std::vector<FormulaPtr> ch;
      for (const auto& c : f->children()) ch.push_back(truncate_unbounded(c, K));
      return Formula::disj(std::move(ch));
    }
    case NodeKind::Always: {
      Interval iv = f->interval();
      if (iv.unbounded) {
        iv.unbounded = false;
        iv.hi = K;
      }
      return Formula::always(truncate_unbounded(f->children()[0], K), iv);
    }
    case NodeKind::Eventually:
      return Formula::eventually(truncate_unbounded(f->children()[0], K), f->interval());
    case NodeKind::Until:
      return Formula::until(truncate_unbounded(f->children()[0], K),
                            truncate_unbounded(f->children()[1], K), f->interval());
  }
  throw Error("unreachable");
}

FormulaPtr random_safety_formula(Rng& rng, int dim) {
  // bounded skeleton with an occasional unbounded always on top of a
  // bounded subformula
  auto base = testgen::random_formula(rng, dim, 1);
  if (!horizon(base).bounded()) return random_safety_formula(rng, dim);
  switch (rng.pick(3)) {
    case 0:
      return base;
    case 1:
      return Formula::always(base, {static_cast<int>(rng.pick(3)), 0, true});
    default: {
      auto other = testgen::random_formula(rng, dim, 1);
      if (!horizon(other).bounded()) return base;
      return Formula::conj(
          {other, Formula::always(base, {static_cast<int>(rng.pick(3)), 0, true})});
    }
  }
}

}  // namespace

TEST_CASE("normalize_safety is sound on truncated windows") {
  Rng rng(46);
  const int K = 9;
  int done = 0;
  for (int i = 0; i < 1000; ++i) {
    auto f = random_safety_formula(rng, 2);
    std::vector<BoundedGlobalSpec> specs;
    try {
      specs = normalize_safety(f);
    } catch (const ModelError&) {
      continue;  // outside the fragment
    }
    auto truncated = truncate_unbounded(f, K);
    auto ht = horizon(truncated);
    if (!ht.bounded()) continue;
    int len = ht.steps + 1;
    // normalized disjuncts, truncated the same way
    std::vector<FormulaPtr> disjuncts;
    bool skip = false;
    for (const auto& s : specs) {
      FormulaPtr part = s.phi_b;
      if (!s.phi_g->is_truth()) {
        if (s.delta > K) {
          skip = true;
          break;
        }
        auto gpart = Formula::always(s.phi_g, {s.delta, K, false});
        part = part->is_truth() ? gpart : Formula::conj({part, gpart});
      }
      disjuncts.push_back(part);
      len = std::max(len, horizon(part).steps + 1);
    }
    if (skip || disjuncts.empty()) continue;
    auto normalized = Formula::disj(std::move(disjuncts));
    auto sig = testgen::random_signal(rng, 2, len);
    CHECK(eval_bool(sig, truncated, 0) == eval_bool(sig, normalized, 0));
    ++done;
  }
  CHECK(done > 400);
}
