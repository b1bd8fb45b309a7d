#include "mstl/stl.hpp"

#include <cstdio>

namespace mstl::stl {

namespace {

// Working form: a disjunction of (phi_b AND G[delta,inf] phi_g) specs.
// phi_g == truth() marks a purely bounded disjunct.
using SpecList = std::vector<BoundedGlobalSpec>;

FormulaPtr conj2(const FormulaPtr& a, const FormulaPtr& b) {
  if (a->is_truth()) return b;
  if (b->is_truth()) return a;
  std::vector<FormulaPtr> ch;
  auto push = [&ch](const FormulaPtr& f) {
    if (f->kind() == NodeKind::And)
      for (const auto& c : f->children()) ch.push_back(c);
    else
      ch.push_back(f);
  };
  push(a);
  push(b);
  return Formula::conj(std::move(ch));
}

FormulaPtr once_at(const FormulaPtr& f, int t) {
  if (f->is_truth()) return f;
  if (t == 0) return f;
  return Formula::eventually(f, Interval{t, t, false});
}

// F_{t} over a spec: bounded part is delayed, the unbounded tail shifts.
BoundedGlobalSpec shift_spec(const BoundedGlobalSpec& s, int t) {
  BoundedGlobalSpec out;
  out.phi_b = once_at(s.phi_b, t);
  out.phi_g = s.phi_g;
  out.delta = s.delta + t;
  return out;
}

int bounded_steps(const FormulaPtr& f) {
  Horizon h = horizon(f);
  if (h.unbounded) throw ModelError("expected a bounded subformula");
  return h.steps;
}

// Merge two specs under conjunction.  Bounded prefixes of the later-starting
// G chunk move into the bounded part (the Gamma < h splitting rule).
BoundedGlobalSpec merge_and(const BoundedGlobalSpec& a, const BoundedGlobalSpec& b) {
  BoundedGlobalSpec out;
  out.phi_b = conj2(a.phi_b, b.phi_b);
  if (a.phi_g->is_truth() && b.phi_g->is_truth()) {
    out.phi_g = Formula::truth();
    out.delta = bounded_steps(out.phi_b);
    return out;
  }
  if (a.phi_g->is_truth()) {
    out.phi_g = b.phi_g;
    out.delta = b.delta;
    return out;
  }
  if (b.phi_g->is_truth()) {
    out.phi_g = a.phi_g;
    out.delta = a.delta;
    return out;
  }
  int delta = std::max(a.delta, b.delta);
  FormulaPtr bounded = out.phi_b;
  if (a.delta < delta)
    bounded = conj2(bounded, Formula::always(a.phi_g, Interval{a.delta, delta, false}));
  if (b.delta < delta)
    bounded = conj2(bounded, Formula::always(b.phi_g, Interval{b.delta, delta, false}));
  out.phi_b = bounded;
  out.phi_g = conj2(a.phi_g, b.phi_g);
  out.delta = delta;
  return out;
}

class Normalizer {
 public:
  explicit Normalizer(const NormalizeOptions& opts) : opts_(opts) {}

  SpecList run(const FormulaPtr& f) {
    SpecList out = normalize(f);
    for (auto& s : out) raise_delta(s);
    if (out.size() > opts_.disjunct_warn_limit)
      std::fprintf(stderr,
                   "normalize_safety: %zu disjuncts exceeds warn limit %zu\n",
                   out.size(), opts_.disjunct_warn_limit);
    return out;
  }

 private:
  // One application of G[d,h]phi_g absorption when delta < h(phi_b).  For
  // phi_g with positive horizon the bound chases its own tail, so a single
  // pass is all the form admits; find_phi_sequence copes with delta < h_b.
  void raise_delta(BoundedGlobalSpec& s) {
    if (s.phi_g->is_truth()) return;
    int hb = bounded_steps(s.phi_b);
    if (s.delta >= hb) return;
    s.phi_b = conj2(s.phi_b, Formula::always(s.phi_g, Interval{s.delta, hb, false}));
    s.delta = hb;
  }

  SpecList normalize(const FormulaPtr& f) {
    if (is_bounded(f)) return {{f, Formula::truth(), bounded_steps(f)}};
    switch (f->kind()) {
      case NodeKind::Pred:
        throw Error("unreachable");
      case NodeKind::Or: {
        SpecList out;
        for (const auto& c : f->children()) {
          SpecList part = normalize(c);
          out.insert(out.end(), part.begin(), part.end());
        }
        return out;
      }
      case NodeKind::And: {
        SpecList acc{{Formula::truth(), Formula::truth(), 0}};
        for (const auto& c : f->children()) acc = cross(acc, normalize(c));
        return acc;
      }
      case NodeKind::Eventually: {
        if (f->interval().unbounded)
          throw ModelError("unbounded eventually is not a safety formula");
        SpecList inner = normalize(f->children()[0]);
        SpecList out;
        for (int t = f->interval().lo; t <= f->interval().hi; ++t)
          for (const auto& s : inner) out.push_back(shift_spec(s, t));
        return out;
      }
      case NodeKind::Always: {
        const auto& child = f->children()[0];
        if (f->interval().unbounded) {
          if (is_bounded(child))
            return {{Formula::truth(), child, f->interval().lo}};
          // G[a,inf] G[d,inf] g collapses; anything else is the nested
          // unbounded-always fragment the Appendix excludes.
          SpecList inner = normalize(child);
          if (inner.size() == 1 && inner[0].phi_b->is_truth())
            return {{Formula::truth(), inner[0].phi_g,
                     f->interval().lo + inner[0].delta}};
          throw ModelError(
              "nested unbounded always is outside the normalizable fragment");
        }
        SpecList acc{{Formula::truth(), Formula::truth(), 0}};
        SpecList inner = normalize(child);
        for (int t = f->interval().lo; t <= f->interval().hi; ++t) {
          SpecList shifted;
          for (const auto& s : inner) shifted.push_back(shift_spec(s, t));
          acc = cross(acc, shifted);
        }
        return acc;
      }
      case NodeKind::Until: {
        if (f->interval().unbounded)
          throw ModelError("unbounded until is not a safety formula");
        // or over t of (G[0,t] lhs AND F_{t} rhs); lhs runs from now per the
        // until semantics.
        SpecList out;
        SpecList rhs = normalize(f->children()[1]);
        for (int t = f->interval().lo; t <= f->interval().hi; ++t) {
          SpecList guard =
              normalize(Formula::always(f->children()[0], Interval{0, t, false}));
          SpecList shifted;
          for (const auto& s : rhs) shifted.push_back(shift_spec(s, t));
          SpecList part = cross(guard, shifted);
          out.insert(out.end(), part.begin(), part.end());
        }
        return out;
      }
    }
    throw Error("unreachable");
  }

  SpecList cross(const SpecList& a, const SpecList& b) {
    SpecList out;
    out.reserve(a.size() * b.size());
    for (const auto& x : a)
      for (const auto& y : b) out.push_back(merge_and(x, y));
    return out;
  }

  const NormalizeOptions& opts_;
};

}  // namespace

std::vector<BoundedGlobalSpec> normalize_safety(const FormulaPtr& f,
                                                const NormalizeOptions& opts) {
  Horizon h = horizon(f);
  if (h.bounded()) {
    // Problem 2 degenerates to Problem 1: keep the whole formula bounded.
    return {{f, Formula::truth(), h.steps}};
  }
  return Normalizer(opts).run(f);
}

}  // namespace mstl::stl
