#pragma once

#include "mstl/mld.hpp"
#include "mstl/stl.hpp"

namespace mstl::systems {

/// Two-state switched positive system: the mode (one control bit) picks
/// between two Metzler continuous-time matrices discretized with sample time
/// 0.1; the additive disturbance is boxed by w* = (1.5, 1).
mld::MldSystem switched_2d();

/// Mode matrices and disturbance gains of switched_2d, exposed for tests.
struct Switched2dData {
  Mat phi1, phi2;   // e^{A tau}
  Mat bw1, bw2;     // int_0^tau e^{A s} ds
  Vec w_star;
};
Switched2dData switched_2d_data();

/// Predicates p1 = (x1<=1 & x2<=5), p2 = (x1<=5 & x2<=1) and the demo
/// formulas used throughout the examples and tests.
stl::PredicateTable switched_2d_predicates();

/// OR_{T=0..10} (F[0,T] p1 & F[{T}] p2)
stl::FormulaPtr switched_2d_reach_formula();

/// (p1 | p2) as a disjunction of predicate conjunctions (horizon 0).
stl::FormulaPtr switched_2d_stay_formula();

/// F[0,5] p1  AND  G[5,inf] (F[0,6] p1 & F[0,6] p2), as a BoundedGlobalSpec.
stl::BoundedGlobalSpec switched_2d_bounded_global();

/// Scalar contraction x+ = 0.5 x + w, w* = 0.25; invariant toy for tests.
mld::MldSystem scalar_toy();

}  // namespace mstl::systems
