#pragma once

#include "mstl/common.hpp"

namespace mstl::milp {

enum class LpStatus { Optimal, Infeasible, Unbounded, IterLimit };

struct LpParams {
  double feas_tol = 1e-7;
  double pivot_tol = 1e-9;
  long iter_limit = 50000;
  // Dantzig pricing switches to Bland's rule after this many degenerate
  // pivots in a row.
  long degenerate_limit = 1000;
};

struct LpResult {
  LpStatus status = LpStatus::Infeasible;
  Vec x;       // structural variables only
  double obj = 0.0;
  long iters = 0;
};

/// Minimizes c^T x over rows A x (sense) rhs and box bounds l <= x <= u.
/// sense entries: -1 for <=, 0 for ==, +1 for >=.  Bounds may be infinite;
/// every model built by this project keeps structurals finite.
/// Dense bounded-variable primal simplex; suitable for desk-scale instances.
LpResult lp_solve(const Mat& A, const std::vector<int>& sense, const Vec& rhs,
                  const Vec& lb, const Vec& ub, const Vec& c,
                  const LpParams& params = {});

}  // namespace mstl::milp
