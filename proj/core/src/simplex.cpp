#include "mstl/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mstl::milp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Bounded-variable primal simplex over the equality system [A I] z = rhs.
// Columns 0..n-1 are structural, n..n+m-1 are slacks, and phase 1 may append
// artificial columns.  Columns are stored sparsely; the basis inverse is kept
// as an explicit dense matrix with product-form updates and periodic
// refactorization.  Fine at the few-thousand-row scale this project targets.
class Tableau {
 public:
  Tableau(const Mat& A, const std::vector<int>& sense, const Vec& rhs,
          const Vec& lb, const Vec& ub, const LpParams& p)
      : m_(static_cast<int>(A.rows())), n_(static_cast<int>(A.cols())), p_(p) {
    ncols_ = n_ + m_;
    cols_.resize(static_cast<std::size_t>(ncols_));
    for (int j = 0; j < n_; ++j)
      for (int i = 0; i < m_; ++i)
        if (A(i, j) != 0.0) cols_[static_cast<std::size_t>(j)].push_back({i, A(i, j)});
    lb_ = Vec::Zero(ncols_);
    ub_ = Vec::Zero(ncols_);
    lb_.head(n_) = lb;
    ub_.head(n_) = ub;
    rhs_ = rhs;
    for (int i = 0; i < m_; ++i) {
      cols_[static_cast<std::size_t>(n_ + i)].push_back({i, 1.0});
      switch (sense[static_cast<std::size_t>(i)]) {
        case -1:  // <=
          lb_[n_ + i] = 0.0;
          ub_[n_ + i] = kInf;
          break;
        case 1:  // >=
          lb_[n_ + i] = -kInf;
          ub_[n_ + i] = 0.0;
          break;
        default:  // ==
          lb_[n_ + i] = 0.0;
          ub_[n_ + i] = 0.0;
          break;
      }
    }
  }

  LpResult solve(const Vec& c_structural) {
    value_ = Vec::Zero(ncols_ + m_);
    at_upper_.assign(static_cast<std::size_t>(ncols_ + m_), false);
    for (int j = 0; j < n_; ++j) {
      if (!std::isfinite(lb_[j]) || !std::isfinite(ub_[j]))
        throw ModelError("lp_solve requires finite bounds on structural variables");
      // Nonbasic variables must rest on a bound; pick the one nearer zero.
      double v = std::abs(lb_[j]) <= std::abs(ub_[j]) ? lb_[j] : ub_[j];
      value_[j] = v;
      at_upper_[static_cast<std::size_t>(j)] = (v == ub_[j] && lb_[j] != ub_[j]);
    }

    // Row residuals decide slack values; out-of-range rows get an artificial.
    Vec act = Vec::Zero(m_);
    for (int j = 0; j < n_; ++j)
      if (value_[j] != 0.0)
        for (const auto& [i, aij] : cols_[static_cast<std::size_t>(j)])
          act[i] += aij * value_[j];
    basis_.resize(static_cast<std::size_t>(m_));
    in_basis_.assign(static_cast<std::size_t>(ncols_ + m_), false);
    int n_art = 0;
    Vec art_lb(m_), art_ub(m_);
    for (int i = 0; i < m_; ++i) {
      double resid = rhs_[i] - act[i];
      int sj = n_ + i;
      double clamped = std::clamp(resid, lb_[sj], ub_[sj]);
      if (std::abs(resid - clamped) <= p_.feas_tol) {
        value_[sj] = resid;
        basis_[static_cast<std::size_t>(i)] = sj;
        in_basis_[static_cast<std::size_t>(sj)] = true;
      } else {
        value_[sj] = clamped;
        at_upper_[static_cast<std::size_t>(sj)] =
            (clamped == ub_[sj] && lb_[sj] != ub_[sj]);
        int aj = ncols_ + n_art;
        double gap = resid - clamped;
        cols_.push_back({{i, gap > 0 ? 1.0 : -1.0}});
        art_lb[n_art] = 0.0;
        art_ub[n_art] = kInf;
        value_[aj] = std::abs(gap);
        basis_[static_cast<std::size_t>(i)] = aj;
        in_basis_[static_cast<std::size_t>(aj)] = true;
        ++n_art;
      }
    }
    total_cols_ = ncols_ + n_art;
    // splice artificial bounds into the vectors
    Vec lb2 = Vec::Zero(total_cols_), ub2 = Vec::Zero(total_cols_);
    lb2.head(ncols_) = lb_.head(ncols_);
    ub2.head(ncols_) = ub_.head(ncols_);
    for (int a = 0; a < n_art; ++a) {
      lb2[ncols_ + a] = art_lb[a];
      ub2[ncols_ + a] = art_ub[a];
    }
    lb_ = lb2;
    ub_ = ub2;

    LpResult res;
    if (n_art > 0) {
      Vec c1 = Vec::Zero(total_cols_);
      for (int j = ncols_; j < total_cols_; ++j) c1[j] = 1.0;
      LpStatus s1 = iterate(c1, /*phase1=*/true);
      double infeas = 0.0;
      for (int j = ncols_; j < total_cols_; ++j) infeas += value_[j];
      if (s1 == LpStatus::IterLimit) {
        res.status = LpStatus::IterLimit;
        res.iters = iters_;
        return res;
      }
      if (infeas > 1e3 * p_.feas_tol) {
        res.status = LpStatus::Infeasible;
        res.iters = iters_;
        return res;
      }
      for (int j = ncols_; j < total_cols_; ++j) {
        lb_[j] = 0.0;
        ub_[j] = 0.0;
        if (!in_basis_[static_cast<std::size_t>(j)]) value_[j] = 0.0;
      }
    }

    Vec c2 = Vec::Zero(total_cols_);
    c2.head(n_) = c_structural;
    LpStatus s2 = iterate(c2, /*phase1=*/false);
    res.status = s2;
    res.iters = iters_;
    res.x = value_.head(n_);
    res.obj = c_structural.dot(value_.head(n_));
    return res;
  }

 private:
  double sparse_dot(int j, const Vec& y) const {
    double acc = 0.0;
    for (const auto& [i, aij] : cols_[static_cast<std::size_t>(j)]) acc += aij * y[i];
    return acc;
  }

  void ftran(int j, Vec& out) const {
    out.setZero();
    for (const auto& [i, aij] : cols_[static_cast<std::size_t>(j)])
      out += aij * binv_.col(i);
  }

  void refactor() {
    Mat B = Mat::Zero(m_, m_);
    for (int i = 0; i < m_; ++i)
      for (const auto& [r, v] : cols_[static_cast<std::size_t>(basis_[static_cast<std::size_t>(i)])])
        B(r, i) = v;
    binv_ = B.partialPivLu().inverse();
    Vec act = Vec::Zero(m_);
    for (int j = 0; j < total_cols_; ++j)
      if (!in_basis_[static_cast<std::size_t>(j)] && value_[j] != 0.0)
        for (const auto& [i, aij] : cols_[static_cast<std::size_t>(j)])
          act[i] += aij * value_[j];
    Vec xb = binv_ * (rhs_ - act);
    for (int i = 0; i < m_; ++i) value_[basis_[static_cast<std::size_t>(i)]] = xb[i];
  }

  LpStatus iterate(const Vec& c, bool phase1) {
    refactor();
    long degen_run = 0;
    int since_refactor = 0;
    Vec col(m_);
    while (true) {
      if (++iters_ > p_.iter_limit) return LpStatus::IterLimit;
      if (++since_refactor >= 150) {
        refactor();
        since_refactor = 0;
      }
      // Duals and pricing.  Rotating partial Dantzig pricing; Bland's rule
      // (full lowest-index scan) once degeneracy persists.
      Vec cb(m_);
      for (int i = 0; i < m_; ++i) cb[i] = c[basis_[static_cast<std::size_t>(i)]];
      Vec y = binv_.transpose() * cb;
      bool bland = degen_run > p_.degenerate_limit;
      int enter = -1, dir = 0;
      double best = p_.feas_tol;
      const int window = 60;
      int found = 0;
      for (int scanned = 0; scanned < total_cols_; ++scanned) {
        int j = bland ? scanned : (price_start_ + scanned) % total_cols_;
        if (in_basis_[static_cast<std::size_t>(j)]) continue;
        if (lb_[j] == ub_[j]) continue;  // fixed
        double dj = c[j] - sparse_dot(j, y);
        int d = 0;
        if (!at_upper_[static_cast<std::size_t>(j)] && dj < -p_.feas_tol)
          d = +1;  // raise from lower bound
        else if (at_upper_[static_cast<std::size_t>(j)] && dj > p_.feas_tol)
          d = -1;  // lower from upper bound
        if (d == 0) continue;
        if (bland) {
          enter = j;
          dir = d;
          break;
        }
        if (std::abs(dj) > best) {
          best = std::abs(dj);
          enter = j;
          dir = d;
        }
        if (++found >= window) break;
      }
      if (enter < 0) return LpStatus::Optimal;
      price_start_ = enter + 1;

      ftran(enter, col);
      // Max step before the entering variable or a basic variable blocks.
      double limit = ub_[enter] - lb_[enter];  // bound-to-bound flip
      int leave = -1;
      double leave_target = 0.0;
      for (int i = 0; i < m_; ++i) {
        double rate = -dir * col[i];  // d(basic_i)/d(step)
        if (std::abs(rate) <= p_.pivot_tol) continue;
        int bj = basis_[static_cast<std::size_t>(i)];
        double room = rate > 0 ? ub_[bj] - value_[bj] : value_[bj] - lb_[bj];
        double step = room / std::abs(rate);
        if (step < limit - p_.pivot_tol ||
            (step < limit + p_.pivot_tol && leave >= 0 &&
             bj < basis_[static_cast<std::size_t>(leave)])) {
          limit = std::max(step, 0.0);
          leave = i;
          leave_target = rate > 0 ? ub_[bj] : lb_[bj];
        }
      }
      if (!std::isfinite(limit)) {
        return phase1 ? LpStatus::Infeasible : LpStatus::Unbounded;
      }
      degen_run = (limit <= p_.pivot_tol) ? degen_run + 1 : 0;

      value_[enter] += dir * limit;
      for (int i = 0; i < m_; ++i)
        value_[basis_[static_cast<std::size_t>(i)]] -= dir * limit * col[i];
      if (leave < 0) {
        at_upper_[static_cast<std::size_t>(enter)] = dir > 0;
        continue;  // bound flip, basis unchanged
      }
      int out = basis_[static_cast<std::size_t>(leave)];
      value_[out] = leave_target;
      at_upper_[static_cast<std::size_t>(out)] =
          (leave_target == ub_[out] && lb_[out] != ub_[out]);
      in_basis_[static_cast<std::size_t>(out)] = false;
      basis_[static_cast<std::size_t>(leave)] = enter;
      in_basis_[static_cast<std::size_t>(enter)] = true;
      at_upper_[static_cast<std::size_t>(enter)] = false;
      // Product-form update of the explicit inverse.
      double piv = col[leave];
      binv_.row(leave) /= piv;
      for (int i = 0; i < m_; ++i) {
        if (i == leave) continue;
        double f = col[i];
        if (f != 0.0) binv_.row(i) -= f * binv_.row(leave);
      }
    }
  }

  int m_, n_, ncols_, total_cols_ = 0;
  LpParams p_;
  std::vector<std::vector<std::pair<int, double>>> cols_;
  Mat binv_;
  Vec rhs_, lb_, ub_, value_;
  std::vector<int> basis_;
  std::vector<bool> in_basis_;
  std::vector<bool> at_upper_;
  long iters_ = 0;
  int price_start_ = 0;
};

}  // namespace

LpResult lp_solve(const Mat& A, const std::vector<int>& sense, const Vec& rhs,
                  const Vec& lb, const Vec& ub, const Vec& c, const LpParams& params) {
  if (A.rows() != rhs.size() || A.cols() != lb.size() || lb.size() != ub.size() ||
      c.size() != A.cols() || sense.size() != static_cast<std::size_t>(A.rows()))
    throw ModelError("lp_solve: dimension mismatch");
  for (Eigen::Index j = 0; j < lb.size(); ++j)
    if (lb[j] > ub[j] + params.feas_tol) return {LpStatus::Infeasible, Vec(), 0.0, 0};
  Tableau t(A, sense, rhs, lb, ub, params);
  return t.solve(c);
}

}  // namespace mstl::milp
