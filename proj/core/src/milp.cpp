#include "mstl/milp.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <future>
#include <queue>
#include <set>

namespace mstl::milp {

int MilpModel::add_var(VarKind kind, double lb, double ub, std::string name) {
  Variable v;
  v.kind = kind;
  if (kind == VarKind::Binary || kind == VarKind::UnitInterval) {
    v.lb = 0.0;
    v.ub = 1.0;
  } else {
    v.lb = lb;
    v.ub = ub;
  }
  v.name = std::move(name);
  vars.push_back(std::move(v));
  return static_cast<int>(vars.size()) - 1;
}

void MilpModel::add_row(std::vector<RowEntry> terms, RowSense sense, double rhs,
                        std::string name) {
  Row r;
  r.terms = std::move(terms);
  r.sense = sense;
  r.rhs = rhs;
  r.name = std::move(name);
  rows.push_back(std::move(r));
}

int MilpModel::num_binary() const {
  int n = 0;
  for (const auto& v : vars)
    if (v.kind == VarKind::Binary) ++n;
  return n;
}

void MilpModel::validate() const {
  for (const auto& v : vars) {
    if (v.kind == VarKind::Binary || v.kind == VarKind::UnitInterval) {
      if (v.lb != 0.0 || v.ub != 1.0)
        throw ModelError("binary/unit variable must have bounds [0,1]: " + v.name);
    } else if (!std::isfinite(v.lb) || !std::isfinite(v.ub)) {
      throw ModelError("continuous variable must be box-bounded: " + v.name);
    }
    if (v.lb > v.ub) throw ModelError("empty bound interval: " + v.name);
  }
  auto check_terms = [this](const std::vector<RowEntry>& terms, const std::string& where) {
    for (const auto& t : terms)
      if (t.var < 0 || t.var >= num_vars())
        throw ModelError("reference to unknown variable in " + where);
  };
  for (const auto& r : rows) check_terms(r.terms, "row " + r.name);
  check_terms(objective, "objective");
}

std::string to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Optimal: return "Optimal";
    case SolveStatus::Feasible: return "Feasible";
    case SolveStatus::Infeasible: return "Infeasible";
    case SolveStatus::Unbounded: return "Unbounded";
    case SolveStatus::IterLimit: return "IterLimit";
  }
  return "?";
}

std::vector<Violation> verify(const MilpModel& model, const std::vector<double>& x,
                              double feas_tol) {
  std::vector<Violation> out;
  if (x.size() != model.vars.size()) {
    out.push_back({"assignment size mismatch", -1,
                   static_cast<double>(x.size()) - model.num_vars()});
    return out;
  }
  for (int j = 0; j < model.num_vars(); ++j) {
    const auto& v = model.vars[static_cast<std::size_t>(j)];
    double val = x[static_cast<std::size_t>(j)];
    if (val < v.lb - feas_tol || val > v.ub + feas_tol)
      out.push_back({"bound violated on " + v.name, j,
                     std::max(v.lb - val, val - v.ub)});
    if (v.kind == VarKind::Binary && std::abs(val - std::round(val)) > feas_tol)
      out.push_back({"binary not integral: " + v.name, j,
                     std::abs(val - std::round(val))});
  }
  for (int i = 0; i < model.num_rows(); ++i) {
    const auto& r = model.rows[static_cast<std::size_t>(i)];
    double act = 0.0;
    for (const auto& t : r.terms) act += t.coef * x[static_cast<std::size_t>(t.var)];
    double slack = 0.0;
    switch (r.sense) {
      case RowSense::LE: slack = act - r.rhs; break;
      case RowSense::GE: slack = r.rhs - act; break;
      case RowSense::EQ: slack = std::abs(act - r.rhs); break;
    }
    if (slack > feas_tol)
      out.push_back({"row violated: " + (r.name.empty() ? std::to_string(i) : r.name),
                     i, slack});
  }
  return out;
}

namespace {

struct DenseLp {
  Mat A;
  std::vector<int> sense;
  Vec rhs, lb, ub, c;
};

DenseLp densify(const MilpModel& model) {
  DenseLp lp;
  int m = model.num_rows(), n = model.num_vars();
  lp.A = Mat::Zero(m, n);
  lp.rhs = Vec::Zero(m);
  lp.sense.resize(static_cast<std::size_t>(m));
  for (int i = 0; i < m; ++i) {
    const auto& r = model.rows[static_cast<std::size_t>(i)];
    for (const auto& t : r.terms) lp.A(i, t.var) += t.coef;
    lp.rhs[i] = r.rhs;
    lp.sense[static_cast<std::size_t>(i)] =
        r.sense == RowSense::LE ? -1 : (r.sense == RowSense::GE ? 1 : 0);
  }
  lp.lb = Vec::Zero(n);
  lp.ub = Vec::Zero(n);
  for (int j = 0; j < n; ++j) {
    lp.lb[j] = model.vars[static_cast<std::size_t>(j)].lb;
    lp.ub[j] = model.vars[static_cast<std::size_t>(j)].ub;
  }
  lp.c = Vec::Zero(n);
  for (const auto& t : model.objective) lp.c[t.var] += t.coef;
  if (model.obj_sense == ObjSense::Maximize) lp.c = -lp.c;
  return lp;
}

struct Node {
  long id = 0;
  double bound = 0.0;  // minimization bound from parent relaxation
  // Branching decisions: var -> fixed bounds.
  std::vector<std::pair<int, std::pair<double, double>>> fixes;
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;  // min-heap on bound
    return a.id > b.id;
  }
};

struct NodeResult {
  LpResult lp;
  Node node;
};

}  // namespace

MilpSolution solve(const MilpModel& model, const SolveParams& params) {
  model.validate();
  auto t0 = std::chrono::steady_clock::now();
  auto elapsed = [&t0]() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  DenseLp base = densify(model);
  const int n = model.num_vars();
  std::vector<int> branchable;
  for (int j = 0; j < n; ++j)
    if (model.vars[static_cast<std::size_t>(j)].kind == VarKind::Binary)
      branchable.push_back(j);

  LpParams lp_params;
  lp_params.feas_tol = std::min(params.feas_tol, 1e-7);

  MilpSolution best;
  best.status = SolveStatus::Infeasible;
  bool have_incumbent = false;
  double incumbent = std::numeric_limits<double>::infinity();

  auto try_incumbent = [&](const std::vector<double>& x) {
    if (verify(model, x, params.feas_tol).empty() == false) return;
    double obj = 0.0;
    for (const auto& t : model.objective) obj += t.coef * x[static_cast<std::size_t>(t.var)];
    double obj_min = model.obj_sense == ObjSense::Maximize ? -obj : obj;
    if (!have_incumbent || obj_min < incumbent - 1e-12) {
      incumbent = obj_min;
      have_incumbent = true;
      best.x = x;
      best.objective = obj;
    }
  };

  auto solve_node = [&](const Node& nd) {
    Vec lb = base.lb, ub = base.ub;
    for (const auto& [var, b] : nd.fixes) {
      lb[var] = std::max(lb[var], b.first);
      ub[var] = std::min(ub[var], b.second);
    }
    return lp_solve(base.A, base.sense, base.rhs, lb, ub, base.c, lp_params);
  };

  auto repair_from = [&](const Vec& x) {
    // Round binaries, keep the continuous part, and let the model's own
    // reconstruction (when provided) rebuild auxiliaries.
    std::vector<double> cand(x.data(), x.data() + x.size());
    for (int j : branchable)
      cand[static_cast<std::size_t>(j)] = std::round(cand[static_cast<std::size_t>(j)]);
    if (model.repair) {
      if (auto fixed = model.repair(cand)) try_incumbent(*fixed);
    } else {
      try_incumbent(cand);
    }
  };

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long next_id = 0;
  open.push(Node{next_id++, -std::numeric_limits<double>::infinity(), {}});
  long nodes = 0;
  bool limit_hit = false;
  bool unresolved = false;  // some node relaxation was left unsolved
  bool saw_unbounded = false;

  const int batch = std::max(1, params.threads);
  while (!open.empty()) {
    if (nodes >= params.node_limit || elapsed() > params.time_limit_seconds) {
      limit_hit = true;
      break;
    }
    // Pop up to `batch` best nodes and relax them (possibly in parallel);
    // results are merged in node-id order so the tree stays deterministic.
    std::vector<Node> popped;
    while (!open.empty() && static_cast<int>(popped.size()) < batch) {
      Node nd = open.top();
      open.pop();
      if (have_incumbent && nd.bound >= incumbent - params.gap_tol) continue;  // prune
      popped.push_back(std::move(nd));
    }
    if (popped.empty()) continue;
    std::vector<NodeResult> results(popped.size());
    if (popped.size() == 1) {
      results[0] = {solve_node(popped[0]), popped[0]};
    } else {
      std::vector<std::future<LpResult>> futs;
      futs.reserve(popped.size());
      for (const auto& nd : popped)
        futs.push_back(std::async(std::launch::async, [&, nd]() { return solve_node(nd); }));
      for (std::size_t i = 0; i < popped.size(); ++i)
        results[i] = {futs[i].get(), popped[i]};
    }
    std::sort(results.begin(), results.end(),
              [](const NodeResult& a, const NodeResult& b) { return a.node.id < b.node.id; });

    for (auto& res : results) {
      ++nodes;
      const LpResult& rel = res.lp;
      if (rel.status == LpStatus::Infeasible) continue;
      if (rel.status == LpStatus::IterLimit) {
        unresolved = true;
        continue;
      }
      if (rel.status == LpStatus::Unbounded) {
        saw_unbounded = true;
        continue;
      }
      double bound = rel.obj;
      if (have_incumbent && bound >= incumbent - params.gap_tol) continue;

      // Most-fractional within the highest fractional priority class
      // (controls first), ties by lowest variable id.
      int frac_var = -1;
      {
        int best_prio = std::numeric_limits<int>::min();
        double bestd = 2.0;
        for (int j : branchable) {
          double v = rel.x[j];
          double f = std::abs(v - std::round(v));
          if (f <= params.int_tol) continue;
          int prio = model.vars[static_cast<std::size_t>(j)].branch_priority;
          double d = std::abs(v - std::floor(v) - 0.5);
          if (prio > best_prio || (prio == best_prio && d < bestd - 1e-15)) {
            best_prio = prio;
            bestd = d;
            frac_var = j;
          }
        }
      }

      if (frac_var < 0) {
        std::vector<double> x(rel.x.data(), rel.x.data() + rel.x.size());
        try_incumbent(x);
        continue;
      }

      repair_from(rel.x);
      if (have_incumbent && bound >= incumbent - params.gap_tol) continue;

      Node down{next_id++, bound, res.node.fixes};
      down.fixes.emplace_back(frac_var, std::make_pair(0.0, 0.0));
      Node up{next_id++, bound, res.node.fixes};
      up.fixes.emplace_back(frac_var, std::make_pair(1.0, 1.0));
      open.push(std::move(down));
      open.push(std::move(up));
    }
  }

  best.nodes = nodes;
  best.wall_seconds = elapsed();
  // Remaining open nodes bound the optimum from below.
  double floor_bound = open.empty() ? std::numeric_limits<double>::infinity()
                                    : open.top().bound;
  if (have_incumbent) {
    bool proven = !unresolved && floor_bound >= incumbent - params.gap_tol;
    // Node/time limits report IterLimit but keep the incumbent attached.
    best.status = proven ? SolveStatus::Optimal
                         : (limit_hit ? SolveStatus::IterLimit : SolveStatus::Feasible);
  } else if (limit_hit || unresolved) {
    best.status = SolveStatus::IterLimit;
  } else if (saw_unbounded) {
    best.status = SolveStatus::Unbounded;
  } else {
    best.status = SolveStatus::Infeasible;
  }
  return best;
}

}  // namespace mstl::milp
