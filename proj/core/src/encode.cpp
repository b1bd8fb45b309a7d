#include "mstl/encode.hpp"

#include <algorithm>
#include <cmath>

namespace mstl::encode {

using stl::Formula;
using stl::FormulaPtr;
using stl::NodeKind;

namespace {

void collect_predicates(const FormulaPtr& f, std::vector<const stl::Predicate*>& out) {
  if (f->kind() == NodeKind::Pred) {
    out.push_back(&f->predicate());
    return;
  }
  for (const auto& c : f->children()) collect_predicates(c, out);
}

double rho_upper_cap(const FormulaPtr& f) {
  std::vector<const stl::Predicate*> preds;
  collect_predicates(f, preds);
  double cap = 1.0;
  for (const auto* p : preds) cap = std::max(cap, p->b);
  return cap + 1.0;
}

double rho_lower_cap(const FormulaPtr& f, const Vec& K) {
  std::vector<const stl::Predicate*> preds;
  collect_predicates(f, preds);
  double lo = -1.0;
  for (const auto* p : preds) lo = std::min(lo, p->b - p->a.dot(K));
  return lo - 1.0;
}

bool predicate_conjunction_only(const FormulaPtr& f) {
  if (f->kind() == NodeKind::Pred) return true;
  if (f->kind() != NodeKind::And) return false;
  for (const auto& c : f->children())
    if (!predicate_conjunction_only(c)) return false;
  return true;
}

// Relaxation terms carried into conditionally pinned rows: the row becomes
// lhs + sum(extra_lhs) <= rhs + extra_rhs.
struct PinSlack {
  std::vector<milp::RowEntry> extra_lhs;
  double extra_rhs = 0.0;
};

class Encoder {
 public:
  Encoder(EncodingContext& ctx) : ctx_(ctx), built_(*ctx.built) {}

  int formula_z(const FormulaPtr& f, int t) {
    auto key = std::make_pair(f.get(), t);
    auto it = ctx_.memo.find(key);
    if (it != ctx_.memo.end()) return it->second;
    int z = lower_z(f, t);
    ctx_.memo.emplace(key, z);
    built_.bindings.push_back({ZBinding::Kind::Node, f.get(), t, 0, z});
    return z;
  }

  void pin_true(const FormulaPtr& f, int t, const PinSlack& slack) {
    switch (f->kind()) {
      case NodeKind::Pred:
        pinned_pred_row(f->predicate(), t, slack);
        return;
      case NodeKind::And:
        for (const auto& c : f->children()) pin_true(c, t, slack);
        return;
      case NodeKind::Always: {
        check_window(f, t);
        for (int k = f->interval().lo; k <= f->interval().hi; ++k)
          pin_true(f->children()[0], t + k, slack);
        return;
      }
      case NodeKind::Or: {
        if (ctx_.opts.mode_a && f->children().size() == 2 &&
            predicate_conjunction_only(f->children()[0]) &&
            predicate_conjunction_only(f->children()[1])) {
          int beta = built_.model.add_binary(ctx_.tag("or.branch", t));
          built_.bindings.push_back({ZBinding::Kind::Branch, f.get(), t, 0, beta});
          double m = branch_slack_m(f);
          PinSlack first = slack;   // active when beta = 1
          first.extra_lhs.push_back({beta, m});
          first.extra_rhs += m;
          PinSlack second = slack;  // active when beta = 0
          second.extra_lhs.push_back({beta, -m});
          pin_true(f->children()[0], t, first);
          pin_true(f->children()[1], t, second);
          return;
        }
        std::vector<milp::RowEntry> terms;
        for (const auto& c : f->children()) terms.push_back({formula_z(c, t), -1.0});
        pinned_sum_row(std::move(terms), t, slack, "or.pin");
        return;
      }
      case NodeKind::Eventually: {
        check_window(f, t);
        std::vector<milp::RowEntry> terms;
        for (int k = f->interval().lo; k <= f->interval().hi; ++k)
          terms.push_back({formula_z(f->children()[0], t + k), -1.0});
        pinned_sum_row(std::move(terms), t, slack, "ev.pin");
        return;
      }
      case NodeKind::Until: {
        check_window(f, t);
        std::vector<milp::RowEntry> terms;
        for (int k = f->interval().lo; k <= f->interval().hi; ++k)
          terms.push_back({until_witness(f, t, t + k), -1.0});
        pinned_sum_row(std::move(terms), t, slack, "until.pin");
        return;
      }
    }
  }

 private:
  // z-mode lowering of one node.
  int lower_z(const FormulaPtr& f, int t) {
    switch (f->kind()) {
      case NodeKind::Pred:
        return encode_predicate(ctx_, f->predicate(), t);
      case NodeKind::And: {
        int z = built_.model.add_unit(ctx_.tag("z.and", t));
        for (const auto& c : f->children())
          built_.model.add_row({{z, 1.0}, {formula_z(c, t), -1.0}}, milp::RowSense::LE,
                               0.0, ctx_.tag("and", t));
        return z;
      }
      case NodeKind::Or: {
        int z = built_.model.add_unit(ctx_.tag("z.or", t));
        std::vector<milp::RowEntry> terms{{z, 1.0}};
        for (const auto& c : f->children()) terms.push_back({formula_z(c, t), -1.0});
        built_.model.add_row(std::move(terms), milp::RowSense::LE, 0.0,
                             ctx_.tag("or", t));
        return z;
      }
      case NodeKind::Always: {
        check_window(f, t);
        int z = built_.model.add_unit(ctx_.tag("z.G", t));
        for (int k = f->interval().lo; k <= f->interval().hi; ++k)
          built_.model.add_row({{z, 1.0}, {formula_z(f->children()[0], t + k), -1.0}},
                               milp::RowSense::LE, 0.0, ctx_.tag("G", t));
        return z;
      }
      case NodeKind::Eventually: {
        check_window(f, t);
        int z = built_.model.add_unit(ctx_.tag("z.F", t));
        std::vector<milp::RowEntry> terms{{z, 1.0}};
        for (int k = f->interval().lo; k <= f->interval().hi; ++k)
          terms.push_back({formula_z(f->children()[0], t + k), -1.0});
        built_.model.add_row(std::move(terms), milp::RowSense::LE, 0.0,
                             ctx_.tag("F", t));
        return z;
      }
      case NodeKind::Until: {
        check_window(f, t);
        int z = built_.model.add_unit(ctx_.tag("z.U", t));
        std::vector<milp::RowEntry> terms{{z, 1.0}};
        for (int k = f->interval().lo; k <= f->interval().hi; ++k)
          terms.push_back({until_witness(f, t, t + k), -1.0});
        built_.model.add_row(std::move(terms), milp::RowSense::LE, 0.0,
                             ctx_.tag("U", t));
        return z;
      }
    }
    throw Error("unreachable");
  }

  // w(t') for psi1 U psi2 at t: psi2 holds at t' and psi1 from t through t'.
  int until_witness(const FormulaPtr& f, int t, int tp) {
    auto key = std::make_pair(f.get(), (t << 16) ^ tp ^ 0x40000000);
    auto it = ctx_.memo.find(key);
    if (it != ctx_.memo.end()) return it->second;
    int w = built_.model.add_unit(ctx_.tag("z.Uw", tp));
    built_.bindings.push_back({ZBinding::Kind::UntilWitness, f.get(), t, tp, w});
    built_.model.add_row({{w, 1.0}, {formula_z(f->children()[1], tp), -1.0}},
                         milp::RowSense::LE, 0.0, ctx_.tag("Uw", tp));
    for (int ts = t; ts <= tp; ++ts)
      built_.model.add_row({{w, 1.0}, {formula_z(f->children()[0], ts), -1.0}},
                           milp::RowSense::LE, 0.0, ctx_.tag("Uw", tp));
    ctx_.memo.emplace(key, w);
    return w;
  }

  void pinned_pred_row(const stl::Predicate& p, int t, const PinSlack& slack) {
    std::vector<milp::RowEntry> terms;
    for (int i = 0; i < built_.sys->n; ++i)
      if (p.a[i] != 0.0) terms.push_back({ctx_.state_var(t, i), p.a[i]});
    terms.push_back({built_.rho, 1.0});
    for (const auto& e : slack.extra_lhs) terms.push_back(e);
    built_.model.add_row(std::move(terms), milp::RowSense::LE, p.b + slack.extra_rhs,
                         ctx_.tag("pin." + p.name, t));
  }

  // 1 <= sum(children z) (relaxed by the pin slack when conditional).
  void pinned_sum_row(std::vector<milp::RowEntry> neg_terms, int t, const PinSlack& slack,
                      const char* what) {
    for (const auto& e : slack.extra_lhs) neg_terms.push_back(e);
    built_.model.add_row(std::move(neg_terms), milp::RowSense::LE,
                         -1.0 + slack.extra_rhs, ctx_.tag(what, t));
  }

  double branch_slack_m(const FormulaPtr& f) {
    std::vector<const stl::Predicate*> preds;
    collect_predicates(f, preds);
    double m = 1.0;
    for (const auto* p : preds)
      m = std::max(m, big_m_for(*p, built_.sys->K, ctx_.rho_cap));
    return m;
  }

  void check_window(const FormulaPtr& f, int t) {
    stl::Horizon h = stl::horizon(f);
    if (h.unbounded) throw ModelError("cannot encode an unbounded formula");
    if (t + h.steps > built_.window)
      throw ModelError("encoding window too short for the formula horizon");
  }

  EncodingContext& ctx_;
  BuiltModel& built_;
};

}  // namespace

double big_m_for(const stl::Predicate& p, const Vec& K, double rho_cap) {
  return std::max(p.a.dot(K), p.b) + std::max(rho_cap, 0.0);
}

int EncodingContext::state_var(int k, int i) const {
  return built->x[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
}

std::string EncodingContext::tag(const std::string& base, int t) const {
  if (!opts.origin_tags) return "";
  return base + ".t" + std::to_string(t);
}

int encode_predicate(EncodingContext& ctx, const stl::Predicate& p, int k) {
  auto& built = *ctx.built;
  int z = built.model.add_binary(
      ctx.tag("z." + (p.name.empty() ? std::string("pred") : p.name), k));
  double m = big_m_for(p, built.sys->K, ctx.rho_cap);
  std::vector<milp::RowEntry> up;
  std::vector<milp::RowEntry> dn;
  for (int i = 0; i < built.sys->n; ++i) {
    if (p.a[i] == 0.0) continue;
    up.push_back({ctx.state_var(k, i), p.a[i]});
    dn.push_back({ctx.state_var(k, i), p.a[i]});
  }
  // a'x - M (1 - z) + rho <= b
  up.push_back({built.rho, 1.0});
  up.push_back({z, m});
  built.model.add_row(std::move(up), milp::RowSense::LE, p.b + m,
                      ctx.tag("predU." + p.name, k));
  // a'x + M z + rho >= b
  dn.push_back({built.rho, 1.0});
  dn.push_back({z, m});
  built.model.add_row(std::move(dn), milp::RowSense::GE, p.b,
                      ctx.tag("predL." + p.name, k));
  return z;
}

int encode_formula(EncodingContext& ctx, const stl::FormulaPtr& f, int t) {
  Encoder enc(ctx);
  return enc.formula_z(f, t);
}

namespace {

void emit_dynamics(BuiltModel& built, int k) {
  const auto& sys = *built.sys;
  auto& model = built.model;
  auto x_at = [&](int kk, int i) {
    return built.x[static_cast<std::size_t>(kk)][static_cast<std::size_t>(i)];
  };
  auto u_at = [&](int j) {
    return j < sys.m_r
               ? built.u_real[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)]
               : built.u_bin[static_cast<std::size_t>(k)][static_cast<std::size_t>(j - sys.m_r)];
  };
  auto w_at = [&](int j) {
    return built.w[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
  };
  auto d_at = [&](int j) {
    return built.dvar[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
  };
  auto r_at = [&](int j) {
    return built.rvar[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)];
  };

  for (int i = 0; i < sys.n; ++i) {
    std::vector<milp::RowEntry> terms{{x_at(k + 1, i), 1.0}};
    for (int j = 0; j < sys.n; ++j)
      if (sys.A(i, j) != 0.0) terms.push_back({x_at(k, j), -sys.A(i, j)});
    for (int j = 0; j < sys.m_r + sys.m_b; ++j)
      if (sys.B_u(i, j) != 0.0) terms.push_back({u_at(j), -sys.B_u(i, j)});
    for (int j = 0; j < sys.q_r + sys.q_b; ++j)
      if (sys.B_w(i, j) != 0.0) terms.push_back({w_at(j), -sys.B_w(i, j)});
    for (int j = 0; j < sys.n_delta; ++j)
      if (sys.D_delta(i, j) != 0.0) terms.push_back({d_at(j), -sys.D_delta(i, j)});
    for (int j = 0; j < sys.n_r; ++j)
      if (sys.D_r(i, j) != 0.0) terms.push_back({r_at(j), -sys.D_r(i, j)});
    model.add_row(std::move(terms), milp::RowSense::EQ, 0.0,
                  "dyn" + std::to_string(i) + ".k" + std::to_string(k));
  }
  for (int row = 0; row < static_cast<int>(sys.e.size()); ++row) {
    std::vector<milp::RowEntry> terms;
    for (int j = 0; j < sys.n_delta; ++j)
      if (sys.E_delta(row, j) != 0.0) terms.push_back({d_at(j), sys.E_delta(row, j)});
    for (int j = 0; j < sys.n_r; ++j)
      if (sys.E_r(row, j) != 0.0) terms.push_back({r_at(j), sys.E_r(row, j)});
    for (int j = 0; j < sys.n; ++j)
      if (sys.E_x(row, j) != 0.0) terms.push_back({x_at(k, j), -sys.E_x(row, j)});
    for (int j = 0; j < sys.m_r + sys.m_b; ++j)
      if (sys.E_u(row, j) != 0.0) terms.push_back({u_at(j), -sys.E_u(row, j)});
    for (int j = 0; j < sys.q_r + sys.q_b; ++j)
      if (sys.E_w(row, j) != 0.0) terms.push_back({w_at(j), -sys.E_w(row, j)});
    model.add_row(std::move(terms), milp::RowSense::LE, sys.e[row],
                  "mld" + std::to_string(row) + ".k" + std::to_string(k));
  }
  for (std::size_t ci = 0; ci < sys.u_couplings.size(); ++ci) {
    const auto& c = sys.u_couplings[ci];
    std::vector<milp::RowEntry> terms;
    for (int j = 0; j < sys.m_r; ++j)
      if (c.a_real[j] != 0.0) terms.push_back({u_at(j), c.a_real[j]});
    for (int j = 0; j < sys.m_b; ++j)
      if (c.a_bin[j] != 0.0) terms.push_back({u_at(sys.m_r + j), c.a_bin[j]});
    model.add_row(std::move(terms), milp::RowSense::LE, c.b,
                  "ucpl" + std::to_string(ci) + ".k" + std::to_string(k));
  }
}

}  // namespace

BuiltModel build_bounded_problem(const mld::MldSystem& sys, const stl::FormulaPtr& f,
                                 const BuildOptions& opts) {
  sys.validate();
  stl::Horizon h = stl::horizon(f);
  if (h.unbounded) throw ModelError("build_bounded_problem needs a bounded formula");
  int window = opts.window >= 0 ? opts.window : h.steps;
  if (window < h.steps)
    throw ModelError("window shorter than the formula horizon");
  if (opts.x0 && (opts.x0->size() != sys.n || !leq(*opts.x0, sys.K, 1e-9) ||
                  !geq_zero(*opts.x0, 1e-9)))
    throw ModelError("fixed x0 outside [0, K]");
  int dyn_start = opts.dyn_start;
  if (!opts.fixed_prefix.empty()) {
    if (opts.dyn_start != 0)
      throw ModelError("fixed_prefix and dyn_start cannot both be set");
    dyn_start = static_cast<int>(opts.fixed_prefix.size()) - 1;
    if (dyn_start > window) throw ModelError("fixed prefix longer than the window");
  }

  BuiltModel built;
  built.sys = &sys;
  built.formula = f;
  built.window = window;
  auto& model = built.model;

  for (int k = 0; k <= window; ++k) {
    std::vector<int> xs;
    for (int i = 0; i < sys.n; ++i) {
      double lo = 0.0, hi = sys.K[i];
      if (k == 0 && opts.x0) lo = hi = (*opts.x0)[i];
      if (k < static_cast<int>(opts.fixed_prefix.size())) {
        // History values may sit outside [0,K] only through rounding noise.
        lo = hi = opts.fixed_prefix[static_cast<std::size_t>(k)][i];
      }
      xs.push_back(model.add_continuous(lo, hi, "x" + std::to_string(k) + "_" +
                                                    std::to_string(i)));
    }
    built.x.push_back(std::move(xs));
  }
  Vec wstack(sys.q_r + sys.q_b);
  wstack.head(sys.q_r) = sys.w_star_real;
  for (int i = 0; i < sys.q_b; ++i)
    wstack[sys.q_r + i] = sys.w_star_bin[static_cast<std::size_t>(i)];
  for (int k = 0; k < window; ++k) {
    std::vector<int> ur, ub, ws, ds, rs;
    if (k >= dyn_start) {
      for (int j = 0; j < sys.m_r; ++j)
        ur.push_back(model.add_continuous(sys.u_real_lo[j], sys.u_real_hi[j],
                                          "u" + std::to_string(k) + "_" + std::to_string(j)));
      for (int j = 0; j < sys.m_b; ++j) {
        int id = model.add_binary("ub" + std::to_string(k) + "_" + std::to_string(j));
        model.vars[static_cast<std::size_t>(id)].branch_priority = 2;
        ub.push_back(id);
      }
      for (int j = 0; j < sys.q_r + sys.q_b; ++j)
        // Disturbance pinned at its maximal element (the synthesis system is f*).
        ws.push_back(model.add_continuous(wstack[j], wstack[j],
                                          "w" + std::to_string(k) + "_" + std::to_string(j)));
      for (int j = 0; j < sys.n_delta; ++j) {
        int id = model.add_binary("d" + std::to_string(k) + "_" + std::to_string(j));
        model.vars[static_cast<std::size_t>(id)].branch_priority = 1;
        ds.push_back(id);
      }
      for (int j = 0; j < sys.n_r; ++j)
        rs.push_back(model.add_continuous(sys.r_lo[j], sys.r_hi[j],
                                          "r" + std::to_string(k) + "_" + std::to_string(j)));
    }
    built.u_real.push_back(std::move(ur));
    built.u_bin.push_back(std::move(ub));
    built.w.push_back(std::move(ws));
    built.dvar.push_back(std::move(ds));
    built.rvar.push_back(std::move(rs));
  }

  double rho_hi = rho_upper_cap(f);
  double rho_lo = opts.objective.kind == ObjectiveKind::MaxRho
                      ? rho_lower_cap(f, sys.K)
                      : 0.0;
  built.rho = model.add_continuous(rho_lo, rho_hi, "rho");

  for (int k = dyn_start; k < window; ++k) emit_dynamics(built, k);

  built.dyn_start = dyn_start;
  built.objective_kind = opts.objective.kind;
  EncodingContext ctx;
  ctx.built = &built;
  ctx.opts = opts.enc;
  ctx.rho_cap = rho_hi;
  Encoder enc_impl(ctx);
  if (opts.enc.pin_root) {
    // rho rides every pinned predicate row, so pinning stays exact for
    // max-rho objectives as well.
    enc_impl.pin_true(f, 0, {});
  } else {
    built.root_z = encode_formula(ctx, f, 0);
    model.add_row({{built.root_z, 1.0}}, milp::RowSense::GE, 1.0, "root");
  }

  switch (opts.objective.kind) {
    case ObjectiveKind::Feasibility:
      model.set_objective(milp::ObjSense::Minimize, {});
      break;
    case ObjectiveKind::MaxRho:
      model.set_objective(milp::ObjSense::Maximize, {{built.rho, 1.0}});
      break;
    case ObjectiveKind::MaxX0Corner: {
      int t = model.add_continuous(0.0, sys.K.maxCoeff(), "x0corner");
      built.obj_aux = t;
      for (int i = 0; i < sys.n; ++i)
        model.add_row({{t, 1.0}, {built.x[0][static_cast<std::size_t>(i)], -1.0}},
                      milp::RowSense::LE, 0.0, "corner" + std::to_string(i));
      model.set_objective(milp::ObjSense::Maximize, {{t, 1.0}});
      break;
    }
    case ObjectiveKind::MaxX0L1: {
      std::vector<milp::RowEntry> obj;
      for (int i = 0; i < sys.n; ++i)
        obj.push_back({built.x[0][static_cast<std::size_t>(i)], 1.0});
      model.set_objective(milp::ObjSense::Maximize, std::move(obj));
      break;
    }
    case ObjectiveKind::CustomLinear: {
      std::vector<milp::RowEntry> obj;
      for (int i = 0; i < sys.n; ++i)
        if (opts.objective.custom_x0[i] != 0.0)
          obj.push_back({built.x[0][static_cast<std::size_t>(i)],
                         opts.objective.custom_x0[i]});
      model.set_objective(milp::ObjSense::Maximize, std::move(obj));
      break;
    }
  }
  return built;
}

stl::Signal BuiltModel::decode_state(const std::vector<double>& sol) const {
  stl::Signal sig;
  sig.start_time = 0;
  for (const auto& xs : x) {
    Vec v(static_cast<Eigen::Index>(xs.size()));
    for (std::size_t i = 0; i < xs.size(); ++i)
      v[static_cast<Eigen::Index>(i)] = sol[static_cast<std::size_t>(xs[i])];
    sig.samples.push_back(std::move(v));
  }
  return sig;
}

std::vector<mld::ControlInput> BuiltModel::decode_controls(
    const std::vector<double>& sol) const {
  // Controls exist for the dynamic steps only; entry j drives step
  // dyn_start + j.
  std::vector<mld::ControlInput> out;
  for (std::size_t k = static_cast<std::size_t>(dyn_start); k < u_real.size(); ++k) {
    mld::ControlInput u;
    u.real = Vec(static_cast<Eigen::Index>(u_real[k].size()));
    for (std::size_t j = 0; j < u_real[k].size(); ++j)
      u.real[static_cast<Eigen::Index>(j)] = sol[static_cast<std::size_t>(u_real[k][j])];
    for (std::size_t j = 0; j < u_bin[k].size(); ++j)
      u.bin.push_back(sol[static_cast<std::size_t>(u_bin[k][j])] > 0.5 ? 1 : 0);
    out.push_back(std::move(u));
  }
  return out;
}

double BuiltModel::decode_rho(const std::vector<double>& sol) const {
  return rho >= 0 ? sol[static_cast<std::size_t>(rho)] : 0.0;
}

void BuiltModel::add_wrap_rows(int from, int to, int len) {
  for (int k = 0; k < len; ++k)
    for (std::size_t i = 0; i < x[0].size(); ++i)
      model.add_row({{x[static_cast<std::size_t>(to + k)][i], 1.0},
                     {x[static_cast<std::size_t>(from + k)][i], -1.0}},
                    milp::RowSense::LE, 0.0,
                    "wrap" + std::to_string(k) + "_" + std::to_string(i));
}

namespace {

double node_rho(const stl::Signal& sig, const stl::Formula* node, int t) {
  // Borrow a non-owning view; eval only reads and the root keeps it alive.
  stl::FormulaPtr view(node, [](const stl::Formula*) {});
  return stl::eval_rho(sig, view, t);
}

}  // namespace

void BuiltModel::install_repair() {
  if (!sys->evaluator) return;
  if (sys->n_delta + sys->n_r > 0 && !sys->aux_evaluator) return;
  const BuiltModel* self = this;
  model.repair = [self](const std::vector<double>& cand)
      -> std::optional<std::vector<double>> {
    const auto& sys = *self->sys;
    const auto& vars = self->model.vars;
    const double tie = 1e-9;
    mld::Disturbance wstar = sys.maximal_disturbance();

    std::vector<mld::ControlInput> us;  // us[k - dyn_start] drives step k
    for (std::size_t k = static_cast<std::size_t>(self->dyn_start);
         k < self->u_real.size(); ++k) {
      mld::ControlInput u;
      u.real = Vec(sys.m_r);
      for (int j = 0; j < sys.m_r; ++j) {
        const auto& v = vars[static_cast<std::size_t>(self->u_real[k][static_cast<std::size_t>(j)])];
        u.real[j] = std::clamp(
            cand[static_cast<std::size_t>(self->u_real[k][static_cast<std::size_t>(j)])],
            v.lb, v.ub);
      }
      for (int j = 0; j < sys.m_b; ++j)
        u.bin.push_back(
            cand[static_cast<std::size_t>(self->u_bin[k][static_cast<std::size_t>(j)])] > 0.5
                ? 1
                : 0);
      if (!sys.control_admissible(u)) return std::nullopt;
      us.push_back(std::move(u));
    }

    // Replays the exact dynamics from a given dyn_start state and, when the
    // run satisfies the formula, assembles a complete assignment.
    auto assemble = [&](const std::vector<Vec>& prefix)
        -> std::optional<std::vector<double>> {
      std::vector<double> out = cand;
      for (std::size_t k = static_cast<std::size_t>(self->dyn_start);
           k < self->u_real.size(); ++k) {
        const auto& uk = us[k - static_cast<std::size_t>(self->dyn_start)];
        for (int j = 0; j < sys.m_r; ++j)
          out[static_cast<std::size_t>(self->u_real[k][static_cast<std::size_t>(j)])] =
              uk.real[j];
        for (int j = 0; j < sys.m_b; ++j)
          out[static_cast<std::size_t>(self->u_bin[k][static_cast<std::size_t>(j)])] =
              uk.bin[static_cast<std::size_t>(j)];
      }
      for (int k = 0; k <= self->dyn_start; ++k)
        for (int i = 0; i < sys.n; ++i)
          out[static_cast<std::size_t>(
              self->x[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)])] =
              prefix[static_cast<std::size_t>(k)][i];
      Vec xcur = prefix.back();
      for (int k = self->dyn_start; k + 1 < static_cast<int>(self->x.size()); ++k) {
        const auto& uk = us[static_cast<std::size_t>(k - self->dyn_start)];
        Vec xn;
        try {
          xn = sys.evaluator(xcur, uk, wstar);
          if (sys.aux_evaluator) {
            auto aux = sys.aux_evaluator(xcur, uk, wstar);
            for (int j = 0; j < sys.n_delta; ++j)
              out[static_cast<std::size_t>(
                  self->dvar[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)])] =
                  aux.delta[j] > 0.5 ? 1.0 : 0.0;
            for (int j = 0; j < sys.n_r; ++j)
              out[static_cast<std::size_t>(
                  self->rvar[static_cast<std::size_t>(k)][static_cast<std::size_t>(j)])] =
                  aux.r[j];
          }
        } catch (const Error&) {
          return std::nullopt;
        }
        if (!leq(xn, sys.K, 1e-9) || !geq_zero(xn, 1e-9)) return std::nullopt;
        for (int i = 0; i < sys.n; ++i)
          out[static_cast<std::size_t>(
              self->x[static_cast<std::size_t>(k + 1)][static_cast<std::size_t>(i)])] = xn[i];
        xcur = xn;
      }

      stl::Signal sig = self->decode_state(out);
      double rho_true = stl::eval_rho(sig, self->formula, 0);
      const auto& rv = vars[static_cast<std::size_t>(self->rho)];
      if (rho_true < rv.lb - 1e-9) return std::nullopt;
      double rho_hat = std::clamp(rho_true, rv.lb, rv.ub);
      out[static_cast<std::size_t>(self->rho)] = rho_hat;

      for (const auto& b : self->bindings) {
        switch (b.kind) {
          case ZBinding::Kind::Node:
            out[static_cast<std::size_t>(b.var)] =
                node_rho(sig, b.node, b.t) >= rho_hat - tie ? 1.0 : 0.0;
            break;
          case ZBinding::Kind::Branch:
            out[static_cast<std::size_t>(b.var)] =
                node_rho(sig, b.node->children()[0].get(), b.t) >= rho_hat - tie ? 1.0
                                                                                 : 0.0;
            break;
          case ZBinding::Kind::UntilWitness: {
            double v = node_rho(sig, b.node->children()[1].get(), b.t2);
            for (int ts = b.t; ts <= b.t2; ++ts)
              v = std::min(v, node_rho(sig, b.node->children()[0].get(), ts));
            out[static_cast<std::size_t>(b.var)] = v >= rho_hat - tie ? 1.0 : 0.0;
            break;
          }
        }
      }
      if (self->obj_aux >= 0) {
        double mn = std::numeric_limits<double>::infinity();
        for (int i = 0; i < sys.n; ++i)
          mn = std::min(mn,
                        out[static_cast<std::size_t>(self->x[0][static_cast<std::size_t>(i)])]);
        out[static_cast<std::size_t>(self->obj_aux)] = std::max(mn, 0.0);
      }
      return out;
    };

    // Candidate prefix straight from the relaxation, clamped into bounds.
    std::vector<Vec> prefix;
    for (int k = 0; k <= self->dyn_start; ++k) {
      Vec xk(sys.n);
      for (int i = 0; i < sys.n; ++i) {
        int var = self->x[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
        const auto& v = vars[static_cast<std::size_t>(var)];
        xk[i] = std::clamp(cand[static_cast<std::size_t>(var)], v.lb, v.ub);
      }
      prefix.push_back(std::move(xk));
    }
    auto direct = assemble(prefix);

    // For the corner objective, satisfaction from t*1 starts is monotone in
    // t (Lemma-1 style), so the best corner for a control string is found by
    // bisection; a deterministic hill climb over one-bit and adjacent-pair
    // control flips then polishes the string.  Probes run on the plain
    // simulator; the full assignment is assembled once at the end.
    if (self->objective_kind == ObjectiveKind::MaxX0Corner && self->dyn_start == 0 &&
        vars[static_cast<std::size_t>(self->x[0][0])].lb <
            vars[static_cast<std::size_t>(self->x[0][0])].ub) {
      auto sim_ok = [&](double t) {
        Vec x = Vec::Constant(sys.n, t);
        stl::Signal sig;
        sig.samples.push_back(x);
        for (std::size_t k = 0; k < us.size(); ++k) {
          try {
            x = sys.evaluator(x, us[k], wstar);
          } catch (const Error&) {
            return false;
          }
          if (!leq(x, sys.K, 1e-9) || !geq_zero(x, 1e-9)) return false;
          sig.samples.push_back(x);
        }
        return stl::eval_bool(sig, self->formula, 0);
      };
      auto best_corner = [&]() {
        double lo = 0.0, hi = sys.K.minCoeff();
        if (!sim_ok(lo)) return -1.0;
        if (sim_ok(hi)) return hi;
        for (int it = 0; it < 50; ++it) {
          double mid = 0.5 * (lo + hi);
          if (sim_ok(mid))
            lo = mid;
          else
            hi = mid;
        }
        return lo;
      };
      double cur = best_corner();
      long total_bits = static_cast<long>(us.size()) * sys.m_b;
      if (cur >= 0.0 && total_bits > 0 && total_bits <= 128) {
        auto try_flip = [&](std::size_t k, int j) {
          us[k].bin[static_cast<std::size_t>(j)] ^= 1;
        };
        for (int round = 0; round < 4; ++round) {
          bool improved = false;
          for (std::size_t k = 0; k < us.size(); ++k)
            for (int j = 0; j < sys.m_b; ++j) {
              try_flip(k, j);
              double trial = best_corner();
              if (trial > cur + 1e-9) {
                cur = trial;
                improved = true;
              } else {
                try_flip(k, j);
              }
            }
          // adjacent pair flips escape single-flip plateaus
          for (std::size_t k = 0; k + 1 < us.size(); ++k)
            for (int j = 0; j < sys.m_b; ++j) {
              try_flip(k, j);
              try_flip(k + 1, j);
              double trial = best_corner();
              if (trial > cur + 1e-9) {
                cur = trial;
                improved = true;
              } else {
                try_flip(k, j);
                try_flip(k + 1, j);
              }
            }
          if (!improved) break;
        }
      }
      if (cur > 0.0) {
        // shrink slightly inside the feasible segment before assembling
        auto best = assemble({Vec(Vec::Constant(sys.n, cur))});
        if (best) {
          double direct_corner =
              direct ? (*direct)[static_cast<std::size_t>(self->obj_aux)] : -1.0;
          if (cur > direct_corner) return best;
        }
      }
    }
    return direct;
  };
}

}  // namespace mstl::encode
