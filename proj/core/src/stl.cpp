#include "mstl/stl.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace mstl {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  double back = std::strtod(buf, nullptr);
  if (back == v) {
    for (int prec = 1; prec <= 16; ++prec) {
      char shorter[64];
      std::snprintf(shorter, sizeof(shorter), "%.*g", prec, v);
      if (std::strtod(shorter, nullptr) == v) return shorter;
    }
  }
  return buf;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write file: " + path);
  out << content;
}

}  // namespace mstl

namespace mstl::stl {

Predicate make_predicate(Vec a, double b, std::string name) {
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (a[i] < 0.0)
      throw ModelError("predicate weight must be nonnegative: " + name);
  if (b < 0.0) throw ModelError("predicate threshold must be nonnegative: " + name);
  Predicate p;
  p.a = std::move(a);
  p.b = b;
  p.name = std::move(name);
  return p;
}

namespace {

void check_interval(const Interval& iv) {
  if (iv.lo < 0) throw ModelError("negative interval bound");
  if (!iv.unbounded && iv.hi < iv.lo) throw ModelError("interval with t2 < t1");
}

}  // namespace

FormulaPtr Formula::make(NodeKind k, Predicate p, std::vector<FormulaPtr> ch,
                         Interval iv) {
  auto node = std::shared_ptr<Formula>(new Formula());
  node->kind_ = k;
  node->pred_ = std::move(p);
  node->children_ = std::move(ch);
  node->interval_ = iv;
  return node;
}

FormulaPtr Formula::pred(Predicate p) {
  return make(NodeKind::Pred, std::move(p), {}, {});
}
FormulaPtr Formula::conj(std::vector<FormulaPtr> children) {
  return make(NodeKind::And, {}, std::move(children), {});
}
FormulaPtr Formula::disj(std::vector<FormulaPtr> children) {
  if (children.empty()) throw ModelError("empty disjunction");
  return make(NodeKind::Or, {}, std::move(children), {});
}
FormulaPtr Formula::always(FormulaPtr child, Interval iv) {
  check_interval(iv);
  return make(NodeKind::Always, {}, {std::move(child)}, iv);
}
FormulaPtr Formula::eventually(FormulaPtr child, Interval iv) {
  check_interval(iv);
  if (iv.unbounded)
    throw ModelError("unbounded eventually is outside the supported fragment");
  return make(NodeKind::Eventually, {}, {std::move(child)}, iv);
}
FormulaPtr Formula::until(FormulaPtr lhs, FormulaPtr rhs, Interval iv) {
  check_interval(iv);
  if (iv.unbounded)
    throw ModelError("unbounded until is outside the supported fragment");
  return make(NodeKind::Until, {}, {std::move(lhs), std::move(rhs)}, iv);
}
FormulaPtr Formula::truth() { return conj({}); }

Horizon horizon(const FormulaPtr& f) {
  switch (f->kind()) {
    case NodeKind::Pred:
      return {0, false};
    case NodeKind::And:
    case NodeKind::Or: {
      Horizon h{0, false};
      for (const auto& c : f->children()) {
        Horizon hc = horizon(c);
        if (hc.unbounded) return {0, true};
        h.steps = std::max(h.steps, hc.steps);
      }
      return h;
    }
    case NodeKind::Eventually:
    case NodeKind::Always: {
      Horizon hc = horizon(f->children()[0]);
      if (hc.unbounded || f->interval().unbounded) return {0, true};
      return {f->interval().hi + hc.steps, false};
    }
    case NodeKind::Until: {
      Horizon hl = horizon(f->children()[0]);
      Horizon hr = horizon(f->children()[1]);
      if (hl.unbounded || hr.unbounded || f->interval().unbounded) return {0, true};
      return {f->interval().hi + std::max(hl.steps, hr.steps), false};
    }
  }
  throw Error("unreachable");
}

bool is_bounded(const FormulaPtr& f) { return horizon(f).bounded(); }

namespace {

std::string interval_str(const Interval& iv) {
  std::string hi = iv.unbounded ? "inf" : std::to_string(iv.hi);
  return "[" + std::to_string(iv.lo) + "," + hi + "]";
}

void pretty_rec(const FormulaPtr& f, std::string& out, int parent_prec) {
  // precedence: atoms/temporal 3, U 2, & 1, | 0
  switch (f->kind()) {
    case NodeKind::Pred:
      out += f->predicate().name.empty() ? "<pred>" : f->predicate().name;
      return;
    case NodeKind::And: {
      if (f->children().empty()) {
        out += "true";
        return;
      }
      bool wrap = parent_prec > 1;
      if (wrap) out += "(";
      for (std::size_t i = 0; i < f->children().size(); ++i) {
        if (i) out += " & ";
        pretty_rec(f->children()[i], out, 2);
      }
      if (wrap) out += ")";
      return;
    }
    case NodeKind::Or: {
      bool wrap = parent_prec > 0;
      if (wrap) out += "(";
      for (std::size_t i = 0; i < f->children().size(); ++i) {
        if (i) out += " | ";
        pretty_rec(f->children()[i], out, 1);
      }
      if (wrap) out += ")";
      return;
    }
    case NodeKind::Always:
      out += "G" + interval_str(f->interval()) + " ";
      pretty_rec(f->children()[0], out, 3);
      return;
    case NodeKind::Eventually:
      out += "F" + interval_str(f->interval()) + " ";
      pretty_rec(f->children()[0], out, 3);
      return;
    case NodeKind::Until: {
      bool wrap = parent_prec > 2;
      if (wrap) out += "(";
      pretty_rec(f->children()[0], out, 3);
      out += " U" + interval_str(f->interval()) + " ";
      pretty_rec(f->children()[1], out, 3);
      if (wrap) out += ")";
      return;
    }
  }
}

}  // namespace

std::string pretty(const FormulaPtr& f) {
  std::string out;
  pretty_rec(f, out, 0);
  return out;
}

const Vec& Signal::at(int t) const {
  int idx = t - start_time;
  if (idx < 0 || idx >= static_cast<int>(samples.size()))
    throw Error("signal does not cover time " + std::to_string(t));
  return samples[static_cast<std::size_t>(idx)];
}

std::optional<double> MarginTable::margin(const std::string& pred_name, int t) const {
  auto it = channels.find(pred_name);
  if (it == channels.end()) return std::nullopt;
  int idx = t - start_time;
  if (idx < 0 || idx >= static_cast<int>(it->second.size()))
    throw Error("margin channel '" + pred_name + "' does not cover time " +
                std::to_string(t));
  return it->second[static_cast<std::size_t>(idx)];
}

namespace {

double pred_margin(const Signal& sig, const Predicate& p, int t,
                   const MarginTable* margins) {
  if (margins != nullptr) {
    if (auto m = margins->margin(p.name, t)) return *m;
  }
  const Vec& x = sig.at(t);
  if (p.a.size() != x.size())
    throw Error("predicate dimension mismatch for '" + p.name + "'");
  return p.b - p.a.dot(x);
}

int require_bounded_end(const FormulaPtr& f, int t) {
  Horizon h = horizon(f);
  if (h.unbounded) throw ModelError("cannot evaluate unbounded formula on a finite prefix");
  return t + h.steps;
}

}  // namespace

bool eval_bool(const Signal& sig, const FormulaPtr& f, int t, const MarginTable* margins) {
  switch (f->kind()) {
    case NodeKind::Pred:
      return pred_margin(sig, f->predicate(), t, margins) >= 0.0;
    case NodeKind::And:
      for (const auto& c : f->children())
        if (!eval_bool(sig, c, t, margins)) return false;
      return true;
    case NodeKind::Or:
      for (const auto& c : f->children())
        if (eval_bool(sig, c, t, margins)) return true;
      return false;
    case NodeKind::Eventually: {
      for (int tp = t + f->interval().lo; tp <= t + f->interval().hi; ++tp)
        if (eval_bool(sig, f->children()[0], tp, margins)) return true;
      return false;
    }
    case NodeKind::Always: {
      if (f->interval().unbounded)
        throw ModelError("cannot evaluate unbounded always on a finite prefix");
      for (int tp = t + f->interval().lo; tp <= t + f->interval().hi; ++tp)
        if (!eval_bool(sig, f->children()[0], tp, margins)) return false;
      return true;
    }
    case NodeKind::Until: {
      for (int tp = t + f->interval().lo; tp <= t + f->interval().hi; ++tp) {
        if (!eval_bool(sig, f->children()[1], tp, margins)) continue;
        bool all = true;
        for (int ts = t; ts <= tp && all; ++ts)
          all = eval_bool(sig, f->children()[0], ts, margins);
        if (all) return true;
      }
      return false;
    }
  }
  throw Error("unreachable");
}

double eval_rho(const Signal& sig, const FormulaPtr& f, int t, const MarginTable* margins) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  switch (f->kind()) {
    case NodeKind::Pred:
      return pred_margin(sig, f->predicate(), t, margins);
    case NodeKind::And: {
      double r = kInf;
      for (const auto& c : f->children()) r = std::min(r, eval_rho(sig, c, t, margins));
      return r;
    }
    case NodeKind::Or: {
      double r = -kInf;
      for (const auto& c : f->children()) r = std::max(r, eval_rho(sig, c, t, margins));
      return r;
    }
    case NodeKind::Eventually: {
      double r = -kInf;
      for (int tp = t + f->interval().lo; tp <= t + f->interval().hi; ++tp)
        r = std::max(r, eval_rho(sig, f->children()[0], tp, margins));
      return r;
    }
    case NodeKind::Always: {
      if (f->interval().unbounded)
        throw ModelError("cannot evaluate unbounded always on a finite prefix");
      double r = kInf;
      for (int tp = t + f->interval().lo; tp <= t + f->interval().hi; ++tp)
        r = std::min(r, eval_rho(sig, f->children()[0], tp, margins));
      return r;
    }
    case NodeKind::Until: {
      double r = -kInf;
      for (int tp = t + f->interval().lo; tp <= t + f->interval().hi; ++tp) {
        double inner = eval_rho(sig, f->children()[1], tp, margins);
        for (int ts = t; ts <= tp; ++ts)
          inner = std::min(inner, eval_rho(sig, f->children()[0], ts, margins));
        r = std::max(r, inner);
      }
      return r;
    }
  }
  throw Error("unreachable");
}

PredicateTable predicate_table_from_json(const std::string& json_text) {
  nlohmann::json j = nlohmann::json::parse(json_text);
  PredicateTable table;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const auto& entry = it.value();
    std::vector<double> a = entry.at("a").get<std::vector<double>>();
    Vec av = Eigen::Map<Vec>(a.data(), static_cast<Eigen::Index>(a.size()));
    table.emplace(it.key(), make_predicate(av, entry.at("b").get<double>(), it.key()));
  }
  return table;
}

std::string predicate_table_to_json(const PredicateTable& table) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [name, p] : table) {
    std::vector<double> a(p.a.data(), p.a.data() + p.a.size());
    j[name] = {{"a", a}, {"b", p.b}};
  }
  return j.dump(2);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

Signal signal_from_csv(const std::string& csv_text) {
  // header: t,x0,x1,... ; one row per sample, consecutive t.
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw Error("empty signal csv");
  Signal sig;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() < 2) throw Error("signal csv row needs t and one state column");
    int t = std::stoi(cells[0]);
    if (first) {
      sig.start_time = t;
      first = false;
    }
    Vec x(static_cast<Eigen::Index>(cells.size() - 1));
    for (std::size_t i = 1; i < cells.size(); ++i)
      x[static_cast<Eigen::Index>(i - 1)] = std::stod(cells[i]);
    sig.samples.push_back(std::move(x));
  }
  if (sig.samples.empty()) throw Error("signal csv has no rows");
  return sig;
}

MarginTable margins_from_csv(const std::string& csv_text) {
  // header: t,<pred name>,... ; values are margins b - p(x_t).
  std::istringstream in(csv_text);
  std::string line;
  if (!std::getline(in, line)) throw Error("empty margins csv");
  auto names = split_csv_line(line);
  MarginTable mt;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != names.size()) throw Error("margins csv row width mismatch");
    int t = std::stoi(cells[0]);
    if (first) {
      mt.start_time = t;
      first = false;
    }
    for (std::size_t i = 1; i < cells.size(); ++i)
      mt.channels[names[i]].push_back(std::stod(cells[i]));
  }
  return mt;
}

}  // namespace mstl::stl
