#pragma once

#include "mstl/common.hpp"

#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mstl::stl {

/// Linear lower-set predicate a^T x <= b with a >= 0, b >= 0.
struct Predicate {
  Vec a;
  double b = 0.0;
  std::string name;
};

/// Throws ModelError unless a >= 0 and b >= 0.
Predicate make_predicate(Vec a, double b, std::string name = "");

/// Time interval [lo, hi] with an explicit unbounded marker for hi = inf.
struct Interval {
  int lo = 0;
  int hi = 0;
  bool unbounded = false;
};

/// Horizon value; saturates under interval arithmetic when unbounded.
struct Horizon {
  int steps = 0;
  bool unbounded = false;

  bool bounded() const { return !unbounded; }
};

enum class NodeKind { Pred, And, Or, Until, Eventually, Always };

class Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

/// Immutable negation-free STL AST node. Shared subtrees are welcome; the
/// encoder memoizes on node identity.
class Formula {
 public:
  static FormulaPtr pred(Predicate p);
  static FormulaPtr conj(std::vector<FormulaPtr> children);
  static FormulaPtr disj(std::vector<FormulaPtr> children);
  static FormulaPtr always(FormulaPtr child, Interval iv);
  static FormulaPtr eventually(FormulaPtr child, Interval iv);
  static FormulaPtr until(FormulaPtr lhs, FormulaPtr rhs, Interval iv);
  /// Trivially true formula (empty conjunction).
  static FormulaPtr truth();

  NodeKind kind() const { return kind_; }
  const Predicate& predicate() const { return pred_; }
  const std::vector<FormulaPtr>& children() const { return children_; }
  const Interval& interval() const { return interval_; }
  bool is_truth() const { return kind_ == NodeKind::And && children_.empty(); }

 private:
  Formula() = default;
  static FormulaPtr make(NodeKind k, Predicate p, std::vector<FormulaPtr> ch,
                         Interval iv);
  NodeKind kind_ = NodeKind::And;
  Predicate pred_;
  std::vector<FormulaPtr> children_;
  Interval interval_;
};

Horizon horizon(const FormulaPtr& f);
bool is_bounded(const FormulaPtr& f);

std::string pretty(const FormulaPtr& f);

using PredicateTable = std::map<std::string, Predicate>;

/// Grammar (EBNF):
///   formula := or ; or := and ('|' and)* ; and := unary ('&' unary)* ;
///   unary := atom | 'G' interval unary | 'F' interval unary
///          | '(' formula ')' | atom 'U' interval atom-or-paren ;
///   interval := '[' nat ',' (nat|'inf') ']' ; atom := identifier.
/// Whitespace-insensitive. Negation tokens are rejected.
FormulaPtr parse_formula(const std::string& text, const PredicateTable& table);

PredicateTable predicate_table_from_json(const std::string& json_text);
std::string predicate_table_to_json(const PredicateTable& table);

/// Finite-prefix signal; sample k holds the state at time start_time + k.
struct Signal {
  int start_time = 0;
  std::vector<Vec> samples;

  int dim() const { return samples.empty() ? 0 : static_cast<int>(samples[0].size()); }
  int end_time() const { return start_time + static_cast<int>(samples.size()) - 1; }
  const Vec& at(int t) const;
  bool covers(int t0, int t1) const {
    return t0 >= start_time && t1 <= end_time();
  }
};

/// Precomputed per-predicate margin sequences keyed by predicate name.
/// Lets the monitor score atoms whose margin is not linear in the state.
struct MarginTable {
  int start_time = 0;
  std::map<std::string, std::vector<double>> channels;

  std::optional<double> margin(const std::string& pred_name, int t) const;
};

bool eval_bool(const Signal& sig, const FormulaPtr& f, int t,
               const MarginTable* margins = nullptr);
double eval_rho(const Signal& sig, const FormulaPtr& f, int t,
                const MarginTable* margins = nullptr);

Signal signal_from_csv(const std::string& csv_text);
MarginTable margins_from_csv(const std::string& csv_text);

/// phi_b AND G[delta,inf] phi_g with bounded parts.
struct BoundedGlobalSpec {
  FormulaPtr phi_b;
  FormulaPtr phi_g;
  int delta = 0;
};

struct NormalizeOptions {
  std::size_t disjunct_warn_limit = 4096;
};

/// Rewrites a safety formula (bounded F/U intervals, no unbounded G nested
/// under another unbounded G) into a disjunction of bounded-global specs.
/// Throws ModelError on inputs outside the supported fragment.
std::vector<BoundedGlobalSpec> normalize_safety(
    const FormulaPtr& f, const NormalizeOptions& opts = {});

}  // namespace mstl::stl
