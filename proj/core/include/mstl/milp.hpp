#pragma once

#include "mstl/common.hpp"
#include "mstl/simplex.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mstl::milp {

enum class VarKind { Continuous, Binary, UnitInterval };

struct Variable {
  VarKind kind = VarKind::Continuous;
  double lb = 0.0;
  double ub = 0.0;
  std::string name;
  /// Branching preference class; higher classes are branched first
  /// (controls before dynamics auxiliaries before formula indicators).
  int branch_priority = 0;
};

enum class RowSense { LE, GE, EQ };

struct RowEntry {
  int var = 0;
  double coef = 0.0;
};

struct Row {
  std::vector<RowEntry> terms;
  RowSense sense = RowSense::LE;
  double rhs = 0.0;
  std::string name;  // origin tag (formula node path, dynamics step, ...)
};

enum class ObjSense { Minimize, Maximize };

struct MilpModel {
  std::vector<Variable> vars;
  std::vector<Row> rows;
  ObjSense obj_sense = ObjSense::Minimize;
  std::vector<RowEntry> objective;

  /// Optional incumbent repair: given an LP-relaxation point, return a
  /// feasible completion (or nothing).  Installed by model builders that can
  /// reconstruct auxiliaries from a rounded control/state guess.
  std::function<std::optional<std::vector<double>>(const std::vector<double>&)>
      repair;

  int add_var(VarKind kind, double lb, double ub, std::string name);
  int add_continuous(double lb, double ub, std::string name) {
    return add_var(VarKind::Continuous, lb, ub, std::move(name));
  }
  int add_binary(std::string name) {
    return add_var(VarKind::Binary, 0.0, 1.0, std::move(name));
  }
  int add_unit(std::string name) {
    return add_var(VarKind::UnitInterval, 0.0, 1.0, std::move(name));
  }
  void add_row(std::vector<RowEntry> terms, RowSense sense, double rhs,
               std::string name = "");
  void set_objective(ObjSense sense, std::vector<RowEntry> terms) {
    obj_sense = sense;
    objective = std::move(terms);
  }

  int num_vars() const { return static_cast<int>(vars.size()); }
  int num_binary() const;
  int num_rows() const { return static_cast<int>(rows.size()); }

  /// Checks structural invariants (ids in range, binary bounds, finite
  /// continuous bounds).  Throws ModelError on violation.
  void validate() const;
};

enum class SolveStatus { Optimal, Feasible, Infeasible, Unbounded, IterLimit };

std::string to_string(SolveStatus s);

struct MilpSolution {
  SolveStatus status = SolveStatus::Infeasible;
  std::vector<double> x;
  double objective = 0.0;
  long nodes = 0;
  double wall_seconds = 0.0;
};

struct SolveParams {
  double feas_tol = 1e-6;
  double int_tol = 1e-6;
  long node_limit = 500000;
  double time_limit_seconds = 1e18;
  std::uint64_t seed = 0;
  int threads = 1;  // >1 enables the batch-parallel tree search
  double gap_tol = 1e-6;
};

/// Embedded branch-and-bound over the dense simplex relaxation.
/// Deterministic: most-fractional branching, best-bound node order, ties by
/// lowest variable id and node id.
MilpSolution solve(const MilpModel& model, const SolveParams& params = {});

struct Violation {
  std::string what;
  int index = -1;
  double amount = 0.0;
};

/// Pure arithmetic feasibility check (bounds, rows, binary integrality).
/// Empty result means the assignment satisfies the model within feas_tol.
std::vector<Violation> verify(const MilpModel& model, const std::vector<double>& x,
                              double feas_tol = 1e-6);

/// CPLEX LP text format (Maximize/Subject To/Bounds/Binaries/End).
std::string export_lp(const MilpModel& model);

/// Parses text produced by export_lp (used for round-trip checks and for
/// importing externally solved models).
MilpModel parse_lp(const std::string& text);

/// Solution files: `name value` per line, '#' comments.
std::map<std::string, double> parse_solution_file(const std::string& text);

/// Maps a named solution onto model variable order.  Throws on missing vars.
std::vector<double> import_solution(const MilpModel& model, const std::string& text);

std::string format_solution(const MilpModel& model, const std::vector<double>& x);

}  // namespace mstl::milp
