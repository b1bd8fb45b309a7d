#pragma once

#include "mstl/mld.hpp"
#include "mstl/mpc.hpp"
#include "mstl/stl.hpp"

#include <map>
#include <string>
#include <vector>

namespace mstl::traffic {

enum class LinkClass { Road, Onramp, Freeway };

struct Link {
  int id = 0;  // external 1-based id
  LinkClass cls = LinkClass::Road;
  double capacity = 0.0;   // c_l
  double sat_flow = 0.0;   // qbar_l
};

struct Turn {
  int from = 0;
  int to = 0;
  double beta = 0.0;   // turning ratio
  double alpha = 1.0;  // capacity ratio of `to` available to `from`
  bool inferred = false;  // entry reconstructed from the layout, not the table
};

struct Intersection {
  std::string id;
  std::vector<int> ew;  // links served by the east-west phase
  std::vector<int> ns;  // links served by the north-south phase
};

struct Meter {
  std::string id;
  int link = 0;
};

struct TrafficNetwork {
  std::vector<Link> links;
  std::vector<Turn> turns;
  std::vector<Intersection> intersections;
  std::vector<Meter> meters;
  std::map<int, double> demand;  // link id -> maximal arrival w*

  int index_of(int link_id) const;
  const Link& link(int link_id) const;
  std::vector<const Turn*> downstream(int link_id) const;
  std::vector<const Turn*> upstream(int link_id) const;
  /// Phase handle for a link: (intersection index, 1 if NS else 0), or
  /// (-1, _) when the link is uncontrolled.
  std::pair<int, int> phase_of(int link_id) const;
  int meter_of(int link_id) const;  // meter index or -1

  /// Checks ratio ranges, sum(beta) <= 1 per link, and that every actuated
  /// link belongs to exactly one phase group or meter.
  void validate() const;
};

/// min{x_l, qbar_l, min over downstream (alpha/beta)(c' - x')}.
double potential_flow(const TrafficNetwork& net, const Vec& x, int link_id);

/// Road: s * q; onramp: min(q, r); freeway: q.  u stacks meters then phases.
double actuated_flow(const TrafficNetwork& net, const Vec& x, const mld::ControlInput& u,
                     int link_id);

/// Conservation update (reference evaluator for the compiled system).
Vec traffic_step(const TrafficNetwork& net, const Vec& x, const mld::ControlInput& u,
                 const mld::Disturbance& w);

/// Raw congestion-free inequalities.
bool pi_raw_holds(const TrafficNetwork& net, const Vec& x, double tol = 1e-9);

struct PiDescriptor {
  stl::FormulaPtr formula;            // Boolean expansion over linear predicates
  stl::PredicateTable predicates;     // atoms used by the expansion
};

PiDescriptor pi_formula(const TrafficNetwork& net);

/// The side-road liveness requirement over the given link ids: whenever the
/// load exceeds the threshold it returns below it within `window` steps;
/// written negation-free as (x <= thr) | F[0,window](x <= thr).
stl::FormulaPtr liveness_formula(const TrafficNetwork& net, const std::vector<int>& links,
                                 double threshold, int window,
                                 stl::PredicateTable* table = nullptr);

struct CompiledTraffic {
  mld::MldSystem sys;
  stl::PredicateTable predicates;
  stl::FormulaPtr pi;
  stl::FormulaPtr psi;    // empty for networks without a liveness part
  stl::FormulaPtr phi_g;  // pi AND psi
  // auxiliary layout: r = [p (per link) ; qvec for roads ; qvec for onramps]
  std::vector<int> qvec_col;  // per link index: column of its actuated flow
};

/// Big-M mixed-logical form of the flow and actuation minimums.  The
/// constraint block models the free-flow branch exactly and is paired with
/// the exact piecewise evaluator; specifications built on top always pin the
/// congestion-free set along witnesses, where both coincide.
CompiledTraffic compile(const TrafficNetwork& net);

/// Total-delay stage cost sum_l (x_l - qvec_l), discounted, with -zeta rho.
mpc::MpcCost delay_cost(const CompiledTraffic& ct, double zeta, double gamma);

double stage_delay(const TrafficNetwork& net, const Vec& x, const mld::ControlInput& u);

/// Uniform sample over [0,K] scaled into the congestion-free set.
std::function<Vec(Rng&)> pi_state_sampler(const TrafficNetwork& net);

/// The 53-link freeway/arterial case study with the published parameters;
/// turn entries that the table does not pin are marked inferred.
TrafficNetwork case_study();

std::string to_json(const TrafficNetwork& net);
TrafficNetwork network_from_json(const std::string& text);

}  // namespace mstl::traffic
