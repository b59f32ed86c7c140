#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "pmcbs/low_level.hpp"
#include "pmcbs/time_domain.hpp"
#include "pmcbs/topo_map.hpp"

namespace pmcbs {

// One multi-agent problem: agent a starts at starts[a] and parks forever at
// goals[a]. Starts must lie in pairwise distinct regions, and likewise goals.
struct MapfInstance {
  const TopometricMap* map = nullptr;
  std::vector<Cell> starts;
  std::vector<Cell> goals;
  PlannerParams params = PlannerParams::defaults();

  int agent_count() const { return static_cast<int>(starts.size()); }
};

// Throws std::invalid_argument when the instance breaks its preconditions.
void validate_instance(const MapfInstance& inst);

// Two agents inside one region at strictly overlapping times.
struct RegionConflict {
  int agent_i = -1;
  int agent_j = -1;
  int region = -1;
  Interval interval_i;  // agent_i's occupancy of `region`
  Interval interval_j;
};

// Two agents crossing one opening in opposite directions at (nearly) the
// same moment: agent_i enters region_i while agent_j enters region_j, the
// two regions being the opening's two sides.
struct OpeningConflict {
  int agent_i = -1;
  int agent_j = -1;
  int opening = -1;
  int region_i = -1;  // region agent_i enters (and agent_j leaves)
  int region_j = -1;
  Interval interval_i;  // agent_i's occupancy of region_i
  Interval interval_j;
};

using Conflict = std::variant<RegionConflict, OpeningConflict>;

// Closed occupancy intervals of a path, one per visit: a region is held
// from the visit's entry until the successor visit's entry (forever for
// the last visit).
std::vector<std::pair<int, Interval>> occupancy_intervals(const TimedPath& path);

// Earliest conflict over all agent pairs; at equal start times opening
// conflicts win over region conflicts, then the lower agent pair. Agents
// are identified by their index in `paths`.
std::optional<Conflict> detect_first_conflict(const TopometricMap& map,
                                              const std::vector<const TimedPath*>& paths,
                                              double delta_t);

// Total number of pairwise conflicts (overlapping visit pairs plus swaps).
int count_conflicts(const TopometricMap& map, const std::vector<const TimedPath*>& paths,
                    double delta_t);

// A forbidden interval handed to one agent.
struct AgentConstraint {
  int agent = -1;
  IntervalConstraint constraint;
};

// Each conflict splits into one constraint per agent: the agent is barred
// from the contested region for the other agent's occupancy there; swap
// constraints additionally pad the start by delta_t (clamped at 0).
std::pair<AgentConstraint, AgentConstraint> constraints_from_region_conflict(
    const RegionConflict& rc);
std::pair<AgentConstraint, AgentConstraint> constraints_from_opening_conflict(
    const OpeningConflict& oc, double delta_t);

enum class SolveStatus { kSolved, kTimeout, kInfeasible };
const char* to_string(SolveStatus s);

// Constraint-tree trace for inspection: which agent each node replanned,
// identity of the path objects it holds, and its cost/constraint totals.
struct SearchTrace {
  struct Node {
    int parent = -1;
    int replanned_agent = -1;
    double cost = 0.0;
    int constraints_total = 0;
    std::vector<std::uintptr_t> path_ids;
  };
  std::vector<Node> nodes;
};

struct Solution {
  SolveStatus status = SolveStatus::kInfeasible;
  std::vector<TimedPath> paths;  // one per agent when solved
  double cost = 0.0;             // sum over agents of arrival_time
  long long expanded_ct_nodes = 0;
  double elapsed_ms = 0.0;
  bool cost_monotone = true;  // no expanded child cost ever dropped below its parent's
  ConstraintSet constraints;  // constraints of the returned constraint-tree node
  std::shared_ptr<SearchTrace> trace;
};

struct SolverOptions {
  double timeout_s = 30.0;
  long long low_level_budget = LowLevelPlanner::kDefaultNodeBudget;
  const RegionDistanceTable* dists = nullptr;  // precomputed table, else built per call
  bool collect_trace = false;
};

// Conflict-tree search over the topometric map: best-first on sum of agent
// arrival times; each conflict spawns two children, each replanning exactly
// one agent under one extra forbidden interval.
Solution solve_cbs(const MapfInstance& inst, const SolverOptions& opt = {});

// Bounded-suboptimal variant: the next node is picked from the focal set
// {cost <= omega * cheapest open cost} by fewest conflicts. The low level
// stays exact, so the returned cost is within omega of optimal.
Solution solve_ecbs(const MapfInstance& inst, double omega, const SolverOptions& opt = {});

// Independent schedule checker, sharing only the interval algebra with the
// solver: structural path checks, exhaustive pairwise overlap and swap
// scans, and (when given) per-agent forbidden-interval checks.
struct Violation {
  std::string kind;  // "structure", "region-overlap", "opening-swap", "forbidden-interval"
  int agent_i = -1;
  int agent_j = -1;  // -1 for single-agent findings
  int place = -1;    // region or opening id, -1 when not applicable
  double time = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> structural;
  std::vector<Violation> conflicts;
  std::vector<Violation> constraint_violations;
  bool ok() const {
    return structural.empty() && conflicts.empty() && constraint_violations.empty();
  }
};

ValidationReport validate_solution(const MapfInstance& inst, const std::vector<TimedPath>& paths,
                                   const ConstraintSet* constraints = nullptr);

}  // namespace pmcbs
