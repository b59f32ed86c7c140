#pragma once

#include <map>
#include <optional>
#include <vector>

#include "pmcbs/grid_map.hpp"
#include "pmcbs/time_domain.hpp"
#include "pmcbs/topo_map.hpp"

namespace pmcbs {

struct PlannerParams {
  double r_speed = 1.0;   // worst-case speed, cells per second (> 0)
  double i_margin = 1.3;  // inflation margin on traversal times (> 1)
  double delta_t = 1.3;   // opening clearance window, seconds (>= 0)

  // delta_t defaults to the traversal time of one cell.
  static PlannerParams defaults(double r_speed = 1.0, double i_margin = 1.3);
  void validate() const;

  // Time to cover `cells` grid cells at the margin-inflated speed.
  double travel_time(double cells) const { return cells / r_speed * i_margin; }
};

// One stay inside a region: the agent enters at `entry` (stepping onto the
// first waypoint cell), reaches the last waypoint at `exit`, and may then
// wait at that gate cell until the next visit's entry. The final visit has
// exit = kInf: the agent parks on its goal cell.
struct RegionVisit {
  int region = -1;
  double entry = 0.0;
  double exit = 0.0;
  std::vector<Cell> waypoints;
};

struct TimedPath {
  int agent = -1;
  std::vector<RegionVisit> visits;
  double arrival_time = 0.0;  // time the goal cell is reached
  double length_cells = 0.0;  // total geometric path length
};

// Search node of the region-graph planner. A node means: the agent has
// entered cur_region through entry_opening, stands on the cur-side gate
// cell (the start cell for roots), and plans to leave toward next_region
// through next_opening. t_current is the distance clock (accumulated path
// length over speed, times the margin); t_end is the end of the time slot
// used in cur_region, i.e. the deadline for leaving it. ready is the
// realised arrival time at the standing cell once waits at gates are
// accounted for; it equals t_current on wait-free prefixes.
struct NavNode {
  int prev_region = -1;  // -1 for roots
  int cur_region = -1;
  int next_region = -1;
  int entry_opening = -1;  // -1 for roots
  int next_opening = -1;
  double t_current = 0.0;
  double t_end = kInf;
  double path_len = 0.0;
  double ready = 0.0;
  int slot_index = 0;  // index of the slot used on cur_region
  int parent = -1;     // arena index
  Cell position;       // standing cell
};

// Expansion priority: t_current plus the straight-line distance from the
// node's standing cell to the goal cell, over speed, times the margin.
double node_priority(const NavNode& n, Cell goal_cell, const PlannerParams& p);

// Slot admission predicates used when expanding a node toward the region
// behind next_opening.
//
// A slot opening at or after the node's leave-by deadline is unusable.
inline bool slot_starts_too_late(const Interval& slot, double node_t_end) {
  return slot.start >= node_t_end;
}
// A slot that closes before the agent can finish crossing its current
// region (traverse_time = in-region gate-to-gate distance over speed,
// times the margin) is unusable.
inline bool slot_ends_too_soon(const Interval& slot, double t_current, double traverse_time) {
  return slot.end <= t_current + traverse_time;
}

enum class PlanStatus { kFound, kInfeasible, kBudgetExhausted };

struct PlanResult {
  PlanStatus status = PlanStatus::kInfeasible;
  TimedPath path;
  long long expanded = 0;
  long long generated = 0;
  std::vector<NavNode> debug_nodes;  // filled when plan() is asked to record
};

// Per-region merged forbidden intervals for one agent.
using AgentConstraints = std::map<int, std::vector<Interval>>;

// Time-slot A* over the region graph for a single agent. Returns the path
// minimising arrival time at the goal cell under the given constraints.
// Identical inputs give identical paths (fixed tie-breaking). Fails with
// kInfeasible when the open set empties and kBudgetExhausted when the
// expansion budget runs out.
class LowLevelPlanner {
 public:
  static constexpr long long kDefaultNodeBudget = 100000;

  LowLevelPlanner(const TopometricMap& map, const RegionDistanceTable& dists,
                  PlannerParams params);

  PlanResult plan(Cell start, Cell goal, const AgentConstraints* constraints,
                  long long node_budget = kDefaultNodeBudget,
                  bool record_nodes = false) const;

  const PlannerParams& params() const { return params_; }

 private:
  const TopometricMap* map_;
  const RegionDistanceTable* dists_;
  PlannerParams params_;
};

}  // namespace pmcbs
