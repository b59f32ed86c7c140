#pragma once

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pmcbs/grid_map.hpp"
#include "pmcbs/high_level.hpp"

namespace pmcbs {

// Classical discrete-time multi-agent problem on the raw grid: one move to
// a 4-neighbour (or a wait) per timestep, distinct start cells, distinct
// goal cells.
struct GridMapfInstance {
  const GridMap* grid = nullptr;
  std::vector<Cell> starts;
  std::vector<Cell> goals;

  int agent_count() const { return static_cast<int>(starts.size()); }
};

void validate_grid_instance(const GridMapfInstance& inst);

// Cell per timestep from t = 0; the agent rests at the final cell forever.
// cost = arrival timestep = cells.size() - 1.
struct DiscretePath {
  std::vector<Cell> cells;
  int cost() const { return static_cast<int>(cells.size()) - 1; }
  Cell at(int t) const {
    return t < static_cast<int>(cells.size()) ? cells[static_cast<std::size_t>(t)]
                                              : cells.back();
  }
  // Moves actually taken (waits excluded): the travelled distance in cells.
  int distance() const;
};

struct GridVertexConflict {
  int agent_i = -1, agent_j = -1;
  Cell cell;
  int t = 0;
};
struct GridEdgeConflict {
  int agent_i = -1, agent_j = -1;
  Cell from, to;  // agent_i moves from->to during [t, t+1], agent_j opposite
  int t = 0;
};
using GridConflict = std::variant<GridVertexConflict, GridEdgeConflict>;

// Earliest conflict: smallest t, vertex before edge, then lowest agent pair.
std::optional<GridConflict> detect_first_grid_conflict(const std::vector<DiscretePath>& paths);
int count_grid_conflicts(const std::vector<DiscretePath>& paths);

struct GridSolverOptions {
  double timeout_s = 30.0;
  long long low_level_budget = 1000000;
};

struct GridSolution {
  SolveStatus status = SolveStatus::kInfeasible;
  std::vector<DiscretePath> paths;
  int cost = 0;  // sum of arrival timesteps
  long long expanded_ct_nodes = 0;
  double elapsed_ms = 0.0;
};

// Optimal classical CBS: best-first constraint-tree search over vertex and
// edge constraints, space-time A* underneath.
GridSolution solve_grid_cbs(const GridMapfInstance& inst, const GridSolverOptions& opt = {});

// Bounded-suboptimal variant with focal search at both levels. Each
// low-level search reports a lower bound on its agent's optimal cost; the
// high level keeps the sum as the node's bound and expands any node whose
// cost is within omega of the smallest bound, preferring fewer conflicts.
GridSolution solve_grid_ecbs(const GridMapfInstance& inst, double omega,
                             const GridSolverOptions& opt = {});

// Independent discrete checker: per-step adjacency, start/goal endpoints,
// exhaustive vertex/edge scan.
struct GridViolation {
  std::string kind;  // "structure", "vertex", "edge"
  int agent_i = -1, agent_j = -1;
  Cell cell;
  int t = 0;
};

std::vector<GridViolation> validate_grid_solution(const GridMapfInstance& inst,
                                                  const std::vector<DiscretePath>& paths);

}  // namespace pmcbs
