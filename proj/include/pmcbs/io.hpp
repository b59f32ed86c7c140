#pragma once

#include <string>
#include <vector>

#include "pmcbs/grid_cbs.hpp"
#include "pmcbs/low_level.hpp"

namespace pmcbs {

// One agent line of the agents document: explicit cells so the same file
// drives both the topometric and the grid solvers.
struct AgentSpec {
  int id = -1;
  Cell start;
  Cell goal;
};

// JSON list [{id, start: [x,y], goal: [x,y]}, ...]; ids must be unique.
// File order is preserved and defines the agent indexing everywhere else.
std::vector<AgentSpec> parse_agents_json(const std::string& text);
std::string agents_to_json(const std::vector<AgentSpec>& agents);

// Solution document: method, status, cost, expanded_nodes, elapsed_ms and
// per-agent visit lists. Topometric visits are {region, entry, exit,
// waypoints}; grid solutions share the shape with {cell, entry, exit} per
// timestep. An absent (null) exit means the agent stays forever.
struct SolutionDoc {
  std::string method;  // pm-cbs | pm-ecbs | cbs | ecbs
  std::string status;  // solved | timeout | infeasible
  double cost = 0.0;
  long long expanded_nodes = 0;
  double elapsed_ms = 0.0;
  std::vector<int> agent_ids;
  std::vector<TimedPath> pm_paths;       // one per agent for pm-* methods
  std::vector<DiscretePath> grid_paths;  // one per agent for grid methods

  bool is_grid() const { return method == "cbs" || method == "ecbs"; }
};

std::string solution_to_json(const SolutionDoc& doc);
SolutionDoc parse_solution_json(const std::string& text);

// Whole-file helpers; throw std::runtime_error with the path on failure.
std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace pmcbs
