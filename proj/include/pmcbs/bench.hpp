#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "pmcbs/grid_cbs.hpp"
#include "pmcbs/high_level.hpp"
#include "pmcbs/topo_map.hpp"

namespace pmcbs {

// Parameters of the deterministic corridor-world generator: a mesh of
// `rails` horizontal and `avenues` vertical one-cell-wide corridors spread
// evenly over the grid, decorated with `stubs` seeded dead-end side
// corridors whose total length is chosen so the map has exactly
// `free_cells` free cells. Degree accounting makes the region count of the
// segmentation independent of the seed:
//   regions = 4*stubs + 5*(rails-1)*(avenues-1) - 2*(rails-2)*(avenues-2) - 5
// (stub tips are dead ends, mesh crossings are intersections, everything
// between is a pathway). The defaults give a 44x38 grid with 385 free
// cells that segments into 98 regions for every seed.
struct CorridorMapParams {
  int width = 44;
  int height = 38;
  int rails = 2;
  int avenues = 4;
  int stubs = 22;
  int free_cells = 385;
  std::uint64_t seed = 1;
};

GridMap generate_corridor_map(const CorridorMapParams& params = {});

// Seeded instances per the benchmark protocol: starts drawn from pairwise
// distinct regions, goals likewise (independently); the cell used is the
// region's lexicographically smallest cell. Deterministic under the seed.
std::vector<MapfInstance> generate_instances(const TopometricMap& map, int n_agents, int count,
                                             std::uint64_t seed, const PlannerParams& params);

struct BenchConfig {
  std::vector<std::string> methods = {"pm-cbs", "pm-ecbs", "cbs", "ecbs"};
  std::vector<int> agent_counts = {4, 6, 8, 10};
  int instances = 500;
  double timeout_s = 30.0;
  std::uint64_t seed = 1;
  double r_speed = 1.0;
  double i_margin = 1.3;
  double omega = 1.2;
  int jobs = 1;
};

struct BenchRecord {
  int instance = 0;
  std::string method;
  int agents = 0;
  std::uint64_t seed = 0;
  bool success = false;
  double elapsed_ms = 0.0;
  double cost_s = 0.0;          // meaningful only when success
  double distance_cells = 0.0;  // meaningful only when success
  long long expanded_nodes = 0;
  bool valid = true;  // independent validator verdict (not serialized)
};

struct BenchAggregate {
  std::string method;
  int agents = 0;
  int instances = 0;
  int solved = 0;
  double success_pct = 0.0;
  double median_ms = 0.0;       // over successes; meaningless when solved == 0
  double mean_distance = 0.0;   // over successes
  double median_expanded = 0.0; // over successes
};

struct BenchResult {
  std::vector<BenchRecord> records;
  std::vector<BenchAggregate> aggregates;
};

// Runs every method on identical instance lists per agent count. Records
// are ordered by (agent count, method, instance) regardless of how many
// worker threads execute the solves. Every solved run is re-checked with
// the independent validator and the verdict stored on the record.
BenchResult run_benchmark(const TopometricMap& map, const BenchConfig& config,
                          std::ostream* progress = nullptr);

// CSV with exactly these columns:
// instance,method,agents,seed,success,elapsed_ms,cost_s,distance_cells,expanded_nodes
// Failed records leave cost_s and distance_cells empty.
std::string records_csv(const std::vector<BenchRecord>& records);
std::string aggregates_csv(const std::vector<BenchAggregate>& aggregates);

// Table-shaped summary for people: one block per metric, methods as rows,
// agent counts as columns.
std::string summary_table(const std::vector<BenchAggregate>& aggregates);

// Drops wall-clock columns (elapsed_ms / median_ms) from a CSV produced by
// the emitters above, for determinism comparisons.
std::string strip_timing_columns(const std::string& csv);

// Median of a sample (average of the middle two for even sizes).
double median(std::vector<double> values);

}  // namespace pmcbs
