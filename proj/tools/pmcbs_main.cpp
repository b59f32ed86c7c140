#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pmcbs/bench.hpp"
#include "pmcbs/grid_cbs.hpp"
#include "pmcbs/high_level.hpp"
#include "pmcbs/io.hpp"
#include "pmcbs/low_level.hpp"
#include "pmcbs/topo_map.hpp"

namespace {

using namespace pmcbs;

std::string fmt(const char* spec, double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

int cmd_segment(const std::string& grid_path, const std::string& out_path) {
  const GridMap g = load_grid_file(grid_path);
  const TopometricMap map = segment_corridor_grid(g);
  write_text_file(out_path, save_topo_json(map));
  std::cout << map.regions().size() << " regions, " << map.openings().size() << " openings\n";
  return 0;
}

struct SolveArgs {
  std::string topo, agents, method, out;
  double omega = 1.2, speed = 1.0, margin = 1.3, timeout = 30.0;
};

int cmd_solve(const SolveArgs& a) {
  const TopometricMap map = load_topo_file(a.topo);
  const std::vector<AgentSpec> agents = parse_agents_json(read_text_file(a.agents));
  if (agents.empty()) throw std::runtime_error("agents file lists no agents");

  std::vector<Cell> starts, goals;
  SolutionDoc doc;
  doc.method = a.method;
  for (const AgentSpec& s : agents) {
    starts.push_back(s.start);
    goals.push_back(s.goal);
    doc.agent_ids.push_back(s.id);
  }

  bool solved = false;
  if (a.method == "pm-cbs" || a.method == "pm-ecbs") {
    MapfInstance inst;
    inst.map = &map;
    inst.starts = starts;
    inst.goals = goals;
    inst.params = PlannerParams::defaults(a.speed, a.margin);
    SolverOptions opt;
    opt.timeout_s = a.timeout;
    const Solution sol =
        a.method == "pm-cbs" ? solve_cbs(inst, opt) : solve_ecbs(inst, a.omega, opt);
    solved = sol.status == SolveStatus::kSolved;
    doc.status = to_string(sol.status);
    doc.cost = sol.cost;
    doc.expanded_nodes = sol.expanded_ct_nodes;
    doc.elapsed_ms = sol.elapsed_ms;
    doc.pm_paths = sol.paths;
  } else {
    GridMapfInstance inst{&map.grid(), starts, goals};
    GridSolverOptions opt;
    opt.timeout_s = a.timeout;
    const GridSolution sol =
        a.method == "cbs" ? solve_grid_cbs(inst, opt) : solve_grid_ecbs(inst, a.omega, opt);
    solved = sol.status == SolveStatus::kSolved;
    doc.status = to_string(sol.status);
    doc.cost = sol.cost;
    doc.expanded_nodes = sol.expanded_ct_nodes;
    doc.elapsed_ms = sol.elapsed_ms;
    doc.grid_paths = sol.paths;
  }

  write_text_file(a.out, solution_to_json(doc));
  std::cout << "status=" << doc.status << " cost=" << fmt("%.9g", doc.cost)
            << " expanded=" << doc.expanded_nodes
            << " elapsed_ms=" << fmt("%.3f", doc.elapsed_ms) << "\n";
  return solved ? 0 : 2;
}

void print_violation(const Violation& v) {
  std::cout << v.kind << " agent " << v.agent_i;
  if (v.agent_j >= 0) std::cout << " vs " << v.agent_j;
  if (v.place >= 0) std::cout << " at " << v.place;
  std::cout << " t=" << fmt("%.9g", v.time) << ": " << v.detail << "\n";
}

int cmd_check(const std::string& topo_path, const std::string& solution_path) {
  const TopometricMap map = load_topo_file(topo_path);
  const SolutionDoc doc = parse_solution_json(read_text_file(solution_path));
  if (doc.status != "solved") {
    std::cout << "solution status is '" << doc.status << "', nothing to verify\n";
    return 1;
  }
  const std::size_t n = doc.agent_ids.size();

  if (doc.is_grid()) {
    if (doc.grid_paths.size() != n) {
      std::cout << "solution lists " << n << " agents but " << doc.grid_paths.size()
                << " paths\n";
      return 1;
    }
    GridMapfInstance inst;
    inst.grid = &map.grid();
    for (const DiscretePath& p : doc.grid_paths) {
      if (p.cells.empty()) {
        std::cout << "empty path\n";
        return 1;
      }
      inst.starts.push_back(p.cells.front());
      inst.goals.push_back(p.cells.back());
    }
    const std::vector<GridViolation> viol = validate_grid_solution(inst, doc.grid_paths);
    for (const GridViolation& v : viol) {
      std::cout << v.kind << " agent " << v.agent_i;
      if (v.agent_j >= 0) std::cout << " vs " << v.agent_j;
      std::cout << " cell (" << v.cell.x << "," << v.cell.y << ") t=" << v.t << "\n";
    }
    if (!viol.empty()) return 1;
  } else {
    if (doc.pm_paths.size() != n) {
      std::cout << "solution lists " << n << " agents but " << doc.pm_paths.size() << " paths\n";
      return 1;
    }
    MapfInstance inst;
    inst.map = &map;
    for (const TimedPath& p : doc.pm_paths) {
      if (p.visits.empty() || p.visits.front().waypoints.empty() ||
          p.visits.back().waypoints.empty()) {
        std::cout << "empty path\n";
        return 1;
      }
      inst.starts.push_back(p.visits.front().waypoints.front());
      inst.goals.push_back(p.visits.back().waypoints.back());
    }
    const ValidationReport rep = validate_solution(inst, doc.pm_paths);
    for (const Violation& v : rep.structural) print_violation(v);
    for (const Violation& v : rep.conflicts) print_violation(v);
    for (const Violation& v : rep.constraint_violations) print_violation(v);
    if (!rep.ok()) return 1;
  }
  std::cout << "ok\n";
  return 0;
}

struct BenchArgs {
  std::string topo, grid, out_dir;
  BenchConfig cfg;
};

int cmd_bench(const BenchArgs& a) {
  const TopometricMap map = load_topo_file(a.topo);
  if (!a.grid.empty()) {
    const GridMap g = load_grid_file(a.grid);
    if (save_grid(g) != save_grid(map.grid()))
      throw std::runtime_error("grid file does not match the grid embedded in the topometric map");
  }
  std::filesystem::create_directories(a.out_dir);
  const BenchResult res = run_benchmark(map, a.cfg, &std::cerr);
  write_text_file((std::filesystem::path(a.out_dir) / "records.csv").string(),
                  records_csv(res.records));
  write_text_file((std::filesystem::path(a.out_dir) / "aggregates.csv").string(),
                  aggregates_csv(res.aggregates));
  std::cout << summary_table(res.aggregates);

  long long invalid = 0;
  for (const BenchRecord& r : res.records)
    if (r.success && !r.valid) ++invalid;
  if (invalid > 0) {
    std::cout << "INVALID SOLUTIONS: " << invalid << " solved runs failed validation\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Continuous-time multi-agent path finding on topometric corridor maps"};
  app.require_subcommand(1);

  std::string seg_grid, seg_out;
  CLI::App* seg = app.add_subcommand("segment", "Segment a corridor grid into a topometric map");
  seg->add_option("--grid", seg_grid, "corridor grid file ('.'/'@' rows)")->required();
  seg->add_option("--out", seg_out, "output topometric map JSON")->required();

  SolveArgs sa;
  CLI::App* solve = app.add_subcommand("solve", "Solve one multi-agent instance");
  solve->add_option("--topo", sa.topo, "topometric map JSON")->required();
  solve->add_option("--agents", sa.agents, "agents JSON [{id,start,goal}]")->required();
  solve->add_option("--method", sa.method, "pm-cbs | pm-ecbs | cbs | ecbs")
      ->required()
      ->check(CLI::IsMember({"pm-cbs", "pm-ecbs", "cbs", "ecbs"}));
  solve->add_option("--omega", sa.omega, "suboptimality factor for the ecbs variants");
  solve->add_option("--speed", sa.speed, "worst-case speed, cells per second");
  solve->add_option("--margin", sa.margin, "traversal-time inflation margin");
  solve->add_option("--timeout", sa.timeout, "solver timeout, seconds");
  solve->add_option("--out", sa.out, "output solution JSON")->required();

  std::string chk_topo, chk_solution;
  CLI::App* check = app.add_subcommand("check", "Validate a solution file against a map");
  check->add_option("--topo", chk_topo, "topometric map JSON")->required();
  check->add_option("--solution", chk_solution, "solution JSON to verify")->required();

  BenchArgs ba;
  CLI::App* bench = app.add_subcommand("bench", "Run the seeded benchmark protocol");
  bench->add_option("--topo", ba.topo, "topometric map JSON")->required();
  bench->add_option("--grid", ba.grid, "raw grid file; must match the map when given");
  bench->add_option("--agents", ba.cfg.agent_counts, "agent counts, e.g. 4,6,8,10")
      ->delimiter(',');
  bench->add_option("--methods", ba.cfg.methods, "subset of pm-cbs,pm-ecbs,cbs,ecbs")
      ->delimiter(',');
  bench->add_option("--instances", ba.cfg.instances, "instances per agent count");
  bench->add_option("--seed", ba.cfg.seed, "master seed");
  bench->add_option("--timeout", ba.cfg.timeout_s, "per-solve timeout, seconds");
  bench->add_option("--omega", ba.cfg.omega, "suboptimality factor for the ecbs variants");
  bench->add_option("--speed", ba.cfg.r_speed, "worst-case speed, cells per second");
  bench->add_option("--margin", ba.cfg.i_margin, "traversal-time inflation margin");
  bench->add_option("--jobs", ba.cfg.jobs, "worker threads");
  bench->add_option("--out-dir", ba.out_dir, "directory for records.csv / aggregates.csv")
      ->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (seg->parsed()) return cmd_segment(seg_grid, seg_out);
    if (solve->parsed()) return cmd_solve(sa);
    if (check->parsed()) return cmd_check(chk_topo, chk_solution);
    if (bench->parsed()) return cmd_bench(ba);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
