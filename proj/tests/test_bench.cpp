#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <deque>
#include <sstream>
#include <vector>

#include "pmcbs/bench.hpp"

using namespace pmcbs;

namespace {

const char* kTheta =
    "height 3\n"
    "width 5\n"
    "map\n"
    ".....\n"
    ".@.@.\n"
    ".....\n";

int formula_regions(const CorridorMapParams& p) {
  return 4 * p.stubs + 5 * (p.rails - 1) * (p.avenues - 1) - 2 * (p.rails - 2) * (p.avenues - 2) -
         5;
}

bool has_2x2_free(const GridMap& g) {
  for (int y = 0; y + 1 < g.height(); ++y)
    for (int x = 0; x + 1 < g.width(); ++x)
      if (g.free_at({x, y}) && g.free_at({x + 1, y}) && g.free_at({x, y + 1}) &&
          g.free_at({x + 1, y + 1}))
        return true;
  return false;
}

int component_size(const GridMap& g) {
  Cell first{-1, -1};
  for (int y = 0; y < g.height() && first.x < 0; ++y)
    for (int x = 0; x < g.width() && first.x < 0; ++x)
      if (g.free_at({x, y})) first = {x, y};
  if (first.x < 0) return 0;
  std::vector<char> seen(static_cast<std::size_t>(g.width()) * g.height(), 0);
  std::deque<Cell> q{first};
  seen[g.idx(first)] = 1;
  int n = 1;
  while (!q.empty()) {
    Cell c = q.front();
    q.pop_front();
    for (const Cell& nb : g.neighbors4(c))
      if (!seen[g.idx(nb)]) {
        seen[g.idx(nb)] = 1;
        ++n;
        q.push_back(nb);
      }
  }
  return n;
}

}  // namespace

TEST_CASE("median averages the middle pair") {
  CHECK(median({3.0}) == 3.0);
  CHECK(median({5.0, 1.0, 3.0}) == 3.0);
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK(std::isnan(median({})));
}

TEST_CASE("the corridor-map generator keeps its invariants across seeds") {
  CorridorMapParams p;  // defaults drive the shipped benchmark map
  CHECK(formula_regions(p) == 98);
  for (std::uint64_t seed : {1ull, 2ull, 9ull}) {
    INFO("seed " << seed);
    p.seed = seed;
    GridMap g = generate_corridor_map(p);
    CHECK(g.width() == p.width);
    CHECK(g.height() == p.height);
    CHECK(g.free_count() == p.free_cells);
    CHECK(!has_2x2_free(g));
    CHECK(component_size(g) == p.free_cells);
    TopometricMap tm = segment_corridor_grid(g);
    CHECK(static_cast<int>(tm.regions().size()) == formula_regions(p));
  }
}

TEST_CASE("the region count follows the mesh formula on other shapes") {
  CorridorMapParams p;
  p.rails = 2;
  p.avenues = 4;
  p.stubs = 10;
  p.free_cells = 230;
  CHECK(formula_regions(p) == 50);
  for (std::uint64_t seed : {1ull, 4ull}) {
    p.seed = seed;
    GridMap g = generate_corridor_map(p);
    TopometricMap tm = segment_corridor_grid(g);
    CHECK(static_cast<int>(tm.regions().size()) == 50);
  }
}

TEST_CASE("the generator is deterministic and seed-sensitive") {
  CorridorMapParams p;
  const std::string once = save_grid(generate_corridor_map(p));
  CHECK(once == save_grid(generate_corridor_map(p)));
  p.seed = 2;
  CHECK(once != save_grid(generate_corridor_map(p)));
}

TEST_CASE("bad generator parameters are rejected") {
  CorridorMapParams p;
  SUBCASE("mesh too small") {
    p.rails = 1;
    CHECK_THROWS_AS(generate_corridor_map(p), std::invalid_argument);
  }
  SUBCASE("negative stubs") {
    p.stubs = -1;
    CHECK_THROWS_AS(generate_corridor_map(p), std::invalid_argument);
  }
  SUBCASE("rails do not divide the height") {
    p.rails = 5;  // span of 30 rows is not a multiple of 4
    CHECK_THROWS_AS(generate_corridor_map(p), std::invalid_argument);
  }
  SUBCASE("too many avenues") {
    p.avenues = 8;
    CHECK_THROWS_AS(generate_corridor_map(p), std::invalid_argument);
  }
  SUBCASE("free-cell target below the stub floor") {
    p.free_cells = 100;
    CHECK_THROWS_AS(generate_corridor_map(p), std::invalid_argument);
  }
}

TEST_CASE("instance generation draws distinct regions deterministically") {
  GridMap g = parse_grid(kTheta);
  TopometricMap tm = segment_corridor_grid(g);
  const PlannerParams params = PlannerParams::defaults();

  auto batch = generate_instances(tm, 3, 20, 42, params);
  REQUIRE(batch.size() == 20);
  for (const MapfInstance& inst : batch) {
    CHECK(inst.map == &tm);
    REQUIRE(inst.starts.size() == 3);
    REQUIRE(inst.goals.size() == 3);
    CHECK_NOTHROW(validate_instance(inst));
    for (const Cell& s : inst.starts) CHECK(s == tm.region(tm.region_of(s)).cells.front());
    for (const Cell& go : inst.goals) CHECK(go == tm.region(tm.region_of(go)).cells.front());
  }

  auto again = generate_instances(tm, 3, 20, 42, params);
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CHECK(batch[i].starts == again[i].starts);
    CHECK(batch[i].goals == again[i].goals);
  }
  auto other = generate_instances(tm, 3, 20, 43, params);
  bool any_diff = false;
  for (std::size_t i = 0; i < batch.size(); ++i)
    if (batch[i].starts != other[i].starts || batch[i].goals != other[i].goals) any_diff = true;
  CHECK(any_diff);

  CHECK_THROWS_AS(generate_instances(tm, 0, 1, 1, params), std::invalid_argument);
  CHECK_THROWS_AS(generate_instances(tm, 1, 0, 1, params), std::invalid_argument);
  CHECK_THROWS_AS(generate_instances(tm, 6, 1, 1, params), std::invalid_argument);
}

TEST_CASE("record and aggregate emitters freeze the exact layout") {
  BenchRecord ok;
  ok.instance = 0;
  ok.method = "pm-cbs";
  ok.agents = 4;
  ok.seed = 7;
  ok.success = true;
  ok.elapsed_ms = 12.5;
  ok.cost_s = 33.8;
  ok.distance_cells = 26.0;
  ok.expanded_nodes = 5;
  BenchRecord fail;
  fail.instance = 1;
  fail.method = "cbs";
  fail.agents = 4;
  fail.seed = 7;
  fail.success = false;
  fail.elapsed_ms = 30000.0;
  fail.expanded_nodes = 88;

  const std::string csv = records_csv({ok, fail});
  CHECK(csv ==
        "instance,method,agents,seed,success,elapsed_ms,cost_s,distance_cells,expanded_nodes\n"
        "0,pm-cbs,4,7,1,12.5,33.8,26,5\n"
        "1,cbs,4,7,0,30000,,,88\n");
  CHECK(strip_timing_columns(csv) ==
        "instance,method,agents,seed,success,cost_s,distance_cells,expanded_nodes\n"
        "0,pm-cbs,4,7,1,33.8,26,5\n"
        "1,cbs,4,7,0,,,88\n");
  // A second strip is a no-op: the timing columns are already gone.
  CHECK(strip_timing_columns(strip_timing_columns(csv)) == strip_timing_columns(csv));

  BenchAggregate a;
  a.method = "pm-ecbs";
  a.agents = 8;
  a.instances = 100;
  a.solved = 99;
  a.success_pct = 99.0;
  a.median_ms = 18.25;
  a.mean_distance = 41.5;
  a.median_expanded = 12.0;
  BenchAggregate none;
  none.method = "ecbs";
  none.agents = 8;
  none.instances = 100;

  const std::string agg = aggregates_csv({a, none});
  CHECK(agg ==
        "method,agents,instances,solved,success_pct,median_ms,mean_distance_cells,"
        "median_expanded_nodes\n"
        "pm-ecbs,8,100,99,99,18.25,41.5,12\n"
        "ecbs,8,100,0,0,,,\n");
  CHECK(strip_timing_columns(agg) ==
        "method,agents,instances,solved,success_pct,mean_distance_cells,"
        "median_expanded_nodes\n"
        "pm-ecbs,8,100,99,99,41.5,12\n"
        "ecbs,8,100,0,0,,\n");

  const std::string table = summary_table({a, none});
  CHECK(table.find("Success rate (%)") != std::string::npos);
  CHECK(table.find("Median time (ms)") != std::string::npos);
  CHECK(table.find("Average distance (cells)") != std::string::npos);
  CHECK(table.find("Median expanded nodes") != std::string::npos);
  CHECK(table.find("pm-ecbs") != std::string::npos);
  CHECK(table.find("ecbs") != std::string::npos);
}

TEST_CASE("a small benchmark runs every method on the same instances") {
  GridMap g = parse_grid(kTheta);
  TopometricMap tm = segment_corridor_grid(g);
  BenchConfig cfg;
  cfg.agent_counts = {2, 3};
  cfg.instances = 5;
  cfg.timeout_s = 2.0;
  cfg.seed = 7;

  std::ostringstream progress;
  BenchResult res = run_benchmark(tm, cfg, &progress);
  REQUIRE(res.records.size() == 2 * 4 * 5);
  REQUIRE(res.aggregates.size() == 2 * 4);
  CHECK(progress.str().find("agents=2 method=pm-cbs solved") != std::string::npos);

  std::size_t k = 0;
  for (int agents : cfg.agent_counts)
    for (const std::string& method : cfg.methods)
      for (int i = 0; i < cfg.instances; ++i, ++k) {
        const BenchRecord& r = res.records[k];
        CHECK(r.instance == i);
        CHECK(r.method == method);
        CHECK(r.agents == agents);
        CHECK(r.seed == cfg.seed);
        CHECK(r.valid);
        if (r.success) {
          // Zero is legal: a start drawn in the goal region costs nothing.
          CHECK(r.cost_s >= 0.0);
          CHECK(r.distance_cells >= 0.0);
        }
      }

  // Almost everything solves in milliseconds here. The one exception is a
  // three-agent rotation that the continuous solvers churn on until the
  // deadline, which is exactly what the success-rate metric is for.
  for (const BenchAggregate& a : res.aggregates) {
    CHECK(a.instances == 5);
    CHECK(a.solved >= 4);
    CHECK(a.success_pct == 100.0 * a.solved / a.instances);
    if (a.agents == 2) CHECK(a.solved == 5);
  }

  // Identical runs agree byte-for-byte once wall-clock columns are gone,
  // and a worker pool must not change results or their order.
  BenchResult rerun = run_benchmark(tm, cfg, nullptr);
  CHECK(strip_timing_columns(records_csv(res.records)) ==
        strip_timing_columns(records_csv(rerun.records)));
  CHECK(strip_timing_columns(aggregates_csv(res.aggregates)) ==
        strip_timing_columns(aggregates_csv(rerun.aggregates)));
  BenchConfig par = cfg;
  par.jobs = 2;
  BenchResult parallel = run_benchmark(tm, par, nullptr);
  CHECK(strip_timing_columns(records_csv(res.records)) ==
        strip_timing_columns(records_csv(parallel.records)));
}

TEST_CASE("bad benchmark configurations are rejected") {
  GridMap g = parse_grid(kTheta);
  TopometricMap tm = segment_corridor_grid(g);
  BenchConfig cfg;
  cfg.agent_counts = {2};
  cfg.instances = 1;
  SUBCASE("unknown method") {
    cfg.methods = {"pm-cbs", "astar"};
    CHECK_THROWS_AS(run_benchmark(tm, cfg), std::invalid_argument);
  }
  SUBCASE("no methods") {
    cfg.methods.clear();
    CHECK_THROWS_AS(run_benchmark(tm, cfg), std::invalid_argument);
  }
  SUBCASE("no agent counts") {
    cfg.agent_counts.clear();
    CHECK_THROWS_AS(run_benchmark(tm, cfg), std::invalid_argument);
  }
  SUBCASE("zero instances") {
    cfg.instances = 0;
    CHECK_THROWS_AS(run_benchmark(tm, cfg), std::invalid_argument);
  }
  SUBCASE("non-positive timeout") {
    cfg.timeout_s = 0.0;
    CHECK_THROWS_AS(run_benchmark(tm, cfg), std::invalid_argument);
  }
  SUBCASE("zero jobs") {
    cfg.jobs = 0;
    CHECK_THROWS_AS(run_benchmark(tm, cfg), std::invalid_argument);
  }
}
