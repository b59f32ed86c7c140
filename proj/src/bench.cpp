#include "pmcbs/bench.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace pmcbs {

namespace {

// splitmix64 finisher; decorrelates (seed, agent count) streams.
std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

std::string fmt_double(double v) {
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

bool known_method(const std::string& m) {
  return m == "pm-cbs" || m == "pm-ecbs" || m == "cbs" || m == "ecbs";
}

}  // namespace

GridMap generate_corridor_map(const CorridorMapParams& p) {
  if (p.rails < 2 || p.avenues < 2)
    throw std::invalid_argument("corridor map: need at least a 2x2 mesh");
  if (p.stubs < 0) throw std::invalid_argument("corridor map: negative stub count");
  // Rails sit three rows in from the top and bottom and are spread evenly;
  // the outermost avenues hug the side walls and the interior ones are
  // seeded, at least six columns apart so stubs fit between them.
  const int span_y = p.height - 8;
  if (span_y < 2 || span_y % (p.rails - 1) != 0)
    throw std::invalid_argument("corridor map: rails do not divide the grid evenly");
  const int dy = span_y / (p.rails - 1);
  if (dy < 4) throw std::invalid_argument("corridor map: rails too dense for one-cell corridors");

  std::mt19937_64 rng(p.seed);
  std::vector<int> ry(static_cast<std::size_t>(p.rails));
  for (int k = 0; k < p.rails; ++k) ry[static_cast<std::size_t>(k)] = 4 + k * dy;
  const int ax_min = 2, ax_max = p.width - 2, ax_sep = 6;
  if (ax_max - ax_min < (p.avenues - 1) * ax_sep)
    throw std::invalid_argument("corridor map: too many avenues for the grid width");
  std::vector<int> ax;
  for (int attempt = 0;; ++attempt) {
    if (attempt >= 10000)
      throw std::runtime_error("corridor map: could not place avenues for this seed");
    ax.assign(1, ax_min);
    for (int k = 0; k < p.avenues - 2; ++k)
      ax.push_back(ax_min + ax_sep + static_cast<int>(rng() % (ax_max - ax_min - 2 * ax_sep + 1)));
    ax.push_back(ax_max);
    std::sort(ax.begin(), ax.end());
    bool ok = true;
    for (std::size_t k = 1; k < ax.size(); ++k)
      if (ax[k] - ax[k - 1] < ax_sep) ok = false;
    if (ok) break;
  }

  const int base_cells = p.rails * (ax.back() - ax.front() + 1) +
                         p.avenues * (ry.back() - ry.front() + 1) - p.rails * p.avenues;
  const int stub_budget = p.free_cells - base_cells;
  if (stub_budget < 2 * p.stubs)
    throw std::invalid_argument("corridor map: free-cell target too small for the stubs");

  struct StubSite {
    Cell base;
    int dx, dy;
  };
  std::vector<StubSite> sites;
  auto near_any = [](int v, const std::vector<int>& lines) {
    for (int l : lines)
      if (std::abs(v - l) < 2) return true;
    return false;
  };
  for (int r = 0; r < p.rails; ++r)
    for (int x = ax.front() + 2; x <= ax.back() - 2; ++x) {
      if (near_any(x, ax)) continue;
      if (r > 0) sites.push_back({{x, ry[static_cast<std::size_t>(r)]}, 0, -1});
      if (r + 1 < p.rails) sites.push_back({{x, ry[static_cast<std::size_t>(r)]}, 0, 1});
    }
  for (int a = 0; a < p.avenues; ++a)
    for (int y = ry.front() + 2; y <= ry.back() - 2; ++y) {
      if (near_any(y, ry)) continue;
      if (a > 0) sites.push_back({{ax[static_cast<std::size_t>(a)], y}, -1, 0});
      if (a + 1 < p.avenues) sites.push_back({{ax[static_cast<std::size_t>(a)], y}, 1, 0});
    }

  // Carving can paint itself into a corner (stubs blocking each other before
  // the free-cell budget is spent), so the whole decoration step retries
  // with fresh draws from the same deterministic stream.
  for (int attempt = 0; attempt < 1000; ++attempt) {
    GridMap g(p.width, p.height, true);
    for (int y : ry)
      for (int x = ax.front(); x <= ax.back(); ++x) g.set_occupied({x, y}, false);
    for (int x : ax)
      for (int y = ry.front(); y <= ry.back(); ++y) g.set_occupied({x, y}, false);

    // A stub cell may touch exactly one free cell: its predecessor. That
    // keeps stubs one cell wide, apart from everything, and 2x2-free.
    auto can_carve = [&](Cell c, Cell prev) {
      if (!g.in_bounds(c) || !g.occupied(c)) return false;
      const Cell nbrs[4] = {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
      for (const Cell& n : nbrs) {
        if (!g.in_bounds(n)) continue;
        if (!g.occupied(n) && !(n == prev)) return false;
      }
      return true;
    };
    // Bases two cells apart (and enumerated two cells from crossings) keep
    // junction cells non-adjacent, which the region accounting relies on.
    std::vector<Cell> bases, tips;
    auto base_ok = [&](Cell c) {
      for (const Cell& b : bases)
        if (std::abs(b.x - c.x) + std::abs(b.y - c.y) <= 1) return false;
      return true;
    };
    auto free_run = [&](const StubSite& s) {
      int run = 0;
      Cell prev = s.base, c{s.base.x + s.dx, s.base.y + s.dy};
      while (can_carve(c, prev)) {
        ++run;
        prev = c;
        c = {c.x + s.dx, c.y + s.dy};
      }
      return run;
    };

    std::vector<StubSite> chosen;
    std::size_t scan = 0;
    int capacity = 0;
    while (static_cast<int>(chosen.size()) < p.stubs && scan < sites.size()) {
      const std::size_t pick = scan + rng() % (sites.size() - scan);
      std::swap(sites[scan], sites[pick]);
      const StubSite s = sites[scan++];
      if (!base_ok(s.base)) continue;
      const int run = free_run(s);
      if (run < 2) continue;
      g.set_occupied({s.base.x + s.dx, s.base.y + s.dy}, false);
      g.set_occupied({s.base.x + 2 * s.dx, s.base.y + 2 * s.dy}, false);
      bases.push_back(s.base);
      tips.push_back({s.base.x + 2 * s.dx, s.base.y + 2 * s.dy});
      chosen.push_back(s);
      capacity += run - 2;
    }
    // Straight-line growing room must cover the budget with slack, since
    // stubs grown later can still block one another.
    if (static_cast<int>(chosen.size()) < p.stubs ||
        capacity < stub_budget - 2 * p.stubs + 4)
      continue;

    // Lengthen seeded stubs one cell at a time until the free-cell budget
    // is spent; a stub that can no longer grow is retired.
    int budget = stub_budget - 2 * p.stubs;
    std::vector<std::size_t> growable(tips.size());
    std::iota(growable.begin(), growable.end(), std::size_t{0});
    while (budget > 0 && !growable.empty()) {
      const std::size_t gi = rng() % growable.size();
      const std::size_t si = growable[gi];
      const Cell tip = tips[si];
      const Cell next{tip.x + chosen[si].dx, tip.y + chosen[si].dy};
      if (!can_carve(next, tip)) {
        growable.erase(growable.begin() + static_cast<std::ptrdiff_t>(gi));
        continue;
      }
      g.set_occupied(next, false);
      tips[si] = next;
      --budget;
    }
    if (budget > 0) continue;

    int free_count = 0;
    for (int y = 0; y < p.height; ++y)
      for (int x = 0; x < p.width; ++x)
        if (!g.occupied({x, y})) ++free_count;
    if (free_count != p.free_cells)
      throw std::logic_error("corridor map: free-cell accounting is off");
    return g;
  }
  throw std::runtime_error("corridor map: could not satisfy free-cell budget for this seed");
}

std::vector<MapfInstance> generate_instances(const TopometricMap& map, int n_agents, int count,
                                             std::uint64_t seed, const PlannerParams& params) {
  const int regions = static_cast<int>(map.regions().size());
  if (n_agents < 1) throw std::invalid_argument("generate_instances: need at least one agent");
  if (count < 1) throw std::invalid_argument("generate_instances: need at least one instance");
  if (n_agents > regions)
    throw std::invalid_argument("generate_instances: more agents than regions");
  std::mt19937_64 rng(seed);
  auto sample_regions = [&] {
    std::vector<int> ids(static_cast<std::size_t>(regions));
    std::iota(ids.begin(), ids.end(), 0);
    for (int k = 0; k < n_agents; ++k) {
      const std::size_t pick = k + rng() % (ids.size() - k);
      std::swap(ids[static_cast<std::size_t>(k)], ids[pick]);
    }
    ids.resize(static_cast<std::size_t>(n_agents));
    return ids;
  };
  std::vector<MapfInstance> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int c = 0; c < count; ++c) {
    MapfInstance inst;
    inst.map = &map;
    inst.params = params;
    for (int r : sample_regions()) inst.starts.push_back(map.region(r).cells.front());
    for (int r : sample_regions()) inst.goals.push_back(map.region(r).cells.front());
    out.push_back(std::move(inst));
  }
  return out;
}

double median(std::vector<double> values) {
  if (values.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

BenchResult run_benchmark(const TopometricMap& map, const BenchConfig& cfg,
                          std::ostream* progress) {
  if (cfg.methods.empty()) throw std::invalid_argument("bench: no methods");
  for (const std::string& m : cfg.methods)
    if (!known_method(m)) throw std::invalid_argument("bench: unknown method " + m);
  if (cfg.agent_counts.empty()) throw std::invalid_argument("bench: no agent counts");
  for (int n : cfg.agent_counts)
    if (n < 1) throw std::invalid_argument("bench: agent count must be >= 1");
  if (cfg.instances < 1) throw std::invalid_argument("bench: instances must be >= 1");
  if (!(cfg.timeout_s > 0)) throw std::invalid_argument("bench: timeout must be positive");
  if (cfg.jobs < 1) throw std::invalid_argument("bench: jobs must be >= 1");

  const PlannerParams params = PlannerParams::defaults(cfg.r_speed, cfg.i_margin);
  const RegionDistanceTable dists(map);

  std::vector<std::vector<MapfInstance>> instance_sets;
  for (int n : cfg.agent_counts)
    instance_sets.push_back(
        generate_instances(map, n, cfg.instances, mix_seed(cfg.seed, n), params));

  struct Task {
    int count_idx, method_idx, instance_idx;
  };
  std::vector<Task> tasks;
  for (int c = 0; c < static_cast<int>(cfg.agent_counts.size()); ++c)
    for (int m = 0; m < static_cast<int>(cfg.methods.size()); ++m)
      for (int i = 0; i < cfg.instances; ++i) tasks.push_back({c, m, i});

  std::vector<BenchRecord> records(tasks.size());
  std::atomic<std::size_t> next{0};

  auto run_task = [&](const Task& t) {
    const MapfInstance& inst = instance_sets[t.count_idx][t.instance_idx];
    const std::string& method = cfg.methods[t.method_idx];
    BenchRecord rec;
    rec.instance = t.instance_idx;
    rec.method = method;
    rec.agents = cfg.agent_counts[t.count_idx];
    rec.seed = cfg.seed;
    if (method == "pm-cbs" || method == "pm-ecbs") {
      SolverOptions opt;
      opt.timeout_s = cfg.timeout_s;
      opt.dists = &dists;
      Solution sol = method == "pm-cbs" ? solve_cbs(inst, opt)
                                        : solve_ecbs(inst, cfg.omega, opt);
      rec.success = sol.status == SolveStatus::kSolved;
      rec.elapsed_ms = sol.elapsed_ms;
      rec.expanded_nodes = sol.expanded_ct_nodes;
      if (rec.success) {
        rec.cost_s = sol.cost;
        double dist = 0.0;
        for (const TimedPath& p : sol.paths) dist += p.length_cells;
        rec.distance_cells = dist;
        rec.valid = validate_solution(inst, sol.paths, &sol.constraints).ok();
      }
    } else {
      GridMapfInstance ginst{&map.grid(), inst.starts, inst.goals};
      GridSolverOptions opt;
      opt.timeout_s = cfg.timeout_s;
      GridSolution sol = method == "cbs" ? solve_grid_cbs(ginst, opt)
                                         : solve_grid_ecbs(ginst, cfg.omega, opt);
      rec.success = sol.status == SolveStatus::kSolved;
      rec.elapsed_ms = sol.elapsed_ms;
      rec.expanded_nodes = sol.expanded_ct_nodes;
      if (rec.success) {
        rec.cost_s = sol.cost / cfg.r_speed;
        int dist = 0;
        for (const DiscretePath& p : sol.paths) dist += p.distance();
        rec.distance_cells = dist;
        rec.valid = validate_grid_solution(ginst, sol.paths).empty();
      }
    }
    return rec;
  };

  if (cfg.jobs == 1) {
    for (std::size_t i = 0; i < tasks.size(); ++i) records[i] = run_task(tasks[i]);
  } else {
    auto worker = [&] {
      for (;;) {
        const std::size_t i = next.fetch_add(1);
        if (i >= tasks.size()) return;
        records[i] = run_task(tasks[i]);
      }
    };
    std::vector<std::thread> pool;
    for (int w = 0; w < cfg.jobs; ++w) pool.emplace_back(worker);
    for (std::thread& th : pool) th.join();
  }

  BenchResult result;
  result.records = std::move(records);
  for (int c = 0; c < static_cast<int>(cfg.agent_counts.size()); ++c)
    for (int m = 0; m < static_cast<int>(cfg.methods.size()); ++m) {
      BenchAggregate agg;
      agg.method = cfg.methods[m];
      agg.agents = cfg.agent_counts[c];
      agg.instances = cfg.instances;
      std::vector<double> times, dists_cells, expanded;
      for (const BenchRecord& r : result.records) {
        if (r.method != agg.method || r.agents != agg.agents) continue;
        if (!r.success) continue;
        ++agg.solved;
        times.push_back(r.elapsed_ms);
        dists_cells.push_back(r.distance_cells);
        expanded.push_back(static_cast<double>(r.expanded_nodes));
      }
      agg.success_pct = 100.0 * agg.solved / agg.instances;
      if (agg.solved > 0) {
        agg.median_ms = median(times);
        agg.mean_distance =
            std::accumulate(dists_cells.begin(), dists_cells.end(), 0.0) / agg.solved;
        agg.median_expanded = median(expanded);
      }
      if (progress != nullptr)
        *progress << "agents=" << agg.agents << " method=" << agg.method << " solved "
                  << agg.solved << "/" << agg.instances << "\n";
      result.aggregates.push_back(std::move(agg));
    }
  return result;
}

std::string records_csv(const std::vector<BenchRecord>& records) {
  std::ostringstream out;
  out << "instance,method,agents,seed,success,elapsed_ms,cost_s,distance_cells,expanded_nodes\n";
  for (const BenchRecord& r : records) {
    out << r.instance << ',' << r.method << ',' << r.agents << ',' << r.seed << ','
        << (r.success ? 1 : 0) << ',' << fmt_double(r.elapsed_ms) << ',';
    if (r.success) out << fmt_double(r.cost_s);
    out << ',';
    if (r.success) out << fmt_double(r.distance_cells);
    out << ',' << r.expanded_nodes << '\n';
  }
  return out.str();
}

std::string aggregates_csv(const std::vector<BenchAggregate>& aggregates) {
  std::ostringstream out;
  out << "method,agents,instances,solved,success_pct,median_ms,mean_distance_cells,"
         "median_expanded_nodes\n";
  for (const BenchAggregate& a : aggregates) {
    out << a.method << ',' << a.agents << ',' << a.instances << ',' << a.solved << ','
        << fmt_double(a.success_pct) << ',';
    if (a.solved > 0) out << fmt_double(a.median_ms);
    out << ',';
    if (a.solved > 0) out << fmt_double(a.mean_distance);
    out << ',';
    if (a.solved > 0) out << fmt_double(a.median_expanded);
    out << '\n';
  }
  return out.str();
}

std::string summary_table(const std::vector<BenchAggregate>& aggregates) {
  std::vector<std::string> methods;
  std::vector<int> counts;
  for (const BenchAggregate& a : aggregates) {
    if (std::find(methods.begin(), methods.end(), a.method) == methods.end())
      methods.push_back(a.method);
    if (std::find(counts.begin(), counts.end(), a.agents) == counts.end())
      counts.push_back(a.agents);
  }
  auto find = [&](const std::string& m, int n) -> const BenchAggregate* {
    for (const BenchAggregate& a : aggregates)
      if (a.method == m && a.agents == n) return &a;
    return nullptr;
  };
  struct Metric {
    const char* title;
    double BenchAggregate::*field;
  };
  const Metric metrics[] = {
      {"Success rate (%)", &BenchAggregate::success_pct},
      {"Median time (ms)", &BenchAggregate::median_ms},
      {"Average distance (cells)", &BenchAggregate::mean_distance},
      {"Median expanded nodes", &BenchAggregate::median_expanded},
  };
  std::ostringstream out;
  for (const Metric& metric : metrics) {
    out << metric.title << "\n";
    out << "  method";
    for (int n : counts) {
      char buf[32];
      std::snprintf(buf, sizeof buf, " %9d", n);
      out << buf;
    }
    out << "\n";
    for (const std::string& m : methods) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "  %-8s", m.c_str());
      out << buf;
      for (int n : counts) {
        const BenchAggregate* a = find(m, n);
        if (a == nullptr || (a->solved == 0 && metric.field != &BenchAggregate::success_pct)) {
          std::snprintf(buf, sizeof buf, " %9s", "-");
        } else {
          std::snprintf(buf, sizeof buf, " %9.2f", a->*metric.field);
        }
        out << buf;
      }
      out << "\n";
    }
    out << "\n";
  }
  return out.str();
}

std::string strip_timing_columns(const std::string& csv) {
  std::istringstream in(csv);
  std::ostringstream out;
  std::string line;
  std::vector<std::size_t> drop;
  bool header = true;
  while (std::getline(in, line)) {
    std::vector<std::string> fields;
    std::string cur;
    std::istringstream ls(line);
    while (std::getline(ls, cur, ',')) fields.push_back(cur);
    if (!line.empty() && line.back() == ',') fields.push_back("");
    if (header) {
      for (std::size_t i = 0; i < fields.size(); ++i)
        if (fields[i] == "elapsed_ms" || fields[i] == "median_ms") drop.push_back(i);
      header = false;
    }
    bool first = true;
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (std::find(drop.begin(), drop.end(), i) != drop.end()) continue;
      if (!first) out << ',';
      out << fields[i];
      first = false;
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace pmcbs
