#include "pmcbs/high_level.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <deque>
#include <optional>
#include <queue>
#include <stdexcept>
#include <string>
#include <tuple>
#include <unordered_set>

namespace pmcbs {

void validate_instance(const MapfInstance& inst) {
  if (inst.map == nullptr) throw std::invalid_argument("instance: map missing");
  if (inst.starts.empty()) throw std::invalid_argument("instance: no agents");
  if (inst.starts.size() != inst.goals.size())
    throw std::invalid_argument("instance: starts and goals differ in length");
  inst.params.validate();
  const TopometricMap& m = *inst.map;
  std::vector<int> start_regions, goal_regions;
  for (int a = 0; a < inst.agent_count(); ++a) {
    if (!m.grid().free_at(inst.starts[a]))
      throw std::invalid_argument("instance: start cell occupied or out of bounds");
    if (!m.grid().free_at(inst.goals[a]))
      throw std::invalid_argument("instance: goal cell occupied or out of bounds");
    start_regions.push_back(m.region_of(inst.starts[a]));
    goal_regions.push_back(m.region_of(inst.goals[a]));
  }
  std::sort(start_regions.begin(), start_regions.end());
  if (std::adjacent_find(start_regions.begin(), start_regions.end()) != start_regions.end())
    throw std::invalid_argument("instance: two agents start in the same region");
  std::sort(goal_regions.begin(), goal_regions.end());
  if (std::adjacent_find(goal_regions.begin(), goal_regions.end()) != goal_regions.end())
    throw std::invalid_argument("instance: two agents share a goal region");
}

std::vector<std::pair<int, Interval>> occupancy_intervals(const TimedPath& path) {
  std::vector<std::pair<int, Interval>> out;
  for (std::size_t k = 0; k < path.visits.size(); ++k) {
    const double depart = k + 1 < path.visits.size() ? path.visits[k + 1].entry : kInf;
    out.emplace_back(path.visits[k].region, Interval{path.visits[k].entry, depart});
  }
  return out;
}

namespace {

// One gate crossing of a path: the moment the agent switches regions.
struct Crossing {
  int opening = -1;
  int from_region = -1;
  int to_region = -1;
  double time = 0.0;
  std::size_t entered_visit = 0;
};

std::vector<Crossing> crossings_of(const TopometricMap& map, const TimedPath& p) {
  std::vector<Crossing> out;
  for (std::size_t k = 0; k + 1 < p.visits.size(); ++k) {
    const RegionVisit& a = p.visits[k];
    const RegionVisit& b = p.visits[k + 1];
    if (a.waypoints.empty() || b.waypoints.empty())
      throw std::invalid_argument("path: visit without waypoints");
    const int op = map.opening_between(a.waypoints.back(), b.waypoints.front());
    if (op < 0) throw std::invalid_argument("path: consecutive visits not joined by an opening");
    out.push_back({op, a.region, b.region, b.entry, k + 1});
  }
  return out;
}

// Deterministic ordering of simultaneous conflicts: swaps first, then the
// lower agent pair, then the lower region/opening id.
using ConflictKey = std::tuple<double, int, int, int, int>;

}  // namespace

std::optional<Conflict> detect_first_conflict(const TopometricMap& map,
                                              const std::vector<const TimedPath*>& paths,
                                              double delta_t) {
  const int n = static_cast<int>(paths.size());
  std::vector<std::vector<std::pair<int, Interval>>> occ(n);
  std::vector<std::vector<Crossing>> cross(n);
  for (int i = 0; i < n; ++i) {
    occ[i] = occupancy_intervals(*paths[i]);
    cross[i] = crossings_of(map, *paths[i]);
  }
  std::optional<Conflict> best;
  ConflictKey best_key{};
  auto consider = [&](ConflictKey key, Conflict c) {
    if (!best || key < best_key) {
      best = std::move(c);
      best_key = key;
    }
  };
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      for (const Crossing& ci : cross[i])
        for (const Crossing& cj : cross[j]) {
          if (ci.opening != cj.opening || ci.from_region != cj.to_region ||
              ci.to_region != cj.from_region)
            continue;
          if (!(std::abs(ci.time - cj.time) < delta_t)) continue;
          OpeningConflict oc;
          oc.agent_i = i;
          oc.agent_j = j;
          oc.opening = ci.opening;
          oc.region_i = ci.to_region;
          oc.region_j = cj.to_region;
          oc.interval_i = occ[i][ci.entered_visit].second;
          oc.interval_j = occ[j][cj.entered_visit].second;
          consider({std::max(ci.time, cj.time), 0, i, j, ci.opening}, oc);
        }
      for (const auto& [ri, wi] : occ[i])
        for (const auto& [rj, wj] : occ[j]) {
          if (ri != rj || !overlaps(wi, wj)) continue;
          RegionConflict rc;
          rc.agent_i = i;
          rc.agent_j = j;
          rc.region = ri;
          rc.interval_i = wi;
          rc.interval_j = wj;
          consider({std::max(wi.start, wj.start), 1, i, j, ri}, rc);
        }
    }
  return best;
}

int count_conflicts(const TopometricMap& map, const std::vector<const TimedPath*>& paths,
                    double delta_t) {
  const int n = static_cast<int>(paths.size());
  std::vector<std::vector<std::pair<int, Interval>>> occ(n);
  std::vector<std::vector<Crossing>> cross(n);
  for (int i = 0; i < n; ++i) {
    occ[i] = occupancy_intervals(*paths[i]);
    cross[i] = crossings_of(map, *paths[i]);
  }
  int total = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      for (const Crossing& ci : cross[i])
        for (const Crossing& cj : cross[j])
          if (ci.opening == cj.opening && ci.from_region == cj.to_region &&
              ci.to_region == cj.from_region && std::abs(ci.time - cj.time) < delta_t)
            ++total;
      for (const auto& [ri, wi] : occ[i])
        for (const auto& [rj, wj] : occ[j])
          if (ri == rj && overlaps(wi, wj)) ++total;
    }
  return total;
}

std::pair<AgentConstraint, AgentConstraint> constraints_from_region_conflict(
    const RegionConflict& rc) {
  AgentConstraint for_i{rc.agent_i, {rc.region, rc.interval_j.start, rc.interval_j.end}};
  AgentConstraint for_j{rc.agent_j, {rc.region, rc.interval_i.start, rc.interval_i.end}};
  return {for_i, for_j};
}

std::pair<AgentConstraint, AgentConstraint> constraints_from_opening_conflict(
    const OpeningConflict& oc, double delta_t) {
  // Each agent is barred from its own target region until the opposing agent
  // has cleared through, with a delta_t buffer so neither slips in just ahead.
  AgentConstraint for_i{
      oc.agent_i,
      {oc.region_i, std::max(0.0, oc.interval_j.start - delta_t), oc.interval_j.end}};
  AgentConstraint for_j{
      oc.agent_j,
      {oc.region_j, std::max(0.0, oc.interval_i.start - delta_t), oc.interval_i.end}};
  return {for_i, for_j};
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kSolved: return "solved";
    case SolveStatus::kTimeout: return "timeout";
    case SolveStatus::kInfeasible: return "infeasible";
  }
  return "?";
}

namespace {

struct CTNode {
  int parent = -1;
  int replanned = -1;          // agent replanned relative to parent
  AgentConstraint delta;       // constraint added relative to parent
  int constraints_total = 0;
  std::vector<std::shared_ptr<const TimedPath>> paths;
  double cost = 0.0;
  int conflicts = 0;
};

double sum_cost(const std::vector<std::shared_ptr<const TimedPath>>& paths) {
  double s = 0.0;
  for (const auto& p : paths) s += p->arrival_time;
  return s;
}

std::vector<const TimedPath*> raw_paths(const CTNode& n) {
  std::vector<const TimedPath*> out;
  out.reserve(n.paths.size());
  for (const auto& p : n.paths) out.push_back(p.get());
  return out;
}

// Constraints of one agent at a node, materialised by walking the branch.
ConstraintSet branch_constraints(const std::deque<CTNode>& arena, int node) {
  ConstraintSet cs;
  for (int i = node; i != -1; i = arena[i].parent)
    if (arena[i].parent != -1) cs.add(arena[i].delta.agent, arena[i].delta.constraint);
  return cs;
}

Solution run_ct_search(const MapfInstance& inst, const SolverOptions& opt, bool focal,
                       double omega) {
  validate_instance(inst);
  if (focal && !(omega >= 1.0)) throw std::invalid_argument("omega must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed_s = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };

  Solution sol;
  if (opt.collect_trace) sol.trace = std::make_shared<SearchTrace>();
  auto finish = [&](SolveStatus st) {
    sol.status = st;
    sol.elapsed_ms = elapsed_s() * 1000.0;
    return std::move(sol);
  };

  std::optional<RegionDistanceTable> local_dists;
  const RegionDistanceTable* dists = opt.dists;
  if (dists == nullptr) {
    local_dists.emplace(*inst.map);
    dists = &*local_dists;
  }
  LowLevelPlanner planner(*inst.map, *dists, inst.params);
  const int n = inst.agent_count();

  std::deque<CTNode> arena;
  auto record_trace = [&](const CTNode& node) {
    if (!sol.trace) return;
    SearchTrace::Node t;
    t.parent = node.parent;
    t.replanned_agent = node.replanned;
    t.cost = node.cost;
    t.constraints_total = node.constraints_total;
    for (const auto& p : node.paths)
      t.path_ids.push_back(reinterpret_cast<std::uintptr_t>(p.get()));
    sol.trace->nodes.push_back(std::move(t));
  };

  {
    CTNode root;
    for (int a = 0; a < n; ++a) {
      if (elapsed_s() > opt.timeout_s) return finish(SolveStatus::kTimeout);
      PlanResult r = planner.plan(inst.starts[a], inst.goals[a], nullptr, opt.low_level_budget);
      if (r.status != PlanStatus::kFound) return finish(SolveStatus::kInfeasible);
      r.path.agent = a;
      root.paths.push_back(std::make_shared<const TimedPath>(std::move(r.path)));
    }
    root.cost = sum_cost(root.paths);
    root.conflicts = count_conflicts(*inst.map, raw_paths(root), inst.params.delta_t);
    arena.push_back(std::move(root));
    record_trace(arena.back());
  }

  // The low level is deterministic, so two nodes with equal merged
  // constraint sets are the same node. Splits of commuting conflicts
  // regenerate such sets freely (barring i then j reaches the same set as
  // j then i), and corridor contention thrashes on them; generation skips
  // any set seen before. Keys are the raw bytes of the merged intervals,
  // framed per (agent, region) group.
  std::unordered_set<std::string> seen_sets;
  auto set_key = [&](const ConstraintSet& cs) {
    std::string key;
    auto put = [&key](const void* p, std::size_t bytes) {
      key.append(static_cast<const char*>(p), bytes);
    };
    for (int a = 0; a < n; ++a) {
      const std::map<int, std::vector<Interval>>* regions = cs.for_agent(a);
      if (regions == nullptr) continue;
      for (const auto& [region, ivs] : *regions) {
        const int count = static_cast<int>(ivs.size());
        put(&a, sizeof a);
        put(&region, sizeof region);
        put(&count, sizeof count);
        for (const Interval& iv : ivs) {
          put(&iv.start, sizeof iv.start);
          put(&iv.end, sizeof iv.end);
        }
      }
    }
    return key;
  };

  // Best-first: (cost, conflicts, insertion order). The focal variant scans
  // the open list for the fewest-conflict node within omega of the
  // cheapest; the list stays small enough that a scan is simplest.
  using PqEntry = std::tuple<double, int, int>;
  std::priority_queue<PqEntry, std::vector<PqEntry>, std::greater<PqEntry>> open_pq;
  std::vector<int> open_list;
  if (focal)
    open_list.push_back(0);
  else
    open_pq.emplace(arena[0].cost, arena[0].conflicts, 0);

  while (true) {
    if (elapsed_s() > opt.timeout_s) return finish(SolveStatus::kTimeout);
    int cur = -1;
    if (focal) {
      if (open_list.empty()) return finish(SolveStatus::kInfeasible);
      double min_cost = kInf;
      for (int id : open_list) min_cost = std::min(min_cost, arena[id].cost);
      const double bound = omega * min_cost + 1e-9;
      std::size_t pick = open_list.size();
      auto better = [&](int a, int b) {
        return std::make_tuple(arena[a].conflicts, arena[a].cost, a) <
               std::make_tuple(arena[b].conflicts, arena[b].cost, b);
      };
      for (std::size_t k = 0; k < open_list.size(); ++k)
        if (arena[open_list[k]].cost <= bound &&
            (pick == open_list.size() || better(open_list[k], open_list[pick])))
          pick = k;
      cur = open_list[pick];
      open_list.erase(open_list.begin() + static_cast<std::ptrdiff_t>(pick));
    } else {
      if (open_pq.empty()) return finish(SolveStatus::kInfeasible);
      cur = std::get<2>(open_pq.top());
      open_pq.pop();
    }
    ++sol.expanded_ct_nodes;

    std::optional<Conflict> conflict =
        detect_first_conflict(*inst.map, raw_paths(arena[cur]), inst.params.delta_t);
    if (!conflict) {
      sol.cost = arena[cur].cost;
      for (const auto& p : arena[cur].paths) sol.paths.push_back(*p);
      sol.constraints = branch_constraints(arena, cur);
      return finish(SolveStatus::kSolved);
    }

    std::pair<AgentConstraint, AgentConstraint> split =
        std::holds_alternative<RegionConflict>(*conflict)
            ? constraints_from_region_conflict(std::get<RegionConflict>(*conflict))
            : constraints_from_opening_conflict(std::get<OpeningConflict>(*conflict),
                                                inst.params.delta_t);
    for (const AgentConstraint& ac : {split.first, split.second}) {
      if (elapsed_s() > opt.timeout_s) return finish(SolveStatus::kTimeout);
      ConstraintSet agent_cs = branch_constraints(arena, cur);
      std::vector<Interval> before;
      if (const std::vector<Interval>* v = agent_cs.find(ac.agent, ac.constraint.region))
        before = *v;
      agent_cs.add(ac.agent, ac.constraint);
      // A constraint the branch already absorbs would reproduce the parent's
      // path verbatim; such a child can never resolve the conflict.
      if (*agent_cs.find(ac.agent, ac.constraint.region) == before) continue;
      if (!seen_sets.insert(set_key(agent_cs)).second) continue;
      PlanResult r = planner.plan(inst.starts[ac.agent], inst.goals[ac.agent],
                                  agent_cs.for_agent(ac.agent), opt.low_level_budget);
      if (r.status != PlanStatus::kFound) continue;
      r.path.agent = ac.agent;
      CTNode child;
      child.parent = cur;
      child.replanned = ac.agent;
      child.delta = ac;
      child.constraints_total = arena[cur].constraints_total + 1;
      child.paths = arena[cur].paths;
      child.paths[ac.agent] = std::make_shared<const TimedPath>(std::move(r.path));
      child.cost = sum_cost(child.paths);
      if (child.cost < arena[cur].cost - 1e-9) sol.cost_monotone = false;
      child.conflicts = count_conflicts(*inst.map, raw_paths(child), inst.params.delta_t);
      const int id = static_cast<int>(arena.size());
      arena.push_back(std::move(child));
      record_trace(arena.back());
      if (focal)
        open_list.push_back(id);
      else
        open_pq.emplace(arena[id].cost, arena[id].conflicts, id);
    }
  }
}

}  // namespace

Solution solve_cbs(const MapfInstance& inst, const SolverOptions& opt) {
  return run_ct_search(inst, opt, false, 1.0);
}

Solution solve_ecbs(const MapfInstance& inst, double omega, const SolverOptions& opt) {
  return run_ct_search(inst, opt, true, omega);
}

ValidationReport validate_solution(const MapfInstance& inst, const std::vector<TimedPath>& paths,
                                   const ConstraintSet* constraints) {
  validate_instance(inst);
  if (static_cast<int>(paths.size()) != inst.agent_count())
    throw std::invalid_argument("validate_solution: one path per agent required");
  const TopometricMap& m = *inst.map;
  ValidationReport rep;
  auto note = [](std::vector<Violation>& where, std::string kind, int ai, int aj, int place,
                 double t, std::string detail) {
    where.push_back({std::move(kind), ai, aj, place, t, std::move(detail)});
  };

  for (int a = 0; a < inst.agent_count(); ++a) {
    const TimedPath& p = paths[a];
    if (p.visits.empty()) {
      note(rep.structural, "structure", a, -1, -1, 0.0, "no visits");
      continue;
    }
    if (p.visits.front().entry != 0.0)
      note(rep.structural, "structure", a, -1, p.visits.front().region, p.visits.front().entry,
           "first visit does not start at t=0");
    bool cells_ok = true;
    for (std::size_t k = 0; k < p.visits.size(); ++k) {
      const RegionVisit& v = p.visits[k];
      if (v.region < 0 || v.region >= static_cast<int>(m.regions().size())) {
        note(rep.structural, "structure", a, -1, v.region, v.entry, "unknown region id");
        cells_ok = false;
        continue;
      }
      if (!(v.exit > v.entry))
        note(rep.structural, "structure", a, -1, v.region, v.entry,
             "visit exit not after entry");
      if (v.waypoints.empty()) {
        note(rep.structural, "structure", a, -1, v.region, v.entry, "visit without waypoints");
        cells_ok = false;
        continue;
      }
      for (std::size_t w = 0; w < v.waypoints.size(); ++w) {
        if (!m.grid().free_at(v.waypoints[w]) || m.region_of(v.waypoints[w]) != v.region) {
          note(rep.structural, "structure", a, -1, v.region, v.entry,
               "waypoint outside the visit's region");
          cells_ok = false;
          break;
        }
        if (w > 0) {
          const int dx = std::abs(v.waypoints[w].x - v.waypoints[w - 1].x);
          const int dy = std::abs(v.waypoints[w].y - v.waypoints[w - 1].y);
          if (dx + dy != 1) {
            note(rep.structural, "structure", a, -1, v.region, v.entry,
                 "waypoints not 4-connected");
            cells_ok = false;
            break;
          }
        }
      }
      if (k + 1 < p.visits.size()) {
        if (v.exit != p.visits[k + 1].entry)
          note(rep.structural, "structure", a, -1, v.region, v.exit,
               "gap between visit exit and successor entry");
        if (cells_ok && !p.visits[k + 1].waypoints.empty() &&
            m.opening_between(v.waypoints.back(), p.visits[k + 1].waypoints.front()) < 0)
          note(rep.structural, "structure", a, -1, v.region, v.exit,
               "consecutive visits not joined by an opening");
      } else if (v.exit != kInf) {
        note(rep.structural, "structure", a, -1, v.region, v.exit,
             "last visit must never end");
      }
    }
    if (cells_ok) {
      if (m.region_of(inst.starts[a]) != p.visits.front().region ||
          p.visits.front().waypoints.front() != inst.starts[a])
        note(rep.structural, "structure", a, -1, p.visits.front().region, 0.0,
             "path does not begin at the agent's start cell");
      if (m.region_of(inst.goals[a]) != p.visits.back().region ||
          p.visits.back().waypoints.back() != inst.goals[a])
        note(rep.structural, "structure", a, -1, p.visits.back().region,
             p.visits.back().entry, "path does not end at the agent's goal cell");
    }
  }

  // Pairwise checks on the schedule as written.
  for (int i = 0; i < inst.agent_count(); ++i)
    for (int j = i + 1; j < inst.agent_count(); ++j) {
      for (const RegionVisit& vi : paths[i].visits)
        for (const RegionVisit& vj : paths[j].visits)
          if (vi.region == vj.region && overlaps({vi.entry, vi.exit}, {vj.entry, vj.exit})) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "agents %d and %d share region %d", i, j, vi.region);
            note(rep.conflicts, "region-overlap", i, j, vi.region,
                 std::max(vi.entry, vj.entry), buf);
          }
      const TimedPath& pi = paths[i];
      const TimedPath& pj = paths[j];
      for (std::size_t ki = 0; ki + 1 < pi.visits.size(); ++ki)
        for (std::size_t kj = 0; kj + 1 < pj.visits.size(); ++kj) {
          const RegionVisit& ai = pi.visits[ki];
          const RegionVisit& bi = pi.visits[ki + 1];
          const RegionVisit& aj = pj.visits[kj];
          const RegionVisit& bj = pj.visits[kj + 1];
          if (ai.region != bj.region || bi.region != aj.region) continue;
          if (ai.waypoints.empty() || bi.waypoints.empty() || aj.waypoints.empty() ||
              bj.waypoints.empty())
            continue;
          const int oi = m.opening_between(ai.waypoints.back(), bi.waypoints.front());
          const int oj = m.opening_between(aj.waypoints.back(), bj.waypoints.front());
          if (oi < 0 || oi != oj) continue;
          if (std::abs(bi.entry - bj.entry) < inst.params.delta_t) {
            char buf[128];
            std::snprintf(buf, sizeof buf, "agents %d and %d swap through opening %d", i, j,
                          oi);
            note(rep.conflicts, "opening-swap", i, j, oi, std::max(bi.entry, bj.entry), buf);
          }
        }
    }

  if (constraints != nullptr) {
    for (int a = 0; a < inst.agent_count(); ++a) {
      const auto* per_region = constraints->for_agent(a);
      if (per_region == nullptr) continue;
      for (const RegionVisit& v : paths[a].visits) {
        auto it = per_region->find(v.region);
        if (it == per_region->end()) continue;
        for (const Interval& bad : it->second)
          if (overlaps({v.entry, v.exit}, bad))
            note(rep.constraint_violations, "forbidden-interval", a, -1, v.region,
                 std::max(v.entry, bad.start), "visit overlaps a forbidden interval");
      }
    }
  }
  return rep;
}

}  // namespace pmcbs
