#include "pmcbs/grid_cbs.hpp"

#include <algorithm>
#include <chrono>
#include <climits>
#include <cmath>
#include <cstdint>
#include <deque>
#include <queue>
#include <set>
#include <stdexcept>
#include <tuple>
#include <unordered_set>

namespace pmcbs {

void validate_grid_instance(const GridMapfInstance& inst) {
  if (inst.grid == nullptr) throw std::invalid_argument("grid instance: grid missing");
  if (inst.starts.empty()) throw std::invalid_argument("grid instance: no agents");
  if (inst.starts.size() != inst.goals.size())
    throw std::invalid_argument("grid instance: starts and goals differ in length");
  for (std::size_t a = 0; a < inst.starts.size(); ++a) {
    if (!inst.grid->free_at(inst.starts[a]))
      throw std::invalid_argument("grid instance: start cell occupied or out of bounds");
    if (!inst.grid->free_at(inst.goals[a]))
      throw std::invalid_argument("grid instance: goal cell occupied or out of bounds");
  }
  auto dup = [](std::vector<Cell> cells) {
    std::sort(cells.begin(), cells.end());
    return std::adjacent_find(cells.begin(), cells.end()) != cells.end();
  };
  if (dup(inst.starts)) throw std::invalid_argument("grid instance: duplicate start cells");
  if (dup(inst.goals)) throw std::invalid_argument("grid instance: duplicate goal cells");
}

int DiscretePath::distance() const {
  int moves = 0;
  for (std::size_t i = 1; i < cells.size(); ++i)
    if (!(cells[i] == cells[i - 1])) ++moves;
  return moves;
}

std::optional<GridConflict> detect_first_grid_conflict(const std::vector<DiscretePath>& paths) {
  const int n = static_cast<int>(paths.size());
  int max_t = 0;
  for (const DiscretePath& p : paths) max_t = std::max(max_t, p.cost());
  for (int t = 0; t <= max_t; ++t) {
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j)
        if (paths[i].at(t) == paths[j].at(t))
          return GridConflict{GridVertexConflict{i, j, paths[i].at(t), t}};
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        const Cell ui = paths[i].at(t), vi = paths[i].at(t + 1);
        const Cell uj = paths[j].at(t), vj = paths[j].at(t + 1);
        if (!(ui == vi) && ui == vj && vi == uj)
          return GridConflict{GridEdgeConflict{i, j, ui, vi, t}};
      }
  }
  return std::nullopt;
}

int count_grid_conflicts(const std::vector<DiscretePath>& paths) {
  const int n = static_cast<int>(paths.size());
  int max_t = 0;
  for (const DiscretePath& p : paths) max_t = std::max(max_t, p.cost());
  int total = 0;
  for (int t = 0; t <= max_t; ++t)
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        if (paths[i].at(t) == paths[j].at(t)) ++total;
        const Cell ui = paths[i].at(t), vi = paths[i].at(t + 1);
        const Cell uj = paths[j].at(t), vj = paths[j].at(t + 1);
        if (!(ui == vi) && ui == vj && vi == uj) ++total;
      }
  return total;
}

namespace {

// A single agent's constraints, materialised for one low-level search.
struct AgentCons {
  std::unordered_set<long long> vertex;  // t * ncells + cell index
  std::unordered_set<long long> edge;    // (t * ncells + from) * ncells + to
  int goal_free_after = 0;               // earliest timestep resting at goal is legal
  int max_t = 0;
};

struct LowResult {
  bool found = false;
  std::vector<Cell> cells;
  int cost = 0;
  int lower_bound = 0;  // best f ever at the head of the open list
};

// True-distance heuristic field: BFS distance to `goal`, -1 if unreachable.
std::vector<int> distance_field(const GridMap& g, Cell goal) {
  std::vector<int> d(static_cast<std::size_t>(g.width()) * g.height(), -1);
  std::deque<Cell> q{goal};
  d[g.idx(goal)] = 0;
  while (!q.empty()) {
    const Cell c = q.front();
    q.pop_front();
    for (const Cell& nb : g.neighbors4(c))
      if (g.free_at(nb) && d[g.idx(nb)] < 0) {
        d[g.idx(nb)] = d[g.idx(c)] + 1;
        q.push_back(nb);
      }
  }
  return d;
}

// Space-time A* over (cell, timestep). With omega > 1 it runs as a focal
// search ordered by collisions against `others`, and reports a lower bound
// on the agent's optimal constrained cost either way.
LowResult grid_low_level(const GridMap& g, Cell start, Cell goal, const AgentCons& cons,
                         const std::vector<int>& h_field, double omega,
                         const std::vector<const DiscretePath*>& others, long long budget) {
  LowResult res;
  const long long ncells = static_cast<long long>(g.width()) * g.height();
  if (h_field[g.idx(start)] < 0) return res;
  const int horizon = cons.max_t + g.free_count() + 2;

  struct St {
    Cell cell;
    int t, g_cost, f, hc;
    int parent;
  };
  std::vector<St> arena;
  std::unordered_set<long long> closed;
  auto key_of = [&](Cell c, int t) { return static_cast<long long>(t) * ncells + g.idx(c); };

  // Collisions this single step adds against the other agents' paths.
  auto step_hc = [&](Cell from, Cell to, int t_to) {
    int hits = 0;
    for (const DiscretePath* o : others) {
      if (o->at(t_to) == to) ++hits;
      if (!(from == to) && o->at(t_to) == from && o->at(t_to - 1) == to) ++hits;
    }
    return hits;
  };

  const bool focal = omega > 1.0;
  using OpenKey = std::tuple<int, int, long long>;   // f, h, seq
  using FocalKey = std::tuple<int, int, long long>;  // hc, f, seq
  std::set<OpenKey> open_set;
  std::set<FocalKey> focal_set;
  std::priority_queue<OpenKey, std::vector<OpenKey>, std::greater<OpenKey>> open_pq;
  int cut = 0;  // focal admits f <= cut

  auto push = [&](St s) {
    const long long seq = static_cast<long long>(arena.size());
    arena.push_back(s);
    if (focal) {
      open_set.insert({s.f, s.f - s.g_cost, seq});
      if (s.f <= cut) focal_set.insert({s.hc, s.f, seq});
    } else {
      open_pq.push({s.f, s.f - s.g_cost, seq});
    }
  };

  {
    St root{start, 0, 0, h_field[g.idx(start)], 0, -1};
    if (focal) cut = static_cast<int>(std::floor(omega * root.f + 1e-9));
    push(root);
  }

  long long pops = 0;
  while (true) {
    long long seq = -1;
    if (focal) {
      if (open_set.empty()) return res;
      const int f_min = std::get<0>(*open_set.begin());
      const int new_cut = static_cast<int>(std::floor(omega * f_min + 1e-9));
      if (new_cut > cut) {
        for (auto it = open_set.upper_bound({cut, INT32_MAX, LLONG_MAX});
             it != open_set.end() && std::get<0>(*it) <= new_cut; ++it)
          focal_set.insert({arena[std::get<2>(*it)].hc, std::get<0>(*it), std::get<2>(*it)});
        cut = new_cut;
      }
      res.lower_bound = std::max(res.lower_bound, f_min);
      const FocalKey fk = *focal_set.begin();
      seq = std::get<2>(fk);
      focal_set.erase(fk);
      open_set.erase({arena[seq].f, arena[seq].f - arena[seq].g_cost, seq});
    } else {
      if (open_pq.empty()) return res;
      const OpenKey k = open_pq.top();
      open_pq.pop();
      res.lower_bound = std::max(res.lower_bound, std::get<0>(k));
      seq = std::get<2>(k);
    }
    const St s = arena[seq];
    const long long key = key_of(s.cell, s.t);
    if (closed.count(key)) continue;
    closed.insert(key);
    if (++pops > budget) return res;

    if (s.cell == goal && s.t >= cons.goal_free_after) {
      res.found = true;
      res.cost = s.g_cost;
      std::vector<Cell> rev;
      for (long long i = seq; i != -1; i = arena[i].parent) rev.push_back(arena[i].cell);
      std::reverse(rev.begin(), rev.end());
      res.cells = std::move(rev);
      return res;
    }
    if (s.t >= horizon) continue;

    auto try_child = [&](Cell to) {
      if (!g.free_at(to)) return;
      const int ht = h_field[g.idx(to)];
      if (ht < 0) return;
      const int t1 = s.t + 1;
      if (closed.count(key_of(to, t1))) return;
      if (cons.vertex.count(key_of(to, t1))) return;
      if (!(to == s.cell) &&
          cons.edge.count((static_cast<long long>(s.t) * ncells + g.idx(s.cell)) * ncells +
                          g.idx(to)))
        return;
      St c{to, t1, s.g_cost + 1, s.g_cost + 1 + ht, s.hc, static_cast<int>(seq)};
      if (focal) c.hc += step_hc(s.cell, to, t1);
      push(c);
    };
    for (const Cell& nb : g.neighbors4(s.cell)) try_child(nb);
    try_child(s.cell);
  }
}

// One high-level constraint: either a cell ban or a directed move ban at a
// fixed timestep.
struct GridDelta {
  int agent = -1;
  bool is_edge = false;
  Cell cell;  // vertex: banned cell; edge: from
  Cell to;    // edge only
  int t = 0;
};

struct GridCTNode {
  int parent = -1;
  int replanned = -1;
  GridDelta delta;
  std::vector<std::shared_ptr<const DiscretePath>> paths;
  std::vector<int> lbs;  // per-agent low-level lower bounds (focal runs)
  int cost = 0;
  int lb = 0;
  int conflicts = 0;
};

AgentCons materialize(const std::deque<GridCTNode>& arena, int node, int agent,
                      const GridMap& g, Cell goal) {
  AgentCons cons;
  const long long ncells = static_cast<long long>(g.width()) * g.height();
  for (int i = node; i != -1; i = arena[i].parent) {
    if (arena[i].parent == -1) break;
    const GridDelta& d = arena[i].delta;
    if (d.agent != agent) continue;
    cons.max_t = std::max(cons.max_t, d.t + 1);
    if (d.is_edge) {
      cons.edge.insert((static_cast<long long>(d.t) * ncells + g.idx(d.cell)) * ncells +
                       g.idx(d.to));
    } else {
      cons.vertex.insert(static_cast<long long>(d.t) * ncells + g.idx(d.cell));
      if (d.cell == goal) cons.goal_free_after = std::max(cons.goal_free_after, d.t + 1);
    }
  }
  return cons;
}

int sum_cost(const std::vector<std::shared_ptr<const DiscretePath>>& paths) {
  int s = 0;
  for (const auto& p : paths) s += p->cost();
  return s;
}

std::vector<DiscretePath> deref(const std::vector<std::shared_ptr<const DiscretePath>>& paths) {
  std::vector<DiscretePath> out;
  out.reserve(paths.size());
  for (const auto& p : paths) out.push_back(*p);
  return out;
}

GridSolution run_grid_search(const GridMapfInstance& inst, const GridSolverOptions& opt,
                             bool focal, double omega) {
  validate_grid_instance(inst);
  if (focal && !(omega >= 1.0)) throw std::invalid_argument("omega must be >= 1");
  const auto t0 = std::chrono::steady_clock::now();
  auto elapsed_s = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  };
  GridSolution sol;
  auto finish = [&](SolveStatus st) {
    sol.status = st;
    sol.elapsed_ms = elapsed_s() * 1000.0;
    return std::move(sol);
  };

  const GridMap& g = *inst.grid;
  const int n = inst.agent_count();
  std::vector<std::vector<int>> h_fields;
  for (int a = 0; a < n; ++a) h_fields.push_back(distance_field(g, inst.goals[a]));

  std::deque<GridCTNode> arena;
  {
    GridCTNode root;
    root.lbs.assign(n, 0);
    for (int a = 0; a < n; ++a) {
      if (elapsed_s() > opt.timeout_s) return finish(SolveStatus::kTimeout);
      std::vector<const DiscretePath*> others;
      if (focal)
        for (int b = 0; b < a; ++b) others.push_back(root.paths[b].get());
      LowResult r = grid_low_level(g, inst.starts[a], inst.goals[a], AgentCons{}, h_fields[a],
                                   focal ? omega : 1.0, others, opt.low_level_budget);
      if (!r.found) return finish(SolveStatus::kInfeasible);
      root.paths.push_back(std::make_shared<const DiscretePath>(DiscretePath{std::move(r.cells)}));
      root.lbs[a] = r.lower_bound;
    }
    root.cost = sum_cost(root.paths);
    root.lb = 0;
    for (int lb : root.lbs) root.lb += lb;
    root.conflicts = count_grid_conflicts(deref(root.paths));
    arena.push_back(std::move(root));
  }

  using PqEntry = std::tuple<int, int, int>;  // cost, conflicts, node id
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
      int lb_min = INT32_MAX;
      for (int id : open_list) lb_min = std::min(lb_min, arena[id].lb);
      const double bound = omega * lb_min + 1e-9;
      std::size_t pick = open_list.size();
      auto better = [&](int a, int b) {
        return std::make_tuple(arena[a].conflicts, arena[a].cost, a) <
               std::make_tuple(arena[b].conflicts, arena[b].cost, b);
      };
      for (std::size_t k = 0; k < open_list.size(); ++k)
        if (arena[open_list[k]].cost <= bound &&
            (pick == open_list.size() || better(open_list[k], open_list[pick])))
          pick = k;
      if (pick == open_list.size()) {
        // Nothing within the bound (possible when every cheap node got
        // pruned): fall back to the smallest-bound node.
        for (std::size_t k = 0; k < open_list.size(); ++k)
          if (pick == open_list.size() || arena[open_list[k]].lb < arena[open_list[pick]].lb)
            pick = k;
      }
      cur = open_list[pick];
      open_list.erase(open_list.begin() + static_cast<std::ptrdiff_t>(pick));
    } else {
      if (open_pq.empty()) return finish(SolveStatus::kInfeasible);
      cur = std::get<2>(open_pq.top());
      open_pq.pop();
    }
    ++sol.expanded_ct_nodes;

    std::optional<GridConflict> conflict = detect_first_grid_conflict(deref(arena[cur].paths));
    if (!conflict) {
      sol.cost = arena[cur].cost;
      sol.paths = deref(arena[cur].paths);
      return finish(SolveStatus::kSolved);
    }

    GridDelta d1, d2;
    if (std::holds_alternative<GridVertexConflict>(*conflict)) {
      const auto& vc = std::get<GridVertexConflict>(*conflict);
      d1 = {vc.agent_i, false, vc.cell, {}, vc.t};
      d2 = {vc.agent_j, false, vc.cell, {}, vc.t};
    } else {
      const auto& ec = std::get<GridEdgeConflict>(*conflict);
      d1 = {ec.agent_i, true, ec.from, ec.to, ec.t};
      d2 = {ec.agent_j, true, ec.to, ec.from, ec.t};
    }
    for (const GridDelta& d : {d1, d2}) {
      if (elapsed_s() > opt.timeout_s) return finish(SolveStatus::kTimeout);
      GridCTNode child;
      child.parent = cur;
      child.replanned = d.agent;
      child.delta = d;
      const int id = static_cast<int>(arena.size());
      arena.push_back(child);  // placed first so materialize sees the delta
      AgentCons cons = materialize(arena, id, d.agent, g, inst.goals[d.agent]);
      std::vector<const DiscretePath*> others;
      if (focal)
        for (int b = 0; b < n; ++b)
          if (b != d.agent) others.push_back(arena[cur].paths[b].get());
      LowResult r = grid_low_level(g, inst.starts[d.agent], inst.goals[d.agent], cons,
                                   h_fields[d.agent], focal ? omega : 1.0, others,
                                   opt.low_level_budget);
      if (!r.found) {
        arena.pop_back();
        continue;
      }
      GridCTNode& c = arena.back();
      c.paths = arena[cur].paths;
      c.paths[d.agent] = std::make_shared<const DiscretePath>(DiscretePath{std::move(r.cells)});
      c.lbs = arena[cur].lbs;
      c.lbs[d.agent] = std::max(c.lbs[d.agent], r.lower_bound);
      c.lb = 0;
      for (int lb : c.lbs) c.lb += lb;
      c.cost = sum_cost(c.paths);
      c.conflicts = count_grid_conflicts(deref(c.paths));
      if (focal)
        open_list.push_back(id);
      else
        open_pq.emplace(c.cost, c.conflicts, id);
    }
  }
}

}  // namespace

GridSolution solve_grid_cbs(const GridMapfInstance& inst, const GridSolverOptions& opt) {
  return run_grid_search(inst, opt, false, 1.0);
}

GridSolution solve_grid_ecbs(const GridMapfInstance& inst, double omega,
                             const GridSolverOptions& opt) {
  return run_grid_search(inst, opt, true, omega);
}

std::vector<GridViolation> validate_grid_solution(const GridMapfInstance& inst,
                                                  const std::vector<DiscretePath>& paths) {
  validate_grid_instance(inst);
  if (paths.size() != inst.starts.size())
    throw std::invalid_argument("validate_grid_solution: one path per agent required");
  std::vector<GridViolation> out;
  const int n = static_cast<int>(paths.size());
  int max_t = 0;
  for (int a = 0; a < n; ++a) {
    const DiscretePath& p = paths[a];
    if (p.cells.empty()) {
      out.push_back({"structure", a, -1, {}, 0});
      continue;
    }
    max_t = std::max(max_t, p.cost());
    if (!(p.cells.front() == inst.starts[a]))
      out.push_back({"structure", a, -1, p.cells.front(), 0});
    if (!(p.cells.back() == inst.goals[a]))
      out.push_back({"structure", a, -1, p.cells.back(), p.cost()});
    for (std::size_t k = 0; k < p.cells.size(); ++k) {
      if (!inst.grid->free_at(p.cells[k])) {
        out.push_back({"structure", a, -1, p.cells[k], static_cast<int>(k)});
        continue;
      }
      if (k > 0) {
        const int dx = std::abs(p.cells[k].x - p.cells[k - 1].x);
        const int dy = std::abs(p.cells[k].y - p.cells[k - 1].y);
        if (dx + dy > 1) out.push_back({"structure", a, -1, p.cells[k], static_cast<int>(k)});
      }
    }
  }
  for (int t = 0; t <= max_t; ++t)
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) {
        if (paths[i].cells.empty() || paths[j].cells.empty()) continue;
        if (paths[i].at(t) == paths[j].at(t))
          out.push_back({"vertex", i, j, paths[i].at(t), t});
        const Cell ui = paths[i].at(t), vi = paths[i].at(t + 1);
        const Cell uj = paths[j].at(t), vj = paths[j].at(t + 1);
        if (!(ui == vi) && ui == vj && vi == uj) out.push_back({"edge", i, j, ui, t});
      }
  return out;
}

}  // namespace pmcbs
