#include "pmcbs/low_level.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <queue>
#include <stdexcept>
#include <tuple>

namespace pmcbs {

PlannerParams PlannerParams::defaults(double r_speed, double i_margin) {
  PlannerParams p;
  p.r_speed = r_speed;
  p.i_margin = i_margin;
  p.delta_t = p.travel_time(1.0);
  p.validate();
  return p;
}

void PlannerParams::validate() const {
  if (!(r_speed > 0.0)) throw std::invalid_argument("r_speed must be > 0");
  if (!(i_margin > 1.0)) throw std::invalid_argument("i_margin must be > 1");
  if (!(delta_t >= 0.0)) throw std::invalid_argument("delta_t must be >= 0");
}

double node_priority(const NavNode& n, Cell goal_cell, const PlannerParams& p) {
  const double dx = n.position.x - goal_cell.x;
  const double dy = n.position.y - goal_cell.y;
  return n.t_current + p.travel_time(std::sqrt(dx * dx + dy * dy));
}

LowLevelPlanner::LowLevelPlanner(const TopometricMap& map, const RegionDistanceTable& dists,
                                 PlannerParams params)
    : map_(&map), dists_(&dists), params_(params) {
  params_.validate();
}

namespace {

// Heap entry; finalised entries carry the exact arrival time as f and are
// returned when popped. Ordering: f, finalised first, then the nominal
// priority, t_current, (cur, next, slot start), insertion order.
struct OpenEntry {
  double f = 0.0;
  bool final_entry = false;
  double eq_priority = 0.0;
  double t_current = 0.0;
  int cur = -1;
  int next = -1;
  double slot_start = 0.0;
  long long seq = 0;
  int node = -1;
  double t_arrival = 0.0;  // for finalised entries
};

struct OpenOrder {
  bool operator()(const OpenEntry& a, const OpenEntry& b) const {
    // std::priority_queue keeps the *largest* on top, so invert.
    auto key = [](const OpenEntry& e) {
      return std::make_tuple(e.f, e.final_entry ? 0 : 1, e.eq_priority, e.t_current, e.cur,
                             e.next, e.slot_start, e.seq);
    };
    return key(a) > key(b);
  }
};

}  // namespace

PlanResult LowLevelPlanner::plan(Cell start, Cell goal, const AgentConstraints* constraints,
                                 long long node_budget, bool record_nodes) const {
  const GridMap& g = map_->grid();
  if (!g.free_at(start)) throw std::invalid_argument("plan: start cell occupied or out of bounds");
  if (!g.free_at(goal)) throw std::invalid_argument("plan: goal cell occupied or out of bounds");
  const int start_region = map_->region_of(start);
  const int goal_region = map_->region_of(goal);

  static const std::vector<Interval> kUnconstrained{{0.0, kInf}};
  std::map<int, std::vector<Interval>> slot_cache;
  auto slots_of = [&](int region) -> const std::vector<Interval>& {
    if (constraints == nullptr) return kUnconstrained;
    auto it = constraints->find(region);
    if (it == constraints->end() || it->second.empty()) return kUnconstrained;
    auto c = slot_cache.find(region);
    if (c == slot_cache.end()) c = slot_cache.emplace(region, time_slots(it->second)).first;
    return c->second;
  };

  PlanResult res;

  // An agent whose start and goal share an unconstrained region just walks
  // there and parks.
  if (start_region == goal_region && slots_of(start_region) == kUnconstrained) {
    auto path = shortest_path_in_cells(g, map_->region(start_region).cells, start, goal);
    res.status = PlanStatus::kFound;
    res.path.visits.push_back({start_region, 0.0, kInf, std::move(path->cells)});
    res.path.arrival_time = params_.travel_time(path->length);
    res.path.length_cells = path->length;
    return res;
  }

  // The agent occupies its start region from t = 0, so the region's first
  // slot must begin at 0.
  const std::vector<Interval>& start_slots = slots_of(start_region);
  if (start_slots.empty() || start_slots.front().start > 0.0) {
    res.status = PlanStatus::kInfeasible;
    return res;
  }

  // Distance from every goal-region cell to the goal cell, for finalising.
  std::vector<double> goal_dist(static_cast<std::size_t>(g.width()) * g.height(), kInf);
  {
    std::deque<Cell> queue{goal};
    goal_dist[g.idx(goal)] = 0.0;
    while (!queue.empty()) {
      Cell c = queue.front();
      queue.pop_front();
      for (const Cell& n : g.neighbors4(c))
        if (map_->region_of(n) == goal_region && goal_dist[g.idx(n)] == kInf) {
          goal_dist[g.idx(n)] = goal_dist[g.idx(c)] + 1.0;
          queue.push_back(n);
        }
    }
  }

  std::vector<NavNode> arena;
  std::priority_queue<OpenEntry, std::vector<OpenEntry>, OpenOrder> open;
  long long seq = 0;

  // Dominance sets: per (cur region, entry opening, planned opening), the
  // Pareto front of (ready, t_end); a candidate arriving no earlier and
  // leaving-by no later than a recorded node is pruned.
  std::map<std::tuple<int, int, int>, std::vector<std::pair<double, double>>> pareto;
  auto admit = [&](int cur, int entry_op, int next_op, double ready, double t_end) {
    auto& front = pareto[{cur, entry_op, next_op}];
    for (const auto& [r, e] : front)
      if (r <= ready && e >= t_end) return false;
    front.erase(std::remove_if(front.begin(), front.end(),
                               [&](const std::pair<double, double>& p) {
                                 return ready <= p.first && t_end >= p.second;
                               }),
                front.end());
    front.emplace_back(ready, t_end);
    return true;
  };

  auto push_node = [&](NavNode n) {
    if (!admit(n.cur_region, n.entry_opening, n.next_opening, n.ready, n.t_end)) return;
    const int id = static_cast<int>(arena.size());
    arena.push_back(n);
    const double dx = n.position.x - goal.x;
    const double dy = n.position.y - goal.y;
    OpenEntry e;
    e.f = n.ready + params_.travel_time(std::sqrt(dx * dx + dy * dy));
    e.eq_priority = node_priority(n, goal, params_);
    e.t_current = n.t_current;
    e.cur = n.cur_region;
    e.next = n.next_region;
    e.slot_start = n.slot_index;
    e.seq = seq++;
    e.node = id;
    open.push(e);
    ++res.generated;
    if (record_nodes) res.debug_nodes.push_back(n);
  };

  // One root per opening of the start region: the agent heads for that
  // gate, arriving after the in-region walk, and may linger in its start
  // region until the region's first constraint begins.
  const double start_t_end = start_slots.front().end;
  for (const TopometricMap::Edge& e : map_->edges(start_region)) {
    NavNode n;
    n.cur_region = start_region;
    n.next_region = e.region;
    n.next_opening = e.opening;
    n.path_len = dists_->cell_to_gate(start_region, start, e.opening);
    n.t_current = params_.travel_time(n.path_len);
    n.ready = n.t_current;
    n.t_end = start_t_end;
    n.position = map_->gate_cell(e.opening, start_region);
    if (n.t_current >= n.t_end) continue;
    push_node(n);
  }

  while (!open.empty()) {
    const OpenEntry top = open.top();
    open.pop();

    if (top.final_entry) {
      // Reconstruct the chain of crossings.
      std::vector<int> chain;
      for (int i = top.node; i != -1; i = arena[i].parent) chain.push_back(i);
      std::reverse(chain.begin(), chain.end());
      res.status = PlanStatus::kFound;
      res.path.arrival_time = top.t_arrival;
      for (std::size_t i = 0; i < chain.size(); ++i) {
        const NavNode& n = arena[chain[i]];
        RegionVisit v;
        v.region = n.cur_region;
        v.entry = i == 0 ? 0.0 : n.ready;
        const Cell from = i == 0 ? start : n.position;
        Cell to;
        if (i + 1 < chain.size()) {
          // The agent occupies a region from its entry until the moment it
          // steps through the next gate, waits at the gate included.
          const NavNode& child = arena[chain[i + 1]];
          to = map_->gate_cell(child.entry_opening, n.cur_region);
          v.exit = child.ready;
        } else {
          to = goal;
          v.exit = kInf;
          res.path.length_cells = n.path_len + goal_dist[g.idx(n.position)];
        }
        v.waypoints = shortest_path_in_cells(g, map_->region(n.cur_region).cells, from, to)->cells;
        res.path.visits.push_back(std::move(v));
      }
      return res;
    }

    const NavNode n = arena[top.node];
    if (res.expanded >= node_budget) {
      res.status = PlanStatus::kBudgetExhausted;
      return res;
    }
    ++res.expanded;

    // A settled node (no onward opening) parks in the goal region forever;
    // it is completed by walking from its gate to the goal cell.
    if (n.next_region < 0) {
      OpenEntry fin;
      fin.t_arrival = n.ready + params_.travel_time(goal_dist[g.idx(n.position)]);
      fin.f = fin.t_arrival;
      fin.final_entry = true;
      fin.eq_priority = top.eq_priority;
      fin.t_current = n.t_current;
      fin.cur = n.cur_region;
      fin.next = n.next_region;
      fin.seq = seq++;
      fin.node = top.node;
      open.push(fin);
      continue;
    }

    // Cross from cur into next through next_opening, picking a time slot
    // of the region being entered and a further opening to head for.
    const double d_cross = n.entry_opening < 0
                               ? 0.0
                               : dists_->gate_to_gate(n.cur_region, n.entry_opening,
                                                      n.next_opening);
    const double traverse_time = params_.travel_time(d_cross);
    const double gate_arrival = n.ready + traverse_time;
    const std::vector<Interval>& slots = slots_of(n.next_region);
    for (std::size_t k = 0; k < slots.size(); ++k) {
      const Interval& slot = slots[k];
      if (slot_starts_too_late(slot, n.t_end)) continue;
      if (slot_ends_too_soon(slot, n.t_current, traverse_time)) continue;
      // Realised entry: cross one cell through the gate, no earlier than
      // the slot opens; the agent must vacate cur by t_end and be inside
      // the slot strictly before it closes.
      const double entry = std::max(gate_arrival + params_.travel_time(1.0), slot.start);
      if (entry > n.t_end) continue;
      if (entry >= slot.end) continue;
      // A reversing step may not take the first slot: re-entering the
      // region just left within its first window is never better than
      // having waited at the gate.
      if (n.next_region == n.prev_region && k == 0) continue;
      // Entering the goal region in a slot that never closes also spawns a
      // settled child: the agent stops planning onward crossings and parks.
      if (n.next_region == goal_region && slot.end == kInf) {
        NavNode c;
        c.prev_region = n.cur_region;
        c.cur_region = n.next_region;
        c.next_region = -1;
        c.entry_opening = n.next_opening;
        c.next_opening = -1;
        c.path_len = n.path_len + d_cross + 1.0;
        c.t_current = params_.travel_time(c.path_len);
        c.t_end = slot.end;
        c.ready = entry;
        c.slot_index = static_cast<int>(k);
        c.parent = top.node;
        c.position = map_->gate_cell(n.next_opening, n.next_region);
        push_node(c);
      }
      for (const TopometricMap::Edge& e : map_->edges(n.next_region)) {
        // A plan that comes straight back is only worth having when the
        // agent is forced out of where it now is.
        if (e.region == n.cur_region && n.t_end == kInf) continue;
        NavNode c;
        c.prev_region = n.cur_region;
        c.cur_region = n.next_region;
        c.next_region = e.region;
        c.entry_opening = n.next_opening;
        c.next_opening = e.opening;
        c.path_len = n.path_len + d_cross + 1.0;
        c.t_current = params_.travel_time(c.path_len);
        c.t_end = slot.end;
        c.ready = entry;
        c.slot_index = static_cast<int>(k);
        c.parent = top.node;
        c.position = map_->gate_cell(n.next_opening, n.next_region);
        push_node(c);
      }
    }
  }

  res.status = PlanStatus::kInfeasible;
  return res;
}

}  // namespace pmcbs
