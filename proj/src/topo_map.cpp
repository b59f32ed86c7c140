#include "pmcbs/topo_map.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "pmcbs/time_domain.hpp"
#include <json.hpp>

namespace pmcbs {

const char* to_string(RegionLabel label) {
  switch (label) {
    case RegionLabel::kIntersection: return "intersection";
    case RegionLabel::kPathway: return "pathway";
    case RegionLabel::kDeadEnd: return "dead_end";
  }
  return "?";
}

RegionLabel region_label_from_string(const std::string& s) {
  if (s == "intersection") return RegionLabel::kIntersection;
  if (s == "pathway") return RegionLabel::kPathway;
  if (s == "dead_end") return RegionLabel::kDeadEnd;
  throw std::runtime_error("topo: unknown region label '" + s + "'");
}

TopometricMap::TopometricMap(GridMap grid, std::vector<Region> regions,
                             std::vector<Opening> openings)
    : grid_(std::move(grid)), regions_(std::move(regions)), openings_(std::move(openings)) {
  validate_and_index();
}

Cell TopometricMap::gate_cell(int opening, int region) const {
  const Opening& o = openings_.at(opening);
  if (o.a == region) return o.gate[0];
  if (o.b == region) return o.gate[1];
  throw std::invalid_argument("gate_cell: region not on opening");
}

int TopometricMap::opening_between(Cell a, Cell b) const {
  for (const Opening& o : openings_)
    if ((o.gate[0] == a && o.gate[1] == b) || (o.gate[0] == b && o.gate[1] == a)) return o.id;
  return -1;
}

void TopometricMap::validate_and_index() {
  region_of_.assign(static_cast<std::size_t>(grid_.width()) * grid_.height(), -1);
  for (std::size_t i = 0; i < regions_.size(); ++i) {
    const Region& r = regions_[i];
    if (r.id != static_cast<int>(i)) throw std::runtime_error("topo: region ids must be 0..n-1 in order");
    if (r.cells.empty()) throw std::runtime_error("topo: empty region");
    for (const Cell& c : r.cells) {
      if (!grid_.free_at(c)) throw std::runtime_error("topo: region cell occupied or out of bounds");
      int& slot = region_of_[grid_.idx(c)];
      if (slot != -1) throw std::runtime_error("topo: regions overlap at cell");
      slot = r.id;
    }
  }
  for (int y = 0; y < grid_.height(); ++y)
    for (int x = 0; x < grid_.width(); ++x)
      if (grid_.free_at({x, y}) && region_of_[grid_.idx({x, y})] == -1)
        throw std::runtime_error("topo: free cell not covered by any region");

  // Region connectivity.
  for (const Region& r : regions_) {
    std::deque<Cell> queue{r.cells.front()};
    std::vector<Cell> seen{r.cells.front()};
    while (!queue.empty()) {
      Cell c = queue.front();
      queue.pop_front();
      for (const Cell& n : grid_.neighbors4(c))
        if (region_of_[grid_.idx(n)] == r.id &&
            std::find(seen.begin(), seen.end(), n) == seen.end()) {
          seen.push_back(n);
          queue.push_back(n);
        }
    }
    if (seen.size() != r.cells.size()) throw std::runtime_error("topo: region not connected");
  }

  edges_.assign(regions_.size(), {});
  for (std::size_t i = 0; i < openings_.size(); ++i) {
    const Opening& o = openings_[i];
    if (o.id != static_cast<int>(i)) throw std::runtime_error("topo: opening ids must be 0..n-1 in order");
    if (o.a < 0 || o.a >= static_cast<int>(regions_.size()) || o.b < 0 ||
        o.b >= static_cast<int>(regions_.size()))
      throw std::runtime_error("topo: opening references missing region");
    const int dx = std::abs(o.gate[0].x - o.gate[1].x);
    const int dy = std::abs(o.gate[0].y - o.gate[1].y);
    if (dx + dy != 1) throw std::runtime_error("topo: gate cells not 4-adjacent");
    if (!grid_.free_at(o.gate[0]) || region_of_[grid_.idx(o.gate[0])] != o.a ||
        !grid_.free_at(o.gate[1]) || region_of_[grid_.idx(o.gate[1])] != o.b)
      throw std::runtime_error("topo: gate cell not in stated region");
    edges_[o.a].push_back({o.id, o.b});
    edges_[o.b].push_back({o.id, o.a});
  }
  for (auto& e : edges_)
    std::sort(e.begin(), e.end(),
              [](const Edge& l, const Edge& r) { return l.opening < r.opening; });
}

namespace {

int free_degree(const GridMap& g, Cell c) {
  return static_cast<int>(g.neighbors4(c).size());
}

}  // namespace

TopometricMap segment_corridor_grid(const GridMap& g) {
  if (g.free_count() == 0) throw std::runtime_error("segment: grid has no free cells");
  for (int y = 0; y + 1 < g.height(); ++y)
    for (int x = 0; x + 1 < g.width(); ++x)
      if (g.free_at({x, y}) && g.free_at({x + 1, y}) && g.free_at({x, y + 1}) &&
          g.free_at({x + 1, y + 1}))
        throw std::runtime_error("segment: 2x2 free block at (" + std::to_string(x) + "," +
                                 std::to_string(y) + "); not a 1-cell-wide corridor grid");

  std::vector<int> assigned(static_cast<std::size_t>(g.width()) * g.height(), -1);
  std::vector<Region> regions;

  // Deterministic scan in cell order (x, then y).
  for (int x = 0; x < g.width(); ++x) {
    for (int y = 0; y < g.height(); ++y) {
      const Cell c{x, y};
      if (!g.free_at(c) || assigned[g.idx(c)] != -1) continue;
      const int deg = free_degree(g, c);
      Region r;
      r.id = static_cast<int>(regions.size());
      if (deg >= 3) {
        r.label = RegionLabel::kIntersection;
        r.cells = {c};
      } else if (deg <= 1) {
        r.label = RegionLabel::kDeadEnd;
        r.cells = {c};
      } else {
        // Flood the maximal chain of corridor (degree-2) cells.
        r.label = RegionLabel::kPathway;
        std::deque<Cell> queue{c};
        assigned[g.idx(c)] = r.id;
        while (!queue.empty()) {
          Cell cur = queue.front();
          queue.pop_front();
          r.cells.push_back(cur);
          for (const Cell& n : g.neighbors4(cur))
            if (assigned[g.idx(n)] == -1 && free_degree(g, n) == 2) {
              assigned[g.idx(n)] = r.id;
              queue.push_back(n);
            }
        }
        std::sort(r.cells.begin(), r.cells.end());
        regions.push_back(std::move(r));
        continue;
      }
      assigned[g.idx(c)] = r.id;
      regions.push_back(std::move(r));
    }
  }

  // One opening per adjacent free cell pair spanning two regions. In a
  // corridor grid (no 2x2 free block) such pairs are never contiguous, so
  // each is its own boundary gate.
  std::vector<Opening> openings;
  for (int x = 0; x < g.width(); ++x) {
    for (int y = 0; y < g.height(); ++y) {
      const Cell c{x, y};
      if (!g.free_at(c)) continue;
      for (const Cell n : {Cell{x + 1, y}, Cell{x, y + 1}}) {
        if (!g.free_at(n)) continue;
        if (assigned[g.idx(c)] == assigned[g.idx(n)]) continue;
        Opening o;
        o.gate = {std::min(c, n), std::max(c, n)};
        o.a = assigned[g.idx(o.gate[0])];
        o.b = assigned[g.idx(o.gate[1])];
        openings.push_back(o);
      }
    }
  }
  std::sort(openings.begin(), openings.end(), [](const Opening& l, const Opening& r) {
    return l.gate[0] < r.gate[0] || (l.gate[0] == r.gate[0] && l.gate[1] < r.gate[1]);
  });
  for (std::size_t i = 0; i < openings.size(); ++i) openings[i].id = static_cast<int>(i);

  return TopometricMap(g, std::move(regions), std::move(openings));
}

std::string save_topo_json(const TopometricMap& map) {
  nlohmann::ordered_json doc;
  doc["regions"] = nlohmann::ordered_json::array();
  for (const Region& r : map.regions()) {
    nlohmann::ordered_json jr;
    jr["id"] = r.id;
    jr["label"] = to_string(r.label);
    auto cells = nlohmann::ordered_json::array();
    for (const Cell& c : r.cells) cells.push_back({c.x, c.y});
    jr["cells"] = std::move(cells);
    doc["regions"].push_back(std::move(jr));
  }
  doc["openings"] = nlohmann::ordered_json::array();
  for (const Opening& o : map.openings()) {
    nlohmann::ordered_json jo;
    jo["id"] = o.id;
    jo["a"] = o.a;
    jo["b"] = o.b;
    jo["gate"] = {{o.gate[0].x, o.gate[0].y}, {o.gate[1].x, o.gate[1].y}};
    doc["openings"].push_back(std::move(jo));
  }
  doc["grid"] = save_grid(map.grid());
  return doc.dump(2) + "\n";
}

namespace {

Cell cell_from_json(const nlohmann::json& j) {
  if (!j.is_array() || j.size() != 2) throw std::runtime_error("topo: cell must be [x,y]");
  return {j[0].get<int>(), j[1].get<int>()};
}

}  // namespace

TopometricMap load_topo_json(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw std::runtime_error(std::string("topo: invalid JSON: ") + e.what());
  }
  if (!doc.contains("grid") || !doc.contains("regions") || !doc.contains("openings"))
    throw std::runtime_error("topo: document needs grid, regions and openings fields");
  GridMap grid = parse_grid(doc["grid"].get<std::string>());
  std::vector<Region> regions;
  for (const auto& jr : doc["regions"]) {
    Region r;
    r.id = jr.at("id").get<int>();
    r.label = region_label_from_string(jr.at("label").get<std::string>());
    for (const auto& jc : jr.at("cells")) r.cells.push_back(cell_from_json(jc));
    std::sort(r.cells.begin(), r.cells.end());
    regions.push_back(std::move(r));
  }
  std::vector<Opening> openings;
  for (const auto& jo : doc["openings"]) {
    Opening o;
    o.id = jo.at("id").get<int>();
    o.a = jo.at("a").get<int>();
    o.b = jo.at("b").get<int>();
    const auto& gate = jo.at("gate");
    if (!gate.is_array() || gate.size() != 2) throw std::runtime_error("topo: gate must hold two cells");
    o.gate = {cell_from_json(gate[0]), cell_from_json(gate[1])};
    openings.push_back(std::move(o));
  }
  return TopometricMap(std::move(grid), std::move(regions), std::move(openings));
}

TopometricMap load_topo_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open topo file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return load_topo_json(ss.str());
}

RegionDistanceTable::RegionDistanceTable(const TopometricMap& map) : map_(&map) {
  const GridMap& g = map.grid();
  local_index_.assign(static_cast<std::size_t>(g.width()) * g.height(), -1);
  for (const Region& r : map.regions())
    for (std::size_t i = 0; i < r.cells.size(); ++i)
      local_index_[g.idx(r.cells[i])] = static_cast<int>(i);

  fields_.resize(map.regions().size());
  for (const Region& r : map.regions()) {
    const auto& edges = map.edges(r.id);
    fields_[r.id].resize(edges.size());
    for (std::size_t e = 0; e < edges.size(); ++e) {
      // BFS over the region's cells from the region-side gate cell.
      std::vector<double>& dist = fields_[r.id][e];
      dist.assign(r.cells.size(), kInf);
      const Cell src = map.gate_cell(edges[e].opening, r.id);
      dist[local_index_[g.idx(src)]] = 0.0;
      std::deque<Cell> queue{src};
      while (!queue.empty()) {
        Cell c = queue.front();
        queue.pop_front();
        const double d = dist[local_index_[g.idx(c)]];
        for (const Cell& n : g.neighbors4(c)) {
          if (map.region_of(n) != r.id) continue;
          double& dn = dist[local_index_[g.idx(n)]];
          if (dn == kInf) {
            dn = d + 1.0;
            queue.push_back(n);
          }
        }
      }
      for (double d : dist)
        if (d == kInf)
          throw std::runtime_error("topo: opening unreachable within region " +
                                   std::to_string(r.id));
    }
  }
}

const std::vector<double>& RegionDistanceTable::field(int region, int op) const {
  const auto& edges = map_->edges(region);
  for (std::size_t e = 0; e < edges.size(); ++e)
    if (edges[e].opening == op) return fields_[region][e];
  throw std::invalid_argument("distance table: opening not on region");
}

double RegionDistanceTable::gate_to_gate(int region, int op_in, int op_out) const {
  return cell_to_gate(region, map_->gate_cell(op_in, region), op_out);
}

double RegionDistanceTable::cell_to_gate(int region, Cell c, int op) const {
  if (map_->region_of(c) != region)
    throw std::invalid_argument("distance table: cell not in region");
  return field(region, op)[local_index_[map_->grid().idx(c)]];
}

}  // namespace pmcbs
