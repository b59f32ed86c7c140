#pragma once

#include <array>
#include <string>
#include <vector>

#include "pmcbs/grid_map.hpp"

namespace pmcbs {

enum class RegionLabel { kIntersection, kPathway, kDeadEnd };

const char* to_string(RegionLabel label);
RegionLabel region_label_from_string(const std::string& s);

// A maximal structural unit of the corridor world: a single junction cell,
// a chain of corridor cells, or a single terminal cell.
struct Region {
  int id = -1;
  RegionLabel label = RegionLabel::kPathway;
  std::vector<Cell> cells;  // sorted, 4-connected, all free
};

// Boundary between two regions: a pair of 4-adjacent cells, gate[0] inside
// region a, gate[1] inside region b.
struct Opening {
  int id = -1;
  int a = -1;
  int b = -1;
  std::array<Cell, 2> gate;
};

// Topometric map: regions partition the free cells of the grid; openings
// connect adjacent regions. Region and opening ids equal their indices.
class TopometricMap {
 public:
  // An adjacency edge as seen from one region: the opening to cross and
  // the region on the other side.
  struct Edge {
    int opening = -1;
    int region = -1;
  };

  TopometricMap() = default;
  TopometricMap(GridMap grid, std::vector<Region> regions, std::vector<Opening> openings);

  const GridMap& grid() const { return grid_; }
  const std::vector<Region>& regions() const { return regions_; }
  const std::vector<Opening>& openings() const { return openings_; }
  const Region& region(int id) const { return regions_.at(id); }
  const Opening& opening(int id) const { return openings_.at(id); }

  // Region id of a free cell; -1 for occupied cells.
  int region_of(Cell c) const { return region_of_.at(grid_.idx(c)); }

  // Edges of a region, sorted by opening id.
  const std::vector<Edge>& edges(int region) const { return edges_.at(region); }

  // Gate cell of an opening on the side of the given region.
  Cell gate_cell(int opening, int region) const;

  // Opening whose gate is exactly the (unordered) cell pair {a, b};
  // -1 when no opening joins these two cells.
  int opening_between(Cell a, Cell b) const;

 private:
  void validate_and_index();

  GridMap grid_;
  std::vector<Region> regions_;
  std::vector<Opening> openings_;
  std::vector<int> region_of_;
  std::vector<std::vector<Edge>> edges_;
};

// Structural-semantic segmentation of a 1-cell-wide corridor grid: free
// cells with 3+ free neighbours become single-cell intersections, maximal
// chains of 2-neighbour cells become pathways, cells with at most one free
// neighbour become dead ends. Openings are emitted for every adjacent cell
// pair spanning two regions, ordered by gate cell pair. Deterministic:
// identical grids give identical maps. Throws std::runtime_error on a grid
// with no free cells or with a 2x2 free block (not a corridor world).
TopometricMap segment_corridor_grid(const GridMap& g);

// JSON document with fields regions [{id,label,cells}], openings
// [{id,a,b,gate}] and grid (the grid text inline). Loading re-validates
// the partition, gate adjacency and region connectivity.
TopometricMap load_topo_json(const std::string& text);
TopometricMap load_topo_file(const std::string& path);
std::string save_topo_json(const TopometricMap& map);

// Shortest in-region cell distances from every cell of a region to each of
// its gate cells, precomputed per (region, opening). Rejects maps whose
// region openings are mutually unreachable within the region.
class RegionDistanceTable {
 public:
  explicit RegionDistanceTable(const TopometricMap& map);

  // In-region distance between the region-side gate cells of two openings
  // of `region`. op_in == op_out gives 0.
  double gate_to_gate(int region, int op_in, int op_out) const;

  // In-region distance from a cell of `region` to the region-side gate
  // cell of one of its openings.
  double cell_to_gate(int region, Cell c, int op) const;

 private:
  const std::vector<double>& field(int region, int op) const;

  const TopometricMap* map_;
  std::vector<int> local_index_;                          // grid idx -> index into region cells
  std::vector<std::vector<std::vector<double>>> fields_;  // [region][edge idx][local cell]
};

}  // namespace pmcbs
