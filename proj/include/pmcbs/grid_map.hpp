#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace pmcbs {

// Grid cell coordinate. x is the column, y the row, (0,0) the top-left
// character of the map block.
struct Cell {
  int x = 0;
  int y = 0;

  friend bool operator==(const Cell&, const Cell&) = default;
  // Lexicographic (x, then y); used everywhere a deterministic cell order
  // is needed.
  friend auto operator<=>(const Cell&, const Cell&) = default;
};

// 4-connected cell path, endpoints inclusive. length is the step count,
// i.e. cells.size() - 1.
struct CellPath {
  std::vector<Cell> cells;
  double length = 0.0;
};

class GridMap {
 public:
  GridMap() = default;
  GridMap(int width, int height, bool occupied = false);

  int width() const { return w_; }
  int height() const { return h_; }

  bool in_bounds(Cell c) const {
    return c.x >= 0 && c.x < w_ && c.y >= 0 && c.y < h_;
  }
  bool occupied(Cell c) const { return occ_[idx(c)]; }
  bool free_at(Cell c) const { return in_bounds(c) && !occ_[idx(c)]; }
  void set_occupied(Cell c, bool v) { occ_[idx(c)] = v ? 1 : 0; }

  int free_count() const;

  // Free in-bounds 4-neighbours in fixed order: +x, -x, +y, -y.
  std::vector<Cell> neighbors4(Cell c) const;

  std::size_t idx(Cell c) const {
    return static_cast<std::size_t>(c.y) * w_ + c.x;
  }

 private:
  int w_ = 0;
  int h_ = 0;
  std::vector<std::uint8_t> occ_;
};

// Text format:
//   height <H>
//   width <W>
//   map
//   <H rows of W chars, '.' free, '@' occupied>
// Throws std::runtime_error on malformed input (bad header, dimension
// mismatch, unknown character, empty map).
GridMap parse_grid(const std::string& text);
GridMap load_grid_file(const std::string& path);

// Inverse of parse_grid; round-trips byte-exactly.
std::string save_grid(const GridMap& g);

// BFS shortest path from `from` to `to` moving only through cells of
// `allowed` (all of which must be free). Deterministic: fixed neighbour
// order, FIFO expansion. Returns nullopt when no path exists; throws
// std::invalid_argument if an endpoint is outside `allowed` or an allowed
// cell is occupied.
std::optional<CellPath> shortest_path_in_cells(const GridMap& g,
                                               const std::vector<Cell>& allowed,
                                               Cell from, Cell to);

}  // namespace pmcbs
