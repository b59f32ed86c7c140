#include "pmcbs/grid_map.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pmcbs {

GridMap::GridMap(int width, int height, bool occupied) : w_(width), h_(height) {
  if (width <= 0 || height <= 0)
    throw std::runtime_error("grid dimensions must be positive");
  occ_.assign(static_cast<std::size_t>(width) * height, occupied ? 1 : 0);
}

int GridMap::free_count() const {
  int n = 0;
  for (auto v : occ_) n += v ? 0 : 1;
  return n;
}

std::vector<Cell> GridMap::neighbors4(Cell c) const {
  std::vector<Cell> out;
  out.reserve(4);
  const Cell cand[4] = {{c.x + 1, c.y}, {c.x - 1, c.y}, {c.x, c.y + 1}, {c.x, c.y - 1}};
  for (const Cell& n : cand)
    if (free_at(n)) out.push_back(n);
  return out;
}

namespace {

std::string next_line(std::istringstream& in) {
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("grid: unexpected end of input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  return line;
}

int header_value(const std::string& line, const std::string& key) {
  if (line.rfind(key + " ", 0) != 0)
    throw std::runtime_error("grid: expected '" + key + " <n>', got '" + line + "'");
  try {
    return std::stoi(line.substr(key.size() + 1));
  } catch (const std::exception&) {
    throw std::runtime_error("grid: bad number in '" + line + "'");
  }
}

}  // namespace

GridMap parse_grid(const std::string& text) {
  std::istringstream in(text);
  const int h = header_value(next_line(in), "height");
  const int w = header_value(next_line(in), "width");
  if (h <= 0 || w <= 0) throw std::runtime_error("grid: empty map");
  if (next_line(in) != "map") throw std::runtime_error("grid: missing 'map' line");

  GridMap g(w, h);
  for (int y = 0; y < h; ++y) {
    const std::string row = next_line(in);
    if (static_cast<int>(row.size()) != w)
      throw std::runtime_error("grid: row " + std::to_string(y) + " has length " +
                               std::to_string(row.size()) + ", expected " + std::to_string(w));
    for (int x = 0; x < w; ++x) {
      if (row[x] == '@')
        g.set_occupied({x, y}, true);
      else if (row[x] != '.')
        throw std::runtime_error("grid: unknown character '" + std::string(1, row[x]) +
                                 "' at row " + std::to_string(y));
    }
  }
  return g;
}

GridMap load_grid_file(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw std::runtime_error("cannot open grid file: " + path);
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_grid(ss.str());
}

std::string save_grid(const GridMap& g) {
  std::string out = "height " + std::to_string(g.height()) + "\nwidth " +
                    std::to_string(g.width()) + "\nmap\n";
  for (int y = 0; y < g.height(); ++y) {
    for (int x = 0; x < g.width(); ++x) out += g.occupied({x, y}) ? '@' : '.';
    out += '\n';
  }
  return out;
}

std::optional<CellPath> shortest_path_in_cells(const GridMap& g,
                                               const std::vector<Cell>& allowed,
                                               Cell from, Cell to) {
  std::vector<std::uint8_t> in_set(static_cast<std::size_t>(g.width()) * g.height(), 0);
  for (const Cell& c : allowed) {
    if (!g.in_bounds(c) || g.occupied(c))
      throw std::invalid_argument("shortest_path_in_cells: allowed cell occupied or out of bounds");
    in_set[g.idx(c)] = 1;
  }
  if (!g.in_bounds(from) || !in_set[g.idx(from)] || !g.in_bounds(to) || !in_set[g.idx(to)])
    throw std::invalid_argument("shortest_path_in_cells: endpoint not in allowed set");

  constexpr std::size_t kNoParent = static_cast<std::size_t>(-1);
  std::vector<std::size_t> parent(in_set.size(), kNoParent);
  std::deque<Cell> queue{from};
  parent[g.idx(from)] = g.idx(from);
  while (!queue.empty()) {
    const Cell c = queue.front();
    queue.pop_front();
    if (c == to) break;
    for (const Cell& n : g.neighbors4(c)) {
      const std::size_t i = g.idx(n);
      if (in_set[i] && parent[i] == kNoParent) {
        parent[i] = g.idx(c);
        queue.push_back(n);
      }
    }
  }
  if (parent[g.idx(to)] == kNoParent) return std::nullopt;

  CellPath path;
  Cell c = to;
  while (true) {
    path.cells.push_back(c);
    const std::size_t i = g.idx(c);
    if (parent[i] == i) break;
    const std::size_t p = parent[i];
    c = {static_cast<int>(p % g.width()), static_cast<int>(p / g.width())};
  }
  std::reverse(path.cells.begin(), path.cells.end());
  path.length = static_cast<double>(path.cells.size()) - 1.0;
  return path;
}

}  // namespace pmcbs
