#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pmcbs/grid_map.hpp"

using namespace pmcbs;

namespace {

const char* kPlus =
    "height 3\n"
    "width 5\n"
    "map\n"
    "@@.@@\n"
    ".....\n"
    "@@.@@\n";

}  // namespace

TEST_CASE("parse_grid reads dimensions and occupancy") {
  GridMap g = parse_grid(kPlus);
  CHECK(g.width() == 5);
  CHECK(g.height() == 3);
  CHECK(g.free_count() == 7);
  CHECK(g.free_at({2, 0}));
  CHECK(g.free_at({0, 1}));
  CHECK(!g.free_at({0, 0}));
  CHECK(!g.in_bounds({5, 0}));
  CHECK(!g.free_at({-1, 2}));
}

TEST_CASE("save_grid round-trips byte-exactly") {
  const std::string text = kPlus;
  CHECK(save_grid(parse_grid(text)) == text);
}

TEST_CASE("parse_grid rejects malformed documents") {
  CHECK_THROWS_AS(parse_grid(""), std::runtime_error);
  CHECK_THROWS_AS(parse_grid("height 2\nwidth 2\nmap\n..\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_grid("height 1\nwidth 2\nmap\n.x\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_grid("width 2\nheight 1\nmap\n..\n"), std::runtime_error);
  CHECK_THROWS_AS(parse_grid("height 1\nwidth 3\nmap\n..\n"), std::runtime_error);
}

TEST_CASE("neighbors4 uses the fixed +x,-x,+y,-y order") {
  GridMap g = parse_grid(
      "height 3\n"
      "width 3\n"
      "map\n"
      ".@.\n"
      "...\n"
      "@.@\n");
  const std::vector<Cell> n = g.neighbors4({1, 1});
  REQUIRE(n.size() == 3);
  CHECK(n[0] == Cell{2, 1});
  CHECK(n[1] == Cell{0, 1});
  CHECK(n[2] == Cell{1, 2});
}

TEST_CASE("shortest_path_in_cells walks the restricted cell set") {
  GridMap g = parse_grid(kPlus);
  const std::vector<Cell> arm = {{0, 1}, {1, 1}, {2, 1}, {3, 1}, {4, 1}};
  auto p = shortest_path_in_cells(g, arm, {0, 1}, {4, 1});
  REQUIRE(p.has_value());
  CHECK(p->length == doctest::Approx(4.0));
  CHECK(p->cells.front() == Cell{0, 1});
  CHECK(p->cells.back() == Cell{4, 1});
  CHECK(p->cells.size() == 5);

  SUBCASE("single-cell path has zero length") {
    auto q = shortest_path_in_cells(g, arm, {2, 1}, {2, 1});
    REQUIRE(q.has_value());
    CHECK(q->length == 0.0);
    CHECK(q->cells.size() == 1);
  }
  SUBCASE("disconnected restriction yields no path") {
    const std::vector<Cell> split = {{0, 1}, {1, 1}, {3, 1}, {4, 1}};
    CHECK(!shortest_path_in_cells(g, split, {0, 1}, {4, 1}).has_value());
  }
  SUBCASE("endpoints must be inside the allowed set") {
    CHECK_THROWS_AS(shortest_path_in_cells(g, arm, {2, 0}, {4, 1}), std::invalid_argument);
  }
}
