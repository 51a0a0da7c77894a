#include "pursuit/policy/astar.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <queue>
#include <string>
#include <tuple>

namespace pursuit {

namespace {

constexpr double kSqrt2 = 1.41421356237309504880;
constexpr int kDx[8] = {1, -1, 0, 0, 1, 1, -1, -1};
constexpr int kDy[8] = {0, 0, 1, -1, 1, -1, 1, -1};

// (priority, y, x): lexicographic order gives the (y, x) tie-break.
using QueueEntry = std::tuple<double, int, int>;
using MinQueue = std::priority_queue<QueueEntry, std::vector<QueueEntry>, std::greater<>>;

double octile(Cell a, Cell b) {
  const double dx = std::abs(a.x - b.x), dy = std::abs(a.y - b.y);
  return std::max(dx, dy) + (kSqrt2 - 1.0) * std::min(dx, dy);
}

struct SearchState {
  explicit SearchState(const TerrainGrid& t)
      : g(static_cast<std::size_t>(t.width()) * t.height(), std::numeric_limits<double>::infinity()),
        parent(g.size(), -1),
        closed(g.size(), 0),
        width(t.width()) {}

  std::size_t idx(Cell c) const { return static_cast<std::size_t>(c.y) * width + c.x; }
  Cell cell(std::size_t i) const { return {static_cast<int>(i % width), static_cast<int>(i / width)}; }

  Path unwind(Cell goal) const {
    Path p;
    p.cost = g[idx(goal)];
    for (long i = static_cast<long>(idx(goal)); i >= 0; i = parent[i]) p.cells.push_back(cell(i));
    std::reverse(p.cells.begin(), p.cells.end());
    return p;
  }

  std::vector<double> g;
  std::vector<long> parent;
  std::vector<std::uint8_t> closed;
  int width;
};

template <typename Heuristic, typename IsGoal>
Path search(Cell start, const TerrainGrid& terrain, double forest_weight, Heuristic h, IsGoal is_goal) {
  SearchState st(terrain);
  MinQueue open;
  st.g[st.idx(start)] = 0.0;
  open.emplace(h(start), start.y, start.x);
  while (!open.empty()) {
    const auto [f, y, x] = open.top();
    open.pop();
    const Cell cur{x, y};
    const std::size_t ci = st.idx(cur);
    if (st.closed[ci]) continue;
    st.closed[ci] = 1;
    if (is_goal(cur)) return st.unwind(cur);
    for (int k = 0; k < 8; ++k) {
      const Cell nb{x + kDx[k], y + kDy[k]};
      if (!can_step(terrain, cur, nb)) continue;
      const std::size_t ni = st.idx(nb);
      if (st.closed[ni]) continue;
      const double cand = st.g[ci] + step_cost(terrain, cur, nb, forest_weight);
      if (cand < st.g[ni]) {
        st.g[ni] = cand;
        st.parent[ni] = static_cast<long>(ci);
        open.emplace(cand + h(nb), nb.y, nb.x);
      }
    }
  }
  throw NoPathError("no path from (" + std::to_string(start.x) + "," + std::to_string(start.y) + ")");
}

}  // namespace

double step_cost(const TerrainGrid& terrain, Cell from, Cell to, double forest_weight) {
  const double len = (from.x != to.x && from.y != to.y) ? kSqrt2 : 1.0;
  return len * (1.0 + forest_weight * (1.0 - terrain.forest_density(to)));
}

bool can_step(const TerrainGrid& terrain, Cell from, Cell to) {
  if (!terrain.traversable(to)) return false;
  if (from.x != to.x && from.y != to.y)
    return terrain.traversable({to.x, from.y}) && terrain.traversable({from.x, to.y});
  return true;
}

Path astar_plan(Cell start, Cell goal, const TerrainGrid& terrain, double forest_weight) {
  if (forest_weight < 0.0) throw std::invalid_argument("forest_weight must be >= 0");
  if (!terrain.traversable(start) || !terrain.traversable(goal))
    throw NoPathError("start or goal is not traversable");
  // Every step costs at least its length, so octile distance is admissible.
  return search(
      start, terrain, forest_weight, [goal](Cell c) { return octile(c, goal); },
      [goal](Cell c) { return c == goal; });
}

Path plan_to_nearest(Cell start, const TerrainGrid& terrain, double forest_weight,
                     const std::function<bool(Cell)>& is_target) {
  if (!terrain.traversable(start)) throw NoPathError("start is not traversable");
  return search(start, terrain, forest_weight, [](Cell) { return 0.0; }, is_target);
}

double path_length(const std::vector<Cell>& cells) {
  double len = 0.0;
  for (std::size_t i = 1; i < cells.size(); ++i) len += distance(cell_center(cells[i - 1]), cell_center(cells[i]));
  return len;
}

}  // namespace pursuit
