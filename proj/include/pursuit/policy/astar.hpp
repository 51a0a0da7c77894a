#pragma once

#include <functional>
#include <stdexcept>
#include <vector>

#include "pursuit/sim/geometry.hpp"
#include "pursuit/sim/terrain.hpp"

namespace pursuit {

class NoPathError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Path {
  std::vector<Cell> cells;  // start .. goal inclusive
  double cost = 0.0;
};

// Cost of stepping from `from` into the 8-neighbour `to`:
// move_length * (1 + forest_weight * (1 - forest_density(to))).
// Dense forest is cheap, so a positive weight pulls paths into cover.
double step_cost(const TerrainGrid& terrain, Cell from, Cell to, double forest_weight);

// 8-connected moves onto traversable cells; diagonals may not cut a corner
// past a non-traversable orthogonal neighbour.
bool can_step(const TerrainGrid& terrain, Cell from, Cell to);

// Minimum-cost path. Throws NoPathError when the goal cannot be reached.
Path astar_plan(Cell start, Cell goal, const TerrainGrid& terrain, double forest_weight);

// Minimum-cost path to the nearest cell accepted by `is_target`, by path cost
// (ties: lowest (y, x)). Throws NoPathError when no target is reachable.
Path plan_to_nearest(Cell start, const TerrainGrid& terrain, double forest_weight,
                     const std::function<bool(Cell)>& is_target);

double path_length(const std::vector<Cell>& cells);

}  // namespace pursuit
