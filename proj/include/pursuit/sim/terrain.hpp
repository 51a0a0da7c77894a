#pragma once

#include <cstdint>
#include <stdexcept>
#include <vector>

#include "pursuit/config.hpp"
#include "pursuit/sim/geometry.hpp"

namespace pursuit {

class TerrainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Hideout {
  Cell cell;
  bool known = false;  // known a priori to the blue team

  friend bool operator==(const Hideout&, const Hideout&) = default;
};

// Row-major 2-D map. Visibility lies in (0, 1], forest density in [0, 1].
// When a water mask is present only water cells are traversable for surface
// agents; otherwise every cell is.
class TerrainGrid {
 public:
  TerrainGrid() = default;
  TerrainGrid(int width, int height, bool with_water_mask = false);

  int width() const { return width_; }
  int height() const { return height_; }
  bool contains(Cell c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
  bool contains(Vec2 p) const { return p.x >= 0.0 && p.y >= 0.0 && p.x <= width_ && p.y <= height_; }

  // Cell holding a continuous position; positions on the far border map to the
  // last row/column.
  Cell cell_of(Vec2 p) const;
  Vec2 normalize(Vec2 p) const { return {p.x / width_, p.y / height_}; }
  Vec2 denormalize(Vec2 p) const { return {p.x * width_, p.y * height_}; }
  Vec2 clamp(Vec2 p) const;

  double visibility(Cell c) const { return visibility_[index(c)]; }
  double forest_density(Cell c) const { return forest_[index(c)]; }
  bool has_water_mask() const { return !water_.empty(); }
  bool water(Cell c) const { return has_water_mask() && water_[index(c)] != 0; }
  bool traversable(Cell c) const { return contains(c) && (!has_water_mask() || water_[index(c)] != 0); }
  bool traversable_for(Cell c, AgentType t) const {
    return is_airborne(t) ? contains(c) : traversable(c);
  }

  void set_visibility(Cell c, double v);
  void set_forest_density(Cell c, double v);
  void set_water(Cell c, bool w);

  std::vector<Hideout>& hideouts() { return hideouts_; }
  const std::vector<Hideout>& hideouts() const { return hideouts_; }
  std::vector<Cell>& rendezvous() { return rendezvous_; }
  const std::vector<Cell>& rendezvous() const { return rendezvous_; }

  // Traversable cells with visibility strictly below the threshold.
  std::vector<Cell> dark_cells(double threshold) const;

  // Throws TerrainError when a field or landmark invariant is violated.
  void validate() const;

  // FNV-1a over every field, for determinism checks.
  std::uint64_t digest() const;

  friend bool operator==(const TerrainGrid&, const TerrainGrid&) = default;

 private:
  std::size_t index(Cell c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }

  int width_ = 0;
  int height_ = 0;
  std::vector<float> visibility_;
  std::vector<float> forest_;
  std::vector<std::uint8_t> water_;
  std::vector<Hideout> hideouts_;
  std::vector<Cell> rendezvous_;
};

// Smoothed value-noise fields (and the coastline mask for the narco domain).
TerrainGrid generate_field(const DomainSpec& spec, std::uint64_t seed);

// Draws hideouts (and rendezvous points) onto traversable, pairwise disjoint
// cells. Throws TerrainError when the grid cannot hold them.
void place_landmarks(TerrainGrid& grid, const DomainSpec& spec, std::uint64_t seed);

TerrainGrid build_terrain(const DomainSpec& spec, std::uint64_t seed);

// Minimum spacing (in cells) enforced between landmarks for a scaled spec.
double landmark_spacing(const DomainSpec& spec);

}  // namespace pursuit
