#include "pursuit/sim/terrain.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pursuit/sim/random.hpp"

namespace pursuit {

TerrainGrid::TerrainGrid(int width, int height, bool with_water_mask)
    : width_(width), height_(height) {
  if (width < 1 || height < 1) throw TerrainError("terrain dimensions must be positive");
  const auto n = static_cast<std::size_t>(width) * height;
  visibility_.assign(n, 1.0f);
  forest_.assign(n, 0.0f);
  if (with_water_mask) water_.assign(n, 1);
}

Cell TerrainGrid::cell_of(Vec2 p) const {
  int x = static_cast<int>(std::floor(p.x));
  int y = static_cast<int>(std::floor(p.y));
  return {std::clamp(x, 0, width_ - 1), std::clamp(y, 0, height_ - 1)};
}

Vec2 TerrainGrid::clamp(Vec2 p) const {
  return {std::clamp(p.x, 0.0, static_cast<double>(width_)),
          std::clamp(p.y, 0.0, static_cast<double>(height_))};
}

void TerrainGrid::set_visibility(Cell c, double v) {
  if (!(v > 0.0 && v <= 1.0)) throw TerrainError("visibility must lie in (0, 1]");
  visibility_[index(c)] = static_cast<float>(v);
}

void TerrainGrid::set_forest_density(Cell c, double v) {
  if (!(v >= 0.0 && v <= 1.0)) throw TerrainError("forest density must lie in [0, 1]");
  forest_[index(c)] = static_cast<float>(v);
}

void TerrainGrid::set_water(Cell c, bool w) {
  if (!has_water_mask()) water_.assign(visibility_.size(), 1);
  water_[index(c)] = w ? 1 : 0;
}

std::vector<Cell> TerrainGrid::dark_cells(double threshold) const {
  std::vector<Cell> out;
  for (int y = 0; y < height_; ++y)
    for (int x = 0; x < width_; ++x) {
      const Cell c{x, y};
      if (visibility(c) < threshold && traversable(c)) out.push_back(c);
    }
  return out;
}

void TerrainGrid::validate() const {
  for (std::size_t i = 0; i < visibility_.size(); ++i) {
    if (!(visibility_[i] > 0.0f && visibility_[i] <= 1.0f))
      throw TerrainError("visibility out of (0, 1] at index " + std::to_string(i));
    if (!(forest_[i] >= 0.0f && forest_[i] <= 1.0f))
      throw TerrainError("forest density out of [0, 1] at index " + std::to_string(i));
  }
  for (const auto& h : hideouts_)
    if (!traversable(h.cell)) throw TerrainError("hideout on a non-traversable cell");
  for (const auto& r : rendezvous_)
    if (!traversable(r)) throw TerrainError("rendezvous on a non-traversable cell");
}

std::uint64_t TerrainGrid::digest() const {
  auto bytes = [](const auto& v) {
    return std::string_view(reinterpret_cast<const char*>(v.data()), v.size() * sizeof(v[0]));
  };
  std::uint64_t h = fnv1a64(std::to_string(width_) + "x" + std::to_string(height_));
  h = fnv1a64(bytes(visibility_), h);
  h = fnv1a64(bytes(forest_), h);
  h = fnv1a64(bytes(water_), h);
  for (const auto& hd : hideouts_)
    h = fnv1a64(std::to_string(hd.cell.x) + "," + std::to_string(hd.cell.y) + (hd.known ? "k" : "u"), h);
  for (const auto& r : rendezvous_) h = fnv1a64(std::to_string(r.x) + "," + std::to_string(r.y), h);
  return h;
}

namespace {

double smoothstep(double t) { return t * t * (3.0 - 2.0 * t); }

// Bilinear value noise on a lattice of the given spacing, values in [0, 1).
class ValueNoise {
 public:
  ValueNoise(int width, int height, double spacing, Rng& rng)
      : spacing_(spacing),
        nx_(static_cast<int>(std::ceil(width / spacing)) + 2),
        ny_(static_cast<int>(std::ceil(height / spacing)) + 2),
        lattice_(static_cast<std::size_t>(nx_) * ny_) {
    for (auto& v : lattice_) v = rng.uniform();
  }

  double operator()(double x, double y) const {
    const double gx = x / spacing_, gy = y / spacing_;
    const int ix = static_cast<int>(gx), iy = static_cast<int>(gy);
    const double fx = smoothstep(gx - ix), fy = smoothstep(gy - iy);
    const double a = at(ix, iy), b = at(ix + 1, iy);
    const double c = at(ix, iy + 1), d = at(ix + 1, iy + 1);
    return (a * (1 - fx) + b * fx) * (1 - fy) + (c * (1 - fx) + d * fx) * fy;
  }

 private:
  double at(int x, int y) const { return lattice_[static_cast<std::size_t>(y) * nx_ + x]; }

  double spacing_;
  int nx_, ny_;
  std::vector<double> lattice_;
};

// Column index at which land begins on row y (narco coastline).
std::vector<int> coastline(const DomainSpec& spec, int width, int height, Rng& rng) {
  const double spacing = std::max(2.0, spec.scaled(spec.noise_cell));
  ValueNoise wiggle(1, height, spacing, rng);
  std::vector<int> coast(height);
  for (int y = 0; y < height; ++y) {
    const double frac = 0.78 + 0.12 * (wiggle(0.0, y + 0.5) - 0.5);
    coast[y] = std::clamp(static_cast<int>(std::lround(frac * width)), 1, width);
  }
  return coast;
}

}  // namespace

double landmark_spacing(const DomainSpec& spec) { return std::max(1.5, spec.scaled(spec.landmark_separation)); }

TerrainGrid generate_field(const DomainSpec& spec, std::uint64_t seed) {
  const int w = spec.width(), h = spec.height();
  const bool narco = spec.domain == Domain::narco;
  TerrainGrid grid(w, h, narco);
  Rng rng(derive_seed(seed, 1));

  const double spacing = std::max(2.0, spec.scaled(spec.noise_cell));
  ValueNoise coarse(w, h, spacing, rng);
  ValueNoise fine(w, h, std::max(2.0, spacing / 3.0), rng);

  std::vector<double> field(static_cast<std::size_t>(w) * h);
  double lo = 1e300, hi = -1e300;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double v = 0.7 * coarse(x + 0.5, y + 0.5) + 0.3 * fine(x + 0.5, y + 0.5);
      field[static_cast<std::size_t>(y) * w + x] = v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  const double range = hi > lo ? hi - lo : 1.0;
  const double vmin = spec.visibility_min;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double n = (field[static_cast<std::size_t>(y) * w + x] - lo) / range;
      grid.set_visibility({x, y}, vmin + (1.0 - vmin) * n);
      grid.set_forest_density({x, y}, 1.0 - n);
    }

  if (narco) {
    const auto coast = coastline(spec, w, h, rng);
    for (int y = 0; y < h; ++y)
      for (int x = coast[y]; x < w; ++x) grid.set_water({x, y}, false);
  }
  return grid;
}

void place_landmarks(TerrainGrid& grid, const DomainSpec& spec, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 2));
  const int w = grid.width(), h = grid.height();
  const double sep = landmark_spacing(spec);
  const int margin = std::max(1, std::min(w, h) / 20);
  std::vector<Cell> taken;

  auto far_enough = [&](Cell c) {
    for (const auto& t : taken)
      if (distance(cell_center(c), cell_center(t)) < sep) return false;
    return true;
  };
  // Rejection sampling; the proposal returns false when it cannot offer a cell.
  auto draw = [&](auto&& propose, const char* what) {
    constexpr int kAttempts = 20000;
    for (int i = 0; i < kAttempts; ++i) {
      Cell c;
      if (!propose(c)) continue;
      if (!grid.traversable(c) || !far_enough(c)) continue;
      taken.push_back(c);
      return c;
    }
    throw TerrainError(std::string("grid ") + std::to_string(w) + "x" + std::to_string(h) +
                       " too small to place " + what + " on disjoint cells");
  };
  auto anywhere = [&](Cell& c) {
    if (w <= 2 * margin || h <= 2 * margin) {
      c = {static_cast<int>(rng.below(w)), static_cast<int>(rng.below(h))};
    } else {
      c = {margin + static_cast<int>(rng.below(w - 2 * margin)),
           margin + static_cast<int>(rng.below(h - 2 * margin))};
    }
    return true;
  };

  grid.hideouts().clear();
  grid.rendezvous().clear();
  const int total = spec.unknown_hideouts + spec.known_hideouts + spec.rendezvous;
  if (total > 0 && static_cast<long long>(w) * h < total)
    throw TerrainError("grid too small to place required landmarks");

  if (spec.domain == Domain::prison) {
    for (int i = 0; i < spec.unknown_hideouts; ++i) grid.hideouts().push_back({draw(anywhere, "hideouts"), false});
    for (int i = 0; i < spec.known_hideouts; ++i) grid.hideouts().push_back({draw(anywhere, "hideouts"), true});
  } else {
    // Hideouts sit on water just off the coast; rendezvous points in open sea.
    auto coastal = [&](Cell& c) {
      const int y = margin + static_cast<int>(rng.below(std::max(1, h - 2 * margin)));
      int land = w;
      for (int x = 0; x < w; ++x)
        if (!grid.traversable({x, y})) {
          land = x;
          break;
        }
      const int back = 2 + static_cast<int>(rng.below(3));
      c = {std::max(0, land - back), y};
      return true;
    };
    auto open_sea = [&](Cell& c) {
      const int x0 = static_cast<int>(0.3 * w), x1 = std::max(x0 + 1, static_cast<int>(0.65 * w));
      c = {x0 + static_cast<int>(rng.below(x1 - x0)),
           margin + static_cast<int>(rng.below(std::max(1, h - 2 * margin)))};
      return true;
    };
    for (int i = 0; i < spec.unknown_hideouts; ++i) grid.hideouts().push_back({draw(coastal, "hideouts"), false});
    for (int i = 0; i < spec.known_hideouts; ++i) grid.hideouts().push_back({draw(coastal, "hideouts"), true});
    for (int i = 0; i < spec.rendezvous; ++i) grid.rendezvous().push_back(draw(open_sea, "rendezvous points"));
  }
}

TerrainGrid build_terrain(const DomainSpec& spec, std::uint64_t seed) {
  if (spec.scale < 1.0 / 64.0 - 1e-12) throw TerrainError("scale below 1/64 of reference dimensions");
  TerrainGrid grid = generate_field(spec, seed);
  place_landmarks(grid, spec, seed);
  if (spec.domain == Domain::prison && grid.dark_cells(spec.dark_forest_threshold).empty())
    throw TerrainError("terrain has no dark forest below the configured threshold");
  grid.validate();
  return grid;
}

}  // namespace pursuit
