#pragma once

#include <optional>
#include <string>

#include "pursuit/model/mixture.hpp"

namespace pursuit {

struct HeatmapOptions {
  int resolution = 64;     // density cells along the longer map side
  int pixels = 512;        // rendered size of the longer side
  std::string title;
};

// SVG of the mixture density over the normalized map, with component means
// as crosses and the ground truth (when given) as a circle.
std::string mixture_heatmap_svg(const MixtureOutput& m, std::optional<Vec2> truth, int map_width, int map_height,
                                const HeatmapOptions& options = {});

}  // namespace pursuit
