#include "pursuit/eval/heatmap.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include <fmt/format.h>

namespace pursuit {

namespace {

// Dark blue -> yellow ramp.
std::string color(double v) {
  v = std::clamp(v, 0.0, 1.0);
  const int r = static_cast<int>(std::lround(20 + 235 * v));
  const int g = static_cast<int>(std::lround(30 + 200 * std::sqrt(v)));
  const int b = static_cast<int>(std::lround(90 * (1.0 - v) + 40));
  return fmt::format("#{:02x}{:02x}{:02x}", r, g, b);
}

}  // namespace

std::string mixture_heatmap_svg(const MixtureOutput& m, std::optional<Vec2> truth, int map_width, int map_height,
                                const HeatmapOptions& options) {
  if (map_width < 1 || map_height < 1 || options.resolution < 1 || options.pixels < 1)
    throw std::invalid_argument("heatmap dimensions must be positive");
  const double aspect = static_cast<double>(map_width) / map_height;
  const int nx = aspect >= 1.0 ? options.resolution : std::max(1, static_cast<int>(std::lround(options.resolution * aspect)));
  const int ny = aspect >= 1.0 ? std::max(1, static_cast<int>(std::lround(options.resolution / aspect))) : options.resolution;
  const double px = aspect >= 1.0 ? options.pixels : options.pixels * aspect;
  const double py = aspect >= 1.0 ? options.pixels / aspect : options.pixels;
  const double cw = px / nx, ch = py / ny;

  std::vector<double> density(static_cast<std::size_t>(nx) * ny);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      density[static_cast<std::size_t>(j) * nx + i] =
          std::exp(mixture_log_likelihood(m, {(i + 0.5) / nx, (j + 0.5) / ny}));
  const double peak = std::max(1e-300, *std::max_element(density.begin(), density.end()));

  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0f}\" height=\"{:.0f}\" viewBox=\"0 0 {:.2f} {:.2f}\">\n",
      px, py, px, py);
  if (!options.title.empty()) svg += fmt::format("<title>{}</title>\n", options.title);
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i)
      svg += fmt::format("<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"{}\"/>\n", i * cw,
                         j * ch, cw + 0.05, ch + 0.05, color(density[static_cast<std::size_t>(j) * nx + i] / peak));
  for (const auto& c : m.components) {
    const double x = c.mu.x * px, y = c.mu.y * py;
    svg += fmt::format(
        "<path d=\"M{:.2f} {:.2f}L{:.2f} {:.2f}M{:.2f} {:.2f}L{:.2f} {:.2f}\" stroke=\"white\" stroke-width=\"2\"/>\n",
        x - 5, y - 5, x + 5, y + 5, x - 5, y + 5, x + 5, y - 5);
  }
  if (truth)
    svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"6\" fill=\"none\" stroke=\"red\" stroke-width=\"2\"/>\n",
                       truth->x * px, truth->y * py);
  svg += "</svg>\n";
  return svg;
}

}  // namespace pursuit
