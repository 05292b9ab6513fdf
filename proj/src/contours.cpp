#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <utility>
#include <vector>

#include "cpprop/analysis.hpp"
#include "cpprop/errors.hpp"

namespace cpprop {

namespace {

// Edge ids: horizontal edge (i, j)-(i, j+1) -> 2 (i nd + j),
// vertical edge (i, j)-(i+1, j) -> 2 (i nd + j) + 1.
struct Lattice {
  const ErrorMap& map;
  std::vector<double> g;  // log10(P / level)
  std::size_t nd;

  double value(std::size_t i, std::size_t j) const { return g[i * nd + j]; }

  ContourPoint crossing(std::size_t edge) const {
    const std::size_t node = edge / 2;
    const std::size_t i = node / nd;
    const std::size_t j = node % nd;
    const bool vertical = edge % 2 == 1;
    const std::size_t i1 = vertical ? i + 1 : i;
    const std::size_t j1 = vertical ? j : j + 1;
    const double g0 = value(i, j);
    const double g1 = value(i1, j1);
    const double t = g0 / (g0 - g1);
    const double z0 = map.alpha_z_values[i], z1 = map.alpha_z_values[i1];
    const double d0 = map.delta_values[j], d1 = map.delta_values[j1];
    return {z0 + t * (z1 - z0), d0 + t * (d1 - d0)};
  }
};

}  // namespace

ContourSet extract_contours(const ErrorMap& map, double level) {
  if (!(level > 0.0 && level < 1.0)) throw ConfigError("extract_contours: level must lie in (0, 1)");
  ContourSet set;
  set.level = level;
  const std::size_t nz = map.n_z();
  const std::size_t nd = map.n_delta();
  if (nz < 2 || nd < 2) return set;

  Lattice lat{map, std::vector<double>(nz * nd), nd};
  for (std::size_t k = 0; k < nz * nd; ++k) {
    lat.g[k] = std::log10(std::max(map.p_err[k], 1e-300)) - std::log10(level);
  }

  std::vector<std::pair<std::size_t, std::size_t>> segments;
  for (std::size_t i = 0; i + 1 < nz; ++i) {
    for (std::size_t j = 0; j + 1 < nd; ++j) {
      const double v0 = lat.value(i, j), v1 = lat.value(i, j + 1);
      const double v2 = lat.value(i + 1, j + 1), v3 = lat.value(i + 1, j);
      const int index = (v0 < 0.0 ? 1 : 0) | (v1 < 0.0 ? 2 : 0) | (v2 < 0.0 ? 4 : 0) | (v3 < 0.0 ? 8 : 0);
      const std::size_t e0 = 2 * (i * nd + j);            // bottom
      const std::size_t e1 = 2 * (i * nd + j + 1) + 1;    // right
      const std::size_t e2 = 2 * ((i + 1) * nd + j);      // top
      const std::size_t e3 = 2 * (i * nd + j) + 1;        // left
      const bool centre_inside = (v0 + v1 + v2 + v3) < 0.0;
      auto add = [&](std::size_t a, std::size_t b) { segments.emplace_back(a, b); };
      switch (index) {
        case 1: case 14: add(e3, e0); break;
        case 2: case 13: add(e0, e1); break;
        case 3: case 12: add(e3, e1); break;
        case 4: case 11: add(e1, e2); break;
        case 6: case 9: add(e0, e2); break;
        case 7: case 8: add(e3, e2); break;
        case 5:
          if (centre_inside) { add(e0, e1); add(e2, e3); } else { add(e3, e0); add(e1, e2); }
          break;
        case 10:
          if (centre_inside) { add(e3, e0); add(e1, e2); } else { add(e0, e1); add(e2, e3); }
          break;
        default: break;
      }
    }
  }

  // Chain segments through shared edges. Every edge carries at most two.
  const std::size_t n_edges = 2 * nz * nd;
  std::vector<std::array<std::size_t, 2>> at_edge(n_edges, {SIZE_MAX, SIZE_MAX});
  for (std::size_t s = 0; s < segments.size(); ++s) {
    for (std::size_t e : {segments[s].first, segments[s].second}) {
      auto& slot = at_edge[e];
      (slot[0] == SIZE_MAX ? slot[0] : slot[1]) = s;
    }
  }
  std::vector<bool> used(segments.size(), false);
  auto walk = [&](std::size_t seg, std::size_t from_edge) {
    std::vector<ContourPoint> line{lat.crossing(from_edge)};
    std::size_t edge = from_edge;
    while (seg != SIZE_MAX && !used[seg]) {
      used[seg] = true;
      edge = segments[seg].first == edge ? segments[seg].second : segments[seg].first;
      line.push_back(lat.crossing(edge));
      const auto& slot = at_edge[edge];
      seg = slot[0] == seg ? slot[1] : slot[0];
    }
    return line;
  };
  // Open chains start on edges used by a single segment (the domain boundary).
  for (std::size_t e = 0; e < n_edges; ++e) {
    const auto& slot = at_edge[e];
    if (slot[0] != SIZE_MAX && slot[1] == SIZE_MAX && !used[slot[0]]) {
      set.polylines.push_back(walk(slot[0], e));
    }
  }
  for (std::size_t s = 0; s < segments.size(); ++s) {
    if (!used[s]) set.polylines.push_back(walk(s, segments[s].first));
  }
  return set;
}

double width_at_depth(const ContourSet& contours, double alpha_z) {
  // Segments count on [lo, hi), except at the top of the map where nothing
  // lies above and the closing end is used.
  double z_top = -std::numeric_limits<double>::infinity();
  for (const auto& line : contours.polylines) {
    for (const auto& p : line) z_top = std::max(z_top, p.alpha_z);
  }
  const bool at_top = alpha_z >= z_top;
  std::vector<double> crossings;
  for (const auto& line : contours.polylines) {
    for (std::size_t k = 0; k + 1 < line.size(); ++k) {
      const ContourPoint& p = line[k];
      const ContourPoint& q = line[k + 1];
      const double lo = std::min(p.alpha_z, q.alpha_z);
      const double hi = std::max(p.alpha_z, q.alpha_z);
      if (!(lo < hi) || alpha_z < lo || alpha_z > hi) continue;
      if (alpha_z == hi && !at_top) continue;
      const double t = (alpha_z - p.alpha_z) / (q.alpha_z - p.alpha_z);
      crossings.push_back(p.delta + t * (q.delta - p.delta));
    }
  }
  std::sort(crossings.begin(), crossings.end());
  double width = 0.0;
  for (std::size_t k = 0; k + 1 < crossings.size(); k += 2) width += crossings[k + 1] - crossings[k];
  return width;
}

}  // namespace cpprop
