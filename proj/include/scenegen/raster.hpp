#pragma once

#include <cmath>
#include <vector>

#include "scenegen/error.hpp"
#include "scenegen/floorplan.hpp"
#include "scenegen/scene.hpp"

namespace scenegen {

/// Occupancy grid over a floor plan's bounding box. `blocked` samples cell
/// centers; `coverage` holds the exact covered fraction of each cell, summed
/// over footprints and clamped to 1.
struct FloorGrid {
  Vec2 origin = Vec2::Zero();
  double cell = 0.05;
  int nx = 0;
  int ny = 0;
  std::vector<unsigned char> in_room;
  std::vector<unsigned char> blocked;
  std::vector<double> coverage;

  int index(int ix, int iy) const { return iy * nx + ix; }
  Vec2 center(int ix, int iy) const { return origin + Vec2((ix + 0.5) * cell, (iy + 0.5) * cell); }
  bool valid(int ix, int iy) const { return ix >= 0 && iy >= 0 && ix < nx && iy < ny; }
};

inline FloorGrid rasterize_floor(const FloorPlan& plan, double cell) {
  if (!(cell > 0.0)) throw InvalidArgument("raster cell must be positive");
  const Rect2 b = plan.bbox();
  FloorGrid g;
  g.origin = b.lo;
  g.cell = cell;
  g.nx = static_cast<int>(std::ceil(b.width() / cell - 1e-9));
  g.ny = static_cast<int>(std::ceil(b.depth() / cell - 1e-9));
  g.in_room.assign(static_cast<std::size_t>(g.nx) * g.ny, 0);
  g.blocked.assign(g.in_room.size(), 0);
  g.coverage.assign(g.in_room.size(), 0.0);
  for (int iy = 0; iy < g.ny; ++iy)
    for (int ix = 0; ix < g.nx; ++ix) g.in_room[g.index(ix, iy)] = plan.contains(g.center(ix, iy));
  return g;
}

/// Marks blocked cell centers and accumulates covered cell fractions for
/// every occupied slot's footprint.
inline void mark_footprints(FloorGrid& g, const SceneLayout& scene) {
  const double cell_area = g.cell * g.cell;
  for (const auto& slot : scene.slots) {
    if (!slot.occupied()) continue;
    const Rect2 r = footprint(slot).rect;
    const int x0 = std::max(0, static_cast<int>(std::floor((r.lo.x() - g.origin.x()) / g.cell)));
    const int x1 = std::min(g.nx - 1, static_cast<int>(std::floor((r.hi.x() - g.origin.x()) / g.cell)));
    const int y0 = std::max(0, static_cast<int>(std::floor((r.lo.y() - g.origin.y()) / g.cell)));
    const int y1 = std::min(g.ny - 1, static_cast<int>(std::floor((r.hi.y() - g.origin.y()) / g.cell)));
    for (int iy = y0; iy <= y1; ++iy) {
      for (int ix = x0; ix <= x1; ++ix) {
        const int k = g.index(ix, iy);
        if (r.contains(g.center(ix, iy))) g.blocked[k] = 1;
        const Rect2 c{g.origin + Vec2(ix * g.cell, iy * g.cell), g.origin + Vec2((ix + 1) * g.cell, (iy + 1) * g.cell)};
        g.coverage[k] = std::min(1.0, g.coverage[k] + intersection_area(c, r) / cell_area);
      }
    }
  }
}

}  // namespace scenegen
