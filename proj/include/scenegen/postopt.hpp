#pragma once

#include <algorithm>
#include <numeric>
#include <string>
#include <vector>

#include "scenegen/error.hpp"
#include "scenegen/floorplan.hpp"
#include "scenegen/raster.hpp"
#include "scenegen/scene.hpp"

namespace scenegen {

/// (A_room - sum of footprint areas) / A_room. Overlapping footprints are
/// double counted, so the ratio can go negative for heavily cluttered scenes.
inline double walkable_ratio_naive(const SceneLayout& scene, const FloorPlan& plan) {
  const double room = plan.total_area();
  if (!(room > 0.0)) throw InvalidArgument("floor area is zero");
  double covered = 0.0;
  for (const auto& slot : scene.slots)
    if (slot.occupied()) covered += footprint(slot).area;
  return (room - covered) / room;
}

/// Free share of the in-room cells, using per-cell covered fractions. Overlap
/// is counted once except inside cells cut by two footprint edges, so the
/// value tends to the exact union ratio as the cell shrinks.
inline double walkable_ratio_raster(const SceneLayout& scene, const FloorPlan& plan, double cell = 0.05) {
  FloorGrid g = rasterize_floor(plan, cell);
  mark_footprints(g, scene);
  std::size_t inside = 0;
  double free = 0.0;
  for (std::size_t i = 0; i < g.in_room.size(); ++i) {
    if (!g.in_room[i]) continue;
    ++inside;
    free += 1.0 - g.coverage[i];
  }
  if (inside == 0) throw InvalidArgument("floor area is zero");
  return free / static_cast<double>(inside);
}

struct WalkableConfig {
  double tau = 0.8;
  int max_iters = 10;
  int top_k = 3;
  double raster_cell = 0.05;

  void validate() const {
    if (!(tau > 0.0 && tau < 1.0)) throw InvalidArgument("tau must lie in (0, 1)");
    if (top_k < 1) throw InvalidArgument("top_k must be >= 1");
    if (max_iters < 0) throw InvalidArgument("max_iters must be >= 0");
    if (!(raster_cell > 0.0)) throw InvalidArgument("raster_cell must be positive");
  }
};

struct WalkableTraceRow {
  int iter = 0;
  double ratio = 0.0;         // naive, drives the loop
  double raster_ratio = 0.0;  // union-correct, diagnostic
  int replacements = 0;
};

enum class WalkableStop { kReached, kNoReplacement, kMaxIters };

inline std::string_view to_string(WalkableStop s) {
  switch (s) {
    case WalkableStop::kReached: return "reached";
    case WalkableStop::kNoReplacement: return "no_replacement";
    case WalkableStop::kMaxIters: return "max_iters";
  }
  return "";
}

struct WalkableResult {
  SceneLayout scene;
  int iterations = 0;
  double final_ratio = 0.0;
  WalkableStop stop = WalkableStop::kReached;
  std::vector<WalkableTraceRow> trace;  // row 0 is the input scene
};

/// Size-preserving replacement loop.
///
/// Each iteration sorts the valid slots (occupied, class present in the
/// catalog) by footprint area, largest first, and for the top k looks up the
/// nearest same-class record with a strictly smaller footprint. Hits replace
/// the slot's size and latent; location, yaw and class are kept. A pass
/// without any replacement ends the loop.
inline WalkableResult optimize_walkable(SceneLayout scene, const FloorPlan& plan, const AssetCatalog& catalog,
                                        const WalkableConfig& cfg) {
  cfg.validate();
  WalkableResult res;
  double ratio = walkable_ratio_naive(scene, plan);
  res.trace.push_back({0, ratio, walkable_ratio_raster(scene, plan, cfg.raster_cell), 0});
  int iter = 0;
  while (ratio < cfg.tau && iter < cfg.max_iters) {
    ++iter;
    std::vector<int> valid;
    for (int i = 0; i < static_cast<int>(scene.slots.size()); ++i) {
      const ObjectSlot& s = scene.slots[i];
      if (s.occupied() && catalog.has_class(s.class_id())) valid.push_back(i);
    }
    std::vector<double> area(scene.slots.size(), 0.0);
    for (int i : valid) area[i] = footprint(scene.slots[i]).area;
    std::stable_sort(valid.begin(), valid.end(), [&](int a, int b) { return area[a] > area[b]; });

    int replaced = 0;
    const int k = std::min<int>(cfg.top_k, static_cast<int>(valid.size()));
    for (int r = 0; r < k; ++r) {
      ObjectSlot& s = scene.slots[valid[r]];
      try {
        const AssetRecord& rec = nearest_asset(catalog, {s.latent, s.class_id(), area[valid[r]], s.yaw});
        s.size = rec.half_extents;
        s.latent = rec.latent;
        ++replaced;
      } catch (const NoCandidateError&) {
      }
    }
    if (replaced == 0) {
      res.stop = WalkableStop::kNoReplacement;
      res.iterations = iter;
      res.trace.push_back({iter, ratio, res.trace.back().raster_ratio, 0});
      res.scene = std::move(scene);
      res.final_ratio = ratio;
      return res;
    }
    ratio = walkable_ratio_naive(scene, plan);
    res.trace.push_back({iter, ratio, walkable_ratio_raster(scene, plan, cfg.raster_cell), replaced});
  }
  res.iterations = iter;
  res.final_ratio = ratio;
  res.stop = ratio >= cfg.tau ? WalkableStop::kReached : WalkableStop::kMaxIters;
  res.scene = std::move(scene);
  return res;
}

}  // namespace scenegen
