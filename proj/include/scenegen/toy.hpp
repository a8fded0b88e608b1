#pragma once

// Synthetic fixtures: a small articulated-asset catalog, a single-room plan,
// closed-form scene distributions for the oracle denoiser, and a rule-based
// scene corpus for training.

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "scenegen/diffusion.hpp"
#include "scenegen/floorplan.hpp"
#include "scenegen/normalization.hpp"
#include "scenegen/scene.hpp"

namespace scenegen::toy {

enum Class : int { kCabinet = 0, kWardrobe = 1, kTable = 2, kChair = 3 };
inline constexpr int kLatentDim = 4;
inline constexpr int kNMax = 8;

/// Three sizes per class; cabinets and wardrobes open along their local +x.
/// Asset id = 10 * class + size index (1 small, 2 medium, 3 large).
inline AssetCatalog catalog() {
  struct Proto {
    Class cls;
    Vec3 half;
    double depth;  // 0 for static furniture
  };
  const std::vector<Proto> protos = {
      {kCabinet, {0.25, 0.40, 0.40}, 0.50}, {kWardrobe, {0.30, 0.80, 1.00}, 0.60},
      {kTable, {0.50, 0.35, 0.38}, 0.0},    {kChair, {0.22, 0.22, 0.45}, 0.0},
  };
  std::vector<AssetRecord> assets;
  for (const auto& p : protos) {
    for (int s = 1; s <= 3; ++s) {
      AssetRecord a;
      a.asset_id = 10 * p.cls + s;
      a.class_id = p.cls;
      a.half_extents = p.half * (0.7 + 0.3 * (s - 1));
      a.latent = default_latent(a.asset_id, kLatentDim);
      if (p.depth > 0.0) a.articulation = ArticulationSpec{Vec3::UnitX(), p.depth * (0.7 + 0.3 * (s - 1))};
      assets.push_back(std::move(a));
    }
  }
  return AssetCatalog({"cabinet", "wardrobe", "table", "chair"}, std::move(assets));
}

inline FloorPlan plan() { return make_rect_plan("toy-room", 6.0, 6.0, RoomType::kLiving); }

inline NormalizationSpec normalization(int n_max = kNMax) { return make_normalization(plan(), catalog(), n_max); }

/// Normalized slot vector of catalog record `asset_id` placed at (x, y) on
/// the floor (meters, plan frame) with the given yaw.
inline VectorXd slot_mean(const NormalizationSpec& spec, const AssetCatalog& cat, std::int64_t asset_id, double x,
                          double y, double yaw, double logit = 4.0) {
  const AssetRecord* rec = cat.find(asset_id);
  if (!rec) throw InvalidArgument("unknown toy asset " + std::to_string(asset_id));
  const StateLayout& L = spec.layout;
  VectorXd v = VectorXd::Zero(L.slot_dim());
  v.segment<3>(StateLayout::kLocation) = spec.normalize_location({x, y, rec->half_extents.z()});
  for (int k = 0; k < 3; ++k) v[StateLayout::kSize + k] = spec.normalize_size(rec->half_extents[k]);
  v[StateLayout::kOrientation] = std::cos(yaw);
  v[StateLayout::kOrientation + 1] = std::sin(yaw);
  v.segment(StateLayout::kLogits, L.num_classes + 1).setConstant(-logit);
  v[StateLayout::kLogits + rec->class_id] = logit;
  v.segment(StateLayout::kLogits + L.num_classes + 1, L.latent_dim) = rec->latent;
  return v;
}

/// Normalized empty slot at the floor center.
inline VectorXd empty_mean(const NormalizationSpec& spec, double logit = 4.0) {
  const StateLayout& L = spec.layout;
  VectorXd v = VectorXd::Zero(L.slot_dim());
  v.segment<3>(StateLayout::kSize).setConstant(-1.0);
  v[StateLayout::kOrientation] = 1.0;
  v.segment(StateLayout::kLogits, L.num_classes + 1).setConstant(-logit);
  v[StateLayout::kLogits + L.num_classes] = logit;
  return v;
}

/// Per-channel variance vector for one slot: `loc_var` on x, y and `var` elsewhere.
inline VectorXd slot_var(const StateLayout& L, double var, double loc_var) {
  VectorXd v = VectorXd::Constant(L.slot_dim(), var);
  v[StateLayout::kLocation] = loc_var;
  v[StateLayout::kLocation + 1] = loc_var;
  return v;
}

/// Occupancy-count distribution: each slot independently holds its own
/// object or is empty with probability 1/2, so the joint law is the
/// 2^N_max equal-weight mixture over occupancy patterns and the object count
/// is Binomial(N_max, 1/2). Slot i holds a table or chair on a 4 x 2 grid.
/// The two components of a slot differ only in the logit channels (the
/// decoder canonicalizes empty slots), and logits carry `logit_var`.
inline BlockMixture quantity_mixture(const NormalizationSpec& spec, const AssetCatalog& cat, double var = 0.01,
                                     double logit_var = 1.0) {
  const StateLayout& L = spec.layout;
  const Vec2 c = spec.center();
  VectorXd v = VectorXd::Constant(L.slot_dim(), var);
  v.segment(StateLayout::kLogits, L.num_classes + 1).setConstant(logit_var);
  BlockMixture mix;
  for (int i = 0; i < L.n_max; ++i) {
    const double x = c.x() - 2.25 + 1.5 * (i % 4);
    const double y = c.y() + ((i / 4) % 2 == 0 ? -1.2 : 1.2);
    const std::int64_t asset = (i % 2 == 0) ? 10 * kTable + 2 : 10 * kChair + 2;
    const VectorXd occupied = slot_mean(spec, cat, asset, x, y, 0.0);
    VectorXd empty = occupied;
    empty.segment(StateLayout::kLogits, L.num_classes + 1) =
        empty_mean(spec).segment(StateLayout::kLogits, L.num_classes + 1);
    GaussianMixture g;
    g.components.push_back({0.5, occupied, v});
    g.components.push_back({0.5, empty, v});
    mix.blocks.push_back({L.slot_offset(i), std::move(g)});
  }
  return mix;
}

struct Placement {
  std::int64_t asset;
  double dx, dy, yaw;  // offset from the floor center, meters
};

/// One fixed object per slot, jittered in x, y by `loc_std` meters; slots
/// beyond the placements are empty.
inline BlockMixture placement_mixture(const NormalizationSpec& spec, const AssetCatalog& cat,
                                      const std::vector<Placement>& places, double loc_std, double var) {
  const StateLayout& L = spec.layout;
  if (L.n_max < static_cast<int>(places.size()))
    throw InvalidArgument("toy distribution needs N_max >= " + std::to_string(places.size()));
  const Vec2 c = spec.center();
  const double loc_var = std::pow(loc_std / spec.half_span().x(), 2);
  BlockMixture mix;
  for (int i = 0; i < L.n_max; ++i) {
    GaussianMixture g;
    if (i < static_cast<int>(places.size())) {
      const Placement& p = places[i];
      g.components.push_back(
          {1.0, slot_mean(spec, cat, p.asset, c.x() + p.dx, c.y() + p.dy, p.yaw), slot_var(L, var, loc_var)});
    } else {
      g.components.push_back({1.0, empty_mean(spec), slot_var(L, var, var)});
    }
    mix.blocks.push_back({L.slot_offset(i), std::move(g)});
  }
  return mix;
}

/// Cabinet (x half 0.25, door 0.5) at x=-1.6 facing +x with the table 0.55 m
/// in front; wardrobe at y=+2 facing -y with the chair 0.7 m below its front.
/// Medium records (size index 2).
inline std::vector<Placement> articulated_placements(int size = 2) {
  return {
      {10 * kCabinet + size, -1.6, -0.8, 0.0},
      {10 * kTable + size, -0.5, -0.8, 0.0},
      {10 * kWardrobe + size, 1.2, 2.0, -kPi / 2},
      {10 * kChair + size, 1.2, 1.0, 0.0},
  };
}

/// Articulated-furniture distribution: the two door/obstacle pairs above,
/// each object jittered by `loc_std`, so the static piece often lands inside
/// the swept volume of the door. The remaining slots are empty.
inline BlockMixture articulated_mixture(const NormalizationSpec& spec, const AssetCatalog& cat, double loc_std = 0.45,
                                        double var = 0.002) {
  return placement_mixture(spec, cat, articulated_placements(), loc_std, var);
}

/// Crowded variant for ablations: the articulated pairs with large records
/// plus two large tables and two large chairs. Mean footprint total is about
/// 6.8 m^2, so the walkable ratio of the 6 m room straddles 0.8.
inline BlockMixture crowded_mixture(const NormalizationSpec& spec, const AssetCatalog& cat, double loc_std = 0.45,
                                    double var = 0.002) {
  std::vector<Placement> places = articulated_placements(3);
  places.push_back({10 * kTable + 3, 1.4, -1.6, 0.0});
  places.push_back({10 * kTable + 3, -1.5, 1.6, 0.0});
  places.push_back({10 * kChair + 3, 2.3, 0.2, 0.0});
  places.push_back({10 * kChair + 3, -0.3, -2.3, 0.0});
  return placement_mixture(spec, cat, places, loc_std, var);
}

/// Rule-based placement inside a floor plan.
///
///   - object count uniform in [1, n_max / 2 + 1]
///   - room uniform over the plan's rooms, class uniform, record uniform in class
///   - yaw uniform over the four axis directions
///   - location uniform over the room's bbox shrunk by the footprint, kept
///     only if inside the room and clear of earlier footprints (20 tries)
///   - unused slots are canonical empties
inline SceneLayout synthetic_scene(const FloorPlan& fp, const AssetCatalog& cat, int n_max, std::mt19937_64& rng,
                                   std::uint64_t seed = 0) {
  if (cat.empty()) throw InvalidArgument("synthetic corpus needs a non-empty catalog");
  const Rect2 bb = fp.bbox();
  const Vec3 center{0.5 * (bb.lo.x() + bb.hi.x()), 0.5 * (bb.lo.y() + bb.hi.y()), 0.0};
  SceneLayout scene;
  scene.floorplan_id = fp.id;
  scene.seed = seed;
  std::uniform_int_distribution<int> count_dist(1, n_max / 2 + 1);
  std::uniform_int_distribution<std::size_t> room_dist(0, fp.rooms.size() - 1);
  std::uniform_int_distribution<int> class_dist(0, cat.num_classes() - 1);
  std::uniform_int_distribution<int> yaw_dist(0, 3);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int want = std::min(n_max, count_dist(rng));
  std::vector<Rect2> placed;
  for (int n = 0; n < want; ++n) {
    const Room& room = fp.rooms[room_dist(rng)];
    const int cls = class_dist(rng);
    std::vector<const AssetRecord*> members;
    for (const auto& a : cat.assets())
      if (a.class_id == cls) members.push_back(&a);
    if (members.empty()) continue;
    const AssetRecord& rec = *members[std::uniform_int_distribution<std::size_t>(0, members.size() - 1)(rng)];
    const double yaw = -kPi / 2 * yaw_dist(rng) + kPi / 2;
    const Vec3 e = enclosing_half_extents(rec.half_extents, yaw);
    const Rect2 rb = polygon_bounds(room.polygon);
    for (int attempt = 0; attempt < 20; ++attempt) {
      if (rb.width() <= 2 * e.x() || rb.depth() <= 2 * e.y()) break;
      const double x = rb.lo.x() + e.x() + u01(rng) * (rb.width() - 2 * e.x());
      const double y = rb.lo.y() + e.y() + u01(rng) * (rb.depth() - 2 * e.y());
      const Rect2 r{Vec2(x - e.x(), y - e.y()), Vec2(x + e.x(), y + e.y())};
      bool ok = point_in_polygon(room.polygon, Vec2(x, y));
      for (const auto& q : placed) ok = ok && intersection_area(r, q) <= 0.0;
      if (!ok) continue;
      placed.push_back(r);
      ObjectSlot s;
      s.location = {x, y, rec.half_extents.z()};
      s.size = rec.half_extents;
      s.yaw = yaw;
      s.class_logits = VectorXd::Constant(cat.num_classes() + 1, -4.0);
      s.class_logits[cls] = 4.0;
      s.latent = rec.latent;
      scene.slots.push_back(std::move(s));
      break;
    }
  }
  while (static_cast<int>(scene.slots.size()) < n_max)
    scene.slots.push_back(make_empty_slot(cat.num_classes(), cat.latent_dim(), center));
  return scene;
}

}  // namespace scenegen::toy
