#pragma once

#include <Eigen/Core>

#include <cmath>
#include <string>

#include "scenegen/error.hpp"
#include "scenegen/floorplan.hpp"
#include "scenegen/scene.hpp"

namespace scenegen {

/// Channel layout of one slot inside the flat diffusion state.
///
/// Per slot: location(3) size(3) orientation(cos, sin) class logits(C+1) latent(K).
struct StateLayout {
  int n_max = 0;
  int num_classes = 0;
  int latent_dim = 0;

  static constexpr int kLocation = 0;
  static constexpr int kSize = 3;
  static constexpr int kOrientation = 6;
  static constexpr int kLogits = 8;

  int slot_dim() const { return kLogits + num_classes + 1 + latent_dim; }
  int state_dim() const { return n_max * slot_dim(); }
  int slot_offset(int slot) const { return slot * slot_dim(); }
  int empty_logit(int slot) const { return slot_offset(slot) + kLogits + num_classes; }
  int latent_offset(int slot) const { return slot_offset(slot) + kLogits + num_classes + 1; }
};

/// Affine/log maps between physical slot values and the bounded diffusion space.
///
/// Location x,y map the floor-plan bbox onto [-1,1]^2 and z maps [0, height]
/// onto [0,1]. Half-extents map log-linearly so that the catalog's extent
/// range lands on [-1,1]. Logits and latents pass through unchanged.
struct NormalizationSpec {
  StateLayout layout;
  std::string floorplan_id;
  Vec2 bbox_lo = Vec2::Zero();
  Vec2 bbox_hi = Vec2::Ones();
  double height = 3.0;
  double log_size_lo = std::log(0.05);
  double log_size_hi = std::log(2.0);

  Vec2 center() const { return 0.5 * (bbox_lo + bbox_hi); }
  Vec2 half_span() const { return 0.5 * (bbox_hi - bbox_lo); }

  Vec3 normalize_location(const Vec3& p) const {
    const Vec2 c = center();
    const Vec2 h = half_span();
    return {(p.x() - c.x()) / h.x(), (p.y() - c.y()) / h.y(), p.z() / height};
  }
  Vec3 denormalize_location(const Vec3& u) const {
    const Vec2 c = center();
    const Vec2 h = half_span();
    return {c.x() + u.x() * h.x(), c.y() + u.y() * h.y(), u.z() * height};
  }
  // d(physical)/d(normalized) per axis
  Vec3 location_scale() const {
    const Vec2 h = half_span();
    return {h.x(), h.y(), height};
  }

  double normalize_size(double s) const {
    return 2.0 * (std::log(s) - log_size_lo) / (log_size_hi - log_size_lo) - 1.0;
  }
  double denormalize_size(double u) const {
    return std::exp(log_size_lo + 0.5 * (u + 1.0) * (log_size_hi - log_size_lo));
  }
  // d(physical size)/d(normalized) evaluated at physical size s
  double size_scale(double s) const { return 0.5 * s * (log_size_hi - log_size_lo); }

  Vec3 floor_center() const {
    const Vec2 c = center();
    return {c.x(), c.y(), 0.0};
  }
};

inline NormalizationSpec make_normalization(const FloorPlan& plan, const AssetCatalog& catalog, int n_max,
                                            double height = 3.0) {
  NormalizationSpec spec;
  spec.layout = {n_max, catalog.num_classes(), catalog.latent_dim()};
  spec.floorplan_id = plan.id;
  const Rect2 b = plan.bbox();
  spec.bbox_lo = b.lo;
  spec.bbox_hi = b.hi;
  if (b.width() <= 0.0 || b.depth() <= 0.0) throw InvalidArgument("floor plan bbox is degenerate");
  spec.height = height;
  if (!catalog.empty()) {
    const auto [lo, hi] = catalog.extent_range();
    spec.log_size_lo = std::log(lo);
    spec.log_size_hi = std::log(hi);
    if (!(spec.log_size_hi > spec.log_size_lo)) spec.log_size_hi = spec.log_size_lo + 1.0;
  }
  return spec;
}

inline Eigen::VectorXd normalize_scene(const SceneLayout& scene, const NormalizationSpec& spec) {
  if (scene.floorplan_id != spec.floorplan_id)
    throw InvalidArgument("unknown floorplan_id '" + scene.floorplan_id + "'");
  const StateLayout& L = spec.layout;
  if (static_cast<int>(scene.slots.size()) != L.n_max) throw DimensionMismatch("scene slot count != N_max");
  Eigen::VectorXd x(L.state_dim());
  for (int i = 0; i < L.n_max; ++i) {
    const ObjectSlot& s = scene.slots[i];
    if (s.class_logits.size() != L.num_classes + 1 || s.latent.size() != L.latent_dim)
      throw DimensionMismatch("slot channel count mismatch");
    if ((s.size.array() <= 0.0).any()) throw InvalidArgument("non-positive slot size");
    const int o = L.slot_offset(i);
    x.segment<3>(o + StateLayout::kLocation) = spec.normalize_location(s.location);
    for (int k = 0; k < 3; ++k) x[o + StateLayout::kSize + k] = spec.normalize_size(s.size[k]);
    x[o + StateLayout::kOrientation] = std::cos(s.yaw);
    x[o + StateLayout::kOrientation + 1] = std::sin(s.yaw);
    x.segment(o + StateLayout::kLogits, L.num_classes + 1) = s.class_logits;
    x.segment(L.latent_offset(i), L.latent_dim) = s.latent;
  }
  return x;
}

/// Yaw in [-pi, pi) from an unnormalized (cos, sin) pair.
inline double decode_yaw(double c, double s) {
  double yaw = std::atan2(s, c);
  if (yaw >= kPi) yaw -= 2.0 * kPi;
  return yaw;
}

inline ObjectSlot decode_slot(const Eigen::VectorXd& x, int i, const NormalizationSpec& spec) {
  const StateLayout& L = spec.layout;
  const int o = L.slot_offset(i);
  ObjectSlot s;
  s.location = spec.denormalize_location(x.segment<3>(o + StateLayout::kLocation));
  for (int k = 0; k < 3; ++k) s.size[k] = spec.denormalize_size(x[o + StateLayout::kSize + k]);
  s.yaw = decode_yaw(x[o + StateLayout::kOrientation], x[o + StateLayout::kOrientation + 1]);
  s.class_logits = x.segment(o + StateLayout::kLogits, L.num_classes + 1);
  s.latent = x.segment(L.latent_offset(i), L.latent_dim);
  return s;
}

inline SceneLayout denormalize_scene(const Eigen::VectorXd& x, const NormalizationSpec& spec, std::uint64_t seed = 0) {
  const StateLayout& L = spec.layout;
  if (x.size() != L.state_dim()) throw DimensionMismatch("state length != N_max * D");
  SceneLayout scene;
  scene.floorplan_id = spec.floorplan_id;
  scene.seed = seed;
  scene.slots.reserve(L.n_max);
  for (int i = 0; i < L.n_max; ++i) scene.slots.push_back(decode_slot(x, i, spec));
  return scene;
}

/// Resets slots whose argmax is the empty channel to the canonical empty
/// representation (floor center, epsilon size, zero latent).
inline SceneLayout clear_empty_slots(SceneLayout scene, const NormalizationSpec& spec) {
  for (auto& s : scene.slots) {
    if (s.occupied()) continue;
    s.location = spec.floor_center();
    s.size = Vec3::Constant(kEmptySlotSize);
    s.yaw = 0.0;
    s.latent.setZero();
  }
  return scene;
}

}  // namespace scenegen
