#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "scenegen/error.hpp"
#include "scenegen/geometry.hpp"

namespace scenegen {

using Eigen::VectorXd;

// Half-extent stored for empty slots so the state stays fixed-width.
inline constexpr double kEmptySlotSize = 1e-3;

/// One of the N_max object slots of a scene.
///
/// `class_logits` has C+1 channels; the last one is the "empty" logit. Sizes
/// are half-extents in meters and yaw is a rotation about +z.
struct ObjectSlot {
  Vec3 location = Vec3::Zero();
  Vec3 size = Vec3::Constant(kEmptySlotSize);
  double yaw = 0.0;
  VectorXd class_logits;
  VectorXd latent;

  int num_classes() const { return static_cast<int>(class_logits.size()) - 1; }
  int empty_channel() const { return num_classes(); }

  // First maximal channel wins ties.
  int argmax_channel() const {
    Eigen::Index idx = 0;
    class_logits.maxCoeff(&idx);
    return static_cast<int>(idx);
  }
  bool occupied() const { return class_logits.size() > 0 && argmax_channel() != empty_channel(); }
  /// Class index of an occupied slot, -1 for empty slots.
  int class_id() const { return occupied() ? argmax_channel() : -1; }
};

struct SceneLayout {
  std::vector<ObjectSlot> slots;
  std::string floorplan_id;
  std::uint64_t seed = 0;

  std::size_t occupied_count() const {
    return static_cast<std::size_t>(
        std::count_if(slots.begin(), slots.end(), [](const ObjectSlot& s) { return s.occupied(); }));
  }
};

/// Slot that decodes as empty: empty logit high, others low.
inline ObjectSlot make_empty_slot(int num_classes, int latent_dim, const Vec3& center) {
  ObjectSlot s;
  s.location = center;
  s.class_logits = VectorXd::Constant(num_classes + 1, -4.0);
  s.class_logits[num_classes] = 4.0;
  s.latent = VectorXd::Zero(latent_dim);
  return s;
}

/// Rotation about +z.
inline Eigen::Matrix3d yaw_rotation(double yaw) {
  const double c = std::cos(yaw);
  const double s = std::sin(yaw);
  Eigen::Matrix3d r;
  r << c, -s, 0, s, c, 0, 0, 0, 1;
  return r;
}

/// Half-extents of the AABB enclosing a yawed box.
inline Vec3 enclosing_half_extents(const Vec3& size, double yaw) {
  return yaw_rotation(yaw).cwiseAbs() * size;
}

inline Aabb3 static_box(const ObjectSlot& slot) {
  const Vec3 e = enclosing_half_extents(slot.size, slot.yaw);
  return {slot.location - e, slot.location + e};
}

struct ArticulationSpec {
  Vec3 axis = Vec3::UnitX();  // object frame, unit length
  double extension_depth = 0.0;

  bool operator==(const ArticulationSpec& o) const {
    return axis == o.axis && extension_depth == o.extension_depth;
  }
};

/// Box covering the object plus its articulated part's swept volume.
///
/// The enclosing AABB of the oriented box is extended on one side along the
/// world-space image of the articulation axis. Without a spec this is the
/// plain enclosing AABB.
inline Aabb3 functional_extension(const ObjectSlot& slot, const std::optional<ArticulationSpec>& spec) {
  Aabb3 box = static_box(slot);
  if (!spec) return box;
  const Vec3 v = yaw_rotation(slot.yaw) * spec->axis * spec->extension_depth;
  for (int k = 0; k < 3; ++k) {
    if (v[k] > 0.0) box.hi[k] += v[k];
    else box.lo[k] += v[k];
  }
  return box;
}

struct Footprint {
  Rect2 rect;
  double area = 0.0;
};

/// Ground-plane projection of the slot's enclosing AABB.
inline Footprint footprint(const ObjectSlot& slot) {
  const Vec3 e = enclosing_half_extents(slot.size, slot.yaw);
  Footprint f;
  f.rect.lo = Vec2(slot.location.x() - e.x(), slot.location.y() - e.y());
  f.rect.hi = Vec2(slot.location.x() + e.x(), slot.location.y() + e.y());
  f.area = 4.0 * e.x() * e.y();
  return f;
}

inline double footprint_area(const Vec3& half_extents, double yaw) {
  const Vec3 e = enclosing_half_extents(half_extents, yaw);
  return 4.0 * e.x() * e.y();
}

struct AssetRecord {
  std::int64_t asset_id = 0;
  int class_id = 0;
  Vec3 half_extents = Vec3::Constant(0.5);
  VectorXd latent;
  std::optional<ArticulationSpec> articulation;
};

/// Deterministic stand-in for a learned shape embedding, seeded by asset id.
inline VectorXd default_latent(std::int64_t asset_id, int dim) {
  std::mt19937_64 rng(static_cast<std::uint64_t>(asset_id) * 0x9E3779B97F4A7C15ULL + 1);
  std::normal_distribution<double> n01(0.0, 1.0);
  VectorXd v(dim);
  for (int i = 0; i < dim; ++i) v[i] = n01(rng);
  return v;
}

class AssetCatalog {
 public:
  AssetCatalog() = default;
  AssetCatalog(std::vector<std::string> classes, std::vector<AssetRecord> assets)
      : classes_(std::move(classes)), assets_(std::move(assets)) {
    validate();
  }

  const std::vector<std::string>& classes() const { return classes_; }
  const std::vector<AssetRecord>& assets() const { return assets_; }
  int num_classes() const { return static_cast<int>(classes_.size()); }
  int latent_dim() const { return assets_.empty() ? 0 : static_cast<int>(assets_.front().latent.size()); }
  bool empty() const { return assets_.empty(); }

  bool has_class(int class_id) const {
    return std::any_of(assets_.begin(), assets_.end(), [&](const AssetRecord& a) { return a.class_id == class_id; });
  }

  const AssetRecord* find(std::int64_t asset_id) const {
    for (const auto& a : assets_)
      if (a.asset_id == asset_id) return &a;
    return nullptr;
  }

  /// Smallest and largest half-extent over every record.
  std::pair<double, double> extent_range() const {
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const auto& a : assets_) {
      lo = std::min(lo, a.half_extents.minCoeff());
      hi = std::max(hi, a.half_extents.maxCoeff());
    }
    return {lo, hi};
  }

  /// Most common articulation among the class's records (nullopt counts as a
  /// value); ties resolved by the lowest asset id carrying the value.
  std::optional<ArticulationSpec> representative_articulation(int class_id) const {
    std::vector<std::pair<std::optional<ArticulationSpec>, int>> counts;
    std::vector<const AssetRecord*> members;
    for (const auto& a : assets_)
      if (a.class_id == class_id) members.push_back(&a);
    std::sort(members.begin(), members.end(),
              [](const AssetRecord* x, const AssetRecord* y) { return x->asset_id < y->asset_id; });
    for (const AssetRecord* a : members) {
      auto it = std::find_if(counts.begin(), counts.end(), [&](const auto& c) { return c.first == a->articulation; });
      if (it == counts.end()) counts.emplace_back(a->articulation, 1);
      else ++it->second;
    }
    std::optional<ArticulationSpec> best;
    int best_count = 0;
    for (const auto& [spec, n] : counts) {
      if (n > best_count) {
        best = spec;
        best_count = n;
      }
    }
    return best;
  }

 private:
  void validate() const {
    const int k = assets_.empty() ? 0 : static_cast<int>(assets_.front().latent.size());
    for (const auto& a : assets_) {
      if ((a.half_extents.array() <= 0.0).any())
        throw InvalidArgument("asset " + std::to_string(a.asset_id) + " has non-positive half extents");
      if (a.latent.size() != k) throw DimensionMismatch("asset latent dimensions differ");
      if (a.class_id < 0 || a.class_id >= static_cast<int>(classes_.size()))
        throw InvalidArgument("asset " + std::to_string(a.asset_id) + " references unknown class");
      if (a.articulation) {
        if (std::abs(a.articulation->axis.norm() - 1.0) > 1e-9)
          throw InvalidArgument("articulation axis must be unit length");
        if (!std::isfinite(a.articulation->extension_depth) || a.articulation->extension_depth < 0.0)
          throw InvalidArgument("extension depth must be finite and non-negative");
      }
    }
  }

  std::vector<std::string> classes_;
  std::vector<AssetRecord> assets_;
};

struct AssetQuery {
  VectorXd latent;
  std::optional<int> class_id;
  // Only records whose footprint (at `yaw`) is strictly below this area pass.
  std::optional<double> size_cap;
  double yaw = 0.0;
};

/// Nearest record by Euclidean latent distance among those passing the
/// filters. Ties go to the lowest asset id. Throws NoCandidateError when the
/// filters leave nothing.
inline const AssetRecord& nearest_asset(const AssetCatalog& catalog, const AssetQuery& q) {
  if (catalog.empty()) throw NoCandidateError("catalog is empty");
  const AssetRecord* best = nullptr;
  double best_d = std::numeric_limits<double>::infinity();
  for (const auto& a : catalog.assets()) {
    if (q.class_id && a.class_id != *q.class_id) continue;
    if (q.size_cap && !(footprint_area(a.half_extents, q.yaw) < *q.size_cap)) continue;
    if (a.latent.size() != q.latent.size()) throw DimensionMismatch("query latent dimension mismatch");
    const double d = (a.latent - q.latent).squaredNorm();
    if (d < best_d || (d == best_d && best && a.asset_id < best->asset_id)) {
      best = &a;
      best_d = d;
    }
  }
  if (!best) throw NoCandidateError("no catalog record passes the query filters");
  return *best;
}

/// Articulation of the record a slot's latent retrieves within its class.
inline std::optional<ArticulationSpec> retrieved_articulation(const ObjectSlot& slot, const AssetCatalog& catalog) {
  const int cls = slot.class_id();
  if (cls < 0 || !catalog.has_class(cls)) return std::nullopt;
  return nearest_asset(catalog, {slot.latent, cls, std::nullopt, 0.0}).articulation;
}

/// Replaces every occupied slot's latent with that of its nearest same-class
/// record. With `snap_size` the record's half extents replace the slot size.
inline SceneLayout retrieve_assets(SceneLayout scene, const AssetCatalog& catalog, bool snap_size = false) {
  for (auto& slot : scene.slots) {
    const int cls = slot.class_id();
    if (cls < 0 || !catalog.has_class(cls)) continue;
    const AssetRecord& rec = nearest_asset(catalog, {slot.latent, cls, std::nullopt, 0.0});
    slot.latent = rec.latent;
    if (snap_size) slot.size = rec.half_extents;
  }
  return scene;
}

}  // namespace scenegen
