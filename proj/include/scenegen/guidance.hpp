#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <vector>

#include "scenegen/error.hpp"
#include "scenegen/normalization.hpp"
#include "scenegen/potential.hpp"
#include "scenegen/scene.hpp"

namespace scenegen {

using Eigen::VectorXd;

// ---------------------------------------------------------------------------
// Object quantity

/// Which slots should end up empty for a requested object count.
struct QuantityTarget {
  int n_target = 0;
  std::vector<double> emptiness;  // 1 = slot should be empty
};

/// Designates the n_target slots with the lowest empty logit as occupied
/// (ties by slot index) and every other slot as empty.
inline QuantityTarget select_quantity_target(const VectorXd& state, const StateLayout& layout, int n_target) {
  if (n_target < 0 || n_target > layout.n_max) throw InvalidArgument("n_target must lie in [0, N_max]");
  std::vector<int> order(layout.n_max);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return state[layout.empty_logit(a)] < state[layout.empty_logit(b)];
  });
  QuantityTarget target{n_target, std::vector<double>(layout.n_max, 1.0)};
  for (int r = 0; r < n_target; ++r) target.emptiness[order[r]] = 0.0;
  return target;
}

inline double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }
inline double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

/// BCE-with-logits between the empty logits and the emptiness targets,
/// averaged over N_max.
inline PotentialValue phi_quantity(const VectorXd& state, const StateLayout& layout, const QuantityTarget& target) {
  if (state.size() != layout.state_dim()) throw DimensionMismatch("state length mismatch");
  PotentialValue out{0.0, VectorXd::Zero(state.size())};
  const double inv_n = 1.0 / layout.n_max;
  for (int i = 0; i < layout.n_max; ++i) {
    const int ch = layout.empty_logit(i);
    const double c = state[ch];
    const double y = target.emptiness[i];
    out.value += (softplus(c) - c * y) * inv_n;
    out.gradient[ch] = -(sigmoid(c) - y) * inv_n;
  }
  return out;
}

inline PotentialValue phi_quantity(const VectorXd& state, const StateLayout& layout, int n_target) {
  return phi_quantity(state, layout, select_quantity_target(state, layout, n_target));
}

inline Potential quantity_potential(const StateLayout& layout, int n_target) {
  if (n_target < 0 || n_target > layout.n_max) throw InvalidArgument("n_target must lie in [0, N_max]");
  return [layout, n_target](const VectorXd& x) { return phi_quantity(x, layout, n_target); };
}

/// Regime key for check_gradient: the slot ranking that fixes the target.
inline std::vector<int> quantity_regime(const VectorXd& state, const StateLayout& layout, int n_target) {
  const QuantityTarget t = select_quantity_target(state, layout, n_target);
  return std::vector<int>(t.emptiness.begin(), t.emptiness.end());
}

// ---------------------------------------------------------------------------
// Articulated collision

/// Per-class articulation used while sampling (before assets are retrieved).
using ClassArticulations = std::vector<std::optional<ArticulationSpec>>;

inline ClassArticulations class_articulations(const AssetCatalog& catalog) {
  ClassArticulations out(catalog.num_classes());
  for (int c = 0; c < catalog.num_classes(); ++c) out[c] = catalog.representative_articulation(c);
  return out;
}

namespace detail {

struct DecodedBox {
  int slot = 0;
  ObjectSlot obj;
  Aabb3 extended;
  Aabb3 fixed;
  Eigen::Matrix3d abs_rot;
};

inline std::vector<DecodedBox> decode_boxes(const VectorXd& state, const NormalizationSpec& spec,
                                            const ClassArticulations& arts) {
  std::vector<DecodedBox> boxes;
  for (int i = 0; i < spec.layout.n_max; ++i) {
    ObjectSlot s = decode_slot(state, i, spec);
    const int cls = s.class_id();
    if (cls < 0) continue;
    const auto art = cls < static_cast<int>(arts.size()) ? arts[cls] : std::nullopt;
    DecodedBox b{i, s, functional_extension(s, art), static_box(s), yaw_rotation(s.yaw).cwiseAbs()};
    boxes.push_back(std::move(b));
  }
  return boxes;
}

}  // namespace detail

/// Sum over ordered occupied pairs i != j of IoU(b'_i, b_j), with b'_i the
/// functionally extended box and b_j the static box.
///
/// The gradient is analytic through the AABB bounds w.r.t. normalized
/// location and size channels. Orientation and logit channels get zero.
inline PotentialValue phi_articoll(const VectorXd& state, const NormalizationSpec& spec,
                                   const ClassArticulations& arts) {
  const StateLayout& L = spec.layout;
  if (state.size() != L.state_dim()) throw DimensionMismatch("state length mismatch");
  PotentialValue out{0.0, VectorXd::Zero(state.size())};
  const auto boxes = detail::decode_boxes(state, spec, arts);
  const std::size_t n = boxes.size();
  std::vector<Vec3> d_lo(n, Vec3::Zero()), d_hi(n, Vec3::Zero());
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      if (a == b) continue;
      const IouGrad g = iou3d_with_grad(boxes[a].extended, boxes[b].fixed);
      if (g.value <= 0.0) continue;
      out.value += g.value;
      d_lo[a] += g.d_a_lo;
      d_hi[a] += g.d_a_hi;
      d_lo[b] += g.d_b_lo;
      d_hi[b] += g.d_b_hi;
    }
  }
  const Vec3 loc_scale = spec.location_scale();
  for (std::size_t a = 0; a < n; ++a) {
    const detail::DecodedBox& B = boxes[a];
    const int o = L.slot_offset(B.slot);
    // lo = c - |R| s - ext, hi = c + |R| s + ext
    const Vec3 d_center = d_lo[a] + d_hi[a];
    const Vec3 d_size = B.abs_rot.transpose() * (d_hi[a] - d_lo[a]);
    for (int k = 0; k < 3; ++k) {
      out.gradient[o + StateLayout::kLocation + k] = -d_center[k] * loc_scale[k];
      out.gradient[o + StateLayout::kSize + k] = -d_size[k] * spec.size_scale(B.obj.size[k]);
    }
  }
  return out;
}

inline PotentialValue phi_articoll(const VectorXd& state, const NormalizationSpec& spec, const AssetCatalog& catalog) {
  return phi_articoll(state, spec, class_articulations(catalog));
}

inline Potential articoll_potential(const NormalizationSpec& spec, const AssetCatalog& catalog) {
  return [spec, arts = class_articulations(catalog)](const VectorXd& x) { return phi_articoll(x, spec, arts); };
}

/// Regime key for check_gradient: occupancy plus, per ordered pair and
/// axis, which faces bound the overlap and whether it is positive.
inline std::vector<int> articoll_regime(const VectorXd& state, const NormalizationSpec& spec,
                                        const ClassArticulations& arts) {
  std::vector<int> key;
  for (int i = 0; i < spec.layout.n_max; ++i) key.push_back(decode_slot(state, i, spec).class_id());
  const auto boxes = detail::decode_boxes(state, spec, arts);
  for (std::size_t a = 0; a < boxes.size(); ++a) {
    for (std::size_t b = 0; b < boxes.size(); ++b) {
      if (a == b) continue;
      const Aabb3& A = boxes[a].extended;
      const Aabb3& B = boxes[b].fixed;
      for (int k = 0; k < 3; ++k) {
        key.push_back(std::min(A.hi[k], B.hi[k]) - std::max(A.lo[k], B.lo[k]) > 0.0);
        key.push_back(A.hi[k] < B.hi[k]);
        key.push_back(A.lo[k] > B.lo[k]);
      }
    }
  }
  return key;
}

// ---------------------------------------------------------------------------
// Composition

struct GuidedSampleConfig {
  double lambda = 0.0;
  double gamma_quantity = 0.0;
  double gamma_articoll = 0.0;
  int quantity_t_max = 100;
  int articoll_t_max = 10;
  std::optional<int> n_target;

  void validate(int T) const {
    if (lambda < 0.0 || gamma_quantity < 0.0 || gamma_articoll < 0.0)
      throw InvalidArgument("guidance scale and weights must be non-negative");
    if (quantity_t_max > T || articoll_t_max > T) throw InvalidArgument("guidance thresholds must not exceed T");
  }
};

/// gamma_1 phi_quantity + gamma_2 phi_articoll with their step gates.
inline Guidance make_guidance(const GuidedSampleConfig& cfg, const NormalizationSpec& spec,
                              const AssetCatalog& catalog) {
  Guidance g;
  if (cfg.n_target && cfg.gamma_quantity > 0.0)
    g.push_back({"quantity", quantity_potential(spec.layout, *cfg.n_target), cfg.gamma_quantity, cfg.quantity_t_max});
  if (cfg.gamma_articoll > 0.0)
    g.push_back({"articoll", articoll_potential(spec, catalog), cfg.gamma_articoll, cfg.articoll_t_max});
  return g;
}

// ---------------------------------------------------------------------------
// Finite-difference verification

struct GradientCheckResult {
  double max_rel_error = 0.0;
  int worst_coordinate = -1;
  int checked = 0;
  int skipped = 0;
};

using RegimeFn = std::function<std::vector<int>(const VectorXd&)>;

/// Compares the analytic loss gradient (-PotentialValue::gradient) with
/// central differences. Coordinates whose regime key changes anywhere within
/// 2h are skipped as piecewise boundaries. Relative error uses
/// max(|analytic|, |numeric|, abs_floor) as denominator.
inline GradientCheckResult check_gradient(const Potential& potential, const VectorXd& state, double h,
                                          const RegimeFn& regime = {}, double abs_floor = 1e-7) {
  if (!(h > 0.0)) throw InvalidArgument("finite-difference step must be positive");
  GradientCheckResult res;
  const PotentialValue base = potential(state);
  const std::vector<int> key = regime ? regime(state) : std::vector<int>{};
  VectorXd x = state;
  for (Eigen::Index i = 0; i < state.size(); ++i) {
    if (regime) {
      bool boundary = false;
      for (double s : {-2.0 * h, -h, h, 2.0 * h}) {
        x[i] = state[i] + s;
        if (regime(x) != key) boundary = true;
      }
      x[i] = state[i];
      if (boundary) {
        ++res.skipped;
        continue;
      }
    }
    x[i] = state[i] + h;
    const double fp = potential(x).value;
    x[i] = state[i] - h;
    const double fm = potential(x).value;
    x[i] = state[i];
    const double numeric = (fp - fm) / (2.0 * h);
    const double analytic = -base.gradient[i];
    const double denom = std::max({std::abs(analytic), std::abs(numeric), abs_floor});
    const double err = std::abs(analytic - numeric) / denom;
    ++res.checked;
    if (err > res.max_rel_error) {
      res.max_rel_error = err;
      res.worst_coordinate = static_cast<int>(i);
    }
  }
  return res;
}

}  // namespace scenegen
