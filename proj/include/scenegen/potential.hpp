#pragma once

#include <Eigen/Core>

#include <functional>
#include <string>
#include <vector>

namespace scenegen {

/// Value of a guidance potential and its steering direction.
///
/// Potentials are losses (value >= 0); `gradient` is the NEGATED loss
/// gradient so that adding it to the reverse-step mean lowers the loss.
struct PotentialValue {
  double value = 0.0;
  Eigen::VectorXd gradient;
};

using Potential = std::function<PotentialValue(const Eigen::VectorXd&)>;

/// Potential weighted by gamma and active only while t < t_max.
struct GatedPotential {
  std::string name;
  Potential fn;
  double weight = 1.0;
  int t_max = 0;

  bool admits(int t) const { return t < t_max && weight != 0.0; }
};

using Guidance = std::vector<GatedPotential>;

inline bool any_admitted(const Guidance& g, int t) {
  for (const auto& p : g)
    if (p.admits(t)) return true;
  return false;
}

/// Weighted sum of the potentials whose gate admits step t.
inline PotentialValue evaluate_composite(const Guidance& guidance, int t, const Eigen::VectorXd& state) {
  PotentialValue out{0.0, Eigen::VectorXd::Zero(state.size())};
  for (const auto& p : guidance) {
    if (!p.admits(t)) continue;
    const PotentialValue v = p.fn(state);
    out.value += p.weight * v.value;
    out.gradient += p.weight * v.gradient;
  }
  return out;
}

inline Potential composite(const Guidance& guidance, int t) {
  return [guidance, t](const Eigen::VectorXd& state) { return evaluate_composite(guidance, t, state); };
}

}  // namespace scenegen
