#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <vector>

#include "scenegen/error.hpp"
#include "scenegen/normalization.hpp"
#include "scenegen/potential.hpp"

namespace scenegen {

using Eigen::VectorXd;
using Rng = std::mt19937_64;

/// Variance schedule tables, indexed by step t in [1, T].
class NoiseSchedule {
 public:
  NoiseSchedule() = default;
  explicit NoiseSchedule(std::vector<double> betas) : beta_(std::move(betas)) {
    const std::size_t T = beta_.size();
    for (std::size_t i = 0; i < T; ++i) {
      if (!(beta_[i] > 0.0 && beta_[i] < 1.0)) throw InvalidArgument("betas must lie in (0, 1)");
      if (i > 0 && !(beta_[i] > beta_[i - 1])) throw InvalidArgument("betas must be strictly increasing");
    }
    alpha_.resize(T);
    alpha_bar_.resize(T);
    posterior_var_.resize(T);
    double prod = 1.0;
    for (std::size_t i = 0; i < T; ++i) {
      alpha_[i] = 1.0 - beta_[i];
      const double prev = prod;
      prod *= alpha_[i];
      alpha_bar_[i] = prod;
      posterior_var_[i] = (1.0 - prev) / (1.0 - prod) * beta_[i];
    }
  }

  int T() const { return static_cast<int>(beta_.size()); }
  double beta(int t) const { return beta_.at(t - 1); }
  double alpha(int t) const { return alpha_.at(t - 1); }
  double alpha_bar(int t) const { return alpha_bar_.at(t - 1); }
  // alpha_bar_0 = 1
  double alpha_bar_prev(int t) const { return t <= 1 ? 1.0 : alpha_bar_.at(t - 2); }
  double posterior_var(int t) const { return posterior_var_.at(t - 1); }

  const std::vector<double>& betas() const { return beta_; }

 private:
  std::vector<double> beta_, alpha_, alpha_bar_, posterior_var_;
};

/// Linear beta schedule including both endpoints.
inline NoiseSchedule make_schedule(int T, double beta_start, double beta_end) {
  if (T < 2) throw InvalidArgument("schedule needs T >= 2");
  if (!(0.0 < beta_start && beta_start < beta_end && beta_end < 1.0))
    throw InvalidArgument("need 0 < beta_start < beta_end < 1");
  std::vector<double> b(T);
  for (int i = 0; i < T; ++i) b[i] = beta_start + (beta_end - beta_start) * i / (T - 1);
  return NoiseSchedule(std::move(b));
}

inline constexpr double kBetaStart1000 = 1e-4;
inline constexpr double kBetaEnd1000 = 0.02;

/// The T=1000 range [1e-4, 0.02] rescaled by 1000/T, so that shorter chains
/// still end near N(0, I) (alpha_bar_T ~ 4e-5 for any T).
inline NoiseSchedule default_schedule(int T) {
  const double k = 1000.0 / T;
  return make_schedule(T, kBetaStart1000 * k, std::min(kBetaEnd1000 * k, 0.999));
}

inline void check_step(int t, const NoiseSchedule& s) {
  if (t < 1 || t > s.T()) throw InvalidArgument("step t out of range [1, T]");
}

/// x_t = sqrt(abar_t) x0 + sqrt(1 - abar_t) eps
inline VectorXd forward_sample(const VectorXd& x0, int t, const VectorXd& eps, const NoiseSchedule& sched) {
  if (x0.size() != eps.size()) throw DimensionMismatch("x0 and eps lengths differ");
  check_step(t, sched);
  const double ab = sched.alpha_bar(t);
  return std::sqrt(ab) * x0 + std::sqrt(1.0 - ab) * eps;
}

struct Posterior {
  VectorXd mean;
  double var = 0.0;
};

/// Reverse-step mean from a noise prediction; variance is the posterior
/// variance beta-tilde_t.
inline Posterior posterior_params(const VectorXd& x_t, int t, const VectorXd& eps_hat, const NoiseSchedule& sched) {
  if (x_t.size() != eps_hat.size()) throw DimensionMismatch("x_t and eps_hat lengths differ");
  check_step(t, sched);
  const double b = sched.beta(t);
  const double coef = b / std::sqrt(1.0 - sched.alpha_bar(t));
  return {(x_t - coef * eps_hat) / std::sqrt(sched.alpha(t)), sched.posterior_var(t)};
}

inline VectorXd standard_normal(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> n01(0.0, 1.0);
  VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = n01(rng);
  return v;
}

/// Noise predictor eps_hat(x_t, t). Conditioning is bound in by the caller.
using Denoiser = std::function<VectorXd(const VectorXd&, int)>;

/// Gaussian mixture with diagonal covariances; the exact data law the
/// closed-form noise oracle is built for.
struct MixtureComponent {
  double weight = 1.0;
  VectorXd mean;
  VectorXd var;  // per-dimension variance
};

struct GaussianMixture {
  std::vector<MixtureComponent> components;

  Eigen::Index dim() const { return components.empty() ? 0 : components.front().mean.size(); }

  static MixtureComponent isotropic(double weight, VectorXd mean, double var) {
    const Eigen::Index n = mean.size();
    return {weight, std::move(mean), VectorXd::Constant(n, var)};
  }

  void validate() const {
    if (components.empty()) throw InvalidArgument("mixture has no components");
    double total = 0.0;
    for (const auto& c : components) {
      if (!(c.weight > 0.0)) throw InvalidArgument("mixture weights must be positive");
      if (c.mean.size() != dim() || c.var.size() != dim()) throw DimensionMismatch("mixture component dims differ");
      if ((c.var.array() < 0.0).any() || !c.var.allFinite()) throw InvalidArgument("degenerate mixture variance");
      total += c.weight;
    }
    if (std::abs(total - 1.0) > 1e-9) throw InvalidArgument("mixture weights must sum to 1");
  }

  VectorXd sample(Rng& rng) const {
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    double u = u01(rng);
    std::size_t k = 0;
    for (; k + 1 < components.size(); ++k) {
      if (u < components[k].weight) break;
      u -= components[k].weight;
    }
    const auto& c = components[k];
    return c.mean + (c.var.array().sqrt() * standard_normal(dim(), rng).array()).matrix();
  }
};

/// Bayes-optimal E[eps | x_t] when x0 follows `mix`.
///
/// Component k noises to N(sqrt(abar) mu_k, abar var_k + 1 - abar); the
/// per-component conditional mean of eps is sqrt(1-abar)(x_t - sqrt(abar) mu_k)
/// / (abar var_k + 1 - abar), mixed by posterior responsibilities.
inline VectorXd oracle_eps(const VectorXd& x_t, int t, const GaussianMixture& mix, const NoiseSchedule& sched) {
  check_step(t, sched);
  if (x_t.size() != mix.dim()) throw DimensionMismatch("x_t dim != mixture dim");
  const double ab = sched.alpha_bar(t);
  const double sab = std::sqrt(ab);
  const double s1 = std::sqrt(1.0 - ab);
  const std::size_t K = mix.components.size();
  std::vector<double> logw(K);
  std::vector<VectorXd> eps_k(K);
  double max_logw = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < K; ++k) {
    const auto& c = mix.components[k];
    const Eigen::ArrayXd v = ab * c.var.array() + (1.0 - ab);
    if ((v <= 0.0).any()) throw InvalidArgument("degenerate mixture variance at this step");
    const Eigen::ArrayXd r = x_t.array() - sab * c.mean.array();
    logw[k] = std::log(c.weight) - 0.5 * ((r * r) / v).sum() - 0.5 * v.log().sum();
    eps_k[k] = (s1 * r / v).matrix();
    max_logw = std::max(max_logw, logw[k]);
  }
  VectorXd out = VectorXd::Zero(x_t.size());
  double z = 0.0;
  for (std::size_t k = 0; k < K; ++k) {
    const double w = std::exp(logw[k] - max_logw);
    z += w;
    out += w * eps_k[k];
  }
  return out / z;
}

inline Denoiser mixture_denoiser(GaussianMixture mix, NoiseSchedule sched) {
  mix.validate();
  return [mix = std::move(mix), sched = std::move(sched)](const VectorXd& x, int t) {
    return oracle_eps(x, t, mix, sched);
  };
}

/// Product of independent mixtures over contiguous coordinate blocks. Its
/// law equals the full mixture over every combination of block components,
/// but the oracle costs the sum, not the product, of the component counts.
struct BlockMixture {
  struct Block {
    Eigen::Index offset = 0;
    GaussianMixture mix;
  };
  std::vector<Block> blocks;

  Eigen::Index dim() const { return blocks.empty() ? 0 : blocks.back().offset + blocks.back().mix.dim(); }

  void validate() const {
    if (blocks.empty()) throw InvalidArgument("block mixture has no blocks");
    Eigen::Index next = 0;
    for (const auto& b : blocks) {
      if (b.offset != next) throw InvalidArgument("mixture blocks must be contiguous and ordered");
      b.mix.validate();
      next += b.mix.dim();
    }
  }

  VectorXd sample(Rng& rng) const {
    VectorXd x(dim());
    for (const auto& b : blocks) x.segment(b.offset, b.mix.dim()) = b.mix.sample(rng);
    return x;
  }

  /// The equivalent flat mixture; exponential in the block count.
  GaussianMixture flatten() const {
    GaussianMixture out;
    out.components.push_back({1.0, VectorXd(0), VectorXd(0)});
    for (const auto& b : blocks) {
      std::vector<MixtureComponent> next;
      for (const auto& head : out.components) {
        for (const auto& c : b.mix.components) {
          MixtureComponent m{head.weight * c.weight, VectorXd(head.mean.size() + c.mean.size()),
                             VectorXd(head.var.size() + c.var.size())};
          m.mean << head.mean, c.mean;
          m.var << head.var, c.var;
          next.push_back(std::move(m));
        }
      }
      out.components = std::move(next);
    }
    return out;
  }
};

inline VectorXd oracle_eps(const VectorXd& x_t, int t, const BlockMixture& mix, const NoiseSchedule& sched) {
  if (x_t.size() != mix.dim()) throw DimensionMismatch("x_t dim != mixture dim");
  VectorXd out(x_t.size());
  for (const auto& b : mix.blocks) {
    const Eigen::Index n = b.mix.dim();
    out.segment(b.offset, n) = oracle_eps(VectorXd(x_t.segment(b.offset, n)), t, b.mix, sched);
  }
  return out;
}

inline Denoiser mixture_denoiser(BlockMixture mix, NoiseSchedule sched) {
  mix.validate();
  return [mix = std::move(mix), sched = std::move(sched)](const VectorXd& x, int t) {
    return oracle_eps(x, t, mix, sched);
  };
}

/// Per-step record kept by generate() when a trace is requested.
struct StepTrace {
  int t = 0;
  double potential = 0.0;
  bool guided = false;
};

/// One reverse step: x_{t-1} ~ N(mu + lambda sigma_t^2 g(mu), sigma_t^2 I).
///
/// g is the composite guidance direction evaluated at the predicted mean.
/// The t = 1 step is deterministic. With lambda = 0 or every gate closed the
/// step is the plain ancestral step and consumes the same random stream.
inline VectorXd guided_step(const VectorXd& x_t, int t, const Denoiser& denoiser, const Guidance& guidance,
                            double lambda, const NoiseSchedule& sched, Rng& rng, StepTrace* trace = nullptr) {
  check_step(t, sched);
  const VectorXd eps_hat = denoiser(x_t, t);
  if (eps_hat.size() != x_t.size()) throw DimensionMismatch("denoiser output length mismatch");
  Posterior post = posterior_params(x_t, t, eps_hat, sched);
  VectorXd next = post.mean;
  if (trace) *trace = {t, 0.0, false};
  if (lambda != 0.0 && any_admitted(guidance, t)) {
    const PotentialValue pv = evaluate_composite(guidance, t, post.mean);
    if (!pv.gradient.allFinite() || !std::isfinite(pv.value))
      throw NumericalError("guidance gradient is not finite at t=" + std::to_string(t));
    next += lambda * post.var * pv.gradient;
    if (trace) *trace = {t, pv.value, true};
  }
  if (t > 1) next += std::sqrt(post.var) * standard_normal(x_t.size(), rng);
  return next;
}

/// Full reverse chain T..1 from x_T ~ N(0, I); returns the raw final state.
inline VectorXd sample_state(const Denoiser& denoiser, Eigen::Index dim, const Guidance& guidance, double lambda,
                             const NoiseSchedule& sched, Rng& rng, std::vector<StepTrace>* trace = nullptr) {
  VectorXd x = standard_normal(dim, rng);
  if (trace) trace->clear();
  for (int t = sched.T(); t >= 1; --t) {
    StepTrace st;
    x = guided_step(x, t, denoiser, guidance, lambda, sched, rng, trace ? &st : nullptr);
    if (trace) trace->push_back(st);
  }
  return x;
}

/// Samples a scene: reverse chain, denormalize, clear empty-argmax slots.
inline SceneLayout generate(const Denoiser& denoiser, const NormalizationSpec& spec, const Guidance& guidance,
                            double lambda, const NoiseSchedule& sched, Rng& rng, std::uint64_t seed = 0,
                            std::vector<StepTrace>* trace = nullptr) {
  const VectorXd x0 = sample_state(denoiser, spec.layout.state_dim(), guidance, lambda, sched, rng, trace);
  return clear_empty_slots(denormalize_scene(x0, spec, seed), spec);
}

}  // namespace scenegen
