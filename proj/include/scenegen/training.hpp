#pragma once

#include <Eigen/Core>

#include <cmath>
#include <random>
#include <span>
#include <vector>

#include "scenegen/denoiser.hpp"
#include "scenegen/diffusion.hpp"
#include "scenegen/error.hpp"
#include "scenegen/potential.hpp"

namespace scenegen {

/// One training example: normalized scene, its floor-plan encoding, and the
/// guidance whose gradient the network is trained to anticipate (optional).
struct TrainSample {
  VectorXd x0;
  VectorXd cond;
  const Guidance* guidance = nullptr;
};

/// The random draws of one sample: step index and forward noise.
struct TrainDraw {
  int t = 1;
  VectorXd eps;
};

/// Guided L2 loss: mean over samples and channels of
/// ((eps - lambda sigma_t^2 g(x_t)) - eps_theta(x_t, t, F))^2.
///
/// With lambda = 0 this is L_simple. When `grad` is non-null it receives the
/// exact parameter gradient of the returned loss.
inline double guided_loss(const DenoiserParams& params, std::span<const TrainSample> batch,
                          std::span<const TrainDraw> draws, double lambda, const NoiseSchedule& sched,
                          VectorXd* grad = nullptr) {
  if (batch.empty()) throw InvalidArgument("training batch is empty");
  if (batch.size() != draws.size()) throw DimensionMismatch("batch and draws differ in length");
  const Eigen::Index n = params.arch.state_dim;
  const Eigen::Index B = static_cast<Eigen::Index>(batch.size());
  MatrixXd x_t(n, B), target(n, B), cond(params.arch.cond_dim, B);
  std::vector<int> ts(B);
  for (Eigen::Index j = 0; j < B; ++j) {
    const TrainSample& s = batch[j];
    const TrainDraw& d = draws[j];
    x_t.col(j) = forward_sample(s.x0, d.t, d.eps, sched);
    target.col(j) = d.eps;
    if (lambda != 0.0 && s.guidance && any_admitted(*s.guidance, d.t)) {
      const PotentialValue pv = evaluate_composite(*s.guidance, d.t, x_t.col(j));
      if (!pv.gradient.allFinite()) throw NumericalError("guidance gradient is not finite during training");
      target.col(j) -= lambda * sched.posterior_var(d.t) * pv.gradient;
    }
    cond.col(j) = s.cond;
    ts[j] = d.t;
  }
  ForwardCache cache;
  const MatrixXd out = forward_batch(params, x_t, ts, cond, grad ? &cache : nullptr);
  const MatrixXd diff = out - target;
  const double denom = static_cast<double>(n * B);
  const double loss = diff.squaredNorm() / denom;
  if (!std::isfinite(loss)) throw NumericalError("training loss is not finite");
  if (grad) *grad = backward_batch(params, cache, (2.0 / denom) * diff);
  return loss;
}

inline std::vector<TrainDraw> draw_noise(std::span<const TrainSample> batch, const NoiseSchedule& sched, Rng& rng) {
  std::uniform_int_distribution<int> step(1, sched.T());
  std::vector<TrainDraw> draws;
  draws.reserve(batch.size());
  for (const auto& s : batch) {
    TrainDraw d;
    d.t = step(rng);
    d.eps = standard_normal(s.x0.size(), rng);
    draws.push_back(std::move(d));
  }
  return draws;
}

struct AdamConfig {
  double lr = 2e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double max_grad_norm = 10.0;
  std::uint64_t lr_step_size = 20000;
  double lr_decay = 0.5;
};

/// Adam with global-norm clipping and step learning-rate decay.
inline void adam_update(VectorXd& params, VectorXd grad, AdamState& state, const AdamConfig& cfg) {
  if (state.m.size() != params.size()) {
    state.m = VectorXd::Zero(params.size());
    state.v = VectorXd::Zero(params.size());
  }
  const double norm = grad.norm();
  if (cfg.max_grad_norm > 0.0 && norm > cfg.max_grad_norm) grad *= cfg.max_grad_norm / norm;
  const double lr = cfg.lr * std::pow(cfg.lr_decay, static_cast<double>(state.step / cfg.lr_step_size));
  ++state.step;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grad;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grad.cwiseProduct(grad);
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  params.array() -= lr * (state.m.array() / bc1) / ((state.v.array() / bc2).sqrt() + cfg.eps);
}

/// Owns the denoiser while it is trained. Single writer: do not share a
/// Trainer across threads during train_step.
class Trainer {
 public:
  Trainer(DenoiserParams params, NoiseSchedule sched, AdamConfig cfg = {})
      : params_(std::move(params)), sched_(std::move(sched)), cfg_(cfg) {}

  /// Draws t and eps for each sample, evaluates the guided loss and applies
  /// one Adam update. Returns the pre-update loss.
  double train_step(std::span<const TrainSample> batch, double lambda, Rng& rng) {
    const auto draws = draw_noise(batch, sched_, rng);
    VectorXd grad;
    const double loss = guided_loss(params_, batch, draws, lambda, sched_, &grad);
    adam_update(params_.data, std::move(grad), opt_, cfg_);
    return loss;
  }

  const DenoiserParams& params() const { return params_; }
  const AdamState& optimizer() const { return opt_; }
  void set_optimizer(AdamState s) { opt_ = std::move(s); }
  const NoiseSchedule& schedule() const { return sched_; }

 private:
  DenoiserParams params_;
  NoiseSchedule sched_;
  AdamConfig cfg_;
  AdamState opt_;
};

/// Binds floor-plan conditioning into a sampling-time denoiser.
inline Denoiser mlp_denoiser(DenoiserParams params, VectorXd cond) {
  return [p = std::move(params), c = std::move(cond)](const VectorXd& x, int t) { return forward(p, x, t, c); };
}

}  // namespace scenegen
