#include "wavereg/clipper.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wavereg {

double clip(double x, double tau) {
  if (!(tau >= 0.0)) {
    throw std::invalid_argument("clipper: clip threshold must be >= 0");
  }
  return std::clamp(x, -tau, tau);
}

void ClipConfig::validate(bool allow_noiseless) const {
  if (!(delta > 0.0 && delta < 1.0)) {
    throw std::invalid_argument("clipper: delta must lie in (0, 1)");
  }
  if (!(nu >= 0.0) || !(mu >= 0.0)) {
    throw std::invalid_argument("clipper: nu and mu must be >= 0");
  }
  if (mode == Mode::fixed && !(fixed_margin >= 0.0)) {
    throw std::invalid_argument("clipper: fixed margin must be >= 0");
  }
  if (mode == Mode::schedule && nu == 0.0 && mu == 0.0 && !allow_noiseless) {
    throw std::invalid_argument(
        "clipper: schedule mode needs (nu, mu); with unknown noise use the "
        "margin-grid aggregator instead");
  }
}

double margin_schedule(const ClipConfig& config, std::int64_t t) {
  if (t < 1) {
    throw std::invalid_argument("clipper: schedule round index must be >= 1");
  }
  if (config.nu == 0.0 && config.mu == 0.0) {
    return 0.0;
  }
  const double c_nm = std::sqrt(1.5707963267948966) * config.nu + 2.0 * config.mu;
  const double arg =
      c_nm * static_cast<double>(t) / std::log(1.0 / config.delta);
  const double log_t = std::log(std::max(arg, std::exp(1.0)));
  const double margin =
      std::max(config.nu * std::sqrt(2.0 * log_t), 2.0 * config.mu * log_t);
  return std::max(margin, 0.0);
}

ClippedLearner::ClippedLearner(std::size_t n, double c1, double radius,
                               ClipConfig config)
    : config_(config) {
  bettors_.reserve(n);
  for (std::size_t i = 0; i < n; ++i) bettors_.emplace_back(c1, radius);
}

ClippedLearner::ClippedLearner(std::vector<CoinBettor> bettors, ClipConfig config)
    : bettors_(std::move(bettors)), config_(config) {}

double ClippedLearner::next_margin() const {
  if (config_.mode == ClipConfig::Mode::fixed) {
    return config_.fixed_margin;
  }
  return margin_schedule(config_, t_ + 1);
}

std::vector<double> ClippedLearner::predictions() const {
  std::vector<double> out(bettors_.size());
  for (std::size_t n = 0; n < bettors_.size(); ++n) out[n] = bettors_[n].predict();
  return out;
}

std::size_t ClippedLearner::step(std::span<const double> noisy_grad,
                                 std::span<const double> grad_bounds,
                                 double margin) {
  if (noisy_grad.size() != bettors_.size() || grad_bounds.size() != bettors_.size()) {
    throw std::invalid_argument("clipper: gradient/bound length mismatch");
  }
  if (!(margin >= 0.0)) {
    throw std::invalid_argument("clipper: margin must be >= 0");
  }
  std::size_t clipped = 0;
  for (std::size_t n = 0; n < bettors_.size(); ++n) {
    const double bound = grad_bounds[n];
    if (!(bound >= 0.0)) {
      throw std::invalid_argument("clipper: gradient bounds must be >= 0");
    }
    if (bound == 0.0) {
      continue;  // zero-bound rule: coordinate untouched
    }
    const double gbar_bound = bound + margin;
    const double gbar = clip(noisy_grad[n], gbar_bound);
    if (gbar != noisy_grad[n]) ++clipped;
    bettors_[n].update(gbar, gbar_bound);
  }
  t_ += 1;
  return clipped;
}

std::size_t ClippedLearner::step(std::span<const double> noisy_grad,
                                 std::span<const double> grad_bounds) {
  return step(noisy_grad, grad_bounds, next_margin());
}

}  // namespace wavereg
