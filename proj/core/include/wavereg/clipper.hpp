#ifndef WAVEREG_CLIPPER_HPP
#define WAVEREG_CLIPPER_HPP

#include <cstdint>
#include <span>
#include <vector>

#include "wavereg/bettor.hpp"

namespace wavereg {

/// clip(x, tau) = x for |x| <= tau, else sign(x) * tau.  Requires tau >= 0.
double clip(double x, double tau);

/**
 * Noise and margin configuration for clipped learning.
 *
 * nu / mu are the sub-Gaussian and sub-exponential scales of the
 * gradient noise, delta the confidence level.  In schedule mode the
 * margin grows logarithmically with the round index; in fixed mode a
 * constant margin is used (the adaptive meta-layer runs one learner
 * per fixed margin).
 */
struct ClipConfig {
  enum class Mode { schedule, fixed };

  double nu = 0.0;
  double mu = 0.0;
  double delta = 0.05;
  Mode mode = Mode::schedule;
  double fixed_margin = 0.0;

  /// Throws std::invalid_argument on out-of-range fields.  Schedule mode
  /// with nu = mu = 0 is rejected unless allow_noiseless is set: with no
  /// noise information the margin grid meta-layer is the right tool.
  void validate(bool allow_noiseless = false) const;
};

/**
 * Clipping margin for round t >= 1:
 *
 *   Delta_t = max( nu * sqrt(2 L_t), 2 * mu * L_t ),
 *   L_t = log( (sqrt(pi/2) nu + 2 mu) * t / log(1/delta) )
 *
 * with the log argument floored at e so small rounds stay safe, and 0
 * when nu = mu = 0.  Nondecreasing in t.
 */
double margin_schedule(const ClipConfig& config, std::int64_t t);

/**
 * A bank of coordinate bettors fed clipped gradients.
 *
 * One step clips each coordinate's noisy gradient at
 * Gbar = G_{n,t} + margin and feeds (clipped, Gbar) to bettor n, or
 * skips the coordinate entirely when its bound is zero.  Coordinates
 * are independent within a step; steps are strictly sequential.
 */
class ClippedLearner {
 public:
  /// N coordinates, all starting at c1 with radius C.
  ClippedLearner(std::size_t n, double c1, double radius, ClipConfig config);
  /// Heterogeneous start: one (c1, C) pair per coordinate.
  ClippedLearner(std::vector<CoinBettor> bettors, ClipConfig config);

  std::size_t size() const { return bettors_.size(); }
  std::int64_t round() const { return t_; }
  const ClipConfig& config() const { return config_; }

  /// Margin this learner would use for the next step (schedule or fixed).
  double next_margin() const;

  /// Current per-coordinate predictions.
  std::vector<double> predictions() const;
  double prediction(std::size_t n) const { return bettors_[n].predict(); }
  const CoinBettor& bettor(std::size_t n) const { return bettors_[n]; }

  /**
   * One clipped step with explicit margin.  Returns the number of
   * coordinates whose gradient was actually truncated.
   * Throws std::invalid_argument on length mismatch or margin < 0.
   */
  std::size_t step(std::span<const double> noisy_grad,
                   std::span<const double> grad_bounds, double margin);

  /// Convenience: step at next_margin().
  std::size_t step(std::span<const double> noisy_grad,
                   std::span<const double> grad_bounds);

 private:
  std::vector<CoinBettor> bettors_;
  ClipConfig config_;
  std::int64_t t_ = 0;
};

}  // namespace wavereg

#endif  // WAVEREG_CLIPPER_HPP
