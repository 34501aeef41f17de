#ifndef WAVEREG_AGGREGATOR_HPP
#define WAVEREG_AGGREGATOR_HPP

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "wavereg/clipper.hpp"

namespace wavereg {

/// Grid of clipping margins to try in parallel.
struct MarginGrid {
  enum class Mode { integer, geometric };

  std::vector<double> margins;  // starts at 0, strictly increasing
  Mode mode = Mode::geometric;

  std::size_t size() const { return margins.size(); }
};

/**
 * Margin grid for horizon T.  Integer mode is {0, 1, ..., floor(sqrt(T)) + 1};
 * geometric mode thins it to {0} plus powers of two up to the same cap,
 * trading a factor-2 margin approximation for O(log T) learners.
 */
MarginGrid build_margin_grid(std::int64_t horizon,
                             MarginGrid::Mode mode = MarginGrid::Mode::geometric);

/// Certificate terms for the expert layer, see ExpertWeights::regret_certificate.
struct ExpertCertificate {
  double bound = 0.0;
  double xi3 = 0.0;
  double xi4 = 0.0;
};

/**
 * Second-order adaptive expert weights (Adapt-ML-Prod style).
 *
 * Tracks per expert a log-potential, the running range max_s |r_{e,s}|
 * and the running second moment sum_s r_{e,s}^2 of its instantaneous
 * regrets r_{e,t} = <grad_t, w_t> - grad_{e,t}.  The per-expert
 * learning rate is
 *
 *   eta_e = min( 1 / (2 range_e), sqrt(log(K) / (range_e^2 + var_e)) ),
 *
 * which keeps |eta r| <= 1/2 and makes the weight trajectory invariant
 * under rescaling all regrets by a common positive factor.  Potentials
 * get the standard learning-rate-decrease correction.  Fresh weights
 * are uniform; weights are renormalized to the simplex on every update.
 */
class ExpertWeights {
 public:
  explicit ExpertWeights(std::size_t n_experts);

  std::size_t size() const { return k_; }
  const std::vector<double>& weights() const { return weights_; }
  std::int64_t rounds() const { return t_; }

  /// One update from the vector of instantaneous regrets; rejects
  /// non-finite entries (upstream clipping failed).
  void update(std::span<const double> regrets);

  /**
   * Documented second-order regret certificate for expert e:
   *
   *   sum_t r_{e,t} <= xi3 sqrt(log(K) sum_t r_{e,t}^2)
   *                    + xi4 log(K) sup_t max_e' |r_{e',t}|
   *
   * with xi3 = 4 and xi4 = 16 (for K = 1 the bound is 0: the single
   * expert has zero instantaneous regret).  sup_t max_e' |r| is a lower
   * bound on the gradient range max_t ||grad_t||_inf of Assumption-4
   * form certificates, so this is the sharper check.
   */
  ExpertCertificate regret_certificate(std::size_t expert) const;

  double cumulative_regret(std::size_t expert) const { return cum_regret_[expert]; }
  double range_max(std::size_t expert) const { return range_[expert]; }
  double var(std::size_t expert) const { return var_[expert]; }

  /// Full state for checkpointing; restore() resumes bit-identically.
  struct Snapshot {
    std::vector<double> log_potential, range, var, cum_regret, weights;
    double global_range = 0.0;
    std::int64_t rounds = 0;
  };
  Snapshot snapshot() const;
  static ExpertWeights restore(const Snapshot& snap);

  static double xi3() { return 4.0; }
  static double xi4() { return 16.0; }

 private:
  void refresh_weights();

  std::size_t k_;
  std::vector<double> log_potential_;
  std::vector<double> range_;       // running max |r_{e,s}|
  std::vector<double> var_;         // running sum r_{e,s}^2
  std::vector<double> cum_regret_;  // running sum r_{e,s}
  std::vector<double> weights_;
  double global_range_ = 0.0;  // sup over rounds and experts of |r|
  std::int64_t t_ = 0;
};

/// Convex combination sum_e w_e pred_e; lengths must match.
double aggregate(std::span<const double> weights, std::span<const double> predictions);

/**
 * Adaptive-clipping meta layer: one fixed-margin ClippedLearner per
 * margin in the grid, predictions blended by an ExpertWeights layer.
 *
 * Per round the meta emits chat = sum_D w_D c^D, queries the gradient
 * oracle once at chat, feeds the expert layer the linearized expert
 * gradients <ghat, c^D> and hands each instance the same noisy gradient
 * to clip at its own margin.  All instances share the gradient bounds.
 */
class AdaptiveClipper {
 public:
  /// Gradient oracle: maps the aggregated prediction to the round's
  /// noisy gradient vector.
  using GradientOracle =
      std::function<std::vector<double>(const std::vector<double>&)>;

  AdaptiveClipper(std::size_t dim, double c1, double radius, MarginGrid grid,
                  ClipConfig base_config);

  std::size_t dim() const { return dim_; }
  std::size_t n_experts() const { return instances_.size(); }
  const MarginGrid& grid() const { return grid_; }
  const ExpertWeights& expert_weights() const { return weights_; }
  const ClippedLearner& instance(std::size_t i) const { return instances_[i]; }

  /// Aggregated prediction for the coming round.
  std::vector<double> prediction() const;

  /// Runs one round; returns the aggregated prediction that was played.
  std::vector<double> round(const GradientOracle& oracle,
                            std::span<const double> grad_bounds);

 private:
  std::size_t dim_;
  MarginGrid grid_;
  std::vector<ClippedLearner> instances_;
  ExpertWeights weights_;
};

}  // namespace wavereg

#endif  // WAVEREG_AGGREGATOR_HPP
