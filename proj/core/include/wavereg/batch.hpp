#ifndef WAVEREG_BATCH_HPP
#define WAVEREG_BATCH_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "wavereg/rng.hpp"
#include "wavereg/wavelet.hpp"

namespace wavereg {

/**
 * Zero-mean observation noise with variance sigma^2.
 *
 * Each kind reports the sub-Gaussian / sub-exponential tail scales
 * (nu, mu) it satisfies: gaussian(sigma) -> (sigma, sigma),
 * laplace with std sigma -> (b, b/2) for b = sigma/sqrt(2),
 * scaled_bernoulli -> (sigma, sigma/2) (tail bound trivial beyond its
 * support), none -> (0, 0).
 */
struct NoiseModel {
  enum class Kind { gaussian, laplace, scaled_bernoulli, none };

  Kind kind = Kind::none;
  double sigma = 0.0;

  static NoiseModel gaussian(double sigma);
  static NoiseModel laplace(double sigma);
  static NoiseModel scaled_bernoulli(double sigma);
  static NoiseModel none();

  double sample(SplitMix64& rng) const;
  double nu() const;
  double mu() const;
  const char* kind_name() const;
  void validate() const;
};

/**
 * Ground-truth regression functions with known nominal Besov
 * coordinates (s, p, q, B).  Construction verifies that the Besov norm
 * of the analyzed coefficient tree stays within the declared radius
 * (up to truncation) and that the function is bounded.
 */
class TargetFunction {
 public:
  struct Meta {
    double s = 1.0;
    double p = 1.0;
    double q = std::numeric_limits<double>::infinity();
    double besov_radius = 1.0;  // declared B
  };

  static TargetFunction constant(double value, Meta meta, int d = 1);
  /// Piecewise constant on [0,1): edges ascending in (0,1), one more
  /// level than edges.
  static TargetFunction step(std::vector<double> edges,
                             std::vector<double> levels, Meta meta);
  /// Triangle wave with `teeth` periods, values in [-amplitude, amplitude].
  static TargetFunction sawtooth(int teeth, double amplitude, Meta meta);
  /// Random coefficient tree drawn to meet the Besov radius with
  /// equality at the declared (s, p, q, B).
  static TargetFunction dyadic_random(std::uint64_t seed, int j0, int depth,
                                      int d, Meta meta);

  double operator()(const double* x) const { return eval_(x); }
  const Meta& meta() const { return meta_; }
  int dim() const { return d_; }
  const std::string& kind() const { return kind_; }

 private:
  TargetFunction() = default;
  void verify_radius() const;

  std::string kind_;
  int d_ = 1;
  Meta meta_;
  std::function<double(const double*)> eval_;
};

struct Sample {
  double x[2] = {0.0, 0.0};
  double y = 0.0;
};

/// T i.i.d. samples: x uniform on [0,1)^d, y = f(x) + eps; fully
/// determined by the seed (x and eps use substreams 0 and 1).
std::vector<Sample> generate_sample(const TargetFunction& f,
                                    const NoiseModel& noise, std::int64_t count,
                                    std::uint64_t seed);

/// Running mean of coefficient snapshots; after T folds the
/// coefficients equal the arithmetic mean of the folded snapshots.
class AveragedPredictor {
 public:
  explicit AveragedPredictor(std::size_t size) : mean_(size, 0.0) {}

  void fold(std::span<const double> snapshot);
  const std::vector<double>& mean() const { return mean_; }
  std::int64_t count() const { return count_; }

 private:
  std::vector<double> mean_;
  std::int64_t count_ = 0;
};

/// Mean squared difference of two grids of equal size.
double l2_risk_grid(std::span<const double> predictor_values,
                    std::span<const double> target_values);

/// Squared L2(P_X) distance under uniform P_X by dyadic midpoint
/// quadrature at 2^resolution_level cells per axis.
double l2_risk(const std::function<double(const double*)>& predictor,
               const TargetFunction& target, int resolution_level);

struct RiskDecomposition {
  double lhs = 0.0;     // Monte-Carlo E (f^(X) - Y)^2
  double rhs = 0.0;     // ||f^ - f||_2^2 + sigma^2
  double gap = 0.0;     // lhs - rhs
  double stderr_ = 0.0; // standard error of the Monte-Carlo mean
};

/// Empirical check of E (f^(X) - Y)^2 = ||f^ - f||^2 + sigma^2.
RiskDecomposition risk_decomposition_check(
    const std::function<double(const double*)>& predictor,
    const TargetFunction& target, const NoiseModel& noise, std::int64_t samples,
    std::uint64_t seed, int resolution_level = 12);

/// Embeds expert-local coefficients into the shared frame at j0 = 0.
class FrameEmbedder {
 public:
  FrameEmbedder(const HaarBasis& basis, TreeLayout frame);

  const TreeLayout& frame() const { return frame_; }
  /// Frame entries of a single local coefficient change.
  std::vector<std::pair<std::int64_t, double>> embed(const TreeLayout& local,
                                                     std::int64_t flat,
                                                     double value) const;
  /// Dense frame vector of a whole local tree.
  std::vector<double> embed_tree(const CoefficientTree& local) const;

 private:
  HaarBasis basis_;
  TreeLayout frame_;
};

/**
 * Incremental online-to-batch statistics in coefficient space.
 *
 * Tracks the weighted expert mixture through a Gram matrix so each
 * round costs O(E^2 + E * active); accumulates the running average
 * predictor by the suffix-weight identity so the final coefficients
 * equal the exact arithmetic mean of the per-round mixtures.  The
 * Jensen comparison l2(avg) <= mean per-round l2 is then an algebraic
 * identity up to floating-point roundoff.
 */
class RunAccumulator {
 public:
  RunAccumulator(TreeLayout frame, std::vector<std::vector<double>> expert_frames,
                 std::vector<double> target_coeffs, double tail_sq);

  /// Feed one round: the expert weights used for the prediction and the
  /// per-expert coefficient deltas applied afterwards (frame indices,
  /// sorted ascending).
  void on_round(std::span<const double> weights,
                const std::vector<std::vector<std::pair<std::int64_t, double>>>&
                    frame_deltas);

  std::int64_t rounds() const { return rounds_; }
  /// Coefficients of the averaged predictor (1/T) sum_t fhat_t.
  std::vector<double> mean_coefficients() const;
  /// Risk of the averaged predictor in coefficient space (plus tail).
  double jensen_lhs() const;
  /// Average of the per-round risks (plus tail).
  double jensen_rhs() const;
  const std::vector<double>& per_round_risk() const { return risks_; }

 private:
  TreeLayout frame_;
  std::size_t n_experts_;
  std::vector<std::vector<double>> dense_;   // current expert frames
  std::vector<std::vector<double>> init_;    // initial expert frames
  std::vector<std::vector<double>> sum1_;    // sum of deltas
  std::vector<std::vector<double>> sum2_;    // sum of deltas * cumw at change
  std::vector<double> cumw_;
  std::vector<double> target_;
  std::vector<std::vector<double>> gram_;
  std::vector<double> cross_target_;
  double target_sq_ = 0.0;
  double tail_sq_ = 0.0;
  std::vector<double> risks_;
  std::int64_t rounds_ = 0;
};

}  // namespace wavereg

#endif  // WAVEREG_BATCH_HPP
