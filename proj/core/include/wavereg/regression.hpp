#ifndef WAVEREG_REGRESSION_HPP
#define WAVEREG_REGRESSION_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "wavereg/aggregator.hpp"
#include "wavereg/bettor.hpp"
#include "wavereg/wavelet.hpp"

namespace wavereg {

/// How the initial scaling coefficients of the expert set are placed.
enum class GridMode { zero_init, coarse_grid, paper_grid };

/**
 * Configuration of one online wavelet regression run.
 *
 * J < 0 requests the default truncation depth
 * ceil(S / ((2S + d) kappa) * log2(T B^2 / sigma0^2)), capped so the
 * total coefficient count stays below 2^20.  G <= 0 requests the
 * sup-norm-derived bound 2 * (Bhat_inf + B_inf).
 */
struct RegressionConfig {
  double besov_radius = 1.0;  // B
  int max_start_scale = 0;    // J0
  int depth = -1;             // J, -1 = auto
  std::int64_t horizon = 1;   // T
  int d = 1;
  GridMode grid_mode = GridMode::zero_init;
  MarginGrid::Mode margin_mode = MarginGrid::Mode::geometric;
  double grad_bound = 0.0;  // G, <= 0 = auto
  double kappa = 0.5;       // lower bound on s - d/p
  double sigma0 = 0.1;      // noise floor entering the depth default
  std::int64_t expert_cap = 10000;

  void validate() const;
  int effective_depth() const;
  double effective_grad_bound(const HaarBasis& basis) const;
};

/// Per-coefficient constraint radius C_{j,k} = B * 2^{-jd/2}.
double diameters(int j, double besov_radius, int d);

/// Sup-norm bounds from the Besov radius: B_inf for the target class,
/// Bhat_inf for the truncated predictors, and the derivative bound
/// G = 2 (Bhat_inf + B_inf) they imply.
struct SupNormBounds {
  double target_sup = 0.0;     // B_inf
  double predictor_sup = 0.0;  // Bhat_inf
  double grad_bound = 0.0;     // G
};
SupNormBounds sup_norm_bounds(double besov_radius, int depth, double kappa,
                              const HaarBasis& basis);

/**
 * Initial-scaling-coefficient grid A_{j0}.  zero_init gives {0};
 * coarse_grid a small uniform grid over +-2^{-j0 d/2} B_inf M_phi;
 * paper_grid the same range at precision 2^{-j0 d/2} / sqrt(T).
 */
std::vector<double> scaling_grid(int j0, std::int64_t horizon, double sup_bound,
                                 const HaarBasis& basis, GridMode mode);

/// Derivative of the squared loss: 2 (prediction - y).
inline double loss_derivative(double prediction, double y) {
  return 2.0 * (prediction - y);
}

/// One active coefficient at a sample point.
struct ActiveCoefficient {
  BasisKind kind = BasisKind::scaling;
  int level = 0;
  WaveIndex index;
  std::int64_t flat = 0;      // offset in the expert's TreeLayout
  double basis_value = 0.0;   // varphi_{j,k}(x)
  double gradient = 0.0;      // deriv * basis_value
  double bound = 0.0;         // G * |basis_value|
};

/// One wavelet expert: starting scale, clipping margin, initial scaling
/// coefficients and one coordinate bettor per coefficient.
struct ExpertRecord {
  int j0 = 0;
  double margin = 0.0;
  std::vector<double> init_alpha;
  TreeLayout layout;
  std::vector<CoinBettor> learners;     // TreeLayout order
  std::vector<double> coefficients;     // current predictions, same order

  CoefficientTree tree_view() const;
  double predict(const HaarBasis& basis, const double* x) const;
};

/// Expert set over (j0, initial scaling grid point, clipping margin);
/// detail coefficients start at zero.  Throws when the count exceeds
/// config.expert_cap.
std::vector<ExpertRecord> build_expert_set(const RegressionConfig& config,
                                           const HaarBasis& basis);
std::vector<ExpertRecord> build_expert_set(const RegressionConfig& config,
                                           const HaarBasis& basis,
                                           const MarginGrid& margins);

/// Chain-rule gradients of the active coefficients at x.
std::vector<ActiveCoefficient> coefficient_gradients(const ExpertRecord& expert,
                                                     const HaarBasis& basis,
                                                     const double* x,
                                                     double deriv,
                                                     double grad_bound);

/// Sparse coefficient change of one expert in one round.
struct ExpertDelta {
  std::vector<std::pair<std::int64_t, double>> entries;  // (flat index, change)
};

/// Everything a statistics consumer needs about one completed round.
struct RoundTrace {
  double x[2] = {0.0, 0.0};
  double prediction = 0.0;
  double label = 0.0;
  std::vector<double> weights_used;   // expert weights at prediction time
  std::vector<double> expert_preds;
  std::vector<ExpertDelta> deltas;    // per expert, local flat indices
};

/**
 * Adaptive online wavelet regression: the expert set, their
 * per-coefficient clipped bettors and the second-order expert layer.
 *
 * Strict predict-then-update alternation is enforced so that every
 * prediction is made before its label is seen.
 */
class OnlineWaveletRegressor {
 public:
  OnlineWaveletRegressor(RegressionConfig config, const HaarBasis& basis);
  /// Explicit margin grid (the default is built from config.horizon).
  OnlineWaveletRegressor(RegressionConfig config, const HaarBasis& basis,
                         MarginGrid margins);

  const RegressionConfig& config() const { return config_; }
  const HaarBasis& basis() const { return basis_; }
  const MarginGrid& margin_grid() const { return grid_; }
  std::size_t expert_count() const { return experts_.size(); }
  const ExpertRecord& expert(std::size_t e) const { return experts_[e]; }
  const ExpertWeights& expert_weights() const { return weights_; }
  double grad_bound() const { return grad_bound_; }
  std::int64_t round() const { return t_; }

  /// Prediction for sample x; must be followed by update(y).
  double predict(const double* x);
  /// Consumes the label for the pending prediction and updates
  /// coefficients and expert weights.
  void update(double y);
  /// predict + update in one call; returns the prediction.
  double step(const double* x, double y);

  /// Trace of the last completed round.
  const RoundTrace& last_round() const { return trace_; }

  /// Round-state snapshot; reloading resumes bit-identically.
  std::string checkpoint() const;
  static OnlineWaveletRegressor restore(const std::string& text,
                                        const HaarBasis& basis);

  /// Number of bettor updates performed over the run (sparsity probe).
  std::int64_t coefficient_updates() const { return coefficient_updates_; }

 private:
  RegressionConfig config_;
  HaarBasis basis_;
  MarginGrid grid_;
  std::vector<ExpertRecord> experts_;
  ExpertWeights weights_;
  double grad_bound_ = 0.0;
  std::int64_t t_ = 0;
  bool pending_ = false;
  RoundTrace trace_;
  std::int64_t coefficient_updates_ = 0;
};

}  // namespace wavereg

#endif  // WAVEREG_REGRESSION_HPP
