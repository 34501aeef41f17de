#ifndef WAVEREG_BETTOR_HPP
#define WAVEREG_BETTOR_HPP

#include <cstdint>
#include <span>

namespace wavereg {

/// Terms of a coordinate regret certificate, see CoinBettor::regret_certificate.
struct RegretCertificate {
  double bound = 0.0;   ///< full certified upper bound: scaled + slack (+ fp cushion)
  double scaled = 0.0;  ///< |c - c1| * (xi1 * sqrt(sum g^2) + xi2 * sup G)
  double slack = 0.0;   ///< additive wealth-duality remainder, independent of c
  double xi1 = 0.0;
  double xi2 = 0.0;
};

/**
 * One-dimensional comparator-adaptive online learner over [-C, C].
 *
 * Krichevsky-Trofimov coin betting on normalized gradients
 * z_t = s_t / B_t, where B_t is the running maximum of the per-round
 * gradient bounds (hints) and s_t is the constrained-reduction
 * surrogate gradient.  The betting fraction for round t+1 is
 * beta = clamp(-sum_{s<=t} z_s / (t+1), -1/2, 1/2) and the initial
 * wealth is C, so wealth stays positive and every prediction lies in
 * [-C, C] after clamping the unconstrained iterate.
 *
 * Constrained reduction: the learner outputs clamp(u, -C, C) and feeds
 * its internal bettor the surrogate s = g while |u| <= C and
 * s = |g| * sign(u) otherwise (a subgradient of
 * g * clamp(u) + |g| * dist(u, [-C, C])).
 *
 * Growing hints are absorbed by renormalizing with the running maximum;
 * the wealth accounting injects capital proportional to the scale
 * increase so that the exact identity
 *
 *   sum_t s_t * v_t = capital_in - wealth * B_T
 *
 * holds at all times (v_t is the iterate offset used in round t).  The
 * regret certificate is built on that identity and is therefore a
 * sound upper bound on realized regret for every input sequence.
 *
 * Pure value semantics: copying the state forks the learner; a single
 * instance must be updated sequentially.
 */
class CoinBettor {
 public:
  /// Starts at prediction c1 with constraint radius C and initial wealth
  /// epsilon (epsilon <= 0 selects the default epsilon = C).  A smaller
  /// epsilon caps how much the learner can lose chasing noise around c1
  /// at the price of a log(C / epsilon) factor in the time a distant
  /// comparator needs.
  /// Throws std::invalid_argument unless C > 0 and |c1| <= C.
  explicit CoinBettor(double c1, double radius, double initial_wealth = -1.0);

  /// Current prediction, always in [-C, C].
  double predict() const;

  /**
   * Feeds one gradient g with its per-round bound g_hint (|g| <= g_hint).
   * A zero hint is a no-op and the state is left bit-identical.
   * Throws std::invalid_argument on |g| > g_hint, negative or non-finite
   * inputs (a contract breach here signals a clipping bug upstream).
   */
  void update(double g, double g_hint);

  /**
   * Certified regret upper bound against comparator c (|c| <= C):
   *
   *   sum_t g_t (c_t - c) <= |c - c1| (xi1 sqrt(sum_t g_t^2) + xi2 sup_t G_t)
   *                          + slack
   *
   * with the documented factors xi1 = 2 sqrt(log(1 + sum z^2) + 1),
   * xi2 = 2, and slack the exact wealth-duality remainder (at most the
   * injected capital; zero for a fresh state).  `grads` must be the
   * exact gradient sequence fed to this state.
   */
  RegretCertificate regret_certificate(double c,
                                       std::span<const double> grads) const;

  /// Full state for checkpointing; restore() resumes bit-identically.
  struct Snapshot {
    double c1, radius, wealth, grad_max, sum_norm, sum_sq_norm, sum_surr,
        sum_sq_surr, capital_in, iterate;
    std::int64_t rounds;
  };
  Snapshot snapshot() const;
  static CoinBettor restore(const Snapshot& snap);

  double initial_prediction() const { return c1_; }
  double radius() const { return radius_; }
  double wealth() const { return wealth_; }
  double running_grad_max() const { return grad_max_; }
  double sum_normalized() const { return sum_norm_; }
  double sum_sq_normalized() const { return sum_sq_norm_; }
  std::int64_t rounds() const { return rounds_; }
  double iterate() const { return iterate_; }

  /// Documented certificate factors for the current state.
  double xi1() const;
  static double xi2() { return 2.0; }

  bool operator==(const CoinBettor&) const = default;

 private:
  double c1_ = 0.0;
  double radius_ = 1.0;
  double wealth_ = 1.0;        // in comparator units, starts at C
  double grad_max_ = 0.0;      // running max of hints, sup_t G_t
  double sum_norm_ = 0.0;      // sum of normalized surrogates z_t
  double sum_sq_norm_ = 0.0;   // sum of z_t^2
  double sum_surr_ = 0.0;      // sum of surrogate gradients s_t
  double sum_sq_surr_ = 0.0;   // sum of s_t^2 (= sum of g_t^2)
  double capital_in_ = 0.0;    // injected capital, gradient units
  double iterate_ = 0.0;       // unconstrained iterate u
  std::int64_t rounds_ = 0;
};

}  // namespace wavereg

#endif  // WAVEREG_BETTOR_HPP
