#ifndef WAVEREG_WAVELET_HPP
#define WAVEREG_WAVELET_HPP

#include <cstdint>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace wavereg {

/**
 * Periodized Haar multiresolution basis on [0,1)^d, d in {1, 2}.
 *
 * Regularity order S = 1 (one vanishing moment), bounded basis sums
 * M_phi = M_psi = 1, support one cell at every scale.  In d = 2 the
 * detail space at each level carries the three tensor orientations
 * x-detail (psi x phi), y-detail (phi x psi) and diagonal (psi x psi),
 * in that order.
 */
struct HaarBasis {
  int d = 1;
  int regularity = 1;  // S
  double m_phi = 1.0;
  double m_psi = 1.0;
  double support = 1.0;  // width in units of 2^{-j}

  /// Detail orientations per level: 1 in d=1, 3 in d=2.
  int orientations() const { return d == 1 ? 1 : 3; }

  static HaarBasis make(int d);
  /// Only "haar" is built; other families are rejected with a clear message.
  static HaarBasis make(std::string_view family, int d);
};

enum class BasisKind { scaling, detail };

/// Index of one basis function; ky and orient are ignored in d = 1.
struct WaveIndex {
  std::int32_t kx = 0;
  std::int32_t ky = 0;
  std::int32_t orient = 0;

  bool operator==(const WaveIndex&) const = default;
};

/**
 * Coefficient layout of a truncated expansion: scaling coefficients at
 * the starting scale j0 and detail levels j0 .. j0+J.  Flat offsets
 * order coefficients [alpha block][level j0][level j0+1]... with each
 * detail level laid out orientation-major, then row-major in k
 * (k ascending in d = 1).
 */
struct TreeLayout {
  int j0 = 0;
  int depth = 0;  // J
  int d = 1;

  std::int64_t cells_per_axis(int j) const { return std::int64_t{1} << j; }
  std::int64_t cells(int j) const {
    return std::int64_t{1} << (static_cast<std::int64_t>(j) * d);
  }
  int orientations() const { return d == 1 ? 1 : 3; }

  std::int64_t alpha_size() const { return cells(j0); }
  std::int64_t level_size(int j) const { return orientations() * cells(j); }
  std::int64_t flat_size() const;

  std::int64_t alpha_offset(const WaveIndex& k) const;
  std::int64_t beta_offset(int j, const WaveIndex& k) const;

  struct Decoded {
    BasisKind kind = BasisKind::scaling;
    int level = 0;
    WaveIndex index;
  };
  Decoded decode(std::int64_t flat) const;
};

/// Truncated wavelet expansion: alpha at scale j0, details j0 .. j0+J.
struct CoefficientTree {
  int j0 = 0;
  int depth = 0;  // J
  int d = 1;
  std::vector<double> alpha;
  std::vector<std::vector<double>> beta;  // beta[i] = level j0+i

  static CoefficientTree zeros(int j0, int depth, int d);
  TreeLayout layout() const { return TreeLayout{j0, depth, d}; }

  double& at(BasisKind kind, int j, const WaveIndex& k);
  double at(BasisKind kind, int j, const WaveIndex& k) const;

  /// Copies into one flat vector following TreeLayout offsets.
  std::vector<double> flatten() const;
  static CoefficientTree unflatten(const TreeLayout& layout,
                                   const std::vector<double>& flat);

  bool same_layout(const CoefficientTree& other) const {
    return j0 == other.j0 && depth == other.depth && d == other.d;
  }
};

/// Scaling indices with phi_{j,k}(x) != 0 (a single k for Haar).
std::vector<WaveIndex> active_indices(const HaarBasis& basis, const double* x,
                                      int j);

/// Point evaluation of phi_{j,k} or psi_{j,k} at x in [0,1)^d.
double evaluate(const HaarBasis& basis, BasisKind kind, int j,
                const WaveIndex& k, const double* x);

/**
 * Wavelet analysis of f on the dyadic midpoint grid at resolution
 * j0 + J + guard (per axis).  Exact for f piecewise constant on that
 * grid; otherwise midpoint quadrature with error O(2^{-guard}) per the
 * grid spacing.
 */
CoefficientTree analyze(const HaarBasis& basis,
                        const std::function<double(const double*)>& f, int j0,
                        int depth, int guard = 4);

/**
 * Analysis pyramid starting from scaling coefficients at `from_level`
 * (d = 1: 2^from_level values; d = 2: row-major).  Produces the tree at
 * (j0, depth); detail levels at from_level and beyond are zero.
 * Requires j0 <= from_level and j0 + depth >= from_level - 1.
 */
CoefficientTree analyze_coefficients(const HaarBasis& basis,
                                     std::vector<double> level_coeffs,
                                     int from_level, int j0, int depth);

/// Evaluates the truncated expansion at x; O(J+1) per point for Haar.
double synthesize(const HaarBasis& basis, const CoefficientTree& tree,
                  const double* x);

/**
 * Cell values of the expansion on the dyadic midpoint grid at
 * resolution `level` >= j0 + J + 1 (values are constant per cell for
 * Haar).  d = 1: returns 2^level values; d = 2: row-major 2^level x
 * 2^level.
 */
std::vector<double> synthesize_grid(const HaarBasis& basis,
                                    const CoefficientTree& tree, int level);

/// Scaling coefficients of the expansion at `level` (the synthesis
/// pyramid without the final cell-value scaling).
std::vector<double> scaling_coefficients(const HaarBasis& basis,
                                         const CoefficientTree& tree, int level);

/**
 * Besov sequence norm of the tree:
 *
 *   ||alpha||_p + ( sum_j 2^{j q (s + d/2 - d/p)} ||beta_j||_p^q )^{1/q}
 *
 * with the usual sup/max conventions for p, q = infinity.  Requires
 * p, q in [1, inf] and s > d/p.
 */
double besov_norm(const CoefficientTree& tree, double s, double p, double q);

/// One verified basis property with its measured residual.
struct RegularityCheck {
  std::string name;
  double residual = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

struct RegularityReport {
  std::vector<RegularityCheck> checks;
  bool all_pass = true;
};

/// Numeric verification of the S-regularity conditions (vanishing
/// moments and normalization, bounded basis sums, kernel decay).
RegularityReport check_regularity(const HaarBasis& basis, double tolerance);

/// Flat JSON layout {j0, J, d, alpha:[...], beta:[[...],...]}; k ascending,
/// orientation-major then row-major in d = 2.
std::string tree_to_json(const CoefficientTree& tree);
CoefficientTree tree_from_json(const std::string& text);

}  // namespace wavereg

#endif  // WAVEREG_WAVELET_HPP
