#include "wavereg/wavelet.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "json.hpp"

namespace wavereg {

namespace {

constexpr double kSqrtHalf = 0.70710678118654752440084436210485;
constexpr double kInf = std::numeric_limits<double>::infinity();

void check_point(const double* x, int d) {
  for (int i = 0; i < d; ++i) {
    if (!(x[i] >= 0.0 && x[i] < 1.0)) {
      throw std::invalid_argument("wavelet: point outside [0,1)^d");
    }
  }
}

std::int64_t cell_of(double xi, int j) {
  auto k = static_cast<std::int64_t>(std::floor(std::ldexp(xi, j)));
  const std::int64_t n = std::int64_t{1} << j;
  return std::clamp<std::int64_t>(k, 0, n - 1);
}

// 1-d factors at unit scale; x is the in-cell fraction in [0, 1).
double haar_phi_frac(double) { return 1.0; }
double haar_psi_frac(double frac) { return frac < 0.5 ? 1.0 : -1.0; }

double lp_norm(const std::vector<double>& v, double p) {
  if (p == kInf) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
  }
  if (p == 1.0) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
  }
  if (p == 2.0) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
  }
  double s = 0.0;
  for (double x : v) s += std::pow(std::abs(x), p);
  return std::pow(s, 1.0 / p);
}

}  // namespace

HaarBasis HaarBasis::make(int d) {
  if (d != 1 && d != 2) {
    throw std::invalid_argument(
        "wavelet: only d in {1, 2} is supported (d >= 3 tensor bases are out "
        "of scope)");
  }
  HaarBasis b;
  b.d = d;
  return b;
}

HaarBasis HaarBasis::make(std::string_view family, int d) {
  if (family != "haar") {
    throw std::invalid_argument(
        "wavelet: family '" + std::string(family) +
        "' is not built; only 'haar' is available (Daubechies/biorthogonal "
        "families are a noted extension)");
  }
  return make(d);
}

std::int64_t TreeLayout::flat_size() const {
  std::int64_t total = alpha_size();
  for (int j = j0; j <= j0 + depth; ++j) total += level_size(j);
  return total;
}

std::int64_t TreeLayout::alpha_offset(const WaveIndex& k) const {
  if (d == 1) return k.kx;
  return static_cast<std::int64_t>(k.ky) * cells_per_axis(j0) + k.kx;
}

std::int64_t TreeLayout::beta_offset(int j, const WaveIndex& k) const {
  std::int64_t base = alpha_size();
  for (int l = j0; l < j; ++l) base += level_size(l);
  const std::int64_t within =
      d == 1 ? k.kx
             : static_cast<std::int64_t>(k.ky) * cells_per_axis(j) + k.kx;
  return base + static_cast<std::int64_t>(k.orient) * cells(j) + within;
}

TreeLayout::Decoded TreeLayout::decode(std::int64_t flat) const {
  if (flat < 0 || flat >= flat_size()) {
    throw std::invalid_argument("wavelet: flat offset out of range");
  }
  Decoded out;
  if (flat < alpha_size()) {
    out.kind = BasisKind::scaling;
    out.level = j0;
    const std::int64_t n = cells_per_axis(j0);
    out.index.kx = static_cast<std::int32_t>(d == 1 ? flat : flat % n);
    out.index.ky = static_cast<std::int32_t>(d == 1 ? 0 : flat / n);
    return out;
  }
  std::int64_t rest = flat - alpha_size();
  for (int j = j0; j <= j0 + depth; ++j) {
    if (rest < level_size(j)) {
      out.kind = BasisKind::detail;
      out.level = j;
      const std::int64_t per_orient = cells(j);
      out.index.orient = static_cast<std::int32_t>(rest / per_orient);
      const std::int64_t within = rest % per_orient;
      const std::int64_t n = cells_per_axis(j);
      out.index.kx = static_cast<std::int32_t>(d == 1 ? within : within % n);
      out.index.ky = static_cast<std::int32_t>(d == 1 ? 0 : within / n);
      return out;
    }
    rest -= level_size(j);
  }
  throw std::logic_error("wavelet: decode fell off the layout");
}

CoefficientTree CoefficientTree::zeros(int j0, int depth, int d) {
  if (j0 < 0 || depth < 0) {
    throw std::invalid_argument("wavelet: j0 and J must be >= 0");
  }
  if (d != 1 && d != 2) {
    throw std::invalid_argument("wavelet: only d in {1, 2} is supported");
  }
  CoefficientTree t;
  t.j0 = j0;
  t.depth = depth;
  t.d = d;
  const TreeLayout layout{j0, depth, d};
  t.alpha.assign(static_cast<std::size_t>(layout.alpha_size()), 0.0);
  t.beta.resize(static_cast<std::size_t>(depth) + 1);
  for (int j = j0; j <= j0 + depth; ++j) {
    t.beta[static_cast<std::size_t>(j - j0)].assign(
        static_cast<std::size_t>(layout.level_size(j)), 0.0);
  }
  return t;
}

double& CoefficientTree::at(BasisKind kind, int j, const WaveIndex& k) {
  const TreeLayout lay = layout();
  if (kind == BasisKind::scaling) {
    if (j != j0) throw std::invalid_argument("wavelet: scaling index must be at j0");
    return alpha[static_cast<std::size_t>(lay.alpha_offset(k))];
  }
  if (j < j0 || j > j0 + depth) {
    throw std::invalid_argument("wavelet: detail level out of range");
  }
  auto& level = beta[static_cast<std::size_t>(j - j0)];
  const std::int64_t within =
      lay.beta_offset(j, k) - (lay.beta_offset(j, WaveIndex{0, 0, 0}));
  return level[static_cast<std::size_t>(within)];
}

double CoefficientTree::at(BasisKind kind, int j, const WaveIndex& k) const {
  return const_cast<CoefficientTree*>(this)->at(kind, j, k);
}

std::vector<double> CoefficientTree::flatten() const {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(layout().flat_size()));
  flat.insert(flat.end(), alpha.begin(), alpha.end());
  for (const auto& level : beta) flat.insert(flat.end(), level.begin(), level.end());
  return flat;
}

CoefficientTree CoefficientTree::unflatten(const TreeLayout& layout,
                                           const std::vector<double>& flat) {
  if (static_cast<std::int64_t>(flat.size()) != layout.flat_size()) {
    throw std::invalid_argument("wavelet: flat vector does not match layout");
  }
  CoefficientTree t = zeros(layout.j0, layout.depth, layout.d);
  std::size_t pos = 0;
  for (double& a : t.alpha) a = flat[pos++];
  for (auto& level : t.beta) {
    for (double& b : level) b = flat[pos++];
  }
  return t;
}

std::vector<WaveIndex> active_indices(const HaarBasis& basis, const double* x,
                                      int j) {
  if (j < 0) throw std::invalid_argument("wavelet: scale must be >= 0");
  check_point(x, basis.d);
  WaveIndex k;
  k.kx = static_cast<std::int32_t>(cell_of(x[0], j));
  if (basis.d == 2) k.ky = static_cast<std::int32_t>(cell_of(x[1], j));
  return {k};
}

double evaluate(const HaarBasis& basis, BasisKind kind, int j,
                const WaveIndex& k, const double* x) {
  if (j < 0) throw std::invalid_argument("wavelet: scale must be >= 0");
  check_point(x, basis.d);
  const std::int64_t n = std::int64_t{1} << j;
  const double scale_per_axis = std::pow(2.0, 0.5 * j);

  auto axis_value = [&](double xi, std::int64_t ki, bool is_psi) -> double {
    if (ki < 0 || ki >= n) {
      throw std::invalid_argument("wavelet: translation index out of range");
    }
    const double scaled = std::ldexp(xi, j);
    if (static_cast<std::int64_t>(std::floor(scaled)) != ki) return 0.0;
    const double frac = scaled - static_cast<double>(ki);
    return scale_per_axis * (is_psi ? haar_psi_frac(frac) : haar_phi_frac(frac));
  };

  if (basis.d == 1) {
    if (kind == BasisKind::detail && k.orient != 0) {
      throw std::invalid_argument("wavelet: d=1 has a single detail orientation");
    }
    return axis_value(x[0], k.kx, kind == BasisKind::detail);
  }

  bool psi_x = false, psi_y = false;
  if (kind == BasisKind::detail) {
    switch (k.orient) {
      case 0: psi_x = true; break;             // psi (x) phi
      case 1: psi_y = true; break;             // phi (x) psi
      case 2: psi_x = psi_y = true; break;     // psi (x) psi
      default:
        throw std::invalid_argument("wavelet: orientation must be 0, 1 or 2");
    }
  }
  const double vx = axis_value(x[0], k.kx, psi_x);
  if (vx == 0.0) return 0.0;
  const double vy = axis_value(x[1], k.ky, psi_y);
  return vx * vy;
}

namespace {

// One analysis step d=1: level j+1 averages -> level j averages + details.
void pyramid_step_1d(const std::vector<double>& fine, std::vector<double>& coarse,
                     std::vector<double>& detail) {
  const std::size_t n = fine.size() / 2;
  coarse.resize(n);
  detail.resize(n);
  for (std::size_t k = 0; k < n; ++k) {
    coarse[k] = (fine[2 * k] + fine[2 * k + 1]) * kSqrtHalf;
    detail[k] = (fine[2 * k] - fine[2 * k + 1]) * kSqrtHalf;
  }
}

// One analysis step d=2 on row-major averages of side 2m -> side m.
void pyramid_step_2d(const std::vector<double>& fine, std::int64_t m,
                     std::vector<double>& coarse, std::vector<double>& detail) {
  coarse.assign(static_cast<std::size_t>(m * m), 0.0);
  detail.assign(static_cast<std::size_t>(3 * m * m), 0.0);
  const std::int64_t fm = 2 * m;
  for (std::int64_t ky = 0; ky < m; ++ky) {
    for (std::int64_t kx = 0; kx < m; ++kx) {
      const double s00 = fine[static_cast<std::size_t>((2 * ky) * fm + 2 * kx)];
      const double s10 = fine[static_cast<std::size_t>((2 * ky) * fm + 2 * kx + 1)];
      const double s01 = fine[static_cast<std::size_t>((2 * ky + 1) * fm + 2 * kx)];
      const double s11 =
          fine[static_cast<std::size_t>((2 * ky + 1) * fm + 2 * kx + 1)];
      const std::size_t idx = static_cast<std::size_t>(ky * m + kx);
      coarse[idx] = 0.5 * (s00 + s10 + s01 + s11);
      detail[idx] = 0.5 * (s00 - s10 + s01 - s11);                       // psi x phi
      detail[static_cast<std::size_t>(m * m) + idx] =
          0.5 * (s00 + s10 - s01 - s11);                                 // phi x psi
      detail[static_cast<std::size_t>(2 * m * m) + idx] =
          0.5 * (s00 - s10 - s01 + s11);                                 // psi x psi
    }
  }
}

}  // namespace

CoefficientTree analyze(const HaarBasis& basis,
                        const std::function<double(const double*)>& f, int j0,
                        int depth, int guard) {
  if (j0 < 0) throw std::invalid_argument("wavelet: j0 must be >= 0");
  if (depth < 0) throw std::invalid_argument("wavelet: J must be >= 0");
  if (guard < 1) throw std::invalid_argument("wavelet: guard must be >= 1");
  const int level = j0 + depth + guard;
  const std::int64_t m = std::int64_t{1} << level;
  if (basis.d * level > 26) {
    throw std::invalid_argument("wavelet: analysis grid too large");
  }

  CoefficientTree tree = CoefficientTree::zeros(j0, depth, basis.d);

  if (basis.d == 1) {
    std::vector<double> avg(static_cast<std::size_t>(m));
    const double cell_coeff = std::pow(2.0, -0.5 * level);
    for (std::int64_t i = 0; i < m; ++i) {
      const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
      avg[static_cast<std::size_t>(i)] = f(&x) * cell_coeff;
    }
    std::vector<double> coarse, detail;
    for (int j = level - 1; j >= j0; --j) {
      pyramid_step_1d(avg, coarse, detail);
      if (j <= j0 + depth) {
        tree.beta[static_cast<std::size_t>(j - j0)] = detail;
      }
      avg.swap(coarse);
    }
    tree.alpha = avg;
    return tree;
  }

  std::vector<double> avg(static_cast<std::size_t>(m * m));
  const double cell_coeff = std::pow(2.0, -1.0 * level);
  for (std::int64_t iy = 0; iy < m; ++iy) {
    for (std::int64_t ix = 0; ix < m; ++ix) {
      const double xy[2] = {
          (static_cast<double>(ix) + 0.5) / static_cast<double>(m),
          (static_cast<double>(iy) + 0.5) / static_cast<double>(m)};
      avg[static_cast<std::size_t>(iy * m + ix)] = f(xy) * cell_coeff;
    }
  }
  std::vector<double> coarse, detail;
  for (int j = level - 1; j >= j0; --j) {
    pyramid_step_2d(avg, std::int64_t{1} << j, coarse, detail);
    if (j <= j0 + depth) {
      tree.beta[static_cast<std::size_t>(j - j0)] = detail;
    }
    avg.swap(coarse);
  }
  tree.alpha = avg;
  return tree;
}

CoefficientTree analyze_coefficients(const HaarBasis& basis,
                                     std::vector<double> level_coeffs,
                                     int from_level, int j0, int depth) {
  if (j0 < 0 || j0 > from_level || j0 + depth < from_level - 1) {
    throw std::invalid_argument("wavelet: bad pyramid range");
  }
  const TreeLayout from_layout{from_level, 0, basis.d};
  if (static_cast<std::int64_t>(level_coeffs.size()) != from_layout.alpha_size()) {
    throw std::invalid_argument("wavelet: level coefficient size mismatch");
  }
  CoefficientTree tree = CoefficientTree::zeros(j0, depth, basis.d);
  std::vector<double> avg = std::move(level_coeffs);
  std::vector<double> coarse, detail;
  for (int j = from_level - 1; j >= j0; --j) {
    if (basis.d == 1) {
      pyramid_step_1d(avg, coarse, detail);
    } else {
      pyramid_step_2d(avg, std::int64_t{1} << j, coarse, detail);
    }
    tree.beta[static_cast<std::size_t>(j - j0)] = detail;
    avg.swap(coarse);
  }
  tree.alpha = avg;
  return tree;
}

double synthesize(const HaarBasis& basis, const CoefficientTree& tree,
                  const double* x) {
  check_point(x, basis.d);
  const auto scaling = active_indices(basis, x, tree.j0);
  double value = 0.0;
  for (const auto& k : scaling) {
    value += tree.at(BasisKind::scaling, tree.j0, k) *
             evaluate(basis, BasisKind::scaling, tree.j0, k, x);
  }
  for (int j = tree.j0; j <= tree.j0 + tree.depth; ++j) {
    const auto active = active_indices(basis, x, j);
    for (const auto& base_k : active) {
      for (int orient = 0; orient < basis.orientations(); ++orient) {
        WaveIndex k = base_k;
        k.orient = orient;
        value += tree.at(BasisKind::detail, j, k) *
                 evaluate(basis, BasisKind::detail, j, k, x);
      }
    }
  }
  return value;
}

std::vector<double> synthesize_grid(const HaarBasis& basis,
                                    const CoefficientTree& tree, int level) {
  std::vector<double> coeffs = scaling_coefficients(basis, tree, level);
  const double to_value = std::pow(2.0, 0.5 * level * basis.d);
  for (double& v : coeffs) v *= to_value;
  return coeffs;
}

std::vector<double> scaling_coefficients(const HaarBasis& basis,
                                         const CoefficientTree& tree, int level) {
  if (level < tree.j0 + tree.depth + 1) {
    throw std::invalid_argument("wavelet: grid level below finest tree level");
  }
  if (basis.d * level > 26) {
    throw std::invalid_argument("wavelet: synthesis grid too large");
  }

  if (basis.d == 1) {
    std::vector<double> avg = tree.alpha;
    for (int j = tree.j0; j < level; ++j) {
      std::vector<double> next(avg.size() * 2);
      const bool has_detail = j <= tree.j0 + tree.depth;
      const std::vector<double>* det =
          has_detail ? &tree.beta[static_cast<std::size_t>(j - tree.j0)] : nullptr;
      for (std::size_t k = 0; k < avg.size(); ++k) {
        const double b = det ? (*det)[k] : 0.0;
        next[2 * k] = (avg[k] + b) * kSqrtHalf;
        next[2 * k + 1] = (avg[k] - b) * kSqrtHalf;
      }
      avg.swap(next);
    }
    return avg;
  }

  std::vector<double> avg = tree.alpha;
  std::int64_t m = std::int64_t{1} << tree.j0;
  for (int j = tree.j0; j < level; ++j) {
    const bool has_detail = j <= tree.j0 + tree.depth;
    const std::vector<double>* det =
        has_detail ? &tree.beta[static_cast<std::size_t>(j - tree.j0)] : nullptr;
    std::vector<double> next(static_cast<std::size_t>(4 * m * m));
    const std::int64_t fm = 2 * m;
    for (std::int64_t ky = 0; ky < m; ++ky) {
      for (std::int64_t kx = 0; kx < m; ++kx) {
        const std::size_t idx = static_cast<std::size_t>(ky * m + kx);
        const double a = avg[idx];
        const double b0 = det ? (*det)[idx] : 0.0;
        const double b1 = det ? (*det)[static_cast<std::size_t>(m * m) + idx] : 0.0;
        const double b2 =
            det ? (*det)[static_cast<std::size_t>(2 * m * m) + idx] : 0.0;
        next[static_cast<std::size_t>((2 * ky) * fm + 2 * kx)] =
            0.5 * (a + b0 + b1 + b2);
        next[static_cast<std::size_t>((2 * ky) * fm + 2 * kx + 1)] =
            0.5 * (a - b0 + b1 - b2);
        next[static_cast<std::size_t>((2 * ky + 1) * fm + 2 * kx)] =
            0.5 * (a + b0 - b1 - b2);
        next[static_cast<std::size_t>((2 * ky + 1) * fm + 2 * kx + 1)] =
            0.5 * (a - b0 - b1 + b2);
      }
    }
    avg.swap(next);
    m = fm;
  }
  return avg;
}

double besov_norm(const CoefficientTree& tree, double s, double p, double q) {
  if (!(p >= 1.0) || !(q >= 1.0)) {
    throw std::invalid_argument("wavelet: p and q must lie in [1, inf]");
  }
  const double d_over_p = p == kInf ? 0.0 : static_cast<double>(tree.d) / p;
  if (s < d_over_p) {
    throw std::invalid_argument("wavelet: Besov norm needs s >= d/p");
  }
  const double alpha_part = lp_norm(tree.alpha, p);
  const double exponent = s + 0.5 * tree.d - d_over_p;

  if (q == kInf) {
    double detail_part = 0.0;
    for (int j = tree.j0; j <= tree.j0 + tree.depth; ++j) {
      const double term = std::pow(2.0, static_cast<double>(j) * exponent) *
                          lp_norm(tree.beta[static_cast<std::size_t>(j - tree.j0)], p);
      detail_part = std::max(detail_part, term);
    }
    return alpha_part + detail_part;
  }
  double sum = 0.0;
  for (int j = tree.j0; j <= tree.j0 + tree.depth; ++j) {
    const double term = std::pow(2.0, static_cast<double>(j) * exponent) *
                        lp_norm(tree.beta[static_cast<std::size_t>(j - tree.j0)], p);
    sum += std::pow(term, q);
  }
  return alpha_part + std::pow(sum, 1.0 / q);
}

namespace {

double quadrature_residual_moment(const HaarBasis& basis, bool psi) {
  // Integral of the mother function over the domain, midpoint rule.
  const int level = basis.d == 1 ? 16 : 8;
  const std::int64_t m = std::int64_t{1} << level;
  double sum = 0.0;
  if (basis.d == 1) {
    for (std::int64_t i = 0; i < m; ++i) {
      const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
      sum += psi ? haar_psi_frac(x) : haar_phi_frac(x);
    }
    return sum / static_cast<double>(m);
  }
  for (std::int64_t iy = 0; iy < m; ++iy) {
    for (std::int64_t ix = 0; ix < m; ++ix) {
      const double x = (static_cast<double>(ix) + 0.5) / static_cast<double>(m);
      const double y = (static_cast<double>(iy) + 0.5) / static_cast<double>(m);
      // diagonal orientation: the hardest of the three tensor cases
      sum += (psi ? haar_psi_frac(x) : haar_phi_frac(x)) *
             (psi ? haar_psi_frac(y) : haar_phi_frac(y));
    }
  }
  return sum / static_cast<double>(m * m);
}

double measured_basis_sum(const HaarBasis& basis, BasisKind kind) {
  // sup_x sum_k |varphi_{j,k}(x)| * 2^{-jd/2}, grid maximization at j = 4.
  const int j = 4;
  const int grid_level = basis.d == 1 ? 16 : 8;
  const std::int64_t m = std::int64_t{1} << grid_level;
  const double unit = std::pow(2.0, -0.5 * j * basis.d);
  double sup = 0.0;
  if (basis.d == 1) {
    for (std::int64_t i = 0; i < m; ++i) {
      const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
      const auto ks = active_indices(basis, &x, j);
      double sum = 0.0;
      for (auto k : ks) {
        if (kind == BasisKind::detail) k.orient = 0;
        sum += std::abs(evaluate(basis, kind, j, k, &x)) * unit;
      }
      sup = std::max(sup, sum);
    }
    return sup;
  }
  for (std::int64_t iy = 0; iy < m; ++iy) {
    for (std::int64_t ix = 0; ix < m; ++ix) {
      const double xy[2] = {
          (static_cast<double>(ix) + 0.5) / static_cast<double>(m),
          (static_cast<double>(iy) + 0.5) / static_cast<double>(m)};
      const auto ks = active_indices(basis, xy, j);
      double sum = 0.0;
      for (auto k : ks) {
        if (kind == BasisKind::detail) k.orient = 2;
        sum += std::abs(evaluate(basis, kind, j, k, xy)) * unit;
      }
      sup = std::max(sup, sum);
    }
  }
  return sup;
}

double kernel_beyond_support(const HaarBasis& basis) {
  // K_j(x, y) = sum_k phi_{j,k}(x) phi_{j,k}(y) vanishes when x and y do
  // not share a cell; probe pairs separated by more than the support.
  const int j = 3;
  const double step = std::pow(2.0, -j);
  double worst = 0.0;
  for (int i = 0; i < 64; ++i) {
    const double x = (i + 0.5) / 64.0;
    double y = x + basis.support * step * 1.5;
    if (y >= 1.0) y -= 1.0;
    const double px[1] = {x};
    const double py[1] = {y};
    const auto kx = active_indices(HaarBasis::make(1), px, j);
    const auto ky = active_indices(HaarBasis::make(1), py, j);
    if (kx[0] == ky[0]) continue;  // wrapped into the same cell; skip
    double kernel = 0.0;
    for (const auto& k : kx) {
      kernel += evaluate(HaarBasis::make(1), BasisKind::scaling, j, k, px) *
                evaluate(HaarBasis::make(1), BasisKind::scaling, j, k, py);
    }
    worst = std::max(worst, std::abs(kernel));
  }
  return worst;
}

}  // namespace

RegularityReport check_regularity(const HaarBasis& basis, double tolerance) {
  RegularityReport report;
  auto add = [&](std::string name, double residual) {
    RegularityCheck c;
    c.name = std::move(name);
    c.residual = std::abs(residual);
    c.tolerance = tolerance;
    c.pass = c.residual <= tolerance;
    report.all_pass = report.all_pass && c.pass;
    report.checks.push_back(std::move(c));
  };

  add("D1 vanishing moment: integral of psi", quadrature_residual_moment(basis, true));
  add("D1 normalization: integral of phi - 1",
      quadrature_residual_moment(basis, false) - 1.0);
  add("D2 bounded basis sum: measured M_phi - declared",
      measured_basis_sum(basis, BasisKind::scaling) - basis.m_phi);
  add("D2 bounded basis sum: measured M_psi - declared",
      measured_basis_sum(basis, BasisKind::detail) - basis.m_psi);
  add("D3 kernel decay beyond support", kernel_beyond_support(basis));
  return report;
}

std::string tree_to_json(const CoefficientTree& tree) {
  nlohmann::json j;
  j["j0"] = tree.j0;
  j["J"] = tree.depth;
  j["d"] = tree.d;
  j["alpha"] = tree.alpha;
  j["beta"] = tree.beta;
  return j.dump();
}

CoefficientTree tree_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  CoefficientTree tree = CoefficientTree::zeros(
      j.at("j0").get<int>(), j.at("J").get<int>(), j.at("d").get<int>());
  const auto alpha = j.at("alpha").get<std::vector<double>>();
  const auto beta = j.at("beta").get<std::vector<std::vector<double>>>();
  if (alpha.size() != tree.alpha.size() || beta.size() != tree.beta.size()) {
    throw std::invalid_argument("wavelet: JSON tree has wrong block sizes");
  }
  for (std::size_t i = 0; i < beta.size(); ++i) {
    if (beta[i].size() != tree.beta[i].size()) {
      throw std::invalid_argument("wavelet: JSON tree has wrong level size");
    }
  }
  tree.alpha = alpha;
  tree.beta = beta;
  return tree;
}

}  // namespace wavereg
