#include "wavereg/batch.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wavereg {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

NoiseModel NoiseModel::gaussian(double sigma) {
  NoiseModel n{Kind::gaussian, sigma};
  n.validate();
  return n;
}
NoiseModel NoiseModel::laplace(double sigma) {
  NoiseModel n{Kind::laplace, sigma};
  n.validate();
  return n;
}
NoiseModel NoiseModel::scaled_bernoulli(double sigma) {
  NoiseModel n{Kind::scaled_bernoulli, sigma};
  n.validate();
  return n;
}
NoiseModel NoiseModel::none() { return NoiseModel{Kind::none, 0.0}; }

void NoiseModel::validate() const {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("batch: noise sigma must be finite and >= 0");
  }
  if (kind == Kind::none && sigma != 0.0) {
    throw std::invalid_argument("batch: noiseless model must have sigma = 0");
  }
}

double NoiseModel::sample(SplitMix64& rng) const {
  switch (kind) {
    case Kind::gaussian:
      return sigma * rng.next_gaussian();
    case Kind::laplace:
      return sigma / std::sqrt(2.0) * rng.next_laplace();
    case Kind::scaled_bernoulli:
      return (rng.next_u64() & 1u) ? sigma : -sigma;
    case Kind::none:
      return 0.0;
  }
  return 0.0;
}

double NoiseModel::nu() const {
  switch (kind) {
    case Kind::gaussian: return sigma;
    case Kind::laplace: return sigma / std::sqrt(2.0);
    case Kind::scaled_bernoulli: return sigma;
    case Kind::none: return 0.0;
  }
  return 0.0;
}

double NoiseModel::mu() const {
  switch (kind) {
    case Kind::gaussian: return sigma;
    case Kind::laplace: return 0.5 * sigma / std::sqrt(2.0);
    case Kind::scaled_bernoulli: return 0.5 * sigma;
    case Kind::none: return 0.0;
  }
  return 0.0;
}

const char* NoiseModel::kind_name() const {
  switch (kind) {
    case Kind::gaussian: return "gaussian";
    case Kind::laplace: return "laplace";
    case Kind::scaled_bernoulli: return "scaled_bernoulli";
    case Kind::none: return "none";
  }
  return "none";
}

void TargetFunction::verify_radius() const {
  const HaarBasis basis = HaarBasis::make(d_);
  const int depth = d_ == 1 ? 10 : 5;
  const CoefficientTree tree = analyze(basis, eval_, 0, depth, 3);
  const double measured = besov_norm(tree, meta_.s, meta_.p, meta_.q);
  if (measured > meta_.besov_radius * (1.0 + 1e-9) + 1e-12) {
    throw std::invalid_argument(
        "batch: target exceeds its declared Besov radius (measured " +
        std::to_string(measured) + " > " + std::to_string(meta_.besov_radius) +
        ")");
  }
}

TargetFunction TargetFunction::constant(double value, Meta meta, int d) {
  TargetFunction f;
  f.kind_ = "constant";
  f.d_ = d;
  f.meta_ = meta;
  f.eval_ = [value](const double*) { return value; };
  f.verify_radius();
  return f;
}

TargetFunction TargetFunction::step(std::vector<double> edges,
                                    std::vector<double> levels, Meta meta) {
  if (levels.size() != edges.size() + 1) {
    throw std::invalid_argument("batch: step needs one more level than edges");
  }
  for (std::size_t i = 0; i < edges.size(); ++i) {
    if (!(edges[i] > 0.0 && edges[i] < 1.0) ||
        (i > 0 && !(edges[i] > edges[i - 1]))) {
      throw std::invalid_argument("batch: step edges must ascend inside (0,1)");
    }
  }
  TargetFunction f;
  f.kind_ = "step";
  f.d_ = 1;
  f.meta_ = meta;
  f.eval_ = [edges = std::move(edges), levels = std::move(levels)](const double* x) {
    std::size_t idx = 0;
    while (idx < edges.size() && x[0] >= edges[idx]) ++idx;
    return levels[idx];
  };
  f.verify_radius();
  return f;
}

TargetFunction TargetFunction::sawtooth(int teeth, double amplitude, Meta meta) {
  if (teeth < 1) {
    throw std::invalid_argument("batch: sawtooth needs at least one tooth");
  }
  TargetFunction f;
  f.kind_ = "sawtooth";
  f.d_ = 1;
  f.meta_ = meta;
  f.eval_ = [teeth, amplitude](const double* x) {
    const double u = x[0] * static_cast<double>(teeth);
    const double frac = u - std::floor(u);
    return amplitude * (1.0 - 2.0 * std::abs(2.0 * frac - 1.0));
  };
  f.verify_radius();
  return f;
}

TargetFunction TargetFunction::dyadic_random(std::uint64_t seed, int j0,
                                             int depth, int d, Meta meta) {
  const HaarBasis basis = HaarBasis::make(d);
  auto tree = std::make_shared<CoefficientTree>(
      CoefficientTree::zeros(j0, depth, d));
  SplitMix64 rng(seed, 7);

  // Half of the radius goes to the scaling block, half to the details,
  // each block normalized to meet its share with equality.
  const double alpha_share = 0.5 * meta.besov_radius;
  const double detail_share = 0.5 * meta.besov_radius;

  auto normalize_lp = [](std::vector<double>& v, double p, double target) {
    double norm = 0.0;
    if (p == kInf) {
      for (double x : v) norm = std::max(norm, std::abs(x));
    } else {
      for (double x : v) norm += std::pow(std::abs(x), p);
      norm = std::pow(norm, 1.0 / p);
    }
    if (norm == 0.0) return;
    const double scale = target / norm;
    for (double& x : v) x *= scale;
  };

  for (double& a : tree->alpha) a = rng.next_gaussian();
  normalize_lp(tree->alpha, meta.p, alpha_share);

  const double exponent = meta.s + 0.5 * d - (meta.p == kInf ? 0.0 : d / meta.p);
  const int levels = depth + 1;
  const double theta =
      meta.q == kInf ? 1.0
                     : std::pow(1.0 / static_cast<double>(levels), 1.0 / meta.q);
  for (int j = j0; j <= j0 + depth; ++j) {
    auto& level = tree->beta[static_cast<std::size_t>(j - j0)];
    for (double& b : level) b = rng.next_gaussian();
    const double level_target =
        detail_share * theta * std::pow(2.0, -static_cast<double>(j) * exponent);
    normalize_lp(level, meta.p, level_target);
  }

  TargetFunction f;
  f.kind_ = "dyadic_random";
  f.d_ = d;
  f.meta_ = meta;
  f.eval_ = [basis, tree](const double* x) { return synthesize(basis, *tree, x); };
  f.verify_radius();
  return f;
}

std::vector<Sample> generate_sample(const TargetFunction& f,
                                    const NoiseModel& noise, std::int64_t count,
                                    std::uint64_t seed) {
  if (count < 1) {
    throw std::invalid_argument("batch: sample count must be >= 1");
  }
  SplitMix64 xs(seed, 0);
  SplitMix64 es(seed, 1);
  std::vector<Sample> out(static_cast<std::size_t>(count));
  for (auto& s : out) {
    s.x[0] = xs.next_double();
    if (f.dim() == 2) s.x[1] = xs.next_double();
    s.y = f(s.x) + noise.sample(es);
  }
  return out;
}

void AveragedPredictor::fold(std::span<const double> snapshot) {
  if (snapshot.size() != mean_.size()) {
    throw std::invalid_argument("batch: snapshot layout mismatch");
  }
  count_ += 1;
  const double inv = 1.0 / static_cast<double>(count_);
  for (std::size_t i = 0; i < mean_.size(); ++i) {
    mean_[i] += (snapshot[i] - mean_[i]) * inv;
  }
}

double l2_risk_grid(std::span<const double> predictor_values,
                    std::span<const double> target_values) {
  if (predictor_values.size() != target_values.size() || predictor_values.empty()) {
    throw std::invalid_argument("batch: grid size mismatch");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < predictor_values.size(); ++i) {
    const double diff = predictor_values[i] - target_values[i];
    sum += diff * diff;
  }
  return sum / static_cast<double>(predictor_values.size());
}

double l2_risk(const std::function<double(const double*)>& predictor,
               const TargetFunction& target, int resolution_level) {
  if (resolution_level < 1 || resolution_level * target.dim() > 26) {
    throw std::invalid_argument("batch: bad risk resolution");
  }
  const std::int64_t m = std::int64_t{1} << resolution_level;
  double sum = 0.0;
  if (target.dim() == 1) {
    for (std::int64_t i = 0; i < m; ++i) {
      const double x = (static_cast<double>(i) + 0.5) / static_cast<double>(m);
      const double diff = predictor(&x) - target(&x);
      sum += diff * diff;
    }
    return sum / static_cast<double>(m);
  }
  for (std::int64_t iy = 0; iy < m; ++iy) {
    for (std::int64_t ix = 0; ix < m; ++ix) {
      const double xy[2] = {
          (static_cast<double>(ix) + 0.5) / static_cast<double>(m),
          (static_cast<double>(iy) + 0.5) / static_cast<double>(m)};
      const double diff = predictor(xy) - target(xy);
      sum += diff * diff;
    }
  }
  return sum / static_cast<double>(m * m);
}

RiskDecomposition risk_decomposition_check(
    const std::function<double(const double*)>& predictor,
    const TargetFunction& target, const NoiseModel& noise, std::int64_t samples,
    std::uint64_t seed, int resolution_level) {
  if (samples < 1) {
    throw std::invalid_argument("batch: need at least one Monte-Carlo sample");
  }
  SplitMix64 xs(seed, 0);
  SplitMix64 es(seed, 1);
  double sum = 0.0;
  double sum_sq = 0.0;
  for (std::int64_t i = 0; i < samples; ++i) {
    double x[2] = {xs.next_double(), 0.0};
    if (target.dim() == 2) x[1] = xs.next_double();
    const double y = target(x) + noise.sample(es);
    const double err = predictor(x) - y;
    const double sq = err * err;
    sum += sq;
    sum_sq += sq * sq;
  }
  const double n = static_cast<double>(samples);
  RiskDecomposition out;
  out.lhs = sum / n;
  out.rhs = l2_risk(predictor, target, resolution_level) + noise.sigma * noise.sigma;
  out.gap = out.lhs - out.rhs;
  const double var = std::max(0.0, sum_sq / n - out.lhs * out.lhs);
  out.stderr_ = std::sqrt(var / n);
  return out;
}

FrameEmbedder::FrameEmbedder(const HaarBasis& basis, TreeLayout frame)
    : basis_(basis), frame_(frame) {
  if (frame_.j0 != 0) {
    throw std::invalid_argument("batch: the shared frame must start at j0 = 0");
  }
}

std::vector<std::pair<std::int64_t, double>> FrameEmbedder::embed(
    const TreeLayout& local, std::int64_t flat, double value) const {
  const auto decoded = local.decode(flat);
  std::vector<std::pair<std::int64_t, double>> out;
  if (decoded.kind == BasisKind::detail) {
    out.emplace_back(frame_.beta_offset(decoded.level, decoded.index), value);
    return out;
  }
  if (decoded.level == 0) {
    out.emplace_back(frame_.alpha_offset(decoded.index), value);
    return out;
  }
  // Scaling function at a finer start scale: run the analysis pyramid on
  // a one-hot coefficient vector down to the frame's level 0.
  const TreeLayout from{decoded.level, 0, basis_.d};
  std::vector<double> hot(static_cast<std::size_t>(from.alpha_size()), 0.0);
  hot[static_cast<std::size_t>(from.alpha_offset(decoded.index))] = value;
  const CoefficientTree tree =
      analyze_coefficients(basis_, std::move(hot), decoded.level, 0, frame_.depth);
  for (std::size_t i = 0; i < tree.alpha.size(); ++i) {
    if (tree.alpha[i] != 0.0) {
      out.emplace_back(static_cast<std::int64_t>(i), tree.alpha[i]);
    }
  }
  const TreeLayout tl = tree.layout();
  std::int64_t base = tl.alpha_size();
  for (int j = 0; j <= tl.depth; ++j) {
    const auto& level = tree.beta[static_cast<std::size_t>(j)];
    for (std::size_t i = 0; i < level.size(); ++i) {
      if (level[i] != 0.0) {
        out.emplace_back(base + static_cast<std::int64_t>(i), level[i]);
      }
    }
    base += tl.level_size(j);
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::vector<double> FrameEmbedder::embed_tree(const CoefficientTree& local) const {
  const int fine = local.j0 + local.depth + 1;
  if (frame_.depth < local.j0 + local.depth) {
    throw std::invalid_argument("batch: frame too shallow for expert tree");
  }
  std::vector<double> avg = scaling_coefficients(basis_, local, fine);
  const CoefficientTree frame_tree =
      analyze_coefficients(basis_, std::move(avg), fine, 0, frame_.depth);
  return frame_tree.flatten();
}

RunAccumulator::RunAccumulator(TreeLayout frame,
                               std::vector<std::vector<double>> expert_frames,
                               std::vector<double> target_coeffs, double tail_sq)
    : frame_(frame),
      n_experts_(expert_frames.size()),
      dense_(std::move(expert_frames)),
      target_(std::move(target_coeffs)),
      tail_sq_(tail_sq) {
  const auto size = static_cast<std::size_t>(frame_.flat_size());
  if (target_.size() != size || n_experts_ == 0) {
    throw std::invalid_argument("batch: accumulator layout mismatch");
  }
  for (const auto& f : dense_) {
    if (f.size() != size) {
      throw std::invalid_argument("batch: expert frame size mismatch");
    }
  }
  init_ = dense_;
  sum1_.assign(n_experts_, std::vector<double>(size, 0.0));
  sum2_.assign(n_experts_, std::vector<double>(size, 0.0));
  cumw_.assign(n_experts_, 0.0);
  gram_.assign(n_experts_, std::vector<double>(n_experts_, 0.0));
  cross_target_.assign(n_experts_, 0.0);
  for (double t : target_) target_sq_ += t * t;
  for (std::size_t e = 0; e < n_experts_; ++e) {
    for (std::size_t i = 0; i < size; ++i) {
      cross_target_[e] += dense_[e][i] * target_[i];
    }
    for (std::size_t e2 = 0; e2 <= e; ++e2) {
      double dot = 0.0;
      for (std::size_t i = 0; i < size; ++i) dot += dense_[e][i] * dense_[e2][i];
      gram_[e][e2] = gram_[e2][e] = dot;
    }
  }
}

void RunAccumulator::on_round(
    std::span<const double> weights,
    const std::vector<std::vector<std::pair<std::int64_t, double>>>& frame_deltas) {
  if (weights.size() != n_experts_ || frame_deltas.size() != n_experts_) {
    throw std::invalid_argument("batch: round size mismatch");
  }
  // Risk of the mixture played this round, before the coefficient moves.
  double quad = 0.0;
  double lin = 0.0;
  for (std::size_t e = 0; e < n_experts_; ++e) {
    lin += weights[e] * cross_target_[e];
    for (std::size_t e2 = 0; e2 < n_experts_; ++e2) {
      quad += weights[e] * weights[e2] * gram_[e][e2];
    }
  }
  risks_.push_back(quad - 2.0 * lin + target_sq_ + tail_sq_);
  rounds_ += 1;

  for (std::size_t e = 0; e < n_experts_; ++e) cumw_[e] += weights[e];

  // Gram cross terms against the pre-update frames.
  std::vector<std::vector<double>> cross(n_experts_,
                                         std::vector<double>(n_experts_, 0.0));
  for (std::size_t e = 0; e < n_experts_; ++e) {
    for (const auto& [idx, dv] : frame_deltas[e]) {
      const auto i = static_cast<std::size_t>(idx);
      sum1_[e][i] += dv;
      sum2_[e][i] += dv * cumw_[e];
      cross_target_[e] += dv * target_[i];
      for (std::size_t e2 = 0; e2 < n_experts_; ++e2) {
        cross[e][e2] += dv * dense_[e2][i];
      }
    }
  }
  for (std::size_t e = 0; e < n_experts_; ++e) {
    for (std::size_t e2 = 0; e2 <= e; ++e2) {
      // sorted-merge intersection of the two sparse deltas
      double ddot = 0.0;
      const auto& a = frame_deltas[e];
      const auto& b = frame_deltas[e2];
      std::size_t ia = 0, ib = 0;
      while (ia < a.size() && ib < b.size()) {
        if (a[ia].first < b[ib].first) {
          ++ia;
        } else if (a[ia].first > b[ib].first) {
          ++ib;
        } else {
          ddot += a[ia].second * b[ib].second;
          ++ia;
          ++ib;
        }
      }
      gram_[e][e2] += cross[e][e2] + cross[e2][e] + ddot;
      gram_[e2][e] = gram_[e][e2];
    }
  }
  for (std::size_t e = 0; e < n_experts_; ++e) {
    for (const auto& [idx, dv] : frame_deltas[e]) {
      dense_[e][static_cast<std::size_t>(idx)] += dv;
    }
  }
}

std::vector<double> RunAccumulator::mean_coefficients() const {
  if (rounds_ == 0) {
    throw std::logic_error("batch: no rounds accumulated");
  }
  const auto size = static_cast<std::size_t>(frame_.flat_size());
  std::vector<double> mean(size, 0.0);
  const double inv = 1.0 / static_cast<double>(rounds_);
  for (std::size_t e = 0; e < n_experts_; ++e) {
    for (std::size_t i = 0; i < size; ++i) {
      mean[i] += (cumw_[e] * (init_[e][i] + sum1_[e][i]) - sum2_[e][i]) * inv;
    }
  }
  return mean;
}

double RunAccumulator::jensen_lhs() const {
  const std::vector<double> mean = mean_coefficients();
  double sum = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double diff = mean[i] - target_[i];
    sum += diff * diff;
  }
  return sum + tail_sq_;
}

double RunAccumulator::jensen_rhs() const {
  if (rounds_ == 0) {
    throw std::logic_error("batch: no rounds accumulated");
  }
  double sum = 0.0;
  for (double r : risks_) sum += r;
  return sum / static_cast<double>(rounds_);
}

}  // namespace wavereg
