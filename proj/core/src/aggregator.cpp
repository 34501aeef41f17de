#include "wavereg/aggregator.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace wavereg {

namespace {

std::int64_t isqrt_floor(std::int64_t n) {
  std::int64_t r = static_cast<std::int64_t>(std::sqrt(static_cast<double>(n)));
  while (r > 0 && r * r > n) --r;
  while ((r + 1) * (r + 1) <= n) ++r;
  return r;
}

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

MarginGrid build_margin_grid(std::int64_t horizon, MarginGrid::Mode mode) {
  if (horizon < 1) {
    throw std::invalid_argument("aggregator: horizon must be >= 1");
  }
  const std::int64_t cap = isqrt_floor(horizon) + 1;
  MarginGrid grid;
  grid.mode = mode;
  if (mode == MarginGrid::Mode::integer) {
    grid.margins.reserve(static_cast<std::size_t>(cap) + 1);
    for (std::int64_t m = 0; m <= cap; ++m) {
      grid.margins.push_back(static_cast<double>(m));
    }
  } else {
    grid.margins.push_back(0.0);
    for (std::int64_t m = 1; m <= cap; m *= 2) {
      grid.margins.push_back(static_cast<double>(m));
    }
  }
  return grid;
}

ExpertWeights::ExpertWeights(std::size_t n_experts) : k_(n_experts) {
  if (n_experts == 0) {
    throw std::invalid_argument("aggregator: need at least one expert");
  }
  log_potential_.assign(k_, 0.0);
  range_.assign(k_, 0.0);
  var_.assign(k_, 0.0);
  cum_regret_.assign(k_, 0.0);
  weights_.assign(k_, 1.0 / static_cast<double>(k_));
}

namespace {
double learning_rate(double range, double var, double log_k) {
  if (range <= 0.0) return kInf;
  return std::min(1.0 / (2.0 * range),
                  std::sqrt(log_k / (range * range + var)));
}
}  // namespace

void ExpertWeights::update(std::span<const double> regrets) {
  if (regrets.size() != k_) {
    throw std::invalid_argument("aggregator: regret vector length mismatch");
  }
  for (double r : regrets) {
    if (!std::isfinite(r)) {
      throw std::invalid_argument(
          "aggregator: non-finite regret (upstream clipping failed)");
    }
  }
  const double log_k = std::log(static_cast<double>(k_));
  for (std::size_t e = 0; e < k_; ++e) {
    const double r = regrets[e];
    const double eta_old = learning_rate(range_[e], var_[e], log_k);
    range_[e] = std::max(range_[e], std::abs(r));
    var_[e] += r * r;
    cum_regret_[e] += r;
    global_range_ = std::max(global_range_, std::abs(r));
    if (range_[e] == 0.0) {
      continue;  // never saw a nonzero regret; potential stays flat
    }
    const double eta = learning_rate(range_[e], var_[e], log_k);
    const double ratio = std::isfinite(eta_old) ? eta / eta_old : 1.0;
    log_potential_[e] = ratio * log_potential_[e] + std::log1p(eta * r);
  }
  t_ += 1;
  refresh_weights();
}

void ExpertWeights::refresh_weights() {
  const double log_k = std::log(static_cast<double>(k_));
  double eta_cap = 0.0;
  double max_lp = -kInf;
  for (std::size_t e = 0; e < k_; ++e) {
    const double eta = learning_rate(range_[e], var_[e], log_k);
    if (std::isfinite(eta)) eta_cap = std::max(eta_cap, eta);
    max_lp = std::max(max_lp, log_potential_[e]);
  }
  if (eta_cap == 0.0) eta_cap = 1.0;  // no expert has data yet

  double sum = 0.0;
  for (std::size_t e = 0; e < k_; ++e) {
    double eta = learning_rate(range_[e], var_[e], log_k);
    if (!std::isfinite(eta)) eta = eta_cap;
    weights_[e] = eta * std::exp(log_potential_[e] - max_lp);
    sum += weights_[e];
  }
  if (sum <= 0.0 || !std::isfinite(sum)) {
    weights_.assign(k_, 1.0 / static_cast<double>(k_));
    return;
  }
  for (double& w : weights_) w /= sum;
}

ExpertWeights::Snapshot ExpertWeights::snapshot() const {
  return Snapshot{log_potential_, range_, var_, cum_regret_, weights_,
                  global_range_, t_};
}

ExpertWeights ExpertWeights::restore(const Snapshot& snap) {
  ExpertWeights w(snap.log_potential.size());
  w.log_potential_ = snap.log_potential;
  w.range_ = snap.range;
  w.var_ = snap.var;
  w.cum_regret_ = snap.cum_regret;
  w.weights_ = snap.weights;
  w.global_range_ = snap.global_range;
  w.t_ = snap.rounds;
  return w;
}

ExpertCertificate ExpertWeights::regret_certificate(std::size_t expert) const {
  if (expert >= k_) {
    throw std::invalid_argument("aggregator: expert index out of range");
  }
  const double log_k = std::log(static_cast<double>(k_));
  ExpertCertificate cert;
  cert.xi3 = xi3();
  cert.xi4 = xi4();
  cert.bound = cert.xi3 * std::sqrt(log_k * var_[expert]) +
               cert.xi4 * log_k * global_range_;
  return cert;
}

double aggregate(std::span<const double> weights,
                 std::span<const double> predictions) {
  if (weights.size() != predictions.size()) {
    throw std::invalid_argument("aggregator: weight/prediction length mismatch");
  }
  double out = 0.0;
  for (std::size_t e = 0; e < weights.size(); ++e) {
    out += weights[e] * predictions[e];
  }
  return out;
}

AdaptiveClipper::AdaptiveClipper(std::size_t dim, double c1, double radius,
                                 MarginGrid grid, ClipConfig base_config)
    : dim_(dim), grid_(std::move(grid)), weights_(grid_.size()) {
  if (grid_.margins.empty()) {
    throw std::invalid_argument("aggregator: empty margin grid");
  }
  instances_.reserve(grid_.size());
  for (double margin : grid_.margins) {
    ClipConfig cfg = base_config;
    cfg.mode = ClipConfig::Mode::fixed;
    cfg.fixed_margin = margin;
    instances_.emplace_back(dim_, c1, radius, cfg);
  }
}

std::vector<double> AdaptiveClipper::prediction() const {
  std::vector<double> chat(dim_, 0.0);
  const auto& w = weights_.weights();
  for (std::size_t i = 0; i < instances_.size(); ++i) {
    for (std::size_t j = 0; j < dim_; ++j) {
      chat[j] += w[i] * instances_[i].prediction(j);
    }
  }
  return chat;
}

std::vector<double> AdaptiveClipper::round(const GradientOracle& oracle,
                                           std::span<const double> grad_bounds) {
  if (grad_bounds.size() != dim_) {
    throw std::invalid_argument("aggregator: gradient bound length mismatch");
  }
  const std::size_t k = instances_.size();
  std::vector<std::vector<double>> preds(k);
  for (std::size_t i = 0; i < k; ++i) preds[i] = instances_[i].predictions();

  const auto& w = weights_.weights();
  std::vector<double> chat(dim_, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < dim_; ++j) chat[j] += w[i] * preds[i][j];
  }

  const std::vector<double> ghat = oracle(chat);
  if (ghat.size() != dim_) {
    throw std::invalid_argument("aggregator: oracle returned wrong gradient size");
  }

  std::vector<double> nabla(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    double dot = 0.0;
    for (std::size_t j = 0; j < dim_; ++j) dot += ghat[j] * preds[i][j];
    nabla[i] = dot;
  }
  const double mixture = aggregate(w, nabla);
  std::vector<double> regrets(k);
  for (std::size_t i = 0; i < k; ++i) regrets[i] = mixture - nabla[i];
  weights_.update(regrets);

  for (std::size_t i = 0; i < k; ++i) {
    instances_[i].step(ghat, grad_bounds, grid_.margins[i]);
  }
  return chat;
}

}  // namespace wavereg
