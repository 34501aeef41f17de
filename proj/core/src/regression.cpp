#include "wavereg/regression.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "internal_json.hpp"
#include "wavereg/digest.hpp"

namespace wavereg {

void RegressionConfig::validate() const {
  if (!(besov_radius > 0.0)) {
    throw std::invalid_argument("regression: Besov radius B must be > 0");
  }
  if (max_start_scale < 0 || horizon < 1) {
    throw std::invalid_argument("regression: need J0 >= 0 and T >= 1");
  }
  if (d != 1 && d != 2) {
    throw std::invalid_argument("regression: only d in {1, 2} is supported");
  }
  if (!(kappa > 0.0)) {
    throw std::invalid_argument("regression: kappa must be > 0");
  }
  if (!(sigma0 > 0.0)) {
    throw std::invalid_argument("regression: sigma0 must be > 0");
  }
  if (expert_cap < 1) {
    throw std::invalid_argument("regression: expert cap must be >= 1");
  }
}

int RegressionConfig::effective_depth() const {
  if (depth >= 0) return depth;
  // J = ceil( S / ((2S + d) kappa) * log2(T B^2 / sigma0^2) ), S = 1 for Haar,
  // capped so the largest expert layout stays under 2^20 coefficients.
  const double s_reg = 1.0;
  const double log_arg = static_cast<double>(horizon) * besov_radius *
                         besov_radius / (sigma0 * sigma0);
  const double raw =
      s_reg / ((2.0 * s_reg + d) * kappa) * std::log2(std::max(log_arg, 2.0));
  int j = std::max(0, static_cast<int>(std::ceil(raw)));
  while (j > 0) {
    const TreeLayout layout{max_start_scale, j, d};
    if (layout.flat_size() <= (std::int64_t{1} << 20)) break;
    --j;
  }
  return j;
}

double RegressionConfig::effective_grad_bound(const HaarBasis& basis) const {
  if (grad_bound > 0.0) return grad_bound;
  return sup_norm_bounds(besov_radius, effective_depth(), kappa, basis).grad_bound;
}

double diameters(int j, double besov_radius, int d) {
  if (!(besov_radius > 0.0) || j < 0) {
    throw std::invalid_argument("regression: diameters need B > 0 and j >= 0");
  }
  return besov_radius * std::pow(2.0, -0.5 * j * d);
}

SupNormBounds sup_norm_bounds(double besov_radius, int depth, double kappa,
                              const HaarBasis& basis) {
  if (!(kappa > 0.0)) {
    throw std::invalid_argument("regression: kappa must be > 0");
  }
  if (depth < 0) {
    throw std::invalid_argument("regression: depth must be >= 0");
  }
  const double m = std::max(basis.m_phi, basis.m_psi);
  SupNormBounds out;
  out.target_sup = besov_radius * m / (1.0 - std::pow(2.0, -kappa));
  out.predictor_sup = static_cast<double>(depth + 1) * besov_radius * m;
  out.grad_bound = 2.0 * (out.predictor_sup + out.target_sup);
  return out;
}

std::vector<double> scaling_grid(int j0, std::int64_t horizon, double sup_bound,
                                 const HaarBasis& basis, GridMode mode) {
  if (j0 < 0 || horizon < 1 || !(sup_bound >= 0.0)) {
    throw std::invalid_argument("regression: bad scaling grid arguments");
  }
  if (mode == GridMode::zero_init) {
    return {0.0};
  }
  const double range =
      std::pow(2.0, -0.5 * j0 * basis.d) * sup_bound * basis.m_phi;
  if (range == 0.0) return {0.0};

  std::int64_t half;
  if (mode == GridMode::coarse_grid) {
    // small odd grid, capped at ceil(sqrt(T)) points
    const auto cap = static_cast<std::int64_t>(
        std::ceil(std::sqrt(static_cast<double>(horizon))));
    half = std::clamp<std::int64_t>((cap - 1) / 2, 1, 4);
  } else {
    const double eps =
        std::pow(2.0, -0.5 * j0 * basis.d) / std::sqrt(static_cast<double>(horizon));
    half = static_cast<std::int64_t>(std::ceil(range / eps));
  }
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(2 * half + 1));
  const double spacing = range / static_cast<double>(half);
  for (std::int64_t i = -half; i <= half; ++i) {
    grid.push_back(spacing * static_cast<double>(i));
  }
  return grid;
}

CoefficientTree ExpertRecord::tree_view() const {
  return CoefficientTree::unflatten(layout, coefficients);
}

double ExpertRecord::predict(const HaarBasis& basis, const double* x) const {
  const auto scaling = active_indices(basis, x, layout.j0);
  double value = 0.0;
  for (const auto& k : scaling) {
    value += coefficients[static_cast<std::size_t>(layout.alpha_offset(k))] *
             evaluate(basis, BasisKind::scaling, layout.j0, k, x);
  }
  for (int j = layout.j0; j <= layout.j0 + layout.depth; ++j) {
    const auto active = active_indices(basis, x, j);
    for (const auto& base_k : active) {
      for (int orient = 0; orient < basis.orientations(); ++orient) {
        WaveIndex k = base_k;
        k.orient = orient;
        value += coefficients[static_cast<std::size_t>(layout.beta_offset(j, k))] *
                 evaluate(basis, BasisKind::detail, j, k, x);
      }
    }
  }
  return value;
}

namespace {

ExpertRecord make_expert(const RegressionConfig& config, const HaarBasis& basis,
                         int j0, double init_alpha, double margin, int depth) {
  ExpertRecord e;
  e.j0 = j0;
  e.margin = margin;
  e.layout = TreeLayout{j0, depth, basis.d};
  const double alpha_radius = diameters(j0, config.besov_radius, basis.d);
  const double init = std::clamp(init_alpha, -alpha_radius, alpha_radius);
  e.init_alpha.assign(static_cast<std::size_t>(e.layout.alpha_size()), init);

  e.learners.reserve(static_cast<std::size_t>(e.layout.flat_size()));
  e.coefficients.reserve(static_cast<std::size_t>(e.layout.flat_size()));
  for (std::int64_t i = 0; i < e.layout.alpha_size(); ++i) {
    e.learners.emplace_back(init, alpha_radius);
    e.coefficients.push_back(init);
  }
  for (int j = j0; j <= j0 + depth; ++j) {
    const double radius = diameters(j, config.besov_radius, basis.d);
    // Level-shaped initial wealth: finer detail learners start with less
    // capital, so the total budget noise-chasing can burn per level stays
    // flat instead of growing with the number of touched coefficients.
    const double wealth =
        radius * std::pow(2.0, -0.5 * (j - j0) * basis.d);
    for (std::int64_t i = 0; i < e.layout.level_size(j); ++i) {
      e.learners.emplace_back(0.0, radius, wealth);
      e.coefficients.push_back(0.0);
    }
  }
  return e;
}

}  // namespace

std::vector<ExpertRecord> build_expert_set(const RegressionConfig& config,
                                           const HaarBasis& basis) {
  return build_expert_set(
      config, basis, build_margin_grid(config.horizon, config.margin_mode));
}

std::vector<ExpertRecord> build_expert_set(const RegressionConfig& config,
                                           const HaarBasis& basis,
                                           const MarginGrid& grid) {
  config.validate();
  if (basis.d != config.d) {
    throw std::invalid_argument("regression: basis dimension mismatch");
  }
  const int depth = config.effective_depth();
  const SupNormBounds bounds =
      sup_norm_bounds(config.besov_radius, depth, config.kappa, basis);

  std::vector<std::vector<double>> grids;
  std::int64_t count = 0;
  for (int j0 = 0; j0 <= config.max_start_scale; ++j0) {
    auto g = scaling_grid(j0, config.horizon, bounds.target_sup, basis,
                          config.grid_mode);
    // grid points get clamped into the level diameter; drop duplicates
    const double radius = diameters(j0, config.besov_radius, basis.d);
    for (double& a : g) a = std::clamp(a, -radius, radius);
    std::sort(g.begin(), g.end());
    g.erase(std::unique(g.begin(), g.end()), g.end());
    count += static_cast<std::int64_t>(g.size()) *
             static_cast<std::int64_t>(grid.size());
    grids.push_back(std::move(g));
  }
  if (count > config.expert_cap) {
    throw std::invalid_argument(
        "regression: expert count " + std::to_string(count) + " exceeds cap " +
        std::to_string(config.expert_cap) +
        "; use grid_mode=zero_init or lower J0");
  }

  std::vector<ExpertRecord> experts;
  experts.reserve(static_cast<std::size_t>(count));
  for (int j0 = 0; j0 <= config.max_start_scale; ++j0) {
    for (double a : grids[static_cast<std::size_t>(j0)]) {
      for (double margin : grid.margins) {
        experts.push_back(make_expert(config, basis, j0, a, margin, depth));
      }
    }
  }
  return experts;
}

std::vector<ActiveCoefficient> coefficient_gradients(const ExpertRecord& expert,
                                                     const HaarBasis& basis,
                                                     const double* x,
                                                     double deriv,
                                                     double grad_bound) {
  std::vector<ActiveCoefficient> out;
  out.reserve(static_cast<std::size_t>(
      (expert.layout.depth + 2) * (basis.d == 1 ? 1 : 3)));

  const auto scaling = active_indices(basis, x, expert.layout.j0);
  for (const auto& k : scaling) {
    ActiveCoefficient a;
    a.kind = BasisKind::scaling;
    a.level = expert.layout.j0;
    a.index = k;
    a.flat = expert.layout.alpha_offset(k);
    a.basis_value = evaluate(basis, BasisKind::scaling, a.level, k, x);
    a.gradient = deriv * a.basis_value;
    a.bound = grad_bound * std::abs(a.basis_value);
    out.push_back(a);
  }
  for (int j = expert.layout.j0; j <= expert.layout.j0 + expert.layout.depth; ++j) {
    const auto active = active_indices(basis, x, j);
    for (const auto& base_k : active) {
      for (int orient = 0; orient < basis.orientations(); ++orient) {
        ActiveCoefficient a;
        a.kind = BasisKind::detail;
        a.level = j;
        a.index = base_k;
        a.index.orient = orient;
        a.flat = expert.layout.beta_offset(j, a.index);
        a.basis_value = evaluate(basis, BasisKind::detail, j, a.index, x);
        a.gradient = deriv * a.basis_value;
        a.bound = grad_bound * std::abs(a.basis_value);
        out.push_back(a);
      }
    }
  }
  return out;
}

OnlineWaveletRegressor::OnlineWaveletRegressor(RegressionConfig config,
                                               const HaarBasis& basis)
    : OnlineWaveletRegressor(
          config, basis, build_margin_grid(config.horizon, config.margin_mode)) {}

OnlineWaveletRegressor::OnlineWaveletRegressor(RegressionConfig config,
                                               const HaarBasis& basis,
                                               MarginGrid margins)
    : config_(config),
      basis_(basis),
      grid_(std::move(margins)),
      experts_(build_expert_set(config, basis, grid_)),
      weights_(experts_.size()),
      grad_bound_(config.effective_grad_bound(basis)) {}

double OnlineWaveletRegressor::predict(const double* x) {
  if (pending_) {
    throw std::logic_error("regression: update() must follow predict()");
  }
  trace_ = RoundTrace{};
  trace_.x[0] = x[0];
  if (basis_.d == 2) trace_.x[1] = x[1];
  trace_.weights_used = weights_.weights();
  trace_.expert_preds.resize(experts_.size());
  for (std::size_t e = 0; e < experts_.size(); ++e) {
    trace_.expert_preds[e] = experts_[e].predict(basis_, x);
  }
  trace_.prediction = aggregate(trace_.weights_used, trace_.expert_preds);
  pending_ = true;
  return trace_.prediction;
}

void OnlineWaveletRegressor::update(double y) {
  if (!pending_) {
    throw std::logic_error("regression: predict() must precede update()");
  }
  if (!std::isfinite(y)) {
    throw std::invalid_argument("regression: label must be finite");
  }
  trace_.label = y;
  const double deriv = loss_derivative(trace_.prediction, y);

  // Expert layer: linearized gradients deriv * fhat_e(x).
  std::vector<double> regrets(experts_.size());
  double mixture = 0.0;
  for (std::size_t e = 0; e < experts_.size(); ++e) {
    mixture += trace_.weights_used[e] * deriv * trace_.expert_preds[e];
  }
  for (std::size_t e = 0; e < experts_.size(); ++e) {
    regrets[e] = mixture - deriv * trace_.expert_preds[e];
  }
  weights_.update(regrets);

  // Coefficient layer: clipped updates on the active support only.
  trace_.deltas.assign(experts_.size(), ExpertDelta{});
  for (std::size_t e = 0; e < experts_.size(); ++e) {
    ExpertRecord& expert = experts_[e];
    const auto actives =
        coefficient_gradients(expert, basis_, trace_.x, deriv, grad_bound_);
    for (const auto& a : actives) {
      if (a.bound == 0.0 || a.gradient == 0.0) continue;
      const double clip_bound = a.bound + expert.margin;
      const double gbar = clip(a.gradient, clip_bound);
      auto& learner = expert.learners[static_cast<std::size_t>(a.flat)];
      learner.update(gbar, clip_bound);
      ++coefficient_updates_;
      const double fresh = learner.predict();
      const double old = expert.coefficients[static_cast<std::size_t>(a.flat)];
      if (fresh != old) {
        expert.coefficients[static_cast<std::size_t>(a.flat)] = fresh;
        trace_.deltas[e].entries.emplace_back(a.flat, fresh - old);
      }
    }
  }
  t_ += 1;
  pending_ = false;
}

double OnlineWaveletRegressor::step(const double* x, double y) {
  const double out = predict(x);
  update(y);
  return out;
}

namespace {

nlohmann::json bettor_to_json(const CoinBettor& b) {
  const auto s = b.snapshot();
  return nlohmann::json::array({s.c1, s.radius, s.wealth, s.grad_max, s.sum_norm,
                                s.sum_sq_norm, s.sum_surr, s.sum_sq_surr,
                                s.capital_in, s.iterate, s.rounds});
}

CoinBettor bettor_from_json(const nlohmann::json& j) {
  CoinBettor::Snapshot s;
  s.c1 = j.at(0).get<double>();
  s.radius = j.at(1).get<double>();
  s.wealth = j.at(2).get<double>();
  s.grad_max = j.at(3).get<double>();
  s.sum_norm = j.at(4).get<double>();
  s.sum_sq_norm = j.at(5).get<double>();
  s.sum_surr = j.at(6).get<double>();
  s.sum_sq_surr = j.at(7).get<double>();
  s.capital_in = j.at(8).get<double>();
  s.iterate = j.at(9).get<double>();
  s.rounds = j.at(10).get<std::int64_t>();
  return CoinBettor::restore(s);
}

}  // namespace

std::string OnlineWaveletRegressor::checkpoint() const {
  if (pending_) {
    throw std::logic_error("regression: cannot checkpoint mid-round");
  }
  nlohmann::json j;
  j["config"] = detail::regression_config_to_json(config_);
  j["config_digest"] =
      fnv1a_hex(detail::canonical_dump(detail::regression_config_to_json(config_)));
  j["margin_grid"] = grid_.margins;
  j["margin_grid_mode"] =
      grid_.mode == MarginGrid::Mode::integer ? "integer" : "geometric";
  j["t"] = t_;
  j["coefficient_updates"] = coefficient_updates_;

  const auto ws = weights_.snapshot();
  j["weights"] = {{"log_potential", ws.log_potential}, {"range", ws.range},
                  {"var", ws.var},                     {"cum_regret", ws.cum_regret},
                  {"w", ws.weights},                   {"global_range", ws.global_range},
                  {"rounds", ws.rounds}};

  nlohmann::json experts = nlohmann::json::array();
  for (const auto& e : experts_) {
    nlohmann::json je;
    je["j0"] = e.j0;
    je["margin"] = e.margin;
    je["init_alpha"] = e.init_alpha;
    je["tree"] = nlohmann::json::parse(tree_to_json(e.tree_view()));
    nlohmann::json learners = nlohmann::json::array();
    for (const auto& b : e.learners) learners.push_back(bettor_to_json(b));
    je["learners"] = std::move(learners);
    experts.push_back(std::move(je));
  }
  j["experts"] = std::move(experts);
  return j.dump();
}

namespace detail {

nlohmann::json regression_config_to_json(const RegressionConfig& config) {
  nlohmann::json j;
  j["B"] = config.besov_radius;
  j["J0"] = config.max_start_scale;
  j["J"] = config.depth;
  j["T"] = config.horizon;
  j["d"] = config.d;
  j["grid_mode"] = config.grid_mode == GridMode::zero_init   ? "zero_init"
                   : config.grid_mode == GridMode::coarse_grid ? "coarse_grid"
                                                               : "paper_grid";
  j["margin_mode"] =
      config.margin_mode == MarginGrid::Mode::integer ? "integer" : "geometric";
  j["G"] = config.grad_bound;
  j["kappa"] = config.kappa;
  j["sigma0"] = config.sigma0;
  j["expert_cap"] = config.expert_cap;
  return j;
}

RegressionConfig regression_config_from_json(const nlohmann::json& j) {
  RegressionConfig c;
  c.besov_radius = j.value("B", c.besov_radius);
  c.max_start_scale = j.value("J0", c.max_start_scale);
  c.depth = j.value("J", c.depth);
  c.horizon = j.value("T", c.horizon);
  c.d = j.value("d", c.d);
  if (j.contains("grid_mode")) {
    const auto mode = j.at("grid_mode").get<std::string>();
    if (mode == "zero_init") {
      c.grid_mode = GridMode::zero_init;
    } else if (mode == "coarse_grid") {
      c.grid_mode = GridMode::coarse_grid;
    } else if (mode == "paper_grid") {
      c.grid_mode = GridMode::paper_grid;
    } else {
      throw std::invalid_argument("regression: unknown grid_mode '" + mode + "'");
    }
  }
  if (j.contains("margin_mode")) {
    const auto mode = j.at("margin_mode").get<std::string>();
    if (mode == "integer") {
      c.margin_mode = MarginGrid::Mode::integer;
    } else if (mode == "geometric") {
      c.margin_mode = MarginGrid::Mode::geometric;
    } else {
      throw std::invalid_argument("regression: unknown margin_mode '" + mode + "'");
    }
  }
  c.grad_bound = j.value("G", c.grad_bound);
  c.kappa = j.value("kappa", c.kappa);
  c.sigma0 = j.value("sigma0", c.sigma0);
  c.expert_cap = j.value("expert_cap", c.expert_cap);
  c.validate();
  return c;
}

}  // namespace detail

OnlineWaveletRegressor OnlineWaveletRegressor::restore(const std::string& text,
                                                       const HaarBasis& basis) {
  const nlohmann::json j = nlohmann::json::parse(text);
  const RegressionConfig config =
      detail::regression_config_from_json(j.at("config"));
  MarginGrid grid;
  grid.margins = j.at("margin_grid").get<std::vector<double>>();
  grid.mode = j.at("margin_grid_mode").get<std::string>() == "integer"
                  ? MarginGrid::Mode::integer
                  : MarginGrid::Mode::geometric;
  OnlineWaveletRegressor reg(config, basis, std::move(grid));
  reg.t_ = j.at("t").get<std::int64_t>();
  reg.coefficient_updates_ = j.at("coefficient_updates").get<std::int64_t>();

  const auto& jw = j.at("weights");
  ExpertWeights::Snapshot ws;
  ws.log_potential = jw.at("log_potential").get<std::vector<double>>();
  ws.range = jw.at("range").get<std::vector<double>>();
  ws.var = jw.at("var").get<std::vector<double>>();
  ws.cum_regret = jw.at("cum_regret").get<std::vector<double>>();
  ws.weights = jw.at("w").get<std::vector<double>>();
  ws.global_range = jw.at("global_range").get<double>();
  ws.rounds = jw.at("rounds").get<std::int64_t>();
  reg.weights_ = ExpertWeights::restore(ws);

  const auto& je = j.at("experts");
  if (je.size() != reg.experts_.size()) {
    throw std::invalid_argument("regression: checkpoint expert count mismatch");
  }
  for (std::size_t e = 0; e < reg.experts_.size(); ++e) {
    auto& expert = reg.experts_[e];
    const auto& src = je.at(e);
    if (src.at("j0").get<int>() != expert.j0) {
      throw std::invalid_argument("regression: checkpoint expert layout mismatch");
    }
    expert.margin = src.at("margin").get<double>();
    expert.init_alpha = src.at("init_alpha").get<std::vector<double>>();
    const CoefficientTree tree = tree_from_json(src.at("tree").dump());
    expert.coefficients = tree.flatten();
    const auto& learners = src.at("learners");
    if (learners.size() != expert.learners.size()) {
      throw std::invalid_argument("regression: checkpoint learner count mismatch");
    }
    for (std::size_t i = 0; i < expert.learners.size(); ++i) {
      expert.learners[i] = bettor_from_json(learners.at(i));
    }
  }
  return reg;
}

}  // namespace wavereg
