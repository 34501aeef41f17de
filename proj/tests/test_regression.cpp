#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "wavereg/batch.hpp"
#include "wavereg/regression.hpp"
#include "wavereg/rng.hpp"

using namespace wavereg;

namespace {

MarginGrid singleton_grid() {
  MarginGrid grid;
  grid.margins = {0.0};
  return grid;
}

MarginGrid grid_of(std::vector<double> margins) {
  MarginGrid grid;
  grid.margins = std::move(margins);
  return grid;
}

RegressionConfig small_config(std::int64_t horizon, int depth, int j0_max = 0) {
  RegressionConfig c;
  c.besov_radius = 1.0;
  c.horizon = horizon;
  c.depth = depth;
  c.max_start_scale = j0_max;
  return c;
}

}  // namespace

TEST_CASE("diameters follow B 2^{-jd/2}") {
  CHECK(diameters(3, 2.0, 1) == doctest::Approx(0.70711).epsilon(1e-4));
  CHECK(diameters(0, 1.0, 1) == 1.0);
  CHECK(diameters(0, 1.0, 2) == 1.0);
  for (int j = 0; j < 6; ++j) {
    CHECK(diameters(j + 1, 2.0, 1) / diameters(j, 2.0, 1) ==
          doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-14));
    CHECK(diameters(j + 1, 2.0, 2) / diameters(j, 2.0, 2) ==
          doctest::Approx(0.5).epsilon(1e-14));
  }
  CHECK_THROWS_AS(diameters(-1, 1.0, 1), std::invalid_argument);
}

TEST_CASE("sup-norm bounds and the derivative bound they imply") {
  const HaarBasis basis = HaarBasis::make(1);
  const auto b = sup_norm_bounds(1.0, 2, 0.5, basis);
  CHECK(b.predictor_sup == 3.0);
  CHECK(b.target_sup == doctest::Approx(3.4142).epsilon(1e-4));
  CHECK(b.grad_bound == doctest::Approx(12.8284).epsilon(1e-4));

  const auto zero = sup_norm_bounds(0.0, 2, 0.5, basis);
  CHECK(zero.target_sup == 0.0);
  CHECK(zero.predictor_sup == 0.0);
  CHECK(zero.grad_bound == 0.0);

  // kappa -> infinity limit with a single level: both bounds collapse to B M
  const auto tight = sup_norm_bounds(1.0, 0, 60.0, basis);
  CHECK(tight.predictor_sup == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(tight.target_sup == doctest::Approx(1.0).epsilon(1e-12));
  CHECK_THROWS_AS(sup_norm_bounds(1.0, 2, 0.0, basis), std::invalid_argument);
}

TEST_CASE("scaling grids per mode") {
  const HaarBasis basis = HaarBasis::make(1);
  CHECK(scaling_grid(0, 100, 5.0, basis, GridMode::zero_init) ==
        std::vector<double>{0.0});
  CHECK(scaling_grid(3, 100, 5.0, basis, GridMode::zero_init) ==
        std::vector<double>{0.0});

  // paper grid: j0 = 0, sup bound 1, T = 16 -> 9 points spanning [-1, 1]
  const auto paper = scaling_grid(0, 16, 1.0, basis, GridMode::paper_grid);
  REQUIRE(paper.size() == 9);
  CHECK(paper.front() == doctest::Approx(-1.0).epsilon(1e-14));
  CHECK(paper.back() == doctest::Approx(1.0).epsilon(1e-14));
  for (std::size_t i = 1; i < paper.size(); ++i) {
    CHECK(paper[i] - paper[i - 1] == doctest::Approx(0.25).epsilon(1e-14));
  }

  // range shrinks by 2^{-d/2} per start-scale increment
  for (int j0 = 0; j0 < 4; ++j0) {
    const auto a = scaling_grid(j0, 64, 1.0, basis, GridMode::paper_grid);
    const auto b = scaling_grid(j0 + 1, 64, 1.0, basis, GridMode::paper_grid);
    CHECK(b.back() / a.back() == doctest::Approx(std::pow(2.0, -0.5)).epsilon(1e-12));
  }

  const auto coarse = scaling_grid(0, 1000, 1.0, basis, GridMode::coarse_grid);
  CHECK(coarse.size() <= 9);
  CHECK(coarse.size() >= 3);
  CHECK(std::find(coarse.begin(), coarse.end(), 0.0) != coarse.end());
}

TEST_CASE("expert set counts follow the (j0, init, margin) product") {
  const HaarBasis basis = HaarBasis::make(1);

  auto config = small_config(16, 2, 0);
  CHECK(build_expert_set(config, basis, singleton_grid()).size() == 1);

  config = small_config(16, 2, 2);
  CHECK(build_expert_set(config, basis, grid_of({0, 1, 2, 3, 4})).size() == 15);

  // product count against the documented per-level grids (clamped into
  // the level diameter and deduplicated)
  config = small_config(16, 2, 1);
  config.grid_mode = GridMode::paper_grid;
  const auto margins = grid_of({0, 1, 2});
  const auto bounds = sup_norm_bounds(config.besov_radius, 2, config.kappa, basis);
  std::size_t expected = 0;
  for (int j0 = 0; j0 <= 1; ++j0) {
    auto grid = scaling_grid(j0, 16, bounds.target_sup, basis, config.grid_mode);
    const double radius = diameters(j0, config.besov_radius, 1);
    for (auto& a : grid) a = std::clamp(a, -radius, radius);
    std::sort(grid.begin(), grid.end());
    grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
    expected += grid.size() * margins.size();
  }
  const auto experts = build_expert_set(config, basis, margins);
  CHECK(experts.size() == expected);
  for (const auto& e : experts) {
    for (std::size_t i = 0; i < e.coefficients.size(); ++i) {
      const auto dec = e.layout.decode(static_cast<std::int64_t>(i));
      if (dec.kind == BasisKind::detail) {
        CHECK(e.coefficients[i] == 0.0);  // details start at zero
      }
    }
  }
}

TEST_CASE("expert cap is enforced with guidance") {
  const HaarBasis basis = HaarBasis::make(1);
  auto config = small_config(4096, 2, 1);
  config.grid_mode = GridMode::paper_grid;
  config.expert_cap = 10;
  CHECK_THROWS_WITH_AS(static_cast<void>(build_expert_set(config, basis)),
                       doctest::Contains("zero_init"), std::invalid_argument);
}

TEST_CASE("loss derivative") {
  CHECK(loss_derivative(0.5, 1.0) == -1.0);
  CHECK(loss_derivative(0.7, 0.7) == 0.0);
  CHECK(loss_derivative(-1.0, 2.0) == -6.0);
}

TEST_CASE("coefficient gradients: support, chain rule and bounds") {
  const HaarBasis basis = HaarBasis::make(1);
  const auto config = small_config(64, 3);
  const auto experts = build_expert_set(config, basis, singleton_grid());
  const ExpertRecord& expert = experts[0];

  const double x = 0.3;
  const auto zero = coefficient_gradients(expert, basis, &x, 0.0, 10.0);
  CHECK(zero.size() == 5);  // one scaling + one detail per level (J+1 = 4)
  for (const auto& a : zero) CHECK(a.gradient == 0.0);

  const auto grads = coefficient_gradients(expert, basis, &x, -2.0, 10.0);
  CHECK(grads.size() == 5);
  CHECK(grads[0].kind == BasisKind::scaling);
  CHECK(grads[0].gradient == -2.0);        // phi_{0,0}(x) = 1
  CHECK(grads[0].bound == 10.0);
  for (const auto& a : grads) {
    CHECK(a.gradient == -2.0 * a.basis_value);
    CHECK(a.bound == 10.0 * std::abs(a.basis_value));
  }
}

TEST_CASE("coefficient gradients match central finite differences") {
  SplitMix64 rng(61, 0);
  const HaarBasis basis = HaarBasis::make(1);
  auto config = small_config(256, 4);
  OnlineWaveletRegressor reg(config, basis, grid_of({0.0, 1.0}));

  // run a short noisy stream to move the state off its init
  for (int t = 0; t < 200; ++t) {
    const double x = rng.next_double();
    reg.step(&x, (x < 0.4 ? 0.6 : -0.2) + 0.3 * rng.next_gaussian());
  }

  for (int trial = 0; trial < 100; ++trial) {
    const double x = rng.next_double();
    const double y = 2.0 * rng.next_double() - 1.0;
    const double yhat = reg.predict(&x);
    reg.update(y);
    const double deriv = loss_derivative(yhat, y);
    for (std::size_t e = 0; e < reg.expert_count(); ++e) {
      const auto actives =
          coefficient_gradients(reg.expert(e), basis, &x, deriv, reg.grad_bound());
      for (const auto& a : actives) {
        // full squared loss as a function of this coefficient
        auto loss_at = [&](double c) {
          const double c0 = reg.expert(e).coefficients[static_cast<std::size_t>(a.flat)];
          const double pred = yhat + (c - c0) * a.basis_value;
          return (pred - y) * (pred - y);
        };
        const double c0 = reg.expert(e).coefficients[static_cast<std::size_t>(a.flat)];
        const double h = 1e-6 * std::max(1.0, std::abs(c0));
        const double fd = (loss_at(c0 + h) - loss_at(c0 - h)) / (2.0 * h);
        const double scale = std::max({1e-12, std::abs(fd), std::abs(a.gradient)});
        CHECK(std::abs(fd - a.gradient) / scale <= 1e-6);
      }
    }
  }
}

TEST_CASE("zero derivative moves nothing") {
  const HaarBasis basis = HaarBasis::make(1);
  auto config = small_config(64, 2);
  OnlineWaveletRegressor reg(config, basis, grid_of({0.0, 1.0}));

  const double x = 0.42;
  const double yhat = reg.predict(&x);
  reg.update(yhat);  // label equals the prediction
  const auto& trace = reg.last_round();
  for (const auto& delta : trace.deltas) CHECK(delta.entries.empty());
  for (double w : reg.expert_weights().weights()) {
    CHECK(w == doctest::Approx(0.5).epsilon(1e-15));
  }
}

TEST_CASE("identical experts keep uniform weights forever") {
  SplitMix64 rng(62, 0);
  const HaarBasis basis = HaarBasis::make(1);
  auto config = small_config(128, 2);
  OnlineWaveletRegressor reg(config, basis, grid_of({1.0, 1.0, 1.0}));
  for (int t = 0; t < 128; ++t) {
    const double x = rng.next_double();
    reg.step(&x, (x < 0.5 ? 0.25 : -0.25) + 0.5 * rng.next_gaussian());
    for (double w : reg.expert_weights().weights()) {
      CHECK(w == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
    }
  }
}

TEST_CASE("single expert on a constant target converges") {
  const HaarBasis basis = HaarBasis::make(1);
  auto config = small_config(4096, 0);
  OnlineWaveletRegressor reg(config, basis, singleton_grid());
  CHECK(reg.expert_count() == 1);

  SplitMix64 rng(63, 0);
  const double c = 0.5;
  double yhat = 0.0;
  for (int t = 0; t < 4096; ++t) {
    const double x = rng.next_double();
    yhat = reg.step(&x, c);
  }
  CHECK(std::abs(yhat - c) <= 5.0 / std::sqrt(4096.0));
}

TEST_CASE("coefficient containment and predictor boundedness") {
  SplitMix64 rng(64, 0);
  const HaarBasis basis = HaarBasis::make(1);
  auto config = small_config(512, 3);
  OnlineWaveletRegressor reg(config, basis, grid_of({0.0, 1.0}));
  for (int t = 0; t < 512; ++t) {
    const double x = rng.next_double();
    const double y = (x < 0.3 ? 1.0 : -1.0) + rng.next_gaussian();
    reg.step(&x, y);
    if (t % 64 != 0) continue;
    for (std::size_t e = 0; e < reg.expert_count(); ++e) {
      const auto& expert = reg.expert(e);
      double sup = 0.0;
      for (int i = 0; i < 256; ++i) {
        const double xx = (i + 0.5) / 256.0;
        sup = std::max(sup, std::abs(expert.predict(basis, &xx)));
      }
      CHECK(sup <=
            (config.depth + 1) * config.besov_radius * basis.m_phi + 1e-9);
      for (std::size_t i = 0; i < expert.coefficients.size(); ++i) {
        const auto dec = expert.layout.decode(static_cast<std::int64_t>(i));
        const double radius = diameters(dec.level, config.besov_radius, 1);
        CHECK(std::abs(expert.coefficients[i]) <= radius + 1e-12);
      }
    }
  }
}

TEST_CASE("work per round equals the active-support size") {
  SplitMix64 rng(65, 0);
  const HaarBasis basis = HaarBasis::make(1);
  for (int depth : {2, 6}) {
    auto config = small_config(128, depth);
    OnlineWaveletRegressor reg(config, basis, grid_of({0.0, 1.0}));
    for (int t = 0; t < 128; ++t) {
      const double x = rng.next_double();
      reg.step(&x, rng.next_gaussian());  // labels almost surely off-prediction
    }
    // (J + 2) coefficients per expert per round, independent of 2^J
    CHECK(reg.coefficient_updates() ==
          128 * static_cast<std::int64_t>(reg.expert_count()) * (depth + 2));
  }
}

TEST_CASE("prediction-before-label is enforced by the interface") {
  const HaarBasis basis = HaarBasis::make(1);
  auto config = small_config(16, 1);
  OnlineWaveletRegressor reg(config, basis, singleton_grid());
  CHECK_THROWS_AS(reg.update(0.0), std::logic_error);
  const double x = 0.5;
  reg.predict(&x);
  CHECK_THROWS_AS(reg.predict(&x), std::logic_error);
  reg.update(0.1);
  CHECK_NOTHROW(reg.predict(&x));
}

TEST_CASE("checkpoint restores bit-identically") {
  SplitMix64 rng(66, 0);
  const HaarBasis basis = HaarBasis::make(1);
  auto config = small_config(256, 3);
  OnlineWaveletRegressor a(config, basis, grid_of({0.0, 1.0}));

  std::vector<double> xs, ys;
  for (int t = 0; t < 100; ++t) {
    xs.push_back(rng.next_double());
    ys.push_back(rng.next_gaussian());
    a.step(&xs.back(), ys.back());
  }
  const std::string snap = a.checkpoint();
  OnlineWaveletRegressor b = OnlineWaveletRegressor::restore(snap, basis);
  CHECK(b.round() == a.round());

  for (int t = 0; t < 100; ++t) {
    const double x = rng.next_double();
    const double y = rng.next_gaussian();
    const double pa = a.step(&x, y);
    const double pb = b.step(&x, y);
    CHECK(pa == pb);
  }
  for (std::size_t e = 0; e < a.expert_count(); ++e) {
    CHECK(a.expert(e).coefficients == b.expert(e).coefficients);
  }
  CHECK(a.checkpoint() == b.checkpoint());
}

TEST_CASE("noiseless constant target: empirical regret vs the bettor certificate") {
  // With squared loss on f = c and a single expert, the cumulative
  // empirical regret equals half the coordinate learners' linear regret
  // against the comparator (c, 0), so the coordinate certificates bound it.
  const HaarBasis basis = HaarBasis::make(1);
  auto config = small_config(2048, 0);
  OnlineWaveletRegressor reg(config, basis, singleton_grid());

  SplitMix64 rng(67, 0);
  const double c = 0.5;
  double cum_regret = 0.0;
  std::vector<double> alpha_grads, beta_grads;
  for (int t = 0; t < 2048; ++t) {
    const double x = rng.next_double();
    const double yhat = reg.predict(&x);
    reg.update(c);
    cum_regret += (yhat - c) * (yhat - c);
    const double deriv = loss_derivative(yhat, c);
    const auto actives =
        coefficient_gradients(reg.expert(0), basis, &x, deriv, reg.grad_bound());
    for (const auto& a : actives) {
      const double clipped = clip(a.gradient, a.bound);
      if (a.kind == BasisKind::scaling) {
        alpha_grads.push_back(clipped);
      } else {
        beta_grads.push_back(clipped);
      }
    }
  }
  const auto cert_alpha = reg.expert(0).learners[0].regret_certificate(c, alpha_grads);
  const auto cert_beta = reg.expert(0).learners[1].regret_certificate(0.0, beta_grads);
  CHECK(cum_regret <= 0.5 * (cert_alpha.bound + cert_beta.bound));
}

TEST_CASE("config depth default follows the horizon and is capped") {
  auto config = small_config(16384, -1);
  config.sigma0 = 0.1;
  const int depth = config.effective_depth();
  // ceil( (1/(3 kappa)) log2(T B^2 / sigma0^2) ) with kappa = 0.5
  const int expected = static_cast<int>(
      std::ceil(2.0 / 3.0 * std::log2(16384.0 / 0.01)));
  CHECK(depth == expected);
  const TreeLayout layout{0, depth, 1};
  CHECK(layout.flat_size() <= (std::int64_t{1} << 20));
}
