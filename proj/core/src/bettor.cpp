#include "wavereg/bettor.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace wavereg {

namespace {
bool finite(double x) { return std::isfinite(x); }

// Wealth saturates here so arbitrarily long winning streaks cannot
// overflow; predictions clamp to [-C, C] long before this matters.
constexpr double kWealthCap = 1e150;
}  // namespace

CoinBettor::CoinBettor(double c1, double radius, double initial_wealth)
    : c1_(c1), radius_(radius) {
  if (!finite(c1) || !finite(radius) || radius <= 0.0) {
    throw std::invalid_argument("bettor: constraint radius must be finite and > 0");
  }
  if (std::abs(c1) > radius) {
    throw std::invalid_argument("bettor: |c1| must not exceed the radius");
  }
  if (initial_wealth > 0.0) {
    if (!finite(initial_wealth)) {
      throw std::invalid_argument("bettor: initial wealth must be finite");
    }
    wealth_ = initial_wealth;
  } else {
    wealth_ = radius_;
  }
  iterate_ = c1_;
}

double CoinBettor::predict() const {
  return std::clamp(iterate_, -radius_, radius_);
}

void CoinBettor::update(double g, double g_hint) {
  if (!finite(g) || !finite(g_hint) || g_hint < 0.0) {
    throw std::invalid_argument("bettor: gradient and hint must be finite, hint >= 0");
  }
  if (std::abs(g) > g_hint) {
    throw std::invalid_argument("bettor: |g| exceeds its hint (clipping bug upstream)");
  }
  if (g_hint == 0.0) {
    return;  // zero-bound rounds do not count
  }

  const double v = iterate_ - c1_;
  const double s =
      std::abs(iterate_) <= radius_ ? g : std::abs(g) * (iterate_ > 0.0 ? 1.0 : -1.0);

  if (g_hint > grad_max_) {
    capital_in_ += wealth_ * (g_hint - grad_max_);
    grad_max_ = g_hint;
  }

  const double z = s / grad_max_;  // |z| <= 1
  wealth_ -= z * v;                // v = beta * wealth, so wealth stays > 0
  if (wealth_ > kWealthCap) {
    // withdraw the excess; the duality identity keeps holding because
    // both capital_in_ and wealth_ * grad_max_ drop by the same amount
    capital_in_ -= (wealth_ - kWealthCap) * grad_max_;
    wealth_ = kWealthCap;
  }
  sum_norm_ += z;
  sum_sq_norm_ += z * z;
  sum_surr_ += s;
  sum_sq_surr_ += s * s;
  rounds_ += 1;

  const double beta =
      std::clamp(-sum_norm_ / static_cast<double>(rounds_ + 1), -0.5, 0.5);
  iterate_ = c1_ + beta * wealth_;
}

CoinBettor::Snapshot CoinBettor::snapshot() const {
  return Snapshot{c1_,      radius_,      wealth_,     grad_max_,
                  sum_norm_, sum_sq_norm_, sum_surr_,   sum_sq_surr_,
                  capital_in_, iterate_,   rounds_};
}

CoinBettor CoinBettor::restore(const Snapshot& snap) {
  CoinBettor b(snap.c1, snap.radius);
  b.wealth_ = snap.wealth;
  b.grad_max_ = snap.grad_max;
  b.sum_norm_ = snap.sum_norm;
  b.sum_sq_norm_ = snap.sum_sq_norm;
  b.sum_surr_ = snap.sum_surr;
  b.sum_sq_surr_ = snap.sum_sq_surr;
  b.capital_in_ = snap.capital_in;
  b.iterate_ = snap.iterate;
  b.rounds_ = snap.rounds;
  return b;
}

double CoinBettor::xi1() const {
  return 2.0 * std::sqrt(std::log1p(sum_sq_norm_) + 1.0);
}

RegretCertificate CoinBettor::regret_certificate(
    double c, std::span<const double> grads) const {
  if (!finite(c) || std::abs(c) > radius_) {
    throw std::invalid_argument("bettor: comparator outside [-C, C]");
  }
  double sum_sq = 0.0;
  for (double g : grads) sum_sq += g * g;

  RegretCertificate cert;
  cert.xi1 = xi1();
  cert.xi2 = xi2();

  const double envelope = cert.xi1 * std::sqrt(sum_sq) + cert.xi2 * grad_max_;
  cert.scaled = std::abs(c - c1_) * envelope;

  // Exact duality remainder plus the drift correction that keeps the
  // certificate valid when |sum_t s_t| outruns the envelope.
  const double duality = std::max(0.0, capital_in_ - wealth_ * grad_max_);
  const double drift =
      2.0 * radius_ * std::max(0.0, std::abs(sum_surr_) - envelope);
  cert.slack = duality + drift;

  const double cushion = 1e-10 * (1.0 + cert.scaled + cert.slack);
  cert.bound = cert.scaled + cert.slack + cushion;
  return cert;
}

}  // namespace wavereg
