#include "ivjump/pricing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "ivjump/error.hpp"

namespace ivjump {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_pdf(double x) {
  return std::exp(-0.5 * x * x) * (0.5 * std::numbers::inv_sqrtpi * std::numbers::sqrt2);
}

double bs_price(const BsInputs& in) {
  const double df_q = std::exp(-in.dividend * in.maturity);
  const double df_r = std::exp(-in.rate * in.maturity);
  const double fwd_s = in.spot * df_q;
  const double pv_k = in.strike * df_r;
  const double sd = in.vol * std::sqrt(in.maturity);
  if (sd <= 0.0) {
    return in.right == Right::Call ? std::max(fwd_s - pv_k, 0.0) : std::max(pv_k - fwd_s, 0.0);
  }
  const double d1 = std::log(fwd_s / pv_k) / sd + 0.5 * sd;
  const double d2 = d1 - sd;
  if (in.right == Right::Call) return fwd_s * normal_cdf(d1) - pv_k * normal_cdf(d2);
  return pv_k * normal_cdf(-d2) - fwd_s * normal_cdf(-d1);
}

double bs_vega(const BsInputs& in) {
  const double sqrt_t = std::sqrt(in.maturity);
  const double sd = in.vol * sqrt_t;
  if (sd <= 0.0) return 0.0;
  const double fwd_s = in.spot * std::exp(-in.dividend * in.maturity);
  const double pv_k = in.strike * std::exp(-in.rate * in.maturity);
  const double d1 = std::log(fwd_s / pv_k) / sd + 0.5 * sd;
  return fwd_s * normal_pdf(d1) * sqrt_t;
}

std::pair<double, double> price_bounds(const BsInputs& in) {
  const double fwd_s = in.spot * std::exp(-in.dividend * in.maturity);
  const double pv_k = in.strike * std::exp(-in.rate * in.maturity);
  if (in.right == Right::Call) return {std::max(fwd_s - pv_k, 0.0), fwd_s};
  return {std::max(pv_k - fwd_s, 0.0), pv_k};
}

double implied_vol(double price, double spot, double strike, double maturity, double rate,
                   double dividend, Right right) {
  BsInputs in{spot, strike, maturity, rate, dividend, 0.0, right};
  const auto [lower, upper] = price_bounds(in);
  if (!(price > lower) || !(price < upper)) {
    throw Error(ErrorCode::PriceOutOfBounds, "price outside no-arbitrage bounds");
  }

  // Discount factors and log-moneyness do not depend on vol; hoist them.
  const double fwd_s = spot * std::exp(-dividend * maturity);
  const double pv_k = strike * std::exp(-rate * maturity);
  const double log_fk = std::log(fwd_s / pv_k);
  const double sqrt_t = std::sqrt(maturity);
  auto price_vega = [&](double vol) -> std::pair<double, double> {
    const double sd = vol * sqrt_t;
    const double d1 = log_fk / sd + 0.5 * sd;
    const double d2 = d1 - sd;
    const double p = right == Right::Call ? fwd_s * normal_cdf(d1) - pv_k * normal_cdf(d2)
                                          : pv_k * normal_cdf(-d2) - fwd_s * normal_cdf(-d1);
    return {p, fwd_s * normal_pdf(d1) * sqrt_t};
  };

  // Below the lower bound is already excluded, so only the top of the
  // bracket needs checking.
  double lo = kMinVol;
  double hi = kMaxVol;
  if (price_vega(hi).first - price <= 0.0) {
    throw Error(ErrorCode::PriceOutOfBounds, "price not attainable for vol in (1e-6, 5)");
  }

  // Start from the ATM approximation, clamped inside the bracket.
  const double time_value = price - lower;
  double vol = std::clamp(time_value / (spot * std::sqrt(maturity / (2.0 * std::numbers::pi))),
                          0.05, 1.0);
  for (int iter = 0; iter < 200; ++iter) {
    const auto [p, vega] = price_vega(vol);
    const double f = p - price;
    if (f == 0.0) return vol;
    if (f < 0.0) {
      lo = vol;
    } else {
      hi = vol;
    }
    // Converged once the Newton correction is negligible or f is at the
    // rounding floor of the price itself.
    if (std::abs(f) <= 1e-10 && vega > 0.0 &&
        std::abs(f) <= std::max(1e-12 * vega, 8.0 * std::numeric_limits<double>::epsilon() * price)) {
      return vol;
    }
    double next = vega > 0.0 ? vol - f / vega : lo - 1.0;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double step = std::abs(next - vol);
    vol = next;
    if (step <= 1e-15 * std::max(1.0, vol) || hi - lo <= 1e-15) {
      in.vol = vol;
      if (std::abs(bs_price(in) - price) <= 1e-10) return vol;
    }
  }
  throw Error(ErrorCode::NoConvergence, "implied vol did not converge in 200 iterations");
}

double implied_dividend_yield(double call_mid, double put_mid, double spot, double strike,
                              double maturity, double rate) {
  const double arg = (call_mid - put_mid + strike * std::exp(-rate * maturity)) / spot;
  if (!(arg > 0.0) || !(maturity > 0.0)) {
    throw Error(ErrorCode::ParityDegenerate, "nonpositive put-call-parity log argument");
  }
  return -std::log(arg) / maturity;
}

double atm_price_approx(double spot, double vol, double maturity) {
  return spot * vol * std::sqrt(maturity / (2.0 * std::numbers::pi));
}

double atm_relative_return_pct(double dvol, double base_vol) { return 100.0 * dvol / base_vol; }

}  // namespace ivjump
