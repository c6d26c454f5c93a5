#pragma once

// European Black-Scholes pricing with continuous dividend yield, implied
// volatility inversion, put-call-parity yield extraction, and the
// at-the-money linear price approximation.

#include "ivjump/marketdata.hpp"

namespace ivjump {

struct BsInputs {
  double spot = 0.0;      // S > 0
  double strike = 0.0;    // K > 0
  double maturity = 0.0;  // tau > 0, years
  double rate = 0.0;      // continuously compounded
  double dividend = 0.0;  // continuous yield q
  double vol = 0.0;       // annualized, >= 0
  Right right = Right::Call;
};

inline constexpr double kMinVol = 1e-6;
inline constexpr double kMaxVol = 5.0;

double normal_cdf(double x);
double normal_pdf(double x);

double bs_price(const BsInputs& in);
double bs_vega(const BsInputs& in);

/// No-arbitrage price bounds (lower, upper) for the option described by `in`
/// (the `vol` field is ignored).
std::pair<double, double> price_bounds(const BsInputs& in);

/// Inverts `bs_price` for sigma in (kMinVol, kMaxVol). Bracketed bisection
/// with safeguarded Newton steps; at most 200 iterations.
/// Throws Error(PriceOutOfBounds) or Error(NoConvergence).
double implied_vol(double price, double spot, double strike, double maturity, double rate,
                   double dividend, Right right);

/// q = -(1/tau) ln((C - P + K e^{-r tau}) / S). Throws Error(ParityDegenerate).
double implied_dividend_yield(double call_mid, double put_mid, double spot, double strike,
                              double maturity, double rate);

/// c = S sigma sqrt(tau / 2pi).
double atm_price_approx(double spot, double vol, double maturity);

/// Approximate relative ATM option return for a vol change, in percent:
/// 100 * dvol / base_vol (both in the same units).
double atm_relative_return_pct(double dvol, double base_vol);

}  // namespace ivjump
