#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "ivjump/jumps.hpp"
#include "ivjump/marketdata.hpp"

namespace ivjump::testing {

// Consecutive weekdays starting 2010-01-04.
inline std::vector<Date> weekdays(std::size_t n) {
  std::vector<Date> out;
  for (Date d{2010, 1, 4}; out.size() < n; d = d.plus_days(1)) {
    if (!d.is_weekend()) out.push_back(d);
  }
  return out;
}

// Geometric Brownian minute prices, i.i.d. N(0, sd) log-returns including
// the overnight one.
inline UnderlyingPanel brownian_panel(std::size_t days, std::uint64_t seed, double sd = 4e-4) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, sd);
  UnderlyingPanel p;
  p.days = weekdays(days);
  p.prices.resize(days);
  double log_s = std::log(1000.0);
  for (auto& day : p.prices) {
    for (auto& px : day) {
      log_s += z(rng);
      px = std::exp(log_s);
    }
  }
  return p;
}

inline Completeness complete(const std::vector<Date>& days) {
  Completeness c;
  c.days = days;
  c.missing.assign(days.size(), {});
  return c;
}

}  // namespace ivjump::testing
