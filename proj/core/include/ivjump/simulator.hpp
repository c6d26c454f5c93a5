#pragma once

// Synthetic minute market with jumps and a planted IV response, used as
// ground truth for the end-to-end pipeline.

#include <cstdint>
#include <ostream>
#include <vector>

#include "ivjump/marketdata.hpp"

namespace ivjump {

/// IV reaction to a jump, in vol points; applied with sign opposite to the jump.
struct IvResponse {
  double immediate = 0.0;  // a0, inside the jump minute
  double gradual = 0.0;    // a1, approached with half-life h
  double half_life = 5.0;  // minutes
};

struct SmileShape {
  double level = 0.20;  // decimal vol at m = 1
  double skew = -0.20;
  double curvature = 0.50;
};

struct SimConfig {
  int days = 60;
  std::uint64_t seed = 1;
  Date start_date{2008, 1, 2};
  double spot0 = 1300.0;
  double diffusion_vol = 0.15;   // annualized
  double overnight_scale = 1.0;  // overnight return sd in per-minute sd units
  double jump_intensity = 0.0;   // Poisson jumps per day
  double jump_mean = 0.0;        // log-jump
  double jump_sd = 0.005;
  int planted_jump_days = 0;     // days carrying exactly one forced morning jump
  double planted_jump_size = 10.0;  // in per-minute diffusion sd
  int planted_first_minute = 9 * 60 + 32;
  int planted_last_minute = 10 * 60 + 30;
  SmileShape smile;
  IvResponse positive_response;  // after positive jumps
  IvResponse negative_response;  // after negative jumps
  double iv_noise = 0.03;     // vol points, per-minute random-walk sd
  double day_level_sd = 1.0;  // vol points, per-day level shift sd
  double opening_bump = 0.0;  // vol points at 09:31, decaying with a 10-minute scale
  double rate = 0.02;
  double dividend = 0.015;
  double half_spread = 0.0;
  std::vector<double> maturities{0.25, 0.50, 0.75};
  double moneyness_low = 0.75;
  double moneyness_high = 1.35;
  double moneyness_step = 0.025;
  int quote_first_minute = kSessionOpen;
  int quote_last_minute = 13 * 60 + 30;
  bool generate_quotes = true;

  void validate() const;  // throws Error(ConfigInvalid)
};

struct TruthJump {
  Date day;
  int minute = kSessionOpen;
  int sign = 1;
  double a0 = 0.0;
  double a1 = 0.0;
  double half_life = 0.0;
};

/// -s * (a0 + a1 * (1 - 2^{-t/h})) in vol points.
double planted_response(double minutes_since_jump, int sign, const IvResponse& response);

/// Deterministic per seed; each day draws from its own derived stream, so
/// quotes for any day can be regenerated independently.
class MarketSimulator {
 public:
  explicit MarketSimulator(SimConfig config);

  const SimConfig& config() const { return config_; }
  const std::vector<Date>& days() const { return days_; }
  const std::vector<MinuteBar>& bars() const { return bars_; }
  const UnderlyingPanel& panel() const { return panel_; }
  const std::vector<TruthJump>& truth() const { return truth_; }
  RateCurve rates() const;

  /// Truth IV (decimal) for moneyness m on day index d at session slot.
  double truth_iv(std::size_t day, int slot, double moneyness) const;

  /// Level offset (decimal vol) on top of the smile shape.
  double iv_offset(std::size_t day, int slot) const { return offsets_[day][static_cast<std::size_t>(slot)]; }

  std::vector<OptionQuote> day_quotes(std::size_t day) const;

 private:
  SimConfig config_;
  std::vector<Date> days_;
  std::vector<MinuteBar> bars_;
  UnderlyingPanel panel_;
  std::vector<TruthJump> truth_;
  std::vector<std::array<double, kSessionLength>> offsets_;
  std::vector<double> reference_spot_;  // strikes are set off the prior close
};

struct SimOutput {
  std::vector<MinuteBar> bars;
  std::vector<OptionQuote> quotes;
  RateCurve rates;
  std::vector<TruthJump> truth;
};

SimOutput simulate_market(const SimConfig& config);

void write_truth_log(std::ostream& out, const std::vector<TruthJump>& truth);

}  // namespace ivjump
