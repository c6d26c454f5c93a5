#pragma once

// Post-jump event study: reference-window randomization, cumulative IV
// changes, the indicator regression with an IV-level control, bootstrap
// bands for the reference curves, and reference-redraw summaries.

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "ivjump/jumps.hpp"
#include "ivjump/marketdata.hpp"
#include "ivjump/smilepca.hpp"

namespace ivjump {

inline constexpr std::array<int, 5> kWindows{5, 15, 20, 30, 60};
inline constexpr int kCurveHorizon = 60;

/// One variable on the session grid per day; NaN = missing.
struct SlotSeries {
  std::vector<Date> days;
  std::vector<std::array<double, kSessionLength>> values;

  std::size_t index_of(Date day) const;
};

/// Spreads column `column` of a keyed series over the session grid.
SlotSeries to_slot_series(const KeyedSeries& series, Eigen::Index column = 0);

/// One reference start slot per no-jump day, drawn i.i.d. with replacement
/// from the empirical distribution of jump slots. Deterministic in `seed`.
std::map<Date, int> build_reference_starts(std::span<const Date> no_jump_days,
                                           std::span<const int> jump_slots, std::uint64_t seed);

/// Sum of changes over slots start..start+W-1 (include_first) or
/// start+1..start+W-1. Throws Error(MissingMinutes) if any term is missing.
double cumulative_delta(std::span<const double> day_series, int start, int window, bool include_first);

/// Cumulative path over minutes 0..horizon; entry k holds the sum of the
/// first k changes from `start` (include) or from `start+1` (exclude, so
/// entries 0 and 1 are both zero). nullopt if a needed minute is missing.
std::optional<std::vector<double>> cumulative_curve(std::span<const double> day_series, int start,
                                                    bool include_first, int horizon = kCurveHorizon);

enum class SampleClass { Positive, Negative, Reference };

struct EventSample {
  Date day;
  SampleClass cls = SampleClass::Reference;
  int start_slot = 0;
  int window = 5;
  bool include_first = false;
  double cum_delta = 0.0;
  double iv_bar = 0.0;
};

struct SampleSet {
  std::vector<EventSample> samples;
  std::size_t excluded_positive = 0;
  std::size_t excluded_negative = 0;
  std::size_t excluded_reference = 0;

  std::size_t count(SampleClass cls) const;
};

/// Jump samples start at the labeled jump minute, reference samples at their
/// drawn start. `iv_bar` maps day to the mean ATM-IV level (vol points) over
/// the first hour; days without it are excluded.
SampleSet build_samples(std::span<const DayLabel> labels, const std::map<Date, int>& reference_starts,
                        const SlotSeries& variable, const std::map<Date, double>& iv_bar, int window,
                        bool include_first);

enum class StdErrorKind { Classical, HC1 };

struct RegressionFit {
  // Order: intercept, positive indicator, negative indicator, IV level.
  std::array<double, 4> beta{};
  std::array<double, 4> std_error{};
  std::array<double, 4> p_value{};
  double r_squared = 0.0;
  std::size_t n = 0;
};

/// OLS of cum_delta on [1, I_P, I_N, iv_bar] with two-sided t p-values.
/// Throws Error(RankDeficientDesign).
RegressionFit ols_fit(std::span<const EventSample> samples, StdErrorKind kind = StdErrorKind::Classical);

struct BootstrapBand {
  std::vector<double> lower;
  std::vector<double> upper;
  double level = 0.90;
};

/// For each minute, resample the cross-section of curve values with
/// replacement `draws` times and take the (1-level)/2 and (1+level)/2
/// quantiles of the resampled means.
BootstrapBand bootstrap_band(std::span<const std::vector<double>> curves, int draws = 7000,
                             double level = 0.90, std::uint64_t seed = 1);

struct MeanCurves {
  std::vector<double> positive;
  std::vector<double> negative;
  std::vector<double> reference;
};

std::vector<double> mean_curve(std::span<const std::vector<double>> curves);
MeanCurves average_curves(std::span<const std::vector<double>> positive,
                          std::span<const std::vector<double>> negative,
                          std::span<const std::vector<double>> reference);

/// Percent option return implied by a vol-point change on a base vol level.
double economic_significance(double beta_n, double base_vol);

/// Linear-interpolation sample quantile (type 7).
double quantile(std::vector<double> values, double prob);

struct SummaryStats {
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
};

SummaryStats summarize(std::span<const double> values);

/// Inputs for re-drawing reference windows with the jump samples held fixed.
struct RedrawInputs {
  std::vector<DayLabel> labels;
  const SlotSeries* variable = nullptr;
  std::map<Date, double> iv_bar;
  int window = 5;
  bool include_first = false;
  StdErrorKind std_errors = StdErrorKind::Classical;
};

struct RedrawSummary {
  std::array<SummaryStats, 4> beta;
  std::array<SummaryStats, 4> p_value;
  std::size_t iterations = 0;
  std::size_t failed = 0;
};

/// Runs the regression `iterations` times; iteration i draws reference
/// starts with seed base_seed + i.
RedrawSummary reference_redraws(const RedrawInputs& inputs, int iterations, std::uint64_t base_seed,
                                int jobs = 1);

// Report rows.
struct RegressionRow {
  std::string variable;
  std::string maturity;
  int window = 5;
  bool include_first = false;
  RegressionFit fit;
};

void write_regression_report(std::ostream& out, std::span<const RegressionRow> rows);
void write_curve_dump(std::ostream& out, const MeanCurves& curves, const BootstrapBand* band);

}  // namespace ivjump
