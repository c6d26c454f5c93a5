#pragma once

// Stage orchestration shared by the command-line tool and the end-to-end
// tests: smiles from quotes, jump labels, smile PCA, and the event study with
// its robustness drivers.

#include <cstdint>
#include <functional>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "ivjump/eventstudy.hpp"
#include "ivjump/jumps.hpp"
#include "ivjump/marketdata.hpp"
#include "ivjump/smilepca.hpp"
#include "ivjump/surface.hpp"

namespace ivjump {

struct PipelineConfig {
  SurfaceConfig surface;
  JumpTestConfig jumps;
  std::vector<Maturity> maturities{Maturity::M3, Maturity::M6, Maturity::M9};
  int analysis_first_minute = kSessionOpen;  // surfaces are fitted on this window
  int analysis_last_minute = 11 * 60 + 30;
  int iv_bar_minutes = 60;                   // IV-level control averages the first hour
  bool iv_bar_same_maturity = true;          // else always the 3-month ATM-IV
  VarimaxOptions varimax;
  std::vector<int> windows{kWindows.begin(), kWindows.end()};
  int bootstrap_draws = 7000;
  double bootstrap_level = 0.90;
  std::uint64_t seed = 1;
  int robustness_iterations = 1000;
  std::vector<int> robustness_windows{5, 60};
  int extended_cutoff_minute = 12 * 60 + 30;
  double robustness_alpha = 0.05;
  StdErrorKind std_errors = StdErrorKind::Classical;
  int jobs = 1;

  void validate() const;  // throws Error(ConfigInvalid)
};

using QuoteProvider = std::function<std::vector<OptionQuote>(std::size_t day_index)>;

// ---- surfaces ---------------------------------------------------------------

struct SmileStore {
  std::vector<Date> days;
  std::map<Maturity, SmileSeries> series;
  std::size_t minutes_fitted = 0;
  std::size_t minutes_failed = 0;
  std::size_t points_dropped = 0;

  bool has(Maturity m) const { return series.contains(m); }
};

/// Dividend yield per expiry from the call/put pair whose strike is nearest
/// the spot, using the first minute of `quotes` where such a pair exists.
std::map<Date, double> dividend_yields(std::span<const OptionQuote> day_quotes,
                                       const std::array<double, kSessionLength>& spots, double rate);

SmileStore build_smiles(const UnderlyingPanel& prices, const QuoteProvider& quotes, const RateCurve& rates,
                        const PipelineConfig& cfg);

void write_smiles(std::ostream& out, const SmileStore& store);
SmileStore read_smiles(std::istream& in);

// ---- jumps ------------------------------------------------------------------

struct DetectionResult {
  StatisticPanel statistics;
  std::vector<JumpEvent> events;
  std::vector<DayLabel> labels;
};

DetectionResult detect(const UnderlyingPanel& prices, const JumpTestConfig& cfg);

/// Underlying gaps plus analysis-window slots where any configured maturity
/// has no smile.
Completeness combined_completeness(const UnderlyingPanel& prices, const SmileStore& smiles,
                                   const PipelineConfig& cfg);

// ---- smile PCA --------------------------------------------------------------

struct PcaResult {
  Maturity maturity = Maturity::M3;
  DeltaIvPanel panel;
  PcaModel unrotated;
  PcaModel model;  // rotated
  LabeledScores scores;
};

std::vector<PcaResult> fit_components(const SmileStore& smiles, const PipelineConfig& cfg);

void write_components(std::ostream& out, std::span<const PcaResult> results);

// ---- event study ------------------------------------------------------------

struct EventVariable {
  std::string name;  // "ATM-IV", "ATM-PC", "OTM-Call-PC", "OTM-Put-PC"
  Maturity maturity = Maturity::M3;
  SlotSeries series;  // deseasonalized changes, vol points
};

/// Deseasonalized ATM-IV changes and labeled PC scores for every maturity.
/// Components with ambiguous labels are skipped and reported in `warnings`.
std::vector<EventVariable> event_variables(const SmileStore& smiles, std::span<const PcaResult> pca,
                                           std::span<const DayLabel> labels,
                                           std::vector<std::string>* warnings = nullptr);

/// Mean ATM-IV level (vol points) over the first `minutes` slots of each day.
std::map<Date, double> iv_levels(const SmileStore& smiles, Maturity maturity, int minutes);

struct CurveSet {
  std::string variable;
  Maturity maturity = Maturity::M3;
  bool include_first = false;
  MeanCurves means;
  BootstrapBand band;
  std::size_t positive = 0, negative = 0, reference = 0;
};

struct EventStudyResult {
  std::vector<RegressionRow> rows;
  std::vector<CurveSet> curves;
  std::map<Date, int> reference_starts;
  std::vector<std::string> warnings;
};

struct EventStudyOptions {
  bool include_first = true;
  bool exclude_first = true;
  bool curves = true;
  std::vector<int> windows;  // empty: cfg.windows
};

EventStudyResult run_event_study(std::span<const EventVariable> variables, std::span<const DayLabel> labels,
                                 const SmileStore& smiles, const PipelineConfig& cfg,
                                 const EventStudyOptions& options = {});

// ---- robustness -------------------------------------------------------------

struct RedrawRow {
  std::string variable;
  std::string maturity;
  int window = 5;
  RedrawSummary summary;
};

struct RobustnessReport {
  std::vector<RegressionRow> alpha;     // detection at cfg.robustness_alpha
  std::vector<RegressionRow> extended;  // cutoff moved to cfg.extended_cutoff_minute
  std::vector<RedrawRow> redraws;       // reference re-draws, baseline settings
  std::vector<std::string> warnings;
};

RobustnessReport robustness_suite(const UnderlyingPanel& prices, const SmileStore& smiles,
                                  const PipelineConfig& cfg);

void write_redraw_report(std::ostream& out, std::span<const RedrawRow> rows);

// ---- in-memory end to end ---------------------------------------------------

struct PipelineResult {
  SmileStore smiles;
  DetectionResult detection;
  std::vector<DayLabel> labels;  // refined with smile completeness
  std::vector<PcaResult> pca;
  std::vector<EventVariable> variables;
  EventStudyResult study;
};

PipelineResult run_pipeline(const UnderlyingPanel& prices, const QuoteProvider& quotes, const RateCurve& rates,
                            const PipelineConfig& cfg, const EventStudyOptions& options = {});

}  // namespace ivjump
