#pragma once

// Smile-change panels, minute-of-day deseasonalization, PCA with Varimax
// rotation, score projection, and region labeling of components.

#include <array>
#include <cstddef>
#include <optional>
#include <ostream>
#include <set>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ivjump/marketdata.hpp"
#include "ivjump/surface.hpp"

namespace ivjump {

/// Binned smiles of one maturity over the session grid; nullopt = missing.
struct SmileSeries {
  Maturity maturity = Maturity::M3;
  std::vector<Date> days;
  std::vector<std::array<std::optional<SmileBins>, kSessionLength>> samples;

  void add_day(Date day);  // appends an all-missing day
};

struct RowKey {
  std::size_t day = 0;  // index into the owning series' `days`
  int slot = 0;
  friend bool operator==(const RowKey&, const RowKey&) = default;
};

/// Rows keyed by (day, slot) over a fixed number of columns.
struct KeyedSeries {
  std::vector<Date> days;
  std::vector<RowKey> keys;
  Eigen::MatrixXd values;

  Eigen::Index rows() const { return values.rows(); }
};

struct DeltaIvPanel : KeyedSeries {
  std::size_t dropped = 0;  // slots whose difference was undefined
};

struct ScoreSeries : KeyedSeries {
  bool deseasonalized = false;
};

/// Minute-to-minute smile changes, multiplied by `scale` (100 gives vol
/// points). Never differences across days; a missing sample drops its own
/// row and the next one.
DeltaIvPanel delta_panel(const SmileSeries& smiles, double scale = 100.0);

/// Indices of the two bins straddling m = 1.
inline constexpr std::array<std::size_t, 2> kAtmBins{3, 4};

/// Single-column series of the mean change over the ATM bins.
KeyedSeries atm_column(const DeltaIvPanel& panel);

/// Subtracts, per slot, the mean over rows belonging to `no_jump_days`.
/// Throws Error(EmptyReferenceMinute) when a slot has no reference rows.
KeyedSeries deseasonalize(const KeyedSeries& series, const std::set<Date>& no_jump_days);
ScoreSeries deseasonalize(const ScoreSeries& series, const std::set<Date>& no_jump_days);

enum class ComponentLabel { AtmPc, OtmCallPc, OtmPutPc, Ambiguous };
std::string_view to_string(ComponentLabel label);

struct PcaModel {
  Eigen::MatrixXd loadings;         // bins x k
  Eigen::VectorXd eigenvalues;      // all, descending
  Eigen::VectorXd explained;        // per retained component
  Eigen::RowVectorXd column_means;  // of the fitted panel
  Eigen::MatrixXd rotation;         // k x k, identity when unrotated
  bool rotated = false;
  bool converged = true;
  std::array<ComponentLabel, 3> labels{ComponentLabel::Ambiguous, ComponentLabel::Ambiguous,
                                       ComponentLabel::Ambiguous};
};

/// Covariance PCA (mean subtracted, N-1 divisor). Each loading column is
/// sign-normalized so its largest-magnitude entry is positive.
/// Throws Error(InsufficientData) below 50 rows, Error(RankDeficient).
PcaModel pca_fit(const KeyedSeries& panel, int components = 3);

struct VarimaxOptions {
  bool kaiser_normalize = false;
  double tolerance = 1e-10;
  int max_sweeps = 500;
};

/// Sum over columns of the variance of squared loadings.
double varimax_criterion(const Eigen::MatrixXd& loadings);

/// Cyclic pairwise Varimax rotation. On hitting the sweep cap the best
/// iterate is returned with `converged == false`.
PcaModel varimax_rotate(const PcaModel& model, const VarimaxOptions& options = {});

struct LabeledScores {
  ScoreSeries scores;
  std::array<ComponentLabel, 3> labels{};
  bool ambiguous = false;
};

/// Region of a bin by its center: OTM-put m < 0.95, ATM [0.95, 1.05], OTM-call m > 1.05.
ComponentLabel region_of_bin(std::size_t bin);

/// scores = panel x loadings; each component labeled by the region with the
/// largest sum of squared loadings. Components sharing a region are marked
/// Ambiguous.
LabeledScores project_and_label(const PcaModel& model, const KeyedSeries& panel);

/// Throws Error(AmbiguousLabel) when any label is Ambiguous.
void require_unambiguous(const std::array<ComponentLabel, 3>& labels);

void write_loadings(std::ostream& out, Maturity maturity, const PcaModel& model, bool header = true);
void write_scores(std::ostream& out, const ScoreSeries& scores);

}  // namespace ivjump
