#pragma once

// Per-minute implied-volatility surfaces: OTM/ATM point cloud, thin-plate
// spline fit over (moneyness, maturity), and binned smile extraction.

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "ivjump/marketdata.hpp"

namespace ivjump {

struct IvPoint {
  double moneyness = 0.0;  // K / S
  double maturity = 0.0;   // years
  double iv = 0.0;
};

struct SurfaceConfig {
  double lambda = 1e-6;      // smoothing added to the kernel diagonal
  double atm_band = 0.005;   // half-width of the put/call overlap around m = 1
  double hull_margin = 0.05; // extrapolation guard: hull scaled about its centroid
  std::size_t min_points = 12;
  std::size_t min_maturities = 3;
};

struct CrossSection {
  std::vector<IvPoint> points;
  std::size_t dropped = 0;  // quotes whose inversion failed
};

/// Days to expiry over 365.
double year_fraction(Date day, Date expiry);

/// OTM/ATM implied-vol points of one minute. Puts contribute m <= 1 + a,
/// calls m >= 1 - a. `dividend` maps expiry to the yield used for that
/// maturity; expiries absent from the map use 0.
/// Throws Error(EmptyCrossSection).
CrossSection iv_points(std::span<const OptionQuote> quotes, double spot, double rate,
                       const std::map<Date, double>& dividend, const SurfaceConfig& cfg = {});
CrossSection iv_points(std::span<const OptionQuote> quotes, double spot, double rate,
                       double dividend, const SurfaceConfig& cfg = {});

/// Thin-plate spline f(x) = sum_i w_i phi(|x - c_i|) + a0 + a1 m + a2 tau with
/// phi(r) = r^2 log r, fitted on coordinates standardized to unit range.
class TpsModel {
 public:
  double operator()(double moneyness, double maturity) const;  // no range guard
  bool in_range(double moneyness, double maturity) const;

  std::span<const double> weights() const { return {weights_.data(), static_cast<std::size_t>(weights_.size())}; }
  const std::array<double, 3>& affine() const { return affine_; }
  const std::vector<std::array<double, 2>>& centers() const { return centers_; }  // original units
  double lambda() const { return lambda_; }
  std::pair<double, double> maturity_range() const { return {tau_lo_, tau_lo_ + tau_span_}; }

  /// Largest |sum w_i|, |sum w_i m_i|, |sum w_i tau_i| in original units.
  double side_condition_residual() const;

 private:
  friend TpsModel fit_surface(std::span<const IvPoint>, double, const SurfaceConfig&);

  std::array<double, 2> scale(double m, double tau) const {
    return {(m - m_lo_) / m_span_, (tau - tau_lo_) / tau_span_};
  }

  std::vector<std::array<double, 2>> centers_;
  std::vector<std::array<double, 2>> scaled_;
  Eigen::VectorXd weights_;
  std::array<double, 3> affine_{};
  double lambda_ = 0.0;
  double m_lo_ = 0.0, m_span_ = 1.0, tau_lo_ = 0.0, tau_span_ = 1.0;
  std::vector<std::array<double, 2>> guard_hull_;  // scaled coordinates, counter-clockwise
};

/// Points sharing (m, tau) are merged by averaging iv before fitting.
/// Throws Error(SingularSystem) for collinear or too few distinct knots.
TpsModel fit_surface(std::span<const IvPoint> points, double lambda, const SurfaceConfig& cfg = {});

/// Throws Error(ExtrapolationOutOfRange) outside the guarded hull.
double eval_surface(const TpsModel& model, double moneyness, double maturity);

// Smile layout: 10 bins of width 0.05 on [0.80, 1.30], each averaged over the
// five interior points lo + 0.005, ..., lo + 0.045.
inline constexpr std::size_t kBins = 10;
inline constexpr double kBinLow = 0.80;
inline constexpr double kBinWidth = 0.05;
inline constexpr int kBinGridPoints = 5;

using SmileBins = std::array<double, kBins>;

double bin_low(std::size_t bin);
double bin_center(std::size_t bin);

enum class Maturity { M3, M6, M9 };
inline constexpr std::array<Maturity, 3> kAllMaturities{Maturity::M3, Maturity::M6, Maturity::M9};

double maturity_years(Maturity m);
std::string_view to_string(Maturity m);
Maturity parse_maturity(std::string_view text);  // "3m" | "6m" | "9m"

struct SmileSample {
  Date day;
  int minute = kSessionOpen;
  Maturity maturity = Maturity::M3;
  SmileBins bins{};
  bool missing = true;
};

/// Binned smiles at 3, 6 and 9 months. A maturity whose grid falls outside
/// the guarded hull yields a sample marked missing.
std::array<SmileSample, 3> extract_smiles(const TpsModel& model, Date day = {},
                                          int minute = kSessionOpen);

/// Binned smile for a single maturity; nullopt when out of range.
std::optional<SmileBins> extract_smile(const TpsModel& model, double maturity);

}  // namespace ivjump
