#include "ivjump/surface.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "ivjump/error.hpp"
#include "ivjump/pricing.hpp"

namespace ivjump {

namespace {

// r^2 log r written in terms of r^2.
inline double tps_kernel(double r2) { return r2 > 0.0 ? 0.5 * r2 * std::log(r2) : 0.0; }

double cross(const std::array<double, 2>& o, const std::array<double, 2>& a,
             const std::array<double, 2>& b) {
  return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
}

// Andrew's monotone chain; counter-clockwise, no repeated endpoint.
std::vector<std::array<double, 2>> convex_hull(std::vector<std::array<double, 2>> pts) {
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<std::array<double, 2>> hull(2 * pts.size());
  std::size_t k = 0;
  for (const auto& p : pts) {
    while (k >= 2 && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i > 0; --i) {
    const auto& p = pts[i - 1];
    while (k >= lower && cross(hull[k - 2], hull[k - 1], p) <= 0.0) --k;
    hull[k++] = p;
  }
  hull.resize(k - 1);
  return hull;
}

}  // namespace

double year_fraction(Date day, Date expiry) { return days_between(day, expiry) / 365.0; }

CrossSection iv_points(std::span<const OptionQuote> quotes, double spot, double rate,
                       const std::map<Date, double>& dividend, const SurfaceConfig& cfg) {
  CrossSection out;
  out.points.reserve(quotes.size());
  std::set<double> maturities;
  for (const auto& q : quotes) {
    const double m = q.strike / spot;
    const bool usable = q.right == Right::Put ? m <= 1.0 + cfg.atm_band : m >= 1.0 - cfg.atm_band;
    if (!usable) continue;
    const double tau = year_fraction(q.day, q.expiry);
    const auto it = dividend.find(q.expiry);
    const double div = it == dividend.end() ? 0.0 : it->second;
    try {
      const double iv = implied_vol(q.mid(), spot, q.strike, tau, rate, div, q.right);
      out.points.push_back({m, tau, iv});
      maturities.insert(tau);
    } catch (const Error&) {
      ++out.dropped;
    }
  }
  if (out.points.size() < cfg.min_points || maturities.size() < cfg.min_maturities) {
    throw Error(ErrorCode::EmptyCrossSection,
                std::to_string(out.points.size()) + " usable points over " +
                    std::to_string(maturities.size()) + " maturities");
  }
  return out;
}

CrossSection iv_points(std::span<const OptionQuote> quotes, double spot, double rate,
                       double dividend, const SurfaceConfig& cfg) {
  std::map<Date, double> per_expiry;
  for (const auto& q : quotes) per_expiry[q.expiry] = dividend;
  return iv_points(quotes, spot, rate, per_expiry, cfg);
}

TpsModel fit_surface(std::span<const IvPoint> points, double lambda, const SurfaceConfig& cfg) {
  if (lambda < 0.0) throw Error(ErrorCode::SingularSystem, "negative smoothing parameter");

  // Merge coincident knots.
  std::vector<IvPoint> sorted(points.begin(), points.end());
  std::sort(sorted.begin(), sorted.end(), [](const IvPoint& a, const IvPoint& b) {
    return a.moneyness != b.moneyness ? a.moneyness < b.moneyness : a.maturity < b.maturity;
  });
  std::vector<IvPoint> knots;
  knots.reserve(sorted.size());
  for (std::size_t i = 0; i < sorted.size();) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < sorted.size() && sorted[j].moneyness == sorted[i].moneyness &&
           sorted[j].maturity == sorted[i].maturity) {
      sum += sorted[j].iv;
      ++j;
    }
    knots.push_back({sorted[i].moneyness, sorted[i].maturity, sum / static_cast<double>(j - i)});
    i = j;
  }
  const auto n = static_cast<Eigen::Index>(knots.size());
  if (n < 3) throw Error(ErrorCode::SingularSystem, "fewer than 3 distinct knots");

  TpsModel model;
  model.lambda_ = lambda;
  const auto [m_min, m_max] = std::minmax_element(
      knots.begin(), knots.end(), [](const auto& a, const auto& b) { return a.moneyness < b.moneyness; });
  const auto [t_min, t_max] = std::minmax_element(
      knots.begin(), knots.end(), [](const auto& a, const auto& b) { return a.maturity < b.maturity; });
  model.m_lo_ = m_min->moneyness;
  model.m_span_ = m_max->moneyness - m_min->moneyness;
  model.tau_lo_ = t_min->maturity;
  model.tau_span_ = t_max->maturity - t_min->maturity;
  if (!(model.m_span_ > 0.0) || !(model.tau_span_ > 0.0)) {
    throw Error(ErrorCode::SingularSystem, "knots collinear in moneyness or maturity");
  }

  model.centers_.reserve(knots.size());
  model.scaled_.reserve(knots.size());
  for (const auto& k : knots) {
    model.centers_.push_back({k.moneyness, k.maturity});
    model.scaled_.push_back(model.scale(k.moneyness, k.maturity));
  }

  // Collinearity in the plane: smallest eigenvalue of the coordinate scatter.
  {
    double mx = 0, my = 0;
    for (const auto& p : model.scaled_) { mx += p[0]; my += p[1]; }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, syy = 0, sxy = 0;
    for (const auto& p : model.scaled_) {
      sxx += (p[0] - mx) * (p[0] - mx);
      syy += (p[1] - my) * (p[1] - my);
      sxy += (p[0] - mx) * (p[1] - my);
    }
    const double det = sxx * syy - sxy * sxy;
    if (det <= 1e-12 * (sxx + syy) * (sxx + syy)) {
      throw Error(ErrorCode::SingularSystem, "knots are collinear");
    }
  }

  const Eigen::Index dim = n + 3;
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(dim);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& pi = model.scaled_[static_cast<std::size_t>(i)];
    for (Eigen::Index j = 0; j < i; ++j) {
      const auto& pj = model.scaled_[static_cast<std::size_t>(j)];
      const double dx = pi[0] - pj[0];
      const double dy = pi[1] - pj[1];
      const double v = tps_kernel(dx * dx + dy * dy);
      a(i, j) = v;
      a(j, i) = v;
    }
    a(i, i) = lambda;
    a(i, n) = a(n, i) = 1.0;
    a(i, n + 1) = a(n + 1, i) = pi[0];
    a(i, n + 2) = a(n + 2, i) = pi[1];
    rhs(i) = knots[static_cast<std::size_t>(i)].iv;
  }

  const Eigen::PartialPivLU<Eigen::MatrixXd> lu(a);
  if (!(lu.rcond() > 1e-14)) throw Error(ErrorCode::SingularSystem, "ill-conditioned spline system");
  const Eigen::VectorXd sol = lu.solve(rhs);
  if (!sol.allFinite()) throw Error(ErrorCode::SingularSystem, "non-finite spline solution");
  model.weights_ = sol.head(n);
  model.affine_ = {sol(n), sol(n + 1), sol(n + 2)};

  auto hull = convex_hull(model.scaled_);
  double cx = 0, cy = 0;
  for (const auto& p : hull) { cx += p[0]; cy += p[1]; }
  cx /= static_cast<double>(hull.size());
  cy /= static_cast<double>(hull.size());
  const double grow = 1.0 + cfg.hull_margin;
  for (auto& p : hull) p = {cx + grow * (p[0] - cx), cy + grow * (p[1] - cy)};
  model.guard_hull_ = std::move(hull);
  return model;
}

double TpsModel::operator()(double moneyness, double maturity) const {
  const auto x = scale(moneyness, maturity);
  double value = affine_[0] + affine_[1] * x[0] + affine_[2] * x[1];
  const double* w = weights_.data();
  for (std::size_t i = 0; i < scaled_.size(); ++i) {
    const double dx = x[0] - scaled_[i][0];
    const double dy = x[1] - scaled_[i][1];
    value += w[i] * tps_kernel(dx * dx + dy * dy);
  }
  return value;
}

bool TpsModel::in_range(double moneyness, double maturity) const {
  const auto x = scale(moneyness, maturity);
  const std::size_t k = guard_hull_.size();
  if (k < 3) return false;
  for (std::size_t i = 0; i < k; ++i) {
    if (cross(guard_hull_[i], guard_hull_[(i + 1) % k], x) < -1e-12) return false;
  }
  return true;
}

double TpsModel::side_condition_residual() const {
  double s0 = 0, sm = 0, st = 0;
  for (std::size_t i = 0; i < centers_.size(); ++i) {
    s0 += weights_[static_cast<Eigen::Index>(i)];
    sm += weights_[static_cast<Eigen::Index>(i)] * centers_[i][0];
    st += weights_[static_cast<Eigen::Index>(i)] * centers_[i][1];
  }
  return std::max({std::abs(s0), std::abs(sm), std::abs(st)});
}

double eval_surface(const TpsModel& model, double moneyness, double maturity) {
  if (!model.in_range(moneyness, maturity)) {
    throw Error(ErrorCode::ExtrapolationOutOfRange,
                "(" + format_real(moneyness) + ", " + format_real(maturity) + ") outside knot hull");
  }
  return model(moneyness, maturity);
}

double bin_low(std::size_t bin) { return kBinLow + kBinWidth * static_cast<double>(bin); }
double bin_center(std::size_t bin) { return bin_low(bin) + 0.5 * kBinWidth; }

double maturity_years(Maturity m) {
  switch (m) {
    case Maturity::M3: return 0.25;
    case Maturity::M6: return 0.50;
    case Maturity::M9: return 0.75;
  }
  return 0.0;
}

std::string_view to_string(Maturity m) {
  switch (m) {
    case Maturity::M3: return "3m";
    case Maturity::M6: return "6m";
    case Maturity::M9: return "9m";
  }
  return "?";
}

Maturity parse_maturity(std::string_view text) {
  if (text == "3m") return Maturity::M3;
  if (text == "6m") return Maturity::M6;
  if (text == "9m") return Maturity::M9;
  throw Error(ErrorCode::ConfigInvalid, "unknown maturity '" + std::string(text) + "'");
}

std::optional<SmileBins> extract_smile(const TpsModel& model, double maturity) {
  SmileBins bins{};
  for (std::size_t b = 0; b < kBins; ++b) {
    double sum = 0.0;
    for (int g = 0; g < kBinGridPoints; ++g) {
      const double m = bin_low(b) + 0.005 + 0.01 * g;
      if (!model.in_range(m, maturity)) return std::nullopt;
      sum += model(m, maturity);
    }
    bins[b] = sum / kBinGridPoints;
    if (!std::isfinite(bins[b]) || !(bins[b] > 0.0)) return std::nullopt;
  }
  return bins;
}

std::array<SmileSample, 3> extract_smiles(const TpsModel& model, Date day, int minute) {
  std::array<SmileSample, 3> out;
  for (std::size_t i = 0; i < kAllMaturities.size(); ++i) {
    out[i].day = day;
    out[i].minute = minute;
    out[i].maturity = kAllMaturities[i];
    if (auto bins = extract_smile(model, maturity_years(kAllMaturities[i]))) {
      out[i].bins = *bins;
      out[i].missing = false;
    }
  }
  return out;
}

}  // namespace ivjump
