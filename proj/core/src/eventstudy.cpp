#include "ivjump/eventstudy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include <boost/math/distributions/students_t.hpp>

#include "ivjump/error.hpp"

namespace ivjump {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double two_sided_p(double beta, double se, double dof) {
  if (!(se > 0.0)) return beta == 0.0 ? 1.0 : 0.0;
  const double t = std::abs(beta / se);
  if (!std::isfinite(t)) return 0.0;
  const boost::math::students_t dist(dof);
  return std::clamp(2.0 * boost::math::cdf(boost::math::complement(dist, t)), 0.0, 1.0);
}

}  // namespace

std::size_t SlotSeries::index_of(Date day) const {
  const auto it = std::lower_bound(days.begin(), days.end(), day);
  if (it == days.end() || *it != day) return static_cast<std::size_t>(-1);
  return static_cast<std::size_t>(it - days.begin());
}

SlotSeries to_slot_series(const KeyedSeries& series, Eigen::Index column) {
  SlotSeries out;
  out.days = series.days;
  out.values.resize(series.days.size());
  for (auto& day : out.values) day.fill(kNaN);
  for (std::size_t r = 0; r < series.keys.size(); ++r) {
    const auto& key = series.keys[r];
    out.values[key.day][static_cast<std::size_t>(key.slot)] =
        series.values(static_cast<Eigen::Index>(r), column);
  }
  return out;
}

std::map<Date, int> build_reference_starts(std::span<const Date> no_jump_days,
                                           std::span<const int> jump_slots, std::uint64_t seed) {
  if (jump_slots.empty()) {
    throw Error(ErrorCode::InsufficientData, "empty jump-time distribution");
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, jump_slots.size() - 1);
  std::map<Date, int> starts;
  for (const auto day : no_jump_days) starts[day] = jump_slots[pick(rng)];
  return starts;
}

double cumulative_delta(std::span<const double> day_series, int start, int window, bool include_first) {
  const int last = start + window - 1;
  if (start < 0 || last >= static_cast<int>(day_series.size())) {
    throw Error(ErrorCode::MissingMinutes, "window runs past the session");
  }
  auto term = [&](int s) {
    const double v = day_series[static_cast<std::size_t>(s)];
    if (std::isnan(v)) {
      throw Error(ErrorCode::MissingMinutes, "missing change at " + format_minute(minute_of(s)));
    }
    return v;
  };
  // The post-jump tail is summed on its own so that include = first + exclude
  // holds exactly.
  double tail = 0.0;
  for (int s = start + 1; s <= last; ++s) tail += term(s);
  return include_first ? term(start) + tail : tail;
}

std::optional<std::vector<double>> cumulative_curve(std::span<const double> day_series, int start,
                                                    bool include_first, int horizon) {
  if (start < 0 || start + horizon - 1 >= static_cast<int>(day_series.size())) return std::nullopt;
  std::vector<double> curve(static_cast<std::size_t>(horizon) + 1, 0.0);
  for (int k = 1; k <= horizon; ++k) {
    const int slot = start + k - 1;
    double term = 0.0;
    if (include_first || k > 1) {
      term = day_series[static_cast<std::size_t>(slot)];
      if (std::isnan(term)) return std::nullopt;
    }
    curve[static_cast<std::size_t>(k)] = curve[static_cast<std::size_t>(k - 1)] + term;
  }
  return curve;
}

std::size_t SampleSet::count(SampleClass cls) const {
  return static_cast<std::size_t>(std::count_if(samples.begin(), samples.end(),
                                                [cls](const EventSample& s) { return s.cls == cls; }));
}

SampleSet build_samples(std::span<const DayLabel> labels, const std::map<Date, int>& reference_starts,
                        const SlotSeries& variable, const std::map<Date, double>& iv_bar, int window,
                        bool include_first) {
  SampleSet set;
  for (const auto& label : labels) {
    SampleClass cls;
    int start = 0;
    std::size_t* excluded = nullptr;
    if (label.cls == DayClass::PositiveJump || label.cls == DayClass::NegativeJump) {
      cls = label.cls == DayClass::PositiveJump ? SampleClass::Positive : SampleClass::Negative;
      excluded = cls == SampleClass::Positive ? &set.excluded_positive : &set.excluded_negative;
      start = slot_of(*label.jump_minute);
    } else if (label.cls == DayClass::NoJump) {
      const auto it = reference_starts.find(label.day);
      if (it == reference_starts.end()) continue;
      cls = SampleClass::Reference;
      excluded = &set.excluded_reference;
      start = it->second;
    } else {
      continue;
    }
    const auto d = variable.index_of(label.day);
    const auto level = iv_bar.find(label.day);
    if (d == static_cast<std::size_t>(-1) || level == iv_bar.end() || !std::isfinite(level->second)) {
      ++*excluded;
      continue;
    }
    try {
      const double cum = cumulative_delta(variable.values[d], start, window, include_first);
      set.samples.push_back({label.day, cls, start, window, include_first, cum, level->second});
    } catch (const Error&) {
      ++*excluded;
    }
  }
  return set;
}

RegressionFit ols_fit(std::span<const EventSample> samples, StdErrorKind kind) {
  const auto n = static_cast<Eigen::Index>(samples.size());
  constexpr Eigen::Index k = 4;
  if (n <= k) throw Error(ErrorCode::RankDeficientDesign, "too few samples for 4 regressors");

  Eigen::MatrixXd x(n, k);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& s = samples[static_cast<std::size_t>(i)];
    x(i, 0) = 1.0;
    x(i, 1) = s.cls == SampleClass::Positive ? 1.0 : 0.0;
    x(i, 2) = s.cls == SampleClass::Negative ? 1.0 : 0.0;
    x(i, 3) = s.iv_bar;
    y(i) = s.cum_delta;
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  qr.setThreshold(1e-10);
  if (qr.rank() < k) throw Error(ErrorCode::RankDeficientDesign, "design matrix rank < 4");
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd resid = y - x * beta;
  const double rss = resid.squaredNorm();
  const double dof = static_cast<double>(n - k);

  const Eigen::MatrixXd xtx_inv = (x.transpose() * x).inverse();
  Eigen::MatrixXd cov;
  if (kind == StdErrorKind::Classical) {
    cov = (rss / dof) * xtx_inv;
  } else {
    const Eigen::MatrixXd meat = x.transpose() * resid.array().square().matrix().asDiagonal() * x;
    cov = (static_cast<double>(n) / dof) * xtx_inv * meat * xtx_inv;
  }

  RegressionFit fit;
  fit.n = static_cast<std::size_t>(n);
  for (Eigen::Index j = 0; j < k; ++j) {
    const auto jj = static_cast<std::size_t>(j);
    fit.beta[jj] = beta(j);
    fit.std_error[jj] = std::sqrt(std::max(cov(j, j), 0.0));
    fit.p_value[jj] = two_sided_p(beta(j), fit.std_error[jj], dof);
  }
  const double tss = (y.array() - y.mean()).square().sum();
  fit.r_squared = tss > 0.0 ? 1.0 - rss / tss : 0.0;
  return fit;
}

double quantile(std::vector<double> values, double prob) {
  if (values.empty()) return kNaN;
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * prob;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  return values[lo] + (h - static_cast<double>(lo)) * (values[hi] - values[lo]);
}

BootstrapBand bootstrap_band(std::span<const std::vector<double>> curves, int draws, double level,
                             std::uint64_t seed) {
  BootstrapBand band;
  band.level = level;
  if (curves.empty()) return band;
  const std::size_t minutes = curves.front().size();
  const std::size_t n = curves.size();

  // Whole curves are resampled so every minute sees the same draw of days.
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::vector<std::vector<double>> means(minutes, std::vector<double>(static_cast<std::size_t>(draws)));
  std::vector<double> acc(minutes);
  for (int d = 0; d < draws; ++d) {
    std::fill(acc.begin(), acc.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto& c = curves[pick(rng)];
      for (std::size_t m = 0; m < minutes; ++m) acc[m] += c[m];
    }
    for (std::size_t m = 0; m < minutes; ++m) means[m][static_cast<std::size_t>(d)] = acc[m] / static_cast<double>(n);
  }
  band.lower.resize(minutes);
  band.upper.resize(minutes);
  for (std::size_t m = 0; m < minutes; ++m) {
    std::sort(means[m].begin(), means[m].end());
    band.lower[m] = quantile(means[m], 0.5 * (1.0 - level));
    band.upper[m] = quantile(means[m], 0.5 * (1.0 + level));
  }
  return band;
}

std::vector<double> mean_curve(std::span<const std::vector<double>> curves) {
  if (curves.empty()) return {};
  std::vector<double> mean(curves.front().size(), 0.0);
  for (const auto& c : curves) {
    for (std::size_t m = 0; m < mean.size(); ++m) mean[m] += c[m];
  }
  for (auto& v : mean) v /= static_cast<double>(curves.size());
  return mean;
}

MeanCurves average_curves(std::span<const std::vector<double>> positive,
                          std::span<const std::vector<double>> negative,
                          std::span<const std::vector<double>> reference) {
  return {mean_curve(positive), mean_curve(negative), mean_curve(reference)};
}

double economic_significance(double beta_n, double base_vol) {
  return 100.0 * beta_n / base_vol;
}

SummaryStats summarize(std::span<const double> values) {
  SummaryStats s;
  if (values.empty()) return {kNaN, kNaN, kNaN, kNaN};
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  double ss = 0.0;
  for (const double v : values) ss += (v - s.mean) * (v - s.mean);
  s.sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  std::vector<double> copy(values.begin(), values.end());
  s.q025 = quantile(copy, 0.025);
  s.q975 = quantile(std::move(copy), 0.975);
  return s;
}

RedrawSummary reference_redraws(const RedrawInputs& inputs, int iterations, std::uint64_t base_seed,
                                int jobs) {
  std::vector<Date> no_jump;
  std::vector<int> jump_slots;
  for (const auto& l : inputs.labels) {
    if (l.cls == DayClass::NoJump) no_jump.push_back(l.day);
    if (l.cls == DayClass::PositiveJump || l.cls == DayClass::NegativeJump) {
      jump_slots.push_back(slot_of(*l.jump_minute));
    }
  }

  const auto count = static_cast<std::size_t>(std::max(iterations, 0));
  std::vector<std::optional<RegressionFit>> fits(count);
  auto work = [&](std::size_t begin, std::size_t stride) {
    for (std::size_t i = begin; i < count; i += stride) {
      try {
        const auto starts = build_reference_starts(no_jump, jump_slots, base_seed + i);
        const auto set = build_samples(inputs.labels, starts, *inputs.variable, inputs.iv_bar,
                                       inputs.window, inputs.include_first);
        fits[i] = ols_fit(set.samples, inputs.std_errors);
      } catch (const Error&) {
        fits[i].reset();
      }
    }
  };
  const auto workers = static_cast<std::size_t>(std::max(jobs, 1));
  if (workers == 1) {
    work(0, 1);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work, w, workers);
  }

  RedrawSummary summary;
  summary.iterations = count;
  std::array<std::vector<double>, 4> betas;
  std::array<std::vector<double>, 4> pvals;
  for (const auto& f : fits) {
    if (!f) {
      ++summary.failed;
      continue;
    }
    for (std::size_t j = 0; j < 4; ++j) {
      betas[j].push_back(f->beta[j]);
      pvals[j].push_back(f->p_value[j]);
    }
  }
  for (std::size_t j = 0; j < 4; ++j) {
    summary.beta[j] = summarize(betas[j]);
    summary.p_value[j] = summarize(pvals[j]);
  }
  return summary;
}

void write_regression_report(std::ostream& out, std::span<const RegressionRow> rows) {
  out << "variable,maturity,window,include_first,beta0,betap,betan,betaiv,p0,pp,pn,piv,N\n";
  for (const auto& r : rows) {
    out << r.variable << ',' << r.maturity << ',' << r.window << ',' << (r.include_first ? 1 : 0);
    for (const double b : r.fit.beta) out << ',' << format_real(b);
    for (const double p : r.fit.p_value) out << ',' << format_real(p);
    out << ',' << r.fit.n << '\n';
  }
}

void write_curve_dump(std::ostream& out, const MeanCurves& curves, const BootstrapBand* band) {
  out << "minute,pos_mean,neg_mean,ref_mean,band_lo,band_hi\n";
  const std::size_t len = std::max({curves.positive.size(), curves.negative.size(), curves.reference.size()});
  auto cell = [](const std::vector<double>& v, std::size_t i) {
    return i < v.size() ? format_real(v[i]) : std::string();
  };
  for (std::size_t m = 0; m < len; ++m) {
    out << m << ',' << cell(curves.positive, m) << ',' << cell(curves.negative, m) << ','
        << cell(curves.reference, m) << ',';
    if (band != nullptr) out << cell(band->lower, m) << ',' << cell(band->upper, m);
    else out << ',';
    out << '\n';
  }
}

}  // namespace ivjump
