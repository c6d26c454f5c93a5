#include "ivjump/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <thread>

#include "ivjump/error.hpp"
#include "ivjump/pricing.hpp"

namespace ivjump {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

template <typename Fn>
void parallel_for(std::size_t count, int jobs, Fn&& fn) {
  const auto workers = std::min<std::size_t>(static_cast<std::size_t>(std::max(jobs, 1)), std::max<std::size_t>(count, 1));
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::jthread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < count; i += workers) fn(i);
    });
  }
}

double atm_level(const SmileBins& bins) {
  return 100.0 * 0.5 * (bins[kAtmBins[0]] + bins[kAtmBins[1]]);
}

std::set<Date> no_jump_set(std::span<const DayLabel> labels) {
  std::set<Date> out;
  for (const auto& l : labels) {
    if (l.cls == DayClass::NoJump) out.insert(l.day);
  }
  return out;
}

}  // namespace

void PipelineConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigInvalid, msg); };
  jumps.validate();
  if (maturities.empty()) fail("no maturities configured");
  if (!in_session(analysis_first_minute) || !in_session(analysis_last_minute) ||
      analysis_first_minute > analysis_last_minute) {
    fail("analysis window outside session");
  }
  for (const int w : windows) {
    if (std::find(kWindows.begin(), kWindows.end(), w) == kWindows.end()) {
      fail("window " + std::to_string(w) + " not in {5,15,20,30,60}");
    }
  }
  for (const int w : robustness_windows) {
    if (std::find(kWindows.begin(), kWindows.end(), w) == kWindows.end()) {
      fail("robustness window " + std::to_string(w) + " not in {5,15,20,30,60}");
    }
  }
  if (bootstrap_draws < 1) fail("bootstrap_draws must be >= 1");
  if (!(bootstrap_level > 0.0 && bootstrap_level < 1.0)) fail("bootstrap_level must be in (0,1)");
  if (robustness_iterations < 0) fail("robustness_iterations must be >= 0");
  if (surface.lambda < 0.0) fail("spline lambda must be >= 0");
  if (iv_bar_minutes < 1 || iv_bar_minutes > kSessionLength) fail("iv_bar_minutes out of range");
}

// ---- surfaces ---------------------------------------------------------------

std::map<Date, double> dividend_yields(std::span<const OptionQuote> day_quotes,
                                       const std::array<double, kSessionLength>& spots, double rate) {
  std::map<Date, double> out;
  std::size_t i = 0;
  while (i < day_quotes.size()) {
    std::size_t j = i;
    while (j < day_quotes.size() && day_quotes[j].minute == day_quotes[i].minute) ++j;
    const double spot = spots[static_cast<std::size_t>(slot_of(day_quotes[i].minute))];
    if (std::isfinite(spot)) {
      // expiry -> strike -> (call mid, put mid)
      std::map<Date, std::map<double, std::pair<double, double>>> pairs;
      for (std::size_t k = i; k < j; ++k) {
        const auto& q = day_quotes[k];
        if (out.contains(q.expiry)) continue;
        auto& slot = pairs[q.expiry].try_emplace(q.strike, kNaN, kNaN).first->second;
        (q.right == Right::Call ? slot.first : slot.second) = q.mid();
      }
      for (const auto& [expiry, strikes] : pairs) {
        const OptionQuote* any = &day_quotes[i];
        double best_gap = std::numeric_limits<double>::infinity();
        const std::pair<double, double>* best = nullptr;
        double best_strike = 0.0;
        for (const auto& [k, mids] : strikes) {
          if (std::isnan(mids.first) || std::isnan(mids.second)) continue;
          if (std::abs(k - spot) < best_gap) {
            best_gap = std::abs(k - spot);
            best = &mids;
            best_strike = k;
          }
        }
        if (best == nullptr) continue;
        try {
          out[expiry] = implied_dividend_yield(best->first, best->second, spot, best_strike,
                                               year_fraction(any->day, expiry), rate);
        } catch (const Error&) {
        }
      }
    }
    i = j;
  }
  return out;
}

SmileStore build_smiles(const UnderlyingPanel& prices, const QuoteProvider& quotes, const RateCurve& rates,
                        const PipelineConfig& cfg) {
  SmileStore store;
  store.days = prices.days;
  for (const auto m : cfg.maturities) {
    auto& s = store.series[m];
    s.maturity = m;
    s.days = prices.days;
    s.samples.resize(prices.size());
  }
  std::vector<std::size_t> fitted(prices.size(), 0), failed(prices.size(), 0), dropped(prices.size(), 0);

  parallel_for(prices.size(), cfg.jobs, [&](std::size_t d) {
    const Date day = prices.days[d];
    if (!rates.has(day)) {
      failed[d] = static_cast<std::size_t>(slot_of(cfg.analysis_last_minute) - slot_of(cfg.analysis_first_minute) + 1);
      return;
    }
    const double rate = rates.at(day);
    auto day_quotes = quotes(d);
    std::stable_sort(day_quotes.begin(), day_quotes.end(),
                     [](const OptionQuote& a, const OptionQuote& b) { return a.minute < b.minute; });
    const auto dividends = dividend_yields(day_quotes, prices.prices[d], rate);

    std::size_t i = 0;
    while (i < day_quotes.size()) {
      std::size_t j = i;
      const int minute = day_quotes[i].minute;
      while (j < day_quotes.size() && day_quotes[j].minute == minute) ++j;
      const std::span<const OptionQuote> at_minute(day_quotes.data() + i, j - i);
      i = j;
      if (minute < cfg.analysis_first_minute || minute > cfg.analysis_last_minute) continue;
      const auto slot = static_cast<std::size_t>(slot_of(minute));
      const double spot = prices.prices[d][slot];
      if (!std::isfinite(spot)) {
        ++failed[d];
        continue;
      }
      try {
        const auto cloud = iv_points(at_minute, spot, rate, dividends, cfg.surface);
        dropped[d] += cloud.dropped;
        const auto model = fit_surface(cloud.points, cfg.surface.lambda, cfg.surface);
        for (const auto m : cfg.maturities) {
          store.series.at(m).samples[d][slot] = extract_smile(model, maturity_years(m));
        }
        ++fitted[d];
      } catch (const Error&) {
        ++failed[d];
      }
    }
  });

  for (std::size_t d = 0; d < prices.size(); ++d) {
    store.minutes_fitted += fitted[d];
    store.minutes_failed += failed[d];
    store.points_dropped += dropped[d];
  }
  return store;
}

void write_smiles(std::ostream& out, const SmileStore& store) {
  out << "day,minute,maturity,bin_lo,iv\n";
  for (std::size_t d = 0; d < store.days.size(); ++d) {
    const std::string day = store.days[d].str();
    for (int s = 0; s < kSessionLength; ++s) {
      for (const auto& [m, series] : store.series) {
        const auto& sample = series.samples[d][static_cast<std::size_t>(s)];
        if (!sample) continue;
        const std::string prefix = day + ',' + format_minute(minute_of(s)) + ',' + std::string(to_string(m)) + ',';
        for (std::size_t b = 0; b < kBins; ++b) {
          out << prefix << format_real(bin_low(b)) << ',' << format_real((*sample)[b]) << '\n';
        }
      }
    }
  }
}

SmileStore read_smiles(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "day,minute,maturity,bin_lo,iv") {
    throw Error(ErrorCode::SchemaMismatch, "smile dump header");
  }
  struct Partial {
    SmileBins bins{};
    std::size_t filled = 0;
  };
  std::map<Date, std::map<std::pair<Maturity, int>, Partial>> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string f[5];
    for (auto& field : f) std::getline(ss, field, ',');
    try {
      const Date day = Date::parse(f[0]);
      const int slot = slot_of(parse_minute(f[1]));
      const Maturity m = parse_maturity(f[2]);
      const double lo = std::stod(f[3]);
      const auto bin = static_cast<long>(std::lround((lo - kBinLow) / kBinWidth));
      if (bin < 0 || bin >= static_cast<long>(kBins) || slot < 0 || slot >= kSessionLength) throw std::out_of_range("bin");
      auto& p = rows[day][{m, slot}];
      p.bins[static_cast<std::size_t>(bin)] = std::stod(f[4]);
      ++p.filled;
    } catch (const std::exception& e) {
      throw Error(ErrorCode::SchemaMismatch, "smile dump line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  SmileStore store;
  for (const auto& [day, entries] : rows) {
    store.days.push_back(day);
    for (const auto& [key, p] : entries) {
      auto& series = store.series[key.first];
      series.maturity = key.first;
    }
  }
  for (auto& [m, series] : store.series) {
    series.days = store.days;
    series.samples.resize(store.days.size());
  }
  std::size_t d = 0;
  for (const auto& [day, entries] : rows) {
    for (const auto& [key, p] : entries) {
      if (p.filled == kBins) store.series[key.first].samples[d][static_cast<std::size_t>(key.second)] = p.bins;
    }
    ++d;
  }
  return store;
}

// ---- jumps ------------------------------------------------------------------

DetectionResult detect(const UnderlyingPanel& prices, const JumpTestConfig& cfg) {
  cfg.validate();
  DetectionResult out;
  out.statistics = lee_mykland_statistics(log_returns(prices), cfg.window);
  out.events = detect_jumps(out.statistics, kSessionLength, cfg.alpha);
  out.labels = classify_days(out.events, underlying_completeness(prices), cfg);
  return out;
}

Completeness combined_completeness(const UnderlyingPanel& prices, const SmileStore& smiles,
                                   const PipelineConfig& cfg) {
  Completeness out = underlying_completeness(prices);
  const int first = slot_of(cfg.analysis_first_minute);
  const int last = slot_of(cfg.analysis_last_minute);
  for (std::size_t d = 0; d < out.days.size(); ++d) {
    const auto it = std::lower_bound(smiles.days.begin(), smiles.days.end(), out.days[d]);
    const bool present = it != smiles.days.end() && *it == out.days[d];
    const auto sd = static_cast<std::size_t>(it - smiles.days.begin());
    for (int s = first; s <= last; ++s) {
      bool missing = !present;
      for (const auto m : cfg.maturities) {
        if (missing) break;
        const auto series = smiles.series.find(m);
        missing = series == smiles.series.end() || !series->second.samples[sd][static_cast<std::size_t>(s)];
      }
      if (missing) out.missing[d][static_cast<std::size_t>(s)] = true;
    }
  }
  return out;
}

// ---- smile PCA --------------------------------------------------------------

std::vector<PcaResult> fit_components(const SmileStore& smiles, const PipelineConfig& cfg) {
  std::vector<PcaResult> out;
  for (const auto m : cfg.maturities) {
    const auto it = smiles.series.find(m);
    if (it == smiles.series.end()) continue;
    PcaResult r;
    r.maturity = m;
    r.panel = delta_panel(it->second);
    r.unrotated = pca_fit(r.panel, 3);
    r.model = varimax_rotate(r.unrotated, cfg.varimax);
    r.scores = project_and_label(r.model, r.panel);
    r.model.labels = r.scores.labels;
    out.push_back(std::move(r));
  }
  return out;
}

void write_components(std::ostream& out, std::span<const PcaResult> results) {
  out << "maturity,component,label,explained\n";
  for (const auto& r : results) {
    for (Eigen::Index j = 0; j < r.model.loadings.cols(); ++j) {
      out << to_string(r.maturity) << ",pc" << (j + 1) << ','
          << to_string(r.scores.labels[static_cast<std::size_t>(j)]) << ','
          << format_real(r.model.explained(j)) << '\n';
    }
  }
}

// ---- event study ------------------------------------------------------------

std::vector<EventVariable> event_variables(const SmileStore& smiles, std::span<const PcaResult> pca,
                                           std::span<const DayLabel> labels,
                                           std::vector<std::string>* warnings) {
  const auto reference = no_jump_set(labels);
  std::vector<EventVariable> out;
  auto warn = [&](const std::string& msg) {
    if (warnings != nullptr) warnings->push_back(msg);
  };
  for (const auto& [m, series] : smiles.series) {
    const auto panel = delta_panel(series);
    try {
      out.push_back({"ATM-IV", m, to_slot_series(deseasonalize(atm_column(panel), reference))});
    } catch (const Error& e) {
      warn(std::string(to_string(m)) + " ATM-IV skipped: " + e.what());
    }
    const auto r = std::find_if(pca.begin(), pca.end(), [m = m](const PcaResult& p) { return p.maturity == m; });
    if (r == pca.end()) continue;
    ScoreSeries scores;
    try {
      scores = deseasonalize(r->scores.scores, reference);
    } catch (const Error& e) {
      warn(std::string(to_string(m)) + " components skipped: " + e.what());
      continue;
    }
    for (std::size_t j = 0; j < r->scores.labels.size(); ++j) {
      const auto label = r->scores.labels[j];
      if (label == ComponentLabel::Ambiguous) {
        warn(std::string(to_string(m)) + " pc" + std::to_string(j + 1) + ": ambiguous component label, skipped");
        continue;
      }
      out.push_back({std::string(to_string(label)), m, to_slot_series(scores, static_cast<Eigen::Index>(j))});
    }
  }
  return out;
}

std::map<Date, double> iv_levels(const SmileStore& smiles, Maturity maturity, int minutes) {
  std::map<Date, double> out;
  const auto it = smiles.series.find(maturity);
  if (it == smiles.series.end()) return out;
  const auto& series = it->second;
  for (std::size_t d = 0; d < series.days.size(); ++d) {
    double sum = 0.0;
    int n = 0;
    for (int s = 0; s < minutes && s < kSessionLength; ++s) {
      const auto& sample = series.samples[d][static_cast<std::size_t>(s)];
      if (!sample) continue;
      sum += atm_level(*sample);
      ++n;
    }
    if (n > 0) out[series.days[d]] = sum / n;
  }
  return out;
}

EventStudyResult run_event_study(std::span<const EventVariable> variables, std::span<const DayLabel> labels,
                                 const SmileStore& smiles, const PipelineConfig& cfg,
                                 const EventStudyOptions& options) {
  EventStudyResult result;
  std::vector<Date> no_jump;
  std::vector<int> jump_slots;
  for (const auto& l : labels) {
    if (l.cls == DayClass::NoJump) no_jump.push_back(l.day);
    if (l.cls == DayClass::PositiveJump || l.cls == DayClass::NegativeJump) jump_slots.push_back(slot_of(*l.jump_minute));
  }
  if (jump_slots.empty()) {
    result.warnings.emplace_back("no jump days; event study skipped");
    return result;
  }
  result.reference_starts = build_reference_starts(no_jump, jump_slots, cfg.seed);
  const auto& windows = options.windows.empty() ? cfg.windows : options.windows;

  std::map<Maturity, std::map<Date, double>> levels;
  auto level_for = [&](Maturity m) -> const std::map<Date, double>& {
    const Maturity key = cfg.iv_bar_same_maturity ? m : Maturity::M3;
    auto it = levels.find(key);
    if (it == levels.end()) it = levels.emplace(key, iv_levels(smiles, key, cfg.iv_bar_minutes)).first;
    return it->second;
  };

  std::vector<bool> modes;
  if (options.include_first) modes.push_back(true);
  if (options.exclude_first) modes.push_back(false);

  for (const auto& var : variables) {
    const auto& iv_bar = level_for(var.maturity);
    for (const bool include : modes) {
      for (const int w : windows) {
        const auto set = build_samples(labels, result.reference_starts, var.series, iv_bar, w, include);
        try {
          result.rows.push_back({var.name, std::string(to_string(var.maturity)), w, include, ols_fit(set.samples, cfg.std_errors)});
        } catch (const Error& e) {
          result.warnings.push_back(var.name + " " + std::string(to_string(var.maturity)) + " W=" +
                                    std::to_string(w) + ": " + e.what());
        }
      }
      if (!options.curves) continue;
      std::vector<std::vector<double>> pos, neg, ref;
      for (const auto& l : labels) {
        int start = 0;
        std::vector<std::vector<double>>* bucket = nullptr;
        if (l.cls == DayClass::PositiveJump || l.cls == DayClass::NegativeJump) {
          start = slot_of(*l.jump_minute);
          bucket = l.cls == DayClass::PositiveJump ? &pos : &neg;
        } else if (l.cls == DayClass::NoJump) {
          const auto it = result.reference_starts.find(l.day);
          if (it == result.reference_starts.end()) continue;
          start = it->second;
          bucket = &ref;
        } else {
          continue;
        }
        const auto d = var.series.index_of(l.day);
        if (d == static_cast<std::size_t>(-1)) continue;
        if (auto curve = cumulative_curve(var.series.values[d], start, include)) bucket->push_back(std::move(*curve));
      }
      CurveSet cs;
      cs.variable = var.name;
      cs.maturity = var.maturity;
      cs.include_first = include;
      cs.means = average_curves(pos, neg, ref);
      cs.positive = pos.size();
      cs.negative = neg.size();
      cs.reference = ref.size();
      if (ref.size() >= 2) cs.band = bootstrap_band(ref, cfg.bootstrap_draws, cfg.bootstrap_level, cfg.seed);
      result.curves.push_back(std::move(cs));
    }
  }
  return result;
}

// ---- robustness -------------------------------------------------------------

RobustnessReport robustness_suite(const UnderlyingPanel& prices, const SmileStore& smiles,
                                  const PipelineConfig& cfg) {
  RobustnessReport report;
  std::vector<PcaResult> pca;
  try {
    pca = fit_components(smiles, cfg);
  } catch (const Error& e) {
    report.warnings.push_back(std::string("PCA unavailable: ") + e.what());
  }
  EventStudyOptions exclude_only;
  exclude_only.include_first = false;
  exclude_only.curves = false;

  auto relabel = [&](const PipelineConfig& c) {
    const auto det = detect(prices, c.jumps);
    return classify_days(det.events, combined_completeness(prices, smiles, c), c.jumps);
  };

  // (a) detection at a looser significance level.
  {
    PipelineConfig c = cfg;
    c.jumps.alpha = cfg.robustness_alpha;
    const auto labels = relabel(c);
    const auto vars = event_variables(smiles, pca, labels, &report.warnings);
    auto study = run_event_study(vars, labels, smiles, c, exclude_only);
    report.alpha = std::move(study.rows);
    report.warnings.insert(report.warnings.end(), study.warnings.begin(), study.warnings.end());
  }

  // (b) extended morning window.
  {
    PipelineConfig c = cfg;
    c.jumps.cutoff_minute = cfg.extended_cutoff_minute;
    c.jumps.completeness_end_minute = std::min(cfg.extended_cutoff_minute + 60, kSessionClose);
    if (c.jumps.completeness_end_minute > cfg.analysis_last_minute) {
      report.warnings.push_back("extended window needs smiles through " +
                                format_minute(c.jumps.completeness_end_minute) + "; surfaces end at " +
                                format_minute(cfg.analysis_last_minute) + ", skipped");
    } else {
      const auto labels = relabel(c);
      const auto vars = event_variables(smiles, pca, labels, &report.warnings);
      auto study = run_event_study(vars, labels, smiles, c, exclude_only);
      report.extended = std::move(study.rows);
      report.warnings.insert(report.warnings.end(), study.warnings.begin(), study.warnings.end());
    }
  }

  // (c) reference re-draws with jump samples fixed.
  {
    const auto labels = relabel(cfg);
    const auto vars = event_variables(smiles, pca, labels, &report.warnings);
    for (const auto& var : vars) {
      const auto levels = iv_levels(smiles, cfg.iv_bar_same_maturity ? var.maturity : Maturity::M3, cfg.iv_bar_minutes);
      for (const int w : cfg.robustness_windows) {
        RedrawInputs in;
        in.labels = labels;
        in.variable = &var.series;
        in.iv_bar = levels;
        in.window = w;
        in.include_first = false;
        in.std_errors = cfg.std_errors;
        report.redraws.push_back({var.name, std::string(to_string(var.maturity)), w,
                                  reference_redraws(in, cfg.robustness_iterations, cfg.seed, cfg.jobs)});
      }
    }
  }
  return report;
}

void write_redraw_report(std::ostream& out, std::span<const RedrawRow> rows) {
  static constexpr std::array<const char*, 4> kCoef{"beta0", "betap", "betan", "betaiv"};
  out << "variable,maturity,window,coefficient,statistic,mean,sd,q025,q975\n";
  for (const auto& r : rows) {
    for (std::size_t j = 0; j < 4; ++j) {
      for (const bool is_p : {false, true}) {
        const auto& s = is_p ? r.summary.p_value[j] : r.summary.beta[j];
        out << r.variable << ',' << r.maturity << ',' << r.window << ',' << kCoef[j] << ','
            << (is_p ? "p_value" : "estimate") << ',' << format_real(s.mean) << ',' << format_real(s.sd) << ','
            << format_real(s.q025) << ',' << format_real(s.q975) << '\n';
      }
    }
  }
}

// ---- in-memory end to end ---------------------------------------------------

PipelineResult run_pipeline(const UnderlyingPanel& prices, const QuoteProvider& quotes, const RateCurve& rates,
                            const PipelineConfig& cfg, const EventStudyOptions& options) {
  cfg.validate();
  PipelineResult r;
  r.smiles = build_smiles(prices, quotes, rates, cfg);
  r.detection = detect(prices, cfg.jumps);
  r.labels = classify_days(r.detection.events, combined_completeness(prices, r.smiles, cfg), cfg.jumps);
  try {
    r.pca = fit_components(r.smiles, cfg);
  } catch (const Error& e) {
    r.study.warnings.push_back(std::string("PCA unavailable: ") + e.what());
  }
  std::vector<std::string> warnings;
  r.variables = event_variables(r.smiles, r.pca, r.labels, &warnings);
  auto study = run_event_study(r.variables, r.labels, r.smiles, cfg, options);
  study.warnings.insert(study.warnings.begin(), warnings.begin(), warnings.end());
  study.warnings.insert(study.warnings.begin(), r.study.warnings.begin(), r.study.warnings.end());
  r.study = std::move(study);
  return r;
}

}  // namespace ivjump
