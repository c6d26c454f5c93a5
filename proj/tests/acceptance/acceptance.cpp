// Acceptance suite: one PASS/FAIL line per criterion. Tolerances and runtime
// limits are pinned here; the process exits non-zero if any criterion fails.

#include <Eigen/Dense>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <string>

#include "ivjump/error.hpp"
#include "ivjump/eventstudy.hpp"
#include "ivjump/jumps.hpp"
#include "ivjump/pipeline.hpp"
#include "ivjump/pricing.hpp"
#include "ivjump/simulator.hpp"
#include "ivjump/smilepca.hpp"
#include "ivjump/surface.hpp"

using namespace ivjump;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void run(int id, const char* name, double limit_s, const std::function<Outcome()>& body) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const bool in_time = secs < limit_s;
  const bool pass = o.pass && in_time;
  if (!pass) ++failures;
  std::printf("%s  %2d. %s: %s [%.1fs, limit %.0fs%s]\n", pass ? "PASS" : "FAIL", id, name, o.detail.c_str(), secs,
              limit_s, in_time ? "" : ", over time");
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// ---- oracles ---------------------------------------------------------------

// Cyclic Jacobi on a symmetric matrix; eigenpairs sorted descending.
std::pair<Eigen::VectorXd, Eigen::MatrixXd> jacobi_eigen(Eigen::MatrixXd a) {
  const auto n = a.rows();
  Eigen::MatrixXd v = Eigen::MatrixXd::Identity(n, n);
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0;
    for (Eigen::Index p = 0; p < n; ++p)
      for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
    if (off < 1e-30) break;
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        if (std::abs(a(p, q)) < 1e-300) continue;
        const double theta = 0.5 * (a(q, q) - a(p, p)) / a(p, q);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
        const double c = 1 / std::sqrt(t * t + 1), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](auto i, auto j) { return a(i, i) > a(j, j); });
  Eigen::VectorXd values(n);
  Eigen::MatrixXd vectors(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    values(i) = a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]);
    vectors.col(i) = v.col(order[static_cast<std::size_t>(i)]);
  }
  return {values, vectors};
}

KeyedSeries keyed(const Eigen::MatrixXd& m) {
  KeyedSeries k;
  k.days = {Date{2010, 1, 4}};
  k.values = m;
  for (Eigen::Index r = 0; r < m.rows(); ++r) k.keys.push_back({0, static_cast<int>(r % kSessionLength)});
  return k;
}

// ---- simulated markets -----------------------------------------------------

SimConfig effect_market(int days, int planted, double a0, double a1, std::uint64_t seed) {
  SimConfig c;
  c.days = days;
  c.seed = seed;
  c.planted_jump_days = planted;
  c.positive_response = {a0, a1, 5.0};
  c.negative_response = {a0, a1, 5.0};
  c.moneyness_step = 0.05;
  c.quote_last_minute = parse_minute("11:30");
  return c;
}

PipelineConfig effect_pipeline() {
  PipelineConfig p;
  p.maturities = {Maturity::M3};
  p.windows = {5, 30, 60};
  return p;
}

struct EffectRun {
  std::map<int, RegressionFit> exclude;  // by window, 3m ATM-IV
  std::size_t positive = 0, negative = 0, reference = 0;
};

EffectRun effect_run(const SimConfig& sc) {
  const MarketSimulator sim(sc);
  EventStudyOptions opt;
  opt.include_first = false;
  opt.curves = false;
  const auto r = run_pipeline(sim.panel(), [&](std::size_t d) { return sim.day_quotes(d); }, sim.rates(),
                              effect_pipeline(), opt);
  EffectRun out;
  for (const auto& l : r.labels) {
    out.positive += l.cls == DayClass::PositiveJump;
    out.negative += l.cls == DayClass::NegativeJump;
    out.reference += l.cls == DayClass::NoJump;
  }
  for (const auto& row : r.study.rows) {
    if (row.variable == "ATM-IV" && row.maturity == "3m" && !row.include_first) out.exclude[row.window] = row.fit;
  }
  return out;
}

}  // namespace

int main() {
  run(1, "IV round-trip", 1.0, [] {
    double worst = 0;
    int n = 0;
    for (int i = 0; i < 10; ++i) {
      const double m = 0.80 + 0.05 * i;
      for (const double tau : {0.25, 0.5, 0.75}) {
        for (const double vol : {0.1, 0.2, 0.3, 0.4, 0.5}) {
          for (const Right right : {Right::Call, Right::Put}) {
            const double p = bs_price({100, 100 * m, tau, 0.02, 0.015, vol, right});
            worst = std::max(worst, std::abs(implied_vol(p, 100, 100 * m, tau, 0.02, 0.015, right) - vol));
            ++n;
          }
        }
      }
    }
    return Outcome{worst <= 1e-8, fmt("%d inversions, max |error| %.2e (tol 1e-8)", n, worst)};
  });

  run(2, "Dividend-yield recovery", 1.0, [] {
    double worst = 0;
    for (const double q : {0.0, 0.005, 0.03}) {
      for (const double k : {90.0, 100.0, 110.0}) {
        for (const double tau : {0.25, 0.5, 0.75}) {
          const double c = bs_price({100, k, tau, 0.02, q, 0.2, Right::Call});
          const double p = bs_price({100, k, tau, 0.02, q, 0.2, Right::Put});
          worst = std::max(worst, std::abs(implied_dividend_yield(c, p, 100, k, tau, 0.02) - q));
        }
      }
    }
    return Outcome{worst <= 1e-12, fmt("max |q error| %.2e (tol 1e-12)", worst)};
  });

  run(3, "TPS properties", 5.0, [] {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> um(0.75, 1.35), ut(0.1, 0.9), uv(0.1, 0.4);
    auto plane = [](double m, double t) { return 0.1 + 0.05 * m + 0.02 * t; };
    double affine = 0, knot = 0;
    bool monotone = true;
    for (int trial = 0; trial < 20; ++trial) {
      std::vector<IvPoint> pts(30), flat(30);
      for (std::size_t i = 0; i < 30; ++i) {
        pts[i] = {um(rng), ut(rng), uv(rng)};
        flat[i] = {pts[i].moneyness, pts[i].maturity, plane(pts[i].moneyness, pts[i].maturity)};
      }
      for (const double lambda : {0.0, 1e-6, 1e-2, 1.0}) {
        const auto model = fit_surface(flat, lambda);
        for (int j = 0; j < 50; ++j) {
          const double m = 0.9 + 0.008 * j, t = 0.3 + 0.008 * j;
          affine = std::max(affine, std::abs(model(m, t) - plane(m, t)));
        }
      }
      const auto exact = fit_surface(pts, 0.0);
      for (const auto& p : pts) knot = std::max(knot, std::abs(exact(p.moneyness, p.maturity) - p.iv));
      double previous = -1;
      for (const double lambda : {0.0, 1e-6, 1e-4, 1e-2, 1.0, 100.0}) {
        const auto model = fit_surface(pts, lambda);
        double rss = 0;
        for (const auto& p : pts) rss += std::pow(model(p.moneyness, p.maturity) - p.iv, 2);
        monotone = monotone && rss >= previous;
        previous = rss;
      }
    }
    return Outcome{affine <= 1e-9 && knot <= 1e-8 && monotone,
                   fmt("affine %.2e (tol 1e-9), knot residual %.2e (tol 1e-8), residual monotone in lambda: %s",
                       affine, knot, monotone ? "yes" : "no")};
  });

  run(4, "PCA oracle and Varimax invariants", 30.0, [] {
    std::mt19937_64 rng(4);
    std::normal_distribution<double> z;
    double eig = 0, load = 0, comm = 0, crit = 0;
    for (int trial = 0; trial < 100; ++trial) {
      Eigen::MatrixXd mix(10, 10), x(200, 10);
      for (Eigen::Index i = 0; i < 10; ++i)
        for (Eigen::Index j = 0; j < 10; ++j) mix(i, j) = z(rng) * (i == j ? 3.0 - 0.25 * i : 0.5);
      for (Eigen::Index i = 0; i < 200; ++i)
        for (Eigen::Index j = 0; j < 10; ++j) x(i, j) = z(rng);
      x = x * mix;
      const auto model = pca_fit(keyed(x), 3);
      const Eigen::MatrixXd centered = x.rowwise() - x.colwise().mean();
      const auto [values, vectors] = jacobi_eigen(centered.transpose() * centered / 199.0);
      eig = std::max(eig, (model.eigenvalues - values).cwiseAbs().maxCoeff());
      for (Eigen::Index j = 0; j < 3; ++j) {
        const double sign = model.loadings.col(j).dot(vectors.col(j)) >= 0 ? 1.0 : -1.0;
        load = std::max(load, (model.loadings.col(j) - sign * vectors.col(j)).cwiseAbs().maxCoeff());
      }
      const auto rotated = varimax_rotate(model);
      comm = std::max(comm, (rotated.loadings.rowwise().squaredNorm() - model.loadings.rowwise().squaredNorm())
                                .cwiseAbs()
                                .maxCoeff());
      crit = std::max(crit, varimax_criterion(model.loadings) - varimax_criterion(rotated.loadings));
    }
    return Outcome{eig <= 1e-8 && load <= 1e-8 && comm <= 1e-9 && crit <= 0.0,
                   fmt("eigenvalues %.2e, loadings %.2e (tol 1e-8); communalities %.2e (tol 1e-9); "
                       "max criterion decrease %.2e",
                       eig, load, comm, std::max(crit, 0.0))};
  });

  run(5, "Jump-test size", 120.0, [] {
    SimConfig c;
    c.days = 10001;  // the first day only seeds the local-volatility window
    c.seed = 5;
    c.generate_quotes = false;
    const MarketSimulator sim(c);
    const auto stats = lee_mykland_statistics(log_returns(sim.panel()), 270);
    bool ok = true;
    std::string detail;
    for (const double alpha : {0.01, 0.05}) {
      std::set<Date> flagged;
      for (const auto& e : detect_jumps(stats, kSessionLength, alpha)) {
        if (e.day != sim.days().front()) flagged.insert(e.day);
      }
      const double rate = static_cast<double>(flagged.size()) / 10000.0;
      const double bound = alpha + 2 * std::sqrt(alpha * (1 - alpha) / 10000.0);
      ok = ok && rate <= bound;
      detail += fmt("alpha=%.2f: %.4f <= %.4f; ", alpha, rate, bound);
    }
    return Outcome{ok, detail + "10000 days"};
  });

  run(6, "Jump-test power", 60.0, [] {
    SimConfig c;
    c.days = 1001;
    c.seed = 6;
    c.planted_jump_days = 1001;
    c.planted_jump_size = 8.0;
    c.generate_quotes = false;
    const MarketSimulator sim(c);
    const auto events = detect_jumps(lee_mykland_statistics(log_returns(sim.panel()), 270), kSessionLength, 0.01);
    std::map<std::pair<Date, int>, Direction> found;
    for (const auto& e : events) found[{e.day, e.minute}] = e.direction;
    std::size_t trials = 0, hits = 0, wrong_sign = 0;
    for (const auto& t : sim.truth()) {
      if (t.day == sim.days().front()) continue;
      ++trials;
      const auto it = found.find({t.day, t.minute});
      if (it == found.end()) continue;
      ++hits;
      wrong_sign += it->second != (t.sign > 0 ? Direction::Positive : Direction::Negative);
    }
    const double power = static_cast<double>(hits) / static_cast<double>(trials);
    return Outcome{trials == 1000 && power >= 0.95 && wrong_sign == 0,
                   fmt("%zu/%zu detected (%.3f >= 0.95), %zu with wrong sign", hits, trials, power, wrong_sign)};
  });

  run(7, "Planted-effect recovery", 300.0, [] {
    const double a1 = 0.3, h = 5.0;
    const auto planted = effect_run(effect_market(650, 300, 0.5, a1, 7));
    bool ok = planted.positive + planted.negative >= 290;
    std::string detail = fmt("labels %zu+/%zu-/%zu ref; ", planted.positive, planted.negative, planted.reference);
    for (const int w : {5, 30, 60}) {
      const auto it = planted.exclude.find(w);
      if (it == planted.exclude.end()) return Outcome{false, detail + fmt("no fit for W=%d", w)};
      const double target = a1 * (1 - std::exp2(-(w - 1) / h));
      const double b = it->second.beta[2], p = it->second.p_value[2];
      const bool good = b > 0 && p < 0.01 && std::abs(b / target - 1) <= 0.25;
      ok = ok && good;
      detail += fmt("W=%d bn=%.4f target %.4f (%+.1f%%) p=%.1e; ", w, b, target, 100 * (b / target - 1), p);
    }
    std::map<int, int> null_ok;
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      const auto null = effect_run(effect_market(650, 300, 0.0, 0.0, 100 + seed));
      for (const int w : {5, 30, 60}) {
        const auto it = null.exclude.find(w);
        null_ok[w] += it != null.exclude.end() && it->second.p_value[2] > 0.05;
      }
    }
    detail += "null p>0.05:";
    for (const int w : {5, 30, 60}) {
      ok = ok && null_ok[w] >= 18;
      detail += fmt(" W=%d %d/20", w, null_ok[w]);
    }
    return Outcome{ok, detail};
  });

  run(8, "Include/exclude decomposition", 1.0, [] {
    std::mt19937_64 rng(8);
    std::normal_distribution<double> z(0.0, 0.05);
    std::uniform_int_distribution<int> start(0, 120);
    std::size_t checked = 0, broken = 0;
    std::vector<double> series(kSessionLength);
    for (int day = 0; day < 200; ++day) {
      for (auto& v : series) v = z(rng);
      const int s = start(rng);
      for (const int w : kWindows) {
        ++checked;
        broken += cumulative_delta(series, s, w, true) != series[static_cast<std::size_t>(s)] +
                                                              cumulative_delta(series, s, w, false);
      }
    }
    return Outcome{broken == 0, fmt("%zu samples, %zu violations of cum(include) = dIV(jump) + cum(exclude)",
                                    checked, broken)};
  });

  run(9, "Bootstrap band", 30.0, [] {
    double worst = 0;
    bool deterministic = true;
    std::mt19937_64 rng(9);
    for (const auto [n, sigma] : std::vector<std::pair<std::size_t, double>>{{100, 1.0}, {350, 0.5}, {1000, 2.0}}) {
      std::normal_distribution<double> z(0.0, sigma);
      std::vector<std::vector<double>> curves(n, std::vector<double>(61));
      for (auto& c : curves)
        for (auto& v : c) v = z(rng);
      const auto band = bootstrap_band(curves, 7000, 0.90, 17);
      // Resampled means have sd equal to the plug-in sd of the cross-section over sqrt(N).
      for (std::size_t k = 0; k < 61; ++k) {
        double mean = 0, ss = 0;
        for (const auto& c : curves) mean += c[k];
        mean /= static_cast<double>(n);
        for (const auto& c : curves) ss += (c[k] - mean) * (c[k] - mean);
        const double closed = 1.645 * std::sqrt(ss / static_cast<double>(n)) / std::sqrt(static_cast<double>(n));
        worst = std::max(worst, std::abs(0.5 * (band.upper[k] - band.lower[k]) / closed - 1));
      }
      const auto again = bootstrap_band(curves, 7000, 0.90, 17);
      deterministic = deterministic && again.lower == band.lower && again.upper == band.upper;
    }
    return Outcome{worst <= 0.10 && deterministic,
                   fmt("max relative half-width deviation %.3f (tol 0.10), deterministic: %s", worst,
                       deterministic ? "yes" : "no")};
  });

  run(10, "Robustness driver", 600.0, [] {
    const MarketSimulator sim(effect_market(300, 140, 0.5, 0.3, 10));
    auto cfg = effect_pipeline();
    const auto smiles = build_smiles(sim.panel(), [&](std::size_t d) { return sim.day_quotes(d); }, sim.rates(), cfg);
    const auto det = detect(sim.panel(), cfg.jumps);
    const auto labels = classify_days(det.events, combined_completeness(sim.panel(), smiles, cfg), cfg.jumps);
    const auto vars = event_variables(smiles, {}, labels);
    const auto atm = std::find_if(vars.begin(), vars.end(), [](const auto& v) { return v.name == "ATM-IV"; });
    if (atm == vars.end()) return Outcome{false, "no ATM-IV variable"};
    bool ok = true;
    std::string detail;
    for (const int w : {5, 60}) {
      RedrawInputs in;
      in.labels = labels;
      in.variable = &atm->series;
      in.iv_bar = iv_levels(smiles, Maturity::M3, cfg.iv_bar_minutes);
      in.window = w;
      const auto a = reference_redraws(in, 1000, 1, 1);
      const auto b = reference_redraws(in, 1000, 1, 2);
      bool same = a.iterations == 1000 && b.iterations == 1000 && a.failed == b.failed;
      for (std::size_t j = 0; j < 4; ++j) {
        for (const auto* pair : {&a.beta[j], &a.p_value[j]}) {
          const auto& other = pair == &a.beta[j] ? b.beta[j] : b.p_value[j];
          same = same && pair->mean == other.mean && pair->sd == other.sd && pair->q025 == other.q025 &&
                 pair->q975 == other.q975;
        }
      }
      ok = ok && same && a.beta[2].q025 > 0;
      detail += fmt("W=%d identical=%s bn Q2.5%%=%.4f; ", w, same ? "yes" : "no", a.beta[2].q025);
    }
    return Outcome{ok, detail + "1000 iterations"};
  });

  run(11, "Economic-significance formula", 1.0, [] {
    const double v = economic_significance(0.218, 20.0);
    return Outcome{v == 1.09 && atm_relative_return_pct(0.218, 20.0) == 1.09, fmt("0.218 on 20 -> %.17g%%", v)};
  });

  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
