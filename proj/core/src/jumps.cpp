#include "ivjump/jumps.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numbers>
#include <sstream>

#include "ivjump/error.hpp"

namespace ivjump {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

void JumpTestConfig::validate() const {
  if (window < 3) throw Error(ErrorCode::ConfigInvalid, "jump window K must be >= 3");
  if (!(alpha > 0.0 && alpha < 1.0)) throw Error(ErrorCode::ConfigInvalid, "alpha must be in (0,1)");
  if (!in_session(cutoff_minute)) throw Error(ErrorCode::ConfigInvalid, "cutoff outside session");
  if (!in_session(completeness_end_minute)) {
    throw Error(ErrorCode::ConfigInvalid, "completeness horizon outside session");
  }
}

ReturnPanel log_returns(const UnderlyingPanel& prices) {
  ReturnPanel out;
  out.days = prices.days;
  out.returns.resize(prices.size());
  for (std::size_t d = 0; d < prices.size(); ++d) {
    const auto& p = prices.prices[d];
    auto& r = out.returns[d];
    r[0] = d > 0 ? std::log(p[0] / prices.prices[d - 1][kSessionLength - 1]) : kNaN;
    for (std::size_t s = 1; s < kSessionLength; ++s) r[s] = std::log(p[s] / p[s - 1]);
  }
  return out;
}

StatisticPanel lee_mykland_statistics(const ReturnPanel& returns, int window) {
  if (window < 3) throw Error(ErrorCode::ConfigInvalid, "jump window K must be >= 3");
  const std::size_t total = returns.size() * kSessionLength;
  if (total < static_cast<std::size_t>(window) + 2) {
    throw Error(ErrorCode::SeriesTooShort,
                std::to_string(total) + " returns for window " + std::to_string(window));
  }
  const auto products_needed = static_cast<std::size_t>(window - 2);

  StatisticPanel out;
  out.days = returns.days;
  out.values.resize(returns.size());

  // Buffer holds [previous day | current day]; products and their prefix sums
  // are indexed by the later return of each adjacent pair.
  std::vector<double> buffer;
  std::vector<std::size_t> product_at;
  std::vector<double> prefix;
  buffer.reserve(2 * kSessionLength);
  product_at.reserve(2 * kSessionLength);
  prefix.reserve(2 * kSessionLength + 1);

  for (std::size_t d = 0; d < returns.size(); ++d) {
    buffer.clear();
    if (d > 0) buffer.insert(buffer.end(), returns.returns[d - 1].begin(), returns.returns[d - 1].end());
    const std::size_t offset = buffer.size();
    buffer.insert(buffer.end(), returns.returns[d].begin(), returns.returns[d].end());

    product_at.clear();
    prefix.assign(1, 0.0);
    for (std::size_t k = 1; k < buffer.size(); ++k) {
      if (std::isfinite(buffer[k]) && std::isfinite(buffer[k - 1])) {
        product_at.push_back(k);
        prefix.push_back(prefix.back() + std::abs(buffer[k]) * std::abs(buffer[k - 1]));
      }
    }

    auto& values = out.values[d];
    for (std::size_t s = 0; s < kSessionLength; ++s) {
      values[s] = kNaN;
      const std::size_t i = offset + s;
      const double r = buffer[i];
      if (!std::isfinite(r) || d * kSessionLength + s < static_cast<std::size_t>(window)) continue;
      // Products strictly before i.
      const auto count = static_cast<std::size_t>(
          std::lower_bound(product_at.begin(), product_at.end(), i) - product_at.begin());
      if (count < products_needed) continue;
      const double sum = prefix[count] - prefix[count - products_needed];
      const double sigma = std::sqrt(sum / static_cast<double>(products_needed));
      if (sigma > 0.0) values[s] = r / sigma;
    }
  }
  return out;
}

double rejection_threshold(int observations_per_day, double alpha) {
  const double c = std::sqrt(2.0 / std::numbers::pi);
  const double log_n = std::log(static_cast<double>(observations_per_day));
  const double root = std::sqrt(2.0 * log_n);
  const double c_n = root / c - (std::log(std::numbers::pi) + std::log(log_n)) / (2.0 * c * root);
  const double s_n = 1.0 / (c * root);
  const double beta_star = -std::log(-std::log(1.0 - alpha));
  return c_n + s_n * beta_star;
}

std::vector<JumpEvent> detect_jumps(const StatisticPanel& stats, int observations_per_day,
                                    double alpha) {
  const double threshold = rejection_threshold(observations_per_day, alpha);
  std::vector<JumpEvent> events;
  for (std::size_t d = 0; d < stats.days.size(); ++d) {
    for (std::size_t s = 0; s < kSessionLength; ++s) {
      const double l = stats.values[d][s];
      if (std::isfinite(l) && std::abs(l) > threshold) {
        events.push_back({stats.days[d], static_cast<int>(s), minute_of(static_cast<int>(s)),
                          l > 0.0 ? Direction::Positive : Direction::Negative, l, s == 0});
      }
    }
  }
  return events;
}

std::string_view to_string(DayClass c) {
  switch (c) {
    case DayClass::PositiveJump: return "positive";
    case DayClass::NegativeJump: return "negative";
    case DayClass::NoJump: return "nojump";
    case DayClass::Excluded: return "excluded";
  }
  return "?";
}

std::string_view to_string(Direction d) { return d == Direction::Positive ? "positive" : "negative"; }

Completeness underlying_completeness(const UnderlyingPanel& prices) {
  Completeness out;
  out.days = prices.days;
  out.missing.resize(prices.size());
  for (std::size_t d = 0; d < prices.size(); ++d) {
    for (std::size_t s = 0; s < kSessionLength; ++s) out.missing[d][s] = std::isnan(prices.prices[d][s]);
  }
  return out;
}

std::vector<DayLabel> classify_days(std::span<const JumpEvent> events, const Completeness& completeness,
                                    const JumpTestConfig& cfg) {
  std::map<Date, std::vector<const JumpEvent*>> morning;
  for (const auto& e : events) {
    if (e.minute <= cfg.cutoff_minute) morning[e.day].push_back(&e);
  }
  const auto horizon = static_cast<std::size_t>(slot_of(cfg.completeness_end_minute));

  std::vector<DayLabel> labels;
  labels.reserve(completeness.days.size());
  for (std::size_t d = 0; d < completeness.days.size(); ++d) {
    DayLabel label{completeness.days[d], DayClass::Excluded, std::nullopt, {}};
    const auto& miss = completeness.missing[d];
    const auto present = std::count(miss.begin(), miss.end(), false);
    const auto it = morning.find(label.day);
    const std::size_t jumps = it == morning.end() ? 0 : it->second.size();
    if (static_cast<double>(present) < cfg.min_coverage * kSessionLength) {
      label.reason = "coverage";
    } else if (jumps >= 2) {
      label.reason = "multiple";
    } else if (jumps == 1) {
      const auto* e = it->second.front();
      label.cls = e->direction == Direction::Positive ? DayClass::PositiveJump : DayClass::NegativeJump;
      label.jump_minute = e->minute;
    } else if (std::any_of(miss.begin(), miss.begin() + static_cast<std::ptrdiff_t>(horizon) + 1,
                           [](bool m) { return m; })) {
      label.reason = "missing";
    } else {
      label.cls = DayClass::NoJump;
    }
    labels.push_back(std::move(label));
  }
  return labels;
}

void write_jump_report(std::ostream& out, std::span<const JumpEvent> events) {
  out << "day,minute,direction,L,overnight\n";
  for (const auto& e : events) {
    out << e.day.str() << ',' << format_minute(e.minute) << ',' << to_string(e.direction) << ','
        << format_real(e.statistic) << ',' << (e.overnight ? 1 : 0) << '\n';
  }
}

void write_label_report(std::ostream& out, std::span<const DayLabel> labels) {
  out << "day,class,jump_minute,reason\n";
  for (const auto& l : labels) {
    out << l.day.str() << ',' << to_string(l.cls) << ','
        << (l.jump_minute ? format_minute(*l.jump_minute) : std::string()) << ',' << l.reason << '\n';
  }
}

std::vector<JumpEvent> read_jump_report(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "day,minute,direction,L,overnight") {
    throw Error(ErrorCode::SchemaMismatch, "jump report header");
  }
  std::vector<JumpEvent> events;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 5) throw Error(ErrorCode::SchemaMismatch, "jump report row: " + line);
    JumpEvent e;
    e.day = Date::parse(f[0]);
    e.minute = parse_minute(f[1]);
    e.slot = slot_of(e.minute);
    e.direction = f[2] == "positive" ? Direction::Positive : Direction::Negative;
    e.statistic = std::stod(f[3]);
    e.overnight = f[4] == "1";
    events.push_back(e);
  }
  return events;
}

std::vector<DayLabel> read_label_report(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line != "day,class,jump_minute,reason") {
    throw Error(ErrorCode::SchemaMismatch, "label report header");
  }
  std::vector<DayLabel> labels;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split_csv(line);
    if (f.size() != 4) throw Error(ErrorCode::SchemaMismatch, "label report row: " + line);
    DayLabel l;
    l.day = Date::parse(f[0]);
    if (f[1] == "positive") l.cls = DayClass::PositiveJump;
    else if (f[1] == "negative") l.cls = DayClass::NegativeJump;
    else if (f[1] == "nojump") l.cls = DayClass::NoJump;
    else if (f[1] == "excluded") l.cls = DayClass::Excluded;
    else throw Error(ErrorCode::SchemaMismatch, "unknown day class '" + f[1] + "'");
    if (!f[2].empty()) l.jump_minute = parse_minute(f[2]);
    l.reason = f[3];
    labels.push_back(std::move(l));
  }
  return labels;
}

}  // namespace ivjump
