#pragma once

// Nonparametric return-jump detection on minute log-returns (bipower-scaled
// statistic with extreme-value rejection threshold) and morning labeling.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ivjump/marketdata.hpp"

namespace ivjump {

struct JumpTestConfig {
  int window = 270;                       // K, local-volatility window in returns
  double alpha = 0.01;                    // significance level
  int cutoff_minute = 10 * 60 + 30;       // jumps after this minute are ignored
  int completeness_end_minute = 11 * 60 + 30;  // no-jump days need data through here
  double min_coverage = 0.9;              // fraction of session minutes a day must have

  void validate() const;  // throws Error(ConfigInvalid)
};

/// Day-structured minute log-returns. Slot 0 holds the overnight return
/// (previous 16:15 close to 09:31); slot i > 0 is log(S_i / S_{i-1}).
/// Missing returns are NaN.
struct ReturnPanel {
  std::vector<Date> days;
  std::vector<std::array<double, kSessionLength>> returns;

  std::size_t size() const { return days.size(); }
};

ReturnPanel log_returns(const UnderlyingPanel& prices);

/// Statistic panel aligned with a ReturnPanel; NaN where undefined.
struct StatisticPanel {
  std::vector<Date> days;
  std::vector<std::array<double, kSessionLength>> values;
};

/// L(i) = r_i / sigma(i), sigma(i)^2 = (1/(K-2)) sum_{j=i-K+2}^{i-1} |r_j||r_{j-1}|.
/// The window reaches back at most into the previous day; products touching
/// a missing return are skipped and the window extends further back. L is
/// undefined when K-2 products are unavailable, when sigma is zero, and for
/// the first K returns of the series. Throws Error(SeriesTooShort).
StatisticPanel lee_mykland_statistics(const ReturnPanel& returns, int window);

/// Rejection level for |L| given n observations per day:
/// C_n + S_n * (-log(-log(1 - alpha))).
double rejection_threshold(int observations_per_day, double alpha);

enum class Direction { Positive, Negative };

struct JumpEvent {
  Date day;
  int slot = 0;
  int minute = kSessionOpen;
  Direction direction = Direction::Positive;
  double statistic = 0.0;
  bool overnight = false;
};

std::vector<JumpEvent> detect_jumps(const StatisticPanel& stats, int observations_per_day,
                                    double alpha);

enum class DayClass { PositiveJump, NegativeJump, NoJump, Excluded };

std::string_view to_string(DayClass c);
std::string_view to_string(Direction d);

struct DayLabel {
  Date day;
  DayClass cls = DayClass::Excluded;
  std::optional<int> jump_minute;
  std::string reason;  // "multiple", "missing", "coverage" for Excluded days
};

/// Per-day data completeness: true where the slot is missing.
struct Completeness {
  std::vector<Date> days;
  std::vector<std::array<bool, kSessionLength>> missing;
};

Completeness underlying_completeness(const UnderlyingPanel& prices);

/// Labels every day of `completeness`. Jumps after the cutoff are ignored;
/// one pre-cutoff jump gives Positive/NegativeJump, two or more exclude the
/// day; jump-free days must have no missing slot through
/// `completeness_end_minute` and enough session coverage.
std::vector<DayLabel> classify_days(std::span<const JumpEvent> events, const Completeness& completeness,
                                    const JumpTestConfig& cfg);

// Report formats: `day,minute,direction,L,overnight` and
// `day,class,jump_minute,reason`.
void write_jump_report(std::ostream& out, std::span<const JumpEvent> events);
void write_label_report(std::ostream& out, std::span<const DayLabel> labels);
std::vector<JumpEvent> read_jump_report(std::istream& in);
std::vector<DayLabel> read_label_report(std::istream& in);

}  // namespace ivjump
