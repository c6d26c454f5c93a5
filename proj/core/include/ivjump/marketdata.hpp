#pragma once

// Minute-level market data: the three comma-separated input formats, their
// validation, and alignment onto the 09:31-16:15 session grid.

#include <array>
#include <chrono>
#include <cstddef>
#include <istream>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ivjump {

/// Calendar date backed by `std::chrono::sys_days`; text form is ISO `YYYY-MM-DD`.
class Date {
 public:
  Date() = default;
  explicit Date(std::chrono::sys_days d) : days_(d) {}
  Date(int year, unsigned month, unsigned day);

  static Date parse(std::string_view text);  // throws Error(MalformedRow)
  std::string str() const;

  std::chrono::sys_days sys() const { return days_; }
  Date plus_days(int n) const { return Date(days_ + std::chrono::days(n)); }
  bool is_weekend() const;

  friend int days_between(Date from, Date to) { return (to.days_ - from.days_).count(); }
  friend auto operator<=>(const Date&, const Date&) = default;

 private:
  std::chrono::sys_days days_{};
};

// Minutes are minutes after midnight, local exchange time.
inline constexpr int kSessionOpen = 9 * 60 + 31;    // 09:31
inline constexpr int kSessionClose = 16 * 60 + 15;  // 16:15
inline constexpr int kSessionLength = kSessionClose - kSessionOpen + 1;  // 405

int parse_minute(std::string_view hhmm);  // "HH:MM"
std::string format_minute(int minute);

constexpr int slot_of(int minute) { return minute - kSessionOpen; }
constexpr int minute_of(int slot) { return kSessionOpen + slot; }
constexpr bool in_session(int minute) { return minute >= kSessionOpen && minute <= kSessionClose; }

struct MinuteBar {
  Date day;
  int minute = kSessionOpen;
  double price = 0.0;
};

enum class Right { Call, Put };

std::string_view to_string(Right right);

struct OptionQuote {
  Date day;
  int minute = kSessionOpen;
  Date expiry;
  double strike = 0.0;
  Right right = Right::Call;
  double bid = 0.0;
  double ask = 0.0;

  double mid() const { return 0.5 * (bid + ask); }
};

class RateCurve {
 public:
  void set(Date day, double rate) { rates_[day] = rate; }
  bool has(Date day) const { return rates_.contains(day); }
  double at(Date day) const;  // throws Error(MissingRate)
  const std::map<Date, double>& entries() const { return rates_; }

 private:
  std::map<Date, double> rates_;
};

struct SessionGrid {
  Date day;
  std::vector<int> minutes;
};

SessionGrid session_grid(Date day);

// Parsers. Rows violating invariants are rejected with the offending line
// number in the error message. Output is sorted by (day, minute).
std::vector<MinuteBar> parse_underlying(std::istream& in);
std::vector<MinuteBar> parse_underlying(const std::string& path);
std::vector<OptionQuote> parse_option_quotes(std::istream& in);
std::vector<OptionQuote> parse_option_quotes(const std::string& path);
RateCurve parse_rates(std::istream& in);
RateCurve parse_rates(const std::string& path);

// Writers emit the same header and 12 significant digits for reals.
void write_underlying(std::ostream& out, std::span<const MinuteBar> bars);
void write_option_quotes(std::ostream& out, std::span<const OptionQuote> quotes);
void write_rates(std::ostream& out, const RateCurve& rates);

std::string format_real(double value);  // %.12g

/// Underlying prices on the session grid. Missing minutes stay NaN; no filling.
struct UnderlyingPanel {
  std::vector<Date> days;
  std::vector<std::array<double, kSessionLength>> prices;

  std::size_t size() const { return days.size(); }
  std::size_t index_of(Date day) const;  // npos when absent
  std::size_t missing_count(std::size_t day) const;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);
};

UnderlyingPanel align_underlying(std::span<const MinuteBar> bars);

/// Quotes of one (day, minute) as a contiguous range of a sorted quote vector.
class QuoteBook {
 public:
  explicit QuoteBook(std::vector<OptionQuote> quotes);

  std::span<const OptionQuote> at(Date day, int minute) const;
  std::span<const OptionQuote> day(Date day) const;
  std::vector<Date> days() const;
  const std::vector<OptionQuote>& all() const { return quotes_; }

 private:
  std::vector<OptionQuote> quotes_;
  std::map<std::pair<Date, int>, std::pair<std::size_t, std::size_t>> index_;
  std::map<Date, std::pair<std::size_t, std::size_t>> day_index_;
};

}  // namespace ivjump
