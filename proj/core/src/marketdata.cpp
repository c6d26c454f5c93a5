#include "ivjump/marketdata.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <tuple>

#include "ivjump/error.hpp"

namespace ivjump {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, comma - start)));
    start = comma + 1;
  }
  return out;
}

std::string at_line(std::size_t line, const std::string& msg) {
  return "line " + std::to_string(line) + ": " + msg;
}

double parse_real(std::string_view text, std::size_t line, const char* field) {
  double value = 0.0;
  const auto* first = text.data();
  const auto* last = text.data() + text.size();
  if (!text.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last || text.empty() || !std::isfinite(value)) {
    throw Error(ErrorCode::MalformedRow,
                at_line(line, std::string("bad ") + field + " '" + std::string(text) + "'"));
  }
  return value;
}

Date parse_date_at(std::string_view text, std::size_t line) {
  try {
    return Date::parse(text);
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedRow, at_line(line, e.what()));
  }
}

int parse_minute_at(std::string_view text, std::size_t line) {
  int minute = 0;
  try {
    minute = parse_minute(text);
  } catch (const Error& e) {
    throw Error(ErrorCode::MalformedRow, at_line(line, e.what()));
  }
  if (!in_session(minute)) {
    throw Error(ErrorCode::InvalidValue,
                at_line(line, "minute " + std::string(text) + " outside 09:31-16:15"));
  }
  return minute;
}

// Reads the header and yields (line number, fields) for each non-empty row.
template <typename RowFn>
void read_table(std::istream& in, std::string_view header, std::size_t columns, RowFn&& on_row) {
  std::string line;
  std::size_t line_no = 0;
  bool saw_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const auto view = trim(line);
    if (view.empty()) continue;
    if (!saw_header) {
      if (view != header) {
        throw Error(ErrorCode::MalformedRow,
                    at_line(line_no, "expected header '" + std::string(header) + "'"));
      }
      saw_header = true;
      continue;
    }
    const auto fields = split_fields(view);
    if (fields.size() != columns) {
      throw Error(ErrorCode::MalformedRow,
                  at_line(line_no, "expected " + std::to_string(columns) + " fields, got " +
                                       std::to_string(fields.size())));
    }
    on_row(line_no, fields);
  }
  if (!saw_header) {
    throw Error(ErrorCode::MalformedRow, "missing header '" + std::string(header) + "'");
  }
}

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return in;
}

Right parse_right(std::string_view text, std::size_t line) {
  std::string lower(text);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "call" || lower == "c") return Right::Call;
  if (lower == "put" || lower == "p") return Right::Put;
  throw Error(ErrorCode::UnknownRight, at_line(line, "unknown right '" + std::string(text) + "'"));
}

}  // namespace

Date::Date(int year, unsigned month, unsigned day) {
  const std::chrono::year_month_day ymd{std::chrono::year(year), std::chrono::month(month),
                                        std::chrono::day(day)};
  if (!ymd.ok()) throw Error(ErrorCode::MalformedRow, "invalid calendar date");
  days_ = std::chrono::sys_days(ymd);
}

Date Date::parse(std::string_view text) {
  text = trim(text);
  auto bad = [&] { return Error(ErrorCode::MalformedRow, "bad date '" + std::string(text) + "'"); };
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') throw bad();
  int y = 0;
  unsigned m = 0;
  unsigned d = 0;
  auto num = [&](std::size_t pos, std::size_t len, auto& out) {
    const auto [ptr, ec] = std::from_chars(text.data() + pos, text.data() + pos + len, out);
    if (ec != std::errc() || ptr != text.data() + pos + len) throw bad();
  };
  num(0, 4, y);
  num(5, 2, m);
  num(8, 2, d);
  const std::chrono::year_month_day ymd{std::chrono::year(y), std::chrono::month(m),
                                        std::chrono::day(d)};
  if (!ymd.ok()) throw bad();
  return Date(std::chrono::sys_days(ymd));
}

std::string Date::str() const {
  const std::chrono::year_month_day ymd(days_);
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

bool Date::is_weekend() const {
  const std::chrono::weekday wd(days_);
  return wd == std::chrono::Saturday || wd == std::chrono::Sunday;
}

int parse_minute(std::string_view hhmm) {
  hhmm = trim(hhmm);
  auto bad = [&] { return Error(ErrorCode::MalformedRow, "bad minute '" + std::string(hhmm) + "'"); };
  if (hhmm.size() != 5 || hhmm[2] != ':') throw bad();
  int h = 0;
  int m = 0;
  auto r1 = std::from_chars(hhmm.data(), hhmm.data() + 2, h);
  auto r2 = std::from_chars(hhmm.data() + 3, hhmm.data() + 5, m);
  if (r1.ec != std::errc() || r1.ptr != hhmm.data() + 2 || r2.ec != std::errc() ||
      r2.ptr != hhmm.data() + 5 || h < 0 || h > 23 || m < 0 || m > 59) {
    throw bad();
  }
  return h * 60 + m;
}

std::string format_minute(int minute) {
  char buf[24];
  std::snprintf(buf, sizeof buf, "%02d:%02d", minute / 60, minute % 60);
  return buf;
}

std::string_view to_string(Right right) { return right == Right::Call ? "call" : "put"; }

std::string format_real(double value) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", value);
  return buf;
}

double RateCurve::at(Date day) const {
  const auto it = rates_.find(day);
  if (it == rates_.end()) throw Error(ErrorCode::MissingRate, "no rate for " + day.str());
  return it->second;
}

SessionGrid session_grid(Date day) {
  SessionGrid grid{day, {}};
  grid.minutes.reserve(kSessionLength);
  for (int m = kSessionOpen; m <= kSessionClose; ++m) grid.minutes.push_back(m);
  return grid;
}

std::vector<MinuteBar> parse_underlying(std::istream& in) {
  std::vector<MinuteBar> bars;
  std::map<Date, int> last_minute;
  read_table(in, "date,minute,price", 3, [&](std::size_t line, const auto& f) {
    MinuteBar bar;
    bar.day = parse_date_at(f[0], line);
    bar.minute = parse_minute_at(f[1], line);
    bar.price = parse_real(f[2], line, "price");
    if (!(bar.price > 0.0)) {
      throw Error(ErrorCode::InvalidValue, at_line(line, "nonpositive price"));
    }
    const auto [it, inserted] = last_minute.try_emplace(bar.day, bar.minute);
    if (!inserted) {
      if (bar.minute == it->second) {
        throw Error(ErrorCode::DuplicateTimestamp, at_line(line, "duplicate timestamp"));
      }
      if (bar.minute < it->second) {
        throw Error(ErrorCode::NonMonotoneTimestamp, at_line(line, "non-monotone timestamp"));
      }
      it->second = bar.minute;
    }
    bars.push_back(bar);
  });
  std::stable_sort(bars.begin(), bars.end(), [](const MinuteBar& a, const MinuteBar& b) {
    return std::tie(a.day, a.minute) < std::tie(b.day, b.minute);
  });
  return bars;
}

std::vector<MinuteBar> parse_underlying(const std::string& path) {
  auto in = open_input(path);
  return parse_underlying(in);
}

std::vector<OptionQuote> parse_option_quotes(std::istream& in) {
  std::vector<OptionQuote> quotes;
  read_table(in, "date,minute,expiry,strike,right,bid,ask", 7,
             [&](std::size_t line, const auto& f) {
               OptionQuote q;
               q.day = parse_date_at(f[0], line);
               q.minute = parse_minute_at(f[1], line);
               q.expiry = parse_date_at(f[2], line);
               q.strike = parse_real(f[3], line, "strike");
               q.right = parse_right(f[4], line);
               q.bid = parse_real(f[5], line, "bid");
               q.ask = parse_real(f[6], line, "ask");
               if (!(q.strike > 0.0)) {
                 throw Error(ErrorCode::InvalidValue, at_line(line, "nonpositive strike"));
               }
               if (q.bid < 0.0 || q.ask < 0.0) {
                 throw Error(ErrorCode::InvalidValue, at_line(line, "negative bid/ask"));
               }
               if (q.bid > q.ask) throw Error(ErrorCode::CrossedQuote, at_line(line, "crossed quote"));
               if (q.expiry <= q.day) {
                 throw Error(ErrorCode::ExpiredOption, at_line(line, "expiry on/before quote date"));
               }
               quotes.push_back(q);
             });
  std::stable_sort(quotes.begin(), quotes.end(), [](const OptionQuote& a, const OptionQuote& b) {
    return std::tie(a.day, a.minute) < std::tie(b.day, b.minute);
  });
  return quotes;
}

std::vector<OptionQuote> parse_option_quotes(const std::string& path) {
  auto in = open_input(path);
  return parse_option_quotes(in);
}

RateCurve parse_rates(std::istream& in) {
  RateCurve curve;
  read_table(in, "date,rate", 2, [&](std::size_t line, const auto& f) {
    const Date day = parse_date_at(f[0], line);
    if (curve.has(day)) throw Error(ErrorCode::DuplicateTimestamp, at_line(line, "duplicate date"));
    curve.set(day, parse_real(f[1], line, "rate"));
  });
  return curve;
}

RateCurve parse_rates(const std::string& path) {
  auto in = open_input(path);
  return parse_rates(in);
}

void write_underlying(std::ostream& out, std::span<const MinuteBar> bars) {
  out << "date,minute,price\n";
  for (const auto& b : bars) {
    out << b.day.str() << ',' << format_minute(b.minute) << ',' << format_real(b.price) << '\n';
  }
}

void write_option_quotes(std::ostream& out, std::span<const OptionQuote> quotes) {
  out << "date,minute,expiry,strike,right,bid,ask\n";
  for (const auto& q : quotes) {
    out << q.day.str() << ',' << format_minute(q.minute) << ',' << q.expiry.str() << ','
        << format_real(q.strike) << ',' << to_string(q.right) << ',' << format_real(q.bid) << ','
        << format_real(q.ask) << '\n';
  }
}

void write_rates(std::ostream& out, const RateCurve& rates) {
  out << "date,rate\n";
  for (const auto& [day, r] : rates.entries()) out << day.str() << ',' << format_real(r) << '\n';
}

std::size_t UnderlyingPanel::index_of(Date day) const {
  const auto it = std::lower_bound(days.begin(), days.end(), day);
  if (it == days.end() || *it != day) return npos;
  return static_cast<std::size_t>(it - days.begin());
}

std::size_t UnderlyingPanel::missing_count(std::size_t day) const {
  return static_cast<std::size_t>(
      std::count_if(prices[day].begin(), prices[day].end(), [](double p) { return std::isnan(p); }));
}

UnderlyingPanel align_underlying(std::span<const MinuteBar> bars) {
  UnderlyingPanel panel;
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  for (const auto& bar : bars) {
    if (panel.days.empty() || panel.days.back() != bar.day) {
      if (!panel.days.empty() && bar.day < panel.days.back()) {
        throw Error(ErrorCode::NonMonotoneTimestamp, "bars not sorted by day");
      }
      panel.days.push_back(bar.day);
      panel.prices.emplace_back();
      panel.prices.back().fill(nan);
    }
    panel.prices.back()[static_cast<std::size_t>(slot_of(bar.minute))] = bar.price;
  }
  return panel;
}

QuoteBook::QuoteBook(std::vector<OptionQuote> quotes) : quotes_(std::move(quotes)) {
  std::stable_sort(quotes_.begin(), quotes_.end(), [](const OptionQuote& a, const OptionQuote& b) {
    return std::tie(a.day, a.minute) < std::tie(b.day, b.minute);
  });
  std::size_t i = 0;
  while (i < quotes_.size()) {
    std::size_t j = i;
    while (j < quotes_.size() && quotes_[j].day == quotes_[i].day &&
           quotes_[j].minute == quotes_[i].minute) {
      ++j;
    }
    index_[{quotes_[i].day, quotes_[i].minute}] = {i, j};
    auto [it, inserted] = day_index_.try_emplace(quotes_[i].day, i, j);
    if (!inserted) it->second.second = j;
    i = j;
  }
}

std::span<const OptionQuote> QuoteBook::at(Date day, int minute) const {
  const auto it = index_.find({day, minute});
  if (it == index_.end()) return {};
  return std::span<const OptionQuote>(quotes_).subspan(it->second.first,
                                                       it->second.second - it->second.first);
}

std::span<const OptionQuote> QuoteBook::day(Date day) const {
  const auto it = day_index_.find(day);
  if (it == day_index_.end()) return {};
  return std::span<const OptionQuote>(quotes_).subspan(it->second.first,
                                                       it->second.second - it->second.first);
}

std::vector<Date> QuoteBook::days() const {
  std::vector<Date> out;
  out.reserve(day_index_.size());
  for (const auto& [d, range] : day_index_) out.push_back(d);
  return out;
}

}  // namespace ivjump
