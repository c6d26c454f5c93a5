#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "ivjump/error.hpp"
#include "ivjump/marketdata.hpp"

using namespace ivjump;

namespace {

template <typename Fn>
ErrorCode code_of(Fn&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

std::string message_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.what();
  }
  return {};
}

}  // namespace

TEST(Underlying, ValidRowsKeepOrder) {
  std::istringstream in("date,minute,price\n2010-01-04,09:31,100\n2010-01-04,09:32,100.5\n2010-01-04,09:33,99.75\n");
  const auto bars = parse_underlying(in);
  ASSERT_EQ(bars.size(), 3u);
  EXPECT_EQ(bars[0].minute, parse_minute("09:31"));
  EXPECT_EQ(bars[2].minute, parse_minute("09:33"));
  EXPECT_DOUBLE_EQ(bars[1].price, 100.5);
}

TEST(Underlying, NegativePriceNamesRow) {
  const auto msg = message_of([] {
    std::istringstream in("date,minute,price\n2010-01-04,09:31,100\n2010-01-04,09:32,-1\n");
    parse_underlying(in);
  });
  EXPECT_NE(msg.find("line 3"), std::string::npos) << msg;
}

TEST(Underlying, DuplicateMinute) {
  const auto msg = message_of([] {
    std::istringstream in("date,minute,price\n2010-01-04,09:31,100\n2010-01-04,09:31,101\n");
    parse_underlying(in);
  });
  EXPECT_NE(msg.find("duplicate timestamp"), std::string::npos);
}

TEST(Underlying, OutOfOrderAndOffSession) {
  EXPECT_EQ(code_of([] {
              std::istringstream in("date,minute,price\n2010-01-04,09:35,100\n2010-01-04,09:32,101\n");
              parse_underlying(in);
            }),
            ErrorCode::NonMonotoneTimestamp);
  EXPECT_EQ(code_of([] {
              std::istringstream in("date,minute,price\n2010-01-04,16:16,100\n");
              parse_underlying(in);
            }),
            ErrorCode::InvalidValue);
  EXPECT_EQ(code_of([] {
              std::istringstream in("date,minute,price\n2010-01-04,09:31\n");
              parse_underlying(in);
            }),
            ErrorCode::MalformedRow);
}

TEST(OptionQuotes, MidIsMean) {
  std::istringstream in("date,minute,expiry,strike,right,bid,ask\n2010-01-04,09:31,2010-04-05,1100,call,1.0,1.2\n");
  const auto q = parse_option_quotes(in);
  ASSERT_EQ(q.size(), 1u);
  EXPECT_DOUBLE_EQ(q[0].mid(), 1.1);
}

TEST(OptionQuotes, Rejections) {
  EXPECT_EQ(code_of([] {
              std::istringstream in("date,minute,expiry,strike,right,bid,ask\n2010-01-04,09:31,2010-04-05,1100,call,1.2,1.0\n");
              parse_option_quotes(in);
            }),
            ErrorCode::CrossedQuote);
  EXPECT_EQ(code_of([] {
              std::istringstream in("date,minute,expiry,strike,right,bid,ask\n2010-01-04,09:31,2010-04-05,1100,straddle,1,2\n");
              parse_option_quotes(in);
            }),
            ErrorCode::UnknownRight);
  EXPECT_EQ(code_of([] {
              std::istringstream in("date,minute,expiry,strike,right,bid,ask\n2010-01-04,09:31,2010-01-04,1100,put,1,2\n");
              parse_option_quotes(in);
            }),
            ErrorCode::ExpiredOption);
}

TEST(OptionQuotes, RightIsCaseInsensitive) {
  std::istringstream in(
      "date,minute,expiry,strike,right,bid,ask\n"
      "2010-01-04,09:31,2010-04-05,1100,CALL,1,2\n"
      "2010-01-04,09:31,2010-04-05,1100,Put,1,2\n"
      "2010-01-04,09:31,2010-04-05,1100,c,1,2\n");
  const auto q = parse_option_quotes(in);
  EXPECT_EQ(q[0].right, Right::Call);
  EXPECT_EQ(q[1].right, Right::Put);
  EXPECT_EQ(q[2].right, Right::Call);
}

TEST(Rates, ParseAndMissing) {
  std::istringstream in("date,rate\n2010-01-04,0.02\n");
  const auto r = parse_rates(in);
  EXPECT_DOUBLE_EQ(r.at(Date{2010, 1, 4}), 0.02);
  EXPECT_EQ(code_of([&] { r.at(Date{2010, 1, 5}); }), ErrorCode::MissingRate);
}

TEST(SessionGrid, Shape) {
  const auto g = session_grid(Date{2010, 1, 4});
  ASSERT_EQ(g.minutes.size(), 405u);
  EXPECT_EQ(format_minute(g.minutes.front()), "09:31");
  EXPECT_EQ(format_minute(g.minutes.back()), "16:15");
}

TEST(Align, GapsStayMissing) {
  std::vector<MinuteBar> bars{{Date{2010, 1, 4}, parse_minute("09:31"), 100.0},
                              {Date{2010, 1, 4}, parse_minute("09:33"), 101.0}};
  const auto p = align_underlying(bars);
  ASSERT_EQ(p.size(), 1u);
  EXPECT_TRUE(std::isnan(p.prices[0][1]));
  EXPECT_EQ(p.missing_count(0), 403u);
}

// Write-then-parse reproduces random valid inputs.
TEST(RoundTrip, RandomFiles) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.5, 2000.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<MinuteBar> bars;
    std::vector<OptionQuote> quotes;
    RateCurve rates;
    Date day{2011, 3, 1};
    for (int d = 0; d < 3; ++d, day = day.plus_days(1)) {
      rates.set(day, u(rng) / 1e5);
      for (int m = kSessionOpen; m <= kSessionClose; m += 1 + static_cast<int>(rng() % 7)) {
        bars.push_back({day, m, u(rng)});
        const double bid = u(rng);
        quotes.push_back({day, m, day.plus_days(30 + static_cast<int>(rng() % 300)), u(rng),
                          rng() % 2 ? Right::Call : Right::Put, bid, bid + u(rng) / 100.0});
      }
    }
    std::stringstream b, q, r;
    write_underlying(b, bars);
    write_option_quotes(q, quotes);
    write_rates(r, rates);
    const auto bars2 = parse_underlying(b);
    const auto quotes2 = parse_option_quotes(q);
    const auto rates2 = parse_rates(r);
    ASSERT_EQ(bars2.size(), bars.size());
    for (std::size_t i = 0; i < bars.size(); ++i) {
      EXPECT_EQ(bars2[i].day, bars[i].day);
      EXPECT_EQ(bars2[i].minute, bars[i].minute);
      EXPECT_NEAR(bars2[i].price, bars[i].price, 1e-9 * bars[i].price);
    }
    ASSERT_EQ(quotes2.size(), quotes.size());
    for (std::size_t i = 0; i < quotes.size(); ++i) {
      EXPECT_EQ(quotes2[i].expiry, quotes[i].expiry);
      EXPECT_EQ(quotes2[i].right, quotes[i].right);
      EXPECT_NEAR(quotes2[i].ask, quotes[i].ask, 1e-9 * quotes[i].ask);
    }
    EXPECT_EQ(rates2.entries().size(), rates.entries().size());
  }
}

TEST(QuoteBookTest, IndexesByMinute) {
  const Date d{2010, 1, 4};
  QuoteBook book({{d, 572, d.plus_days(90), 1000, Right::Call, 1, 2},
                  {d, 571, d.plus_days(90), 1000, Right::Put, 1, 2},
                  {d, 572, d.plus_days(90), 1010, Right::Call, 1, 2}});
  EXPECT_EQ(book.at(d, 571).size(), 1u);
  EXPECT_EQ(book.at(d, 572).size(), 2u);
  EXPECT_EQ(book.at(d, 573).size(), 0u);
  EXPECT_EQ(book.day(d).size(), 3u);
}

TEST(DateTest, ParseAndFormat) {
  EXPECT_EQ(Date::parse("2008-02-29").str(), "2008-02-29");
  EXPECT_THROW(Date::parse("2009-02-29"), Error);
  EXPECT_TRUE(Date(2010, 1, 9).is_weekend());
  EXPECT_EQ(days_between(Date{2010, 1, 1}, Date{2010, 4, 1}), 90);
}
