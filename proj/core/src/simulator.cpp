#include "ivjump/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ivjump/error.hpp"
#include "ivjump/pricing.hpp"

namespace ivjump {

namespace {

enum class Stream : std::uint32_t { Underlying = 1, Vol = 2 };

std::mt19937_64 day_engine(std::uint64_t seed, std::size_t day, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(day), static_cast<std::uint32_t>(stream)};
  return std::mt19937_64(seq);
}

}  // namespace

void SimConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorCode::ConfigInvalid, msg); };
  if (days < 1) fail("days must be >= 1");
  if (!(diffusion_vol > 0.0)) fail("diffusion_vol must be > 0");
  if (!(positive_response.half_life > 0.0) || !(negative_response.half_life > 0.0)) {
    fail("response half-life must be > 0");
  }
  if (!(spot0 > 0.0)) fail("spot0 must be > 0");
  if (jump_intensity < 0.0 || jump_sd < 0.0) fail("jump parameters must be nonnegative");
  if (planted_jump_days < 0 || planted_jump_days > days) fail("planted_jump_days outside [0, days]");
  if (!in_session(planted_first_minute) || !in_session(planted_last_minute) ||
      planted_first_minute > planted_last_minute) {
    fail("planted jump minutes outside session");
  }
  if (!in_session(quote_first_minute) || !in_session(quote_last_minute) ||
      quote_first_minute > quote_last_minute) {
    fail("quote window outside session");
  }
  if (maturities.empty()) fail("no maturities");
  for (const double t : maturities) {
    if (!(t > 0.0)) fail("maturities must be > 0");
  }
  if (!(moneyness_step > 0.0) || !(moneyness_low > 0.0) || moneyness_high < moneyness_low) {
    fail("bad moneyness grid");
  }
  if (half_spread < 0.0 || iv_noise < 0.0 || day_level_sd < 0.0) fail("negative noise parameter");
}

double planted_response(double minutes_since_jump, int sign, const IvResponse& response) {
  const double decay = std::exp2(-minutes_since_jump / response.half_life);
  return -static_cast<double>(sign) * (response.immediate + response.gradual * (1.0 - decay));
}

MarketSimulator::MarketSimulator(SimConfig config) : config_(std::move(config)) {
  config_.validate();
  const auto n_days = static_cast<std::size_t>(config_.days);

  for (Date d = config_.start_date; days_.size() < n_days; d = d.plus_days(1)) {
    if (!d.is_weekend()) days_.push_back(d);
  }

  // Planted days: a seed-determined subset.
  std::vector<std::size_t> order(n_days);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 master(config_.seed);
  std::shuffle(order.begin(), order.end(), master);
  std::vector<bool> planted(n_days, false);
  for (int i = 0; i < config_.planted_jump_days; ++i) planted[order[static_cast<std::size_t>(i)]] = true;

  const double minute_sd = config_.diffusion_vol / std::sqrt(252.0 * kSessionLength);
  const double slot_intensity = config_.jump_intensity / kSessionLength;

  panel_.days = days_;
  panel_.prices.resize(n_days);
  offsets_.resize(n_days);
  reference_spot_.resize(n_days);
  bars_.reserve(n_days * kSessionLength);

  double log_spot = std::log(config_.spot0);
  for (std::size_t d = 0; d < n_days; ++d) {
    reference_spot_[d] = std::exp(log_spot);
    auto rng = day_engine(config_.seed, d, Stream::Underlying);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::poisson_distribution<int> arrivals(slot_intensity > 0.0 ? slot_intensity : 1.0);
    std::normal_distribution<double> jump_size(config_.jump_mean, config_.jump_sd);
    std::uniform_int_distribution<int> planted_slot(slot_of(config_.planted_first_minute),
                                                    slot_of(config_.planted_last_minute));
    std::bernoulli_distribution coin(0.5);

    std::array<double, kSessionLength> jump_at{};
    const int forced_slot = planted[d] ? planted_slot(rng) : -1;
    const int forced_sign = coin(rng) ? 1 : -1;
    std::vector<std::pair<int, int>> jumps;  // (slot, sign)
    for (int s = 0; s < kSessionLength; ++s) {
      const double scale = s == 0 ? config_.overnight_scale : 1.0;
      double r = minute_sd * scale * gauss(rng);
      double j = 0.0;
      if (slot_intensity > 0.0) {
        const int count = arrivals(rng);
        for (int c = 0; c < count; ++c) j += jump_size(rng);
      }
      if (s == forced_slot) j += forced_sign * config_.planted_jump_size * minute_sd;
      if (j != 0.0) jumps.emplace_back(s, j > 0.0 ? 1 : -1);
      jump_at[static_cast<std::size_t>(s)] = j;
      log_spot += r + j;
      const double price = std::exp(log_spot);
      panel_.prices[d][static_cast<std::size_t>(s)] = price;
      bars_.push_back({days_[d], minute_of(s), price});
    }

    // IV level path: day shift, random walk, optional opening bump, responses.
    auto vrng = day_engine(config_.seed, d, Stream::Vol);
    std::normal_distribution<double> vgauss(0.0, 1.0);
    double walk = config_.day_level_sd * vgauss(vrng);
    auto& offset = offsets_[d];
    for (int s = 0; s < kSessionLength; ++s) {
      walk += config_.iv_noise * vgauss(vrng);
      double points = walk + config_.opening_bump * std::exp(-s / 10.0);
      for (const auto& [slot, sign] : jumps) {
        if (s >= slot) {
          const auto& resp = sign > 0 ? config_.positive_response : config_.negative_response;
          points += planted_response(s - slot, sign, resp);
        }
      }
      offset[static_cast<std::size_t>(s)] = points / 100.0;
    }
    for (const auto& [slot, sign] : jumps) {
      const auto& resp = sign > 0 ? config_.positive_response : config_.negative_response;
      truth_.push_back({days_[d], minute_of(slot), sign, resp.immediate, resp.gradual, resp.half_life});
    }
  }
}

RateCurve MarketSimulator::rates() const {
  RateCurve curve;
  for (const auto d : days_) curve.set(d, config_.rate);
  return curve;
}

double MarketSimulator::truth_iv(std::size_t day, int slot, double moneyness) const {
  const double x = moneyness - 1.0;
  const auto& sm = config_.smile;
  return sm.level + sm.skew * x + sm.curvature * x * x + offsets_[day][static_cast<std::size_t>(slot)];
}

std::vector<OptionQuote> MarketSimulator::day_quotes(std::size_t day) const {
  std::vector<OptionQuote> quotes;
  if (!config_.generate_quotes) return quotes;
  const Date date = days_[day];
  const double ref = reference_spot_[day];
  std::vector<double> strikes;
  const auto steps = static_cast<int>(
      std::floor((config_.moneyness_high - config_.moneyness_low) / config_.moneyness_step + 1e-9));
  for (int i = 0; i <= steps; ++i) strikes.push_back(ref * (config_.moneyness_low + i * config_.moneyness_step));
  std::vector<std::pair<Date, double>> expiries;
  for (const double t : config_.maturities) {
    const Date e = date.plus_days(static_cast<int>(std::lround(t * 365.0)));
    expiries.emplace_back(e, days_between(date, e) / 365.0);
  }

  const int first = slot_of(config_.quote_first_minute);
  const int last = slot_of(config_.quote_last_minute);
  quotes.reserve(static_cast<std::size_t>(last - first + 1) * strikes.size() * expiries.size() * 2);
  for (int s = first; s <= last; ++s) {
    const double spot = panel_.prices[day][static_cast<std::size_t>(s)];
    for (const auto& [expiry, tau] : expiries) {
      for (const double k : strikes) {
        const double iv = truth_iv(day, s, k / spot);
        for (const Right right : {Right::Call, Right::Put}) {
          const double price =
              bs_price({spot, k, tau, config_.rate, config_.dividend, iv, right});
          quotes.push_back({date, minute_of(s), expiry, k, right,
                            std::max(price - config_.half_spread, 0.0), price + config_.half_spread});
        }
      }
    }
  }
  return quotes;
}

SimOutput simulate_market(const SimConfig& config) {
  const MarketSimulator sim(config);
  SimOutput out;
  out.bars = sim.bars();
  out.rates = sim.rates();
  out.truth = sim.truth();
  for (std::size_t d = 0; d < sim.days().size(); ++d) {
    auto q = sim.day_quotes(d);
    out.quotes.insert(out.quotes.end(), q.begin(), q.end());
  }
  return out;
}

void write_truth_log(std::ostream& out, const std::vector<TruthJump>& truth) {
  out << "day,minute,sign,a0,a1,h\n";
  for (const auto& t : truth) {
    out << t.day.str() << ',' << format_minute(t.minute) << ',' << t.sign << ',' << format_real(t.a0)
        << ',' << format_real(t.a1) << ',' << format_real(t.half_life) << '\n';
  }
}

}  // namespace ivjump
