#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "ivjump/error.hpp"

namespace ivjump::cli {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

[[noreturn]] void invalid(const std::string& key, const std::string& value, const char* expected) {
  throw Error(ErrorCode::ConfigInvalid, key + " = '" + value + "': expected " + expected);
}

double as_real(const Settings& s, const std::string& key) {
  const auto& v = s.get(key);
  std::size_t used = 0;
  try {
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  invalid(key, v, "a number");
}

long long as_integer(const Settings& s, const std::string& key) {
  const auto& v = s.get(key);
  std::size_t used = 0;
  try {
    const long long n = std::stoll(v, &used);
    if (used == v.size()) return n;
  } catch (const std::exception&) {
  }
  invalid(key, v, "an integer");
}

int as_int(const Settings& s, const std::string& key) { return static_cast<int>(as_integer(s, key)); }

bool as_bool(const Settings& s, const std::string& key) {
  const auto& v = s.get(key);
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  invalid(key, v, "true or false");
}

int as_minute(const Settings& s, const std::string& key) {
  try {
    return parse_minute(s.get(key));
  } catch (const Error&) {
    invalid(key, s.get(key), "HH:MM");
  }
}

std::vector<std::string> as_list(const Settings& s, const std::string& key) {
  std::vector<std::string> out;
  std::stringstream ss(s.get(key));
  for (std::string item; std::getline(ss, item, ',');) {
    if (auto t = trim(item); !t.empty()) out.push_back(t);
  }
  return out;
}

std::vector<int> as_int_list(const Settings& s, const std::string& key) {
  std::vector<int> out;
  for (const auto& item : as_list(s, key)) {
    std::size_t used = 0;
    try {
      const int n = std::stoi(item, &used);
      if (used == item.size()) {
        out.push_back(n);
        continue;
      }
    } catch (const std::exception&) {
    }
    invalid(key, s.get(key), "a comma-separated list of integers");
  }
  return out;
}

}  // namespace

Settings::Settings() {
  values_ = {
      {"output_dir", "out"},
      {"underlying", ""},
      {"options", ""},
      {"rates", ""},
      {"seed", "1"},
      {"jobs", "1"},
      {"maturities", "3m,6m,9m"},
      {"lambda", "1e-6"},
      {"atm_band", "0.005"},
      {"hull_margin", "0.05"},
      {"jump.window", "270"},
      {"jump.alpha", "0.01"},
      {"jump.cutoff", "10:30"},
      {"jump.completeness_end", "11:30"},
      {"jump.min_coverage", "0.9"},
      {"analysis.first", "09:31"},
      {"analysis.last", "11:30"},
      {"iv_bar.minutes", "60"},
      {"iv_bar.same_maturity", "true"},
      {"varimax.kaiser", "false"},
      {"windows", "5,15,20,30,60"},
      {"bootstrap.draws", "7000"},
      {"bootstrap.level", "0.9"},
      {"std_errors", "classical"},
      {"robustness.iterations", "1000"},
      {"robustness.windows", "5,60"},
      {"robustness.alpha", "0.05"},
      {"robustness.extended_cutoff", "12:30"},
      {"sim.days", "60"},
      {"sim.start_date", "2008-01-02"},
      {"sim.spot", "1300"},
      {"sim.diffusion_vol", "0.15"},
      {"sim.jump_intensity", "0"},
      {"sim.jump_mean", "0"},
      {"sim.jump_sd", "0.005"},
      {"sim.planted_jump_days", "0"},
      {"sim.planted_jump_size", "10"},
      {"sim.immediate", "0"},
      {"sim.gradual", "0"},
      {"sim.half_life", "5"},
      {"sim.smile_level", "0.2"},
      {"sim.smile_skew", "-0.2"},
      {"sim.smile_curvature", "0.5"},
      {"sim.iv_noise", "0.03"},
      {"sim.day_level_sd", "1"},
      {"sim.rate", "0.02"},
      {"sim.dividend", "0.015"},
      {"sim.half_spread", "0"},
      {"sim.moneyness_step", "0.025"},
      {"sim.quote_last_minute", "13:30"},
  };
}

void Settings::load(std::istream& in, const std::string& origin) {
  int line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    const std::string body = trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorCode::ConfigInvalid, origin + ":" + std::to_string(line_no) + ": expected key = value");
    }
    try {
      set(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(ErrorCode::ConfigInvalid, origin + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

void Settings::load_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open config " + path);
  load(in, path);
}

void Settings::set(const std::string& key, const std::string& value) {
  const auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::ConfigInvalid, "unknown key '" + key + "'");
  it->second = value;
}

const std::string& Settings::get(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) throw Error(ErrorCode::ConfigInvalid, "unknown key '" + key + "'");
  return it->second;
}

void Settings::write(std::ostream& out) const {
  for (const auto& [k, v] : values_) out << k << " = " << v << '\n';
}

PipelineConfig pipeline_config(const Settings& s) {
  PipelineConfig c;
  c.surface.lambda = as_real(s, "lambda");
  c.surface.atm_band = as_real(s, "atm_band");
  c.surface.hull_margin = as_real(s, "hull_margin");
  c.jumps.window = as_int(s, "jump.window");
  c.jumps.alpha = as_real(s, "jump.alpha");
  c.jumps.cutoff_minute = as_minute(s, "jump.cutoff");
  c.jumps.completeness_end_minute = as_minute(s, "jump.completeness_end");
  c.jumps.min_coverage = as_real(s, "jump.min_coverage");
  c.maturities.clear();
  for (const auto& m : as_list(s, "maturities")) c.maturities.push_back(parse_maturity(m));
  c.analysis_first_minute = as_minute(s, "analysis.first");
  c.analysis_last_minute = as_minute(s, "analysis.last");
  c.iv_bar_minutes = as_int(s, "iv_bar.minutes");
  c.iv_bar_same_maturity = as_bool(s, "iv_bar.same_maturity");
  c.varimax.kaiser_normalize = as_bool(s, "varimax.kaiser");
  c.windows = as_int_list(s, "windows");
  c.bootstrap_draws = as_int(s, "bootstrap.draws");
  c.bootstrap_level = as_real(s, "bootstrap.level");
  c.seed = static_cast<std::uint64_t>(as_integer(s, "seed"));
  c.robustness_iterations = as_int(s, "robustness.iterations");
  c.robustness_windows = as_int_list(s, "robustness.windows");
  c.robustness_alpha = as_real(s, "robustness.alpha");
  c.extended_cutoff_minute = as_minute(s, "robustness.extended_cutoff");
  const auto& se = s.get("std_errors");
  if (se == "classical") {
    c.std_errors = StdErrorKind::Classical;
  } else if (se == "hc1") {
    c.std_errors = StdErrorKind::HC1;
  } else {
    invalid("std_errors", se, "classical or hc1");
  }
  c.jobs = as_int(s, "jobs");
  if (c.jobs < 1) invalid("jobs", s.get("jobs"), "a positive integer");
  c.validate();
  return c;
}

SimConfig sim_config(const Settings& s) {
  SimConfig c;
  c.days = as_int(s, "sim.days");
  c.seed = static_cast<std::uint64_t>(as_integer(s, "seed"));
  try {
    c.start_date = Date::parse(s.get("sim.start_date"));
  } catch (const Error&) {
    invalid("sim.start_date", s.get("sim.start_date"), "YYYY-MM-DD");
  }
  c.spot0 = as_real(s, "sim.spot");
  c.diffusion_vol = as_real(s, "sim.diffusion_vol");
  c.jump_intensity = as_real(s, "sim.jump_intensity");
  c.jump_mean = as_real(s, "sim.jump_mean");
  c.jump_sd = as_real(s, "sim.jump_sd");
  c.planted_jump_days = as_int(s, "sim.planted_jump_days");
  c.planted_jump_size = as_real(s, "sim.planted_jump_size");
  const IvResponse response{as_real(s, "sim.immediate"), as_real(s, "sim.gradual"), as_real(s, "sim.half_life")};
  c.positive_response = response;
  c.negative_response = response;
  c.smile = {as_real(s, "sim.smile_level"), as_real(s, "sim.smile_skew"), as_real(s, "sim.smile_curvature")};
  c.iv_noise = as_real(s, "sim.iv_noise");
  c.day_level_sd = as_real(s, "sim.day_level_sd");
  c.rate = as_real(s, "sim.rate");
  c.dividend = as_real(s, "sim.dividend");
  c.half_spread = as_real(s, "sim.half_spread");
  c.moneyness_step = as_real(s, "sim.moneyness_step");
  c.quote_last_minute = as_minute(s, "sim.quote_last_minute");
  c.validate();
  return c;
}

Paths resolve_paths(const Settings& s) {
  Paths p;
  p.out = s.get("output_dir");
  auto pick = [&](const std::string& key, const char* name) {
    const auto& v = s.get(key);
    return v.empty() ? p.out / name : std::filesystem::path(v);
  };
  p.underlying = pick("underlying", "underlying.csv");
  p.options = pick("options", "options.csv");
  p.rates = pick("rates", "rates.csv");
  return p;
}

}  // namespace ivjump::cli
