#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sstream>

#include "cli.hpp"
#include "ivjump/error.hpp"
#include "ivjump/surface.hpp"

namespace ivjump::cli {

namespace {

constexpr double kWidth = 720, kHeight = 440;
constexpr double kLeft = 70, kRight = 180, kTop = 40, kBottom = 50;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_text(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", std::abs(v) < 1e-12 ? 0.0 : v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  for (const char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

double nice_step(double span) {
  const double raw = span / 5.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (const double f : {1.0, 2.0, 2.5, 5.0}) {
    if (raw <= f * mag) return f * mag;
  }
  return 10.0 * mag;
}

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (std::isfinite(v)) lo = std::min(lo, v), hi = std::max(hi, v);
  }
  void settle(double pad) {
    if (!(lo <= hi)) lo = 0, hi = 1;
    if (hi - lo < 1e-12) lo -= 0.5, hi += 0.5;
    const double p = pad * (hi - lo);
    lo -= p, hi += p;
  }
};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double cell_value(const std::string& cell, int line_no) {
  if (cell.empty()) return kNaN;
  std::size_t used = 0;
  try {
    const double v = std::stod(cell, &used);
    if (used == cell.size()) return v;
  } catch (const std::exception&) {
  }
  throw Error(ErrorCode::SchemaMismatch, "line " + std::to_string(line_no) + ": bad number '" + cell + "'");
}

}  // namespace

std::string render_svg(const Chart& chart) {
  Range xr, yr;
  for (const auto& s : chart.lines) {
    for (const double x : s.x) xr.add(x);
    for (const double y : s.y) yr.add(y);
  }
  for (const double x : chart.band_x) xr.add(x);
  for (const double y : chart.band_lo) yr.add(y);
  for (const double y : chart.band_hi) yr.add(y);
  xr.settle(0.0);
  yr.settle(0.05);

  const double pw = kWidth - kLeft - kRight, ph = kHeight - kTop - kBottom;
  auto px = [&](double x) { return kLeft + (x - xr.lo) / (xr.hi - xr.lo) * pw; };
  auto py = [&](double y) { return kTop + (yr.hi - y) / (yr.hi - yr.lo) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
    << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">"
    << escape(chart.title) << "</text>\n";

  // Band below everything else.
  if (!chart.band_x.empty()) {
    std::ostringstream pts;
    for (std::size_t i = 0; i < chart.band_x.size(); ++i) pts << num(px(chart.band_x[i])) << ',' << num(py(chart.band_hi[i])) << ' ';
    for (std::size_t i = chart.band_x.size(); i-- > 0;) pts << num(px(chart.band_x[i])) << ',' << num(py(chart.band_lo[i])) << ' ';
    o << "<polygon points=\"" << pts.str() << "\" fill=\"#bdbdbd\" fill-opacity=\"0.5\" stroke=\"none\"/>\n";
  }

  // Axes and ticks.
  o << "<rect x=\"" << num(kLeft) << "\" y=\"" << num(kTop) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
    << "\" fill=\"none\" stroke=\"black\"/>\n";
  const double xs = nice_step(xr.hi - xr.lo), ys = nice_step(yr.hi - yr.lo);
  for (double t = std::ceil(xr.lo / xs - 1e-9) * xs; t <= xr.hi + 1e-9 * xs; t += xs) {
    o << "<line x1=\"" << num(px(t)) << "\" y1=\"" << num(kTop + ph) << "\" x2=\"" << num(px(t)) << "\" y2=\""
      << num(kTop + ph + 5) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(px(t)) << "\" y=\"" << num(kTop + ph + 18) << "\" text-anchor=\"middle\">" << tick_text(t)
      << "</text>\n";
  }
  for (double t = std::ceil(yr.lo / ys - 1e-9) * ys; t <= yr.hi + 1e-9 * ys; t += ys) {
    o << "<line x1=\"" << num(kLeft - 5) << "\" y1=\"" << num(py(t)) << "\" x2=\"" << num(kLeft) << "\" y2=\""
      << num(py(t)) << "\" stroke=\"black\"/>\n";
    o << "<text x=\"" << num(kLeft - 8) << "\" y=\"" << num(py(t) + 4) << "\" text-anchor=\"end\">" << tick_text(t)
      << "</text>\n";
  }
  if (yr.lo < 0 && yr.hi > 0) {
    o << "<line x1=\"" << num(kLeft) << "\" y1=\"" << num(py(0)) << "\" x2=\"" << num(kLeft + pw) << "\" y2=\""
      << num(py(0)) << "\" stroke=\"#888888\" stroke-width=\"0.5\"/>\n";
  }
  o << "<text x=\"" << num(kLeft + pw / 2) << "\" y=\"" << num(kHeight - 10) << "\" text-anchor=\"middle\">"
    << escape(chart.x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << num(kTop + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << num(kTop + ph / 2) << ")\">" << escape(chart.y_label) << "</text>\n";

  // Lines; a missing value starts a new segment.
  for (const auto& s : chart.lines) {
    std::vector<std::string> segments(1);
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.y[i])) {
        if (!segments.back().empty()) segments.emplace_back();
        continue;
      }
      segments.back() += num(px(s.x[i])) + ',' + num(py(s.y[i])) + ' ';
    }
    for (const auto& seg : segments) {
      if (seg.empty()) continue;
      o << "<polyline points=\"" << seg << "\" fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.8\""
        << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
    }
  }

  // Legend.
  double ly = kTop + 10;
  for (const auto& s : chart.lines) {
    o << "<line x1=\"" << num(kWidth - kRight + 15) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(kWidth - kRight + 40)
      << "\" y2=\"" << num(ly) << "\" stroke=\"" << s.color << "\" stroke-width=\"1.8\""
      << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
    o << "<text x=\"" << num(kWidth - kRight + 46) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.name) << "</text>\n";
    ly += 20;
  }
  if (!chart.band_x.empty()) {
    o << "<rect x=\"" << num(kWidth - kRight + 15) << "\" y=\"" << num(ly - 6) << "\" width=\"25\" height=\"12\""
      << " fill=\"#bdbdbd\" fill-opacity=\"0.5\"/>\n";
    o << "<text x=\"" << num(kWidth - kRight + 46) << "\" y=\"" << num(ly + 4) << "\">reference band</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

Chart curve_chart(std::istream& dump, const std::string& title, std::vector<std::string>& warnings) {
  std::string line;
  if (!std::getline(dump, line) || line != "minute,pos_mean,neg_mean,ref_mean,band_lo,band_hi") {
    throw Error(ErrorCode::SchemaMismatch, "unexpected curve dump header '" + line + "'");
  }
  Chart c;
  c.title = title;
  c.x_label = "minutes after jump interval start";
  c.y_label = "cumulative change (vol points)";
  c.lines = {{"positive jumps", "#1f4fbf", false, {}, {}},
             {"negative jumps", "#c62828", false, {}, {}},
             {"no-jump reference", "#424242", true, {}, {}}};
  std::vector<double> bx, blo, bhi;
  bool band_gap = false;
  int line_no = 1;
  while (std::getline(dump, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 6) {
      throw Error(ErrorCode::SchemaMismatch, "line " + std::to_string(line_no) + ": expected 6 columns");
    }
    const double x = cell_value(cells[0], line_no);
    for (std::size_t k = 0; k < 3; ++k) {
      c.lines[k].x.push_back(x);
      c.lines[k].y.push_back(cell_value(cells[k + 1], line_no));
    }
    const double lo = cell_value(cells[4], line_no), hi = cell_value(cells[5], line_no);
    if (std::isfinite(lo) && std::isfinite(hi)) {
      bx.push_back(x), blo.push_back(lo), bhi.push_back(hi);
    } else {
      band_gap = true;
    }
  }
  if (bx.empty()) {
    warnings.push_back(title + ": band columns empty, band omitted");
  } else {
    if (band_gap) warnings.push_back(title + ": band has missing minutes, drawn over available minutes");
    c.band_x = std::move(bx), c.band_lo = std::move(blo), c.band_hi = std::move(bhi);
  }
  return c;
}

std::map<std::string, Chart> loading_charts(
    std::istream& dump, const std::map<std::pair<std::string, std::string>, std::string>& labels) {
  std::string line;
  if (!std::getline(dump, line) || line != "maturity,component,bin_lo,loading") {
    throw Error(ErrorCode::SchemaMismatch, "unexpected loadings header '" + line + "'");
  }
  static const char* colors[] = {"#1f4fbf", "#c62828", "#2e7d32", "#6a1b9a", "#ef6c00"};
  std::map<std::string, Chart> charts;
  std::map<std::string, std::map<std::string, std::size_t>> index;
  int line_no = 1;
  while (std::getline(dump, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != 4) {
      throw Error(ErrorCode::SchemaMismatch, "line " + std::to_string(line_no) + ": expected 4 columns");
    }
    auto& chart = charts[cells[0]];
    if (chart.title.empty()) {
      chart.title = "Rotated loadings, " + cells[0];
      chart.x_label = "moneyness bin center";
      chart.y_label = "loading";
    }
    auto& slots = index[cells[0]];
    auto [it, fresh] = slots.try_emplace(cells[1], chart.lines.size());
    if (fresh) {
      Series s;
      s.name = cells[1];
      if (const auto l = labels.find({cells[0], cells[1]}); l != labels.end()) s.name += " (" + l->second + ")";
      s.color = colors[chart.lines.size() % std::size(colors)];
      chart.lines.push_back(std::move(s));
    }
    auto& s = chart.lines[it->second];
    s.x.push_back(cell_value(cells[2], line_no) + 0.5 * kBinWidth);
    s.y.push_back(cell_value(cells[3], line_no));
  }
  return charts;
}

}  // namespace ivjump::cli
