#pragma once

// Command-line orchestration: key-value configuration, the pipeline stages
// over an output directory, and SVG chart rendering.

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "ivjump/pipeline.hpp"
#include "ivjump/simulator.hpp"

namespace ivjump::cli {

/// Resolved `key = value` settings. Defaults are overlaid by the file, then
/// by IVJUMP_SEED and command-line flags.
class Settings {
 public:
  Settings();

  void load(std::istream& in, const std::string& origin);  // throws Error(ConfigInvalid)
  void load_file(const std::string& path);
  void set(const std::string& key, const std::string& value);
  const std::string& get(const std::string& key) const;
  void write(std::ostream& out) const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

PipelineConfig pipeline_config(const Settings& s);
SimConfig sim_config(const Settings& s);

/// Input paths default to files of the same name in the output directory.
struct Paths {
  std::filesystem::path out;
  std::filesystem::path underlying, options, rates;

  std::filesystem::path operator/(const std::string& name) const { return out / name; }
};

Paths resolve_paths(const Settings& s);

// ---- charts -----------------------------------------------------------------

struct Series {
  std::string name;
  std::string color;
  bool dashed = false;
  std::vector<double> x, y;  // NaN y breaks the line
};

struct Chart {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> lines;
  std::vector<double> band_x, band_lo, band_hi;  // empty: no band
};

std::string render_svg(const Chart& chart);

/// Chart of a cumulative-curve dump. Adds a warning when the band columns
/// are empty. Throws Error(SchemaMismatch).
Chart curve_chart(std::istream& dump, const std::string& title, std::vector<std::string>& warnings);

/// One chart per maturity of a loadings dump; `labels` maps
/// (maturity, component) to the component label.
std::map<std::string, Chart> loading_charts(std::istream& dump,
                                            const std::map<std::pair<std::string, std::string>, std::string>& labels);

// ---- entry point ------------------------------------------------------------

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace ivjump::cli
