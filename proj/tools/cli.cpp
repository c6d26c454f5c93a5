#include "cli.hpp"

#include <CLI11.hpp>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "ivjump/error.hpp"

namespace ivjump::cli {

namespace fs = std::filesystem;

namespace {

const char* kUsage =
    "usage: ivjump <subcommand> [--config FILE] [--jobs N]\n"
    "subcommands:\n"
    "  simulate    write a synthetic market (underlying, options, rates, truth)\n"
    "  detect      jump statistics and morning day labels\n"
    "  surfaces    per-minute IV surfaces and binned smiles\n"
    "  pca         smile PCA with Varimax rotation\n"
    "  eventstudy  post-jump regressions and cumulative curves\n"
    "  robustness  alternative alpha, extended cutoff, reference re-draws\n"
    "  plot        SVG charts from the curve and loading dumps\n";

// Errors carry the stage and file they concern.
struct StageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::ifstream open_in(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw StageError("cannot read " + path.string());
  return in;
}

template <class F>
void write_file(const fs::path& path, F&& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw StageError("cannot write " + path.string());
  body(out);
  out.flush();
  if (!out) throw StageError("write failed for " + path.string());
}

template <class F>
auto reading(const fs::path& path, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    throw StageError(path.string() + ": " + e.what());
  }
}

std::string safe_name(std::string s) {
  for (auto& c : s) {
    if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '_') c = '_';
  }
  return s;
}

struct Context {
  Settings settings;
  Paths paths;
  std::ostream& out;
  std::ostream& err;

  void warn(const std::string& stage, const std::string& msg) const { err << "ivjump " << stage << ": warning: " << msg << '\n'; }
};

UnderlyingPanel load_panel(const Context& ctx) {
  auto in = open_in(ctx.paths.underlying);
  return reading(ctx.paths.underlying, [&] { return align_underlying(parse_underlying(in)); });
}

void stage_simulate(const Context& ctx) {
  const auto cfg = sim_config(ctx.settings);
  const MarketSimulator sim(cfg);
  write_file(ctx.paths.underlying, [&](std::ostream& o) { write_underlying(o, sim.bars()); });
  std::size_t quotes = 0;
  write_file(ctx.paths.options, [&](std::ostream& o) {
    for (std::size_t d = 0; d < sim.days().size(); ++d) {
      const auto q = sim.day_quotes(d);
      quotes += q.size();
      std::ostringstream block;
      write_option_quotes(block, q);
      const std::string text = block.str();
      o << (d == 0 ? text : text.substr(text.find('\n') + 1));
    }
  });
  write_file(ctx.paths.rates, [&](std::ostream& o) { write_rates(o, sim.rates()); });
  write_file(ctx.paths / "truth.csv", [&](std::ostream& o) { write_truth_log(o, sim.truth()); });
  ctx.out << "simulate: " << sim.days().size() << " days, " << sim.bars().size() << " bars, " << quotes
          << " quotes, " << sim.truth().size() << " jumps -> " << ctx.paths.out.string() << '\n';
}

void stage_detect(const Context& ctx) {
  const auto cfg = pipeline_config(ctx.settings);
  const auto panel = load_panel(ctx);
  const auto det = detect(panel, cfg.jumps);
  write_file(ctx.paths / "jumps.csv", [&](std::ostream& o) { write_jump_report(o, det.events); });
  write_file(ctx.paths / "labels.csv", [&](std::ostream& o) { write_label_report(o, det.labels); });
  std::size_t pos = 0, neg = 0, ref = 0;
  for (const auto& l : det.labels) {
    pos += l.cls == DayClass::PositiveJump;
    neg += l.cls == DayClass::NegativeJump;
    ref += l.cls == DayClass::NoJump;
  }
  ctx.out << "detect: " << det.events.size() << " jumps over " << panel.size() << " days; " << pos << " positive, "
          << neg << " negative, " << ref << " no-jump days\n";
}

SmileStore build_and_write_smiles(const Context& ctx, const UnderlyingPanel& panel, const PipelineConfig& cfg) {
  auto qin = open_in(ctx.paths.options);
  const QuoteBook book(reading(ctx.paths.options, [&] { return parse_option_quotes(qin); }));
  auto rin = open_in(ctx.paths.rates);
  const auto rates = reading(ctx.paths.rates, [&] { return parse_rates(rin); });
  const QuoteProvider provider = [&](std::size_t d) {
    const auto q = book.day(panel.days[d]);
    return std::vector<OptionQuote>(q.begin(), q.end());
  };
  const auto smiles = build_smiles(panel, provider, rates, cfg);
  write_file(ctx.paths / "smiles.csv", [&](std::ostream& o) { write_smiles(o, smiles); });
  ctx.out << "surfaces: " << smiles.minutes_fitted << " minutes fitted, " << smiles.minutes_failed << " failed, "
          << smiles.points_dropped << " quotes dropped\n";
  return smiles;
}

void stage_surfaces(const Context& ctx) {
  const auto cfg = pipeline_config(ctx.settings);
  build_and_write_smiles(ctx, load_panel(ctx), cfg);
}

// Reads smiles.csv, running the surface stage first when it is absent.
SmileStore load_smiles(const Context& ctx, const UnderlyingPanel& panel, const PipelineConfig& cfg) {
  const auto path = ctx.paths / "smiles.csv";
  if (!fs::exists(path)) return build_and_write_smiles(ctx, panel, cfg);
  auto in = open_in(path);
  return reading(path, [&] { return read_smiles(in); });
}

SmileStore load_smiles_only(const Context& ctx) {
  const auto path = ctx.paths / "smiles.csv";
  auto in = open_in(path);
  return reading(path, [&] { return read_smiles(in); });
}

void write_pca(const Context& ctx, std::span<const PcaResult> pca) {
  write_file(ctx.paths / "loadings.csv", [&](std::ostream& o) {
    bool header = true;
    for (const auto& r : pca) {
      write_loadings(o, r.maturity, r.model, header);
      header = false;
    }
  });
  write_file(ctx.paths / "components.csv", [&](std::ostream& o) { write_components(o, pca); });
}

void stage_pca(const Context& ctx) {
  const auto cfg = pipeline_config(ctx.settings);
  const auto smiles = load_smiles_only(ctx);
  const auto pca = fit_components(smiles, cfg);
  write_pca(ctx, pca);
  ctx.out << "pca:";
  for (const auto& r : pca) {
    ctx.out << ' ' << to_string(r.maturity) << " [";
    for (std::size_t j = 0; j < 3; ++j) ctx.out << (j ? " " : "") << to_string(r.scores.labels[j]);
    ctx.out << ']';
    if (!r.model.converged) ctx.warn("pca", std::string(to_string(r.maturity)) + " Varimax hit the sweep cap");
  }
  ctx.out << '\n';
}

void stage_eventstudy(const Context& ctx) {
  const auto cfg = pipeline_config(ctx.settings);
  const auto panel = load_panel(ctx);
  const auto smiles = load_smiles(ctx, panel, cfg);
  const auto jumps_path = ctx.paths / "jumps.csv";
  auto jin = open_in(jumps_path);
  const auto events = reading(jumps_path, [&] { return read_jump_report(jin); });
  const auto labels = classify_days(events, combined_completeness(panel, smiles, cfg), cfg.jumps);
  write_file(ctx.paths / "event_labels.csv", [&](std::ostream& o) { write_label_report(o, labels); });

  std::vector<PcaResult> pca;
  try {
    pca = fit_components(smiles, cfg);
    write_pca(ctx, pca);
  } catch (const Error& e) {
    ctx.warn("eventstudy", std::string("PCA unavailable: ") + e.what());
  }
  std::vector<std::string> warnings;
  const auto vars = event_variables(smiles, pca, labels, &warnings);
  const auto study = run_event_study(vars, labels, smiles, cfg);
  warnings.insert(warnings.end(), study.warnings.begin(), study.warnings.end());
  for (const auto& w : warnings) ctx.warn("eventstudy", w);

  write_file(ctx.paths / "regression.csv", [&](std::ostream& o) { write_regression_report(o, study.rows); });
  for (const auto& c : study.curves) {
    const auto name = "curves_" + safe_name(c.variable) + "_" + std::string(to_string(c.maturity)) + "_" +
                      (c.include_first ? "include" : "exclude") + ".csv";
    const bool has_band = !c.band.lower.empty();
    write_file(ctx.paths / name,
               [&](std::ostream& o) { write_curve_dump(o, c.means, has_band ? &c.band : nullptr); });
  }
  ctx.out << "eventstudy: " << vars.size() << " variables, " << study.rows.size() << " regressions, "
          << study.curves.size() << " curve sets\n";
}

void stage_robustness(const Context& ctx) {
  const auto cfg = pipeline_config(ctx.settings);
  const auto panel = load_panel(ctx);
  const auto smiles = load_smiles(ctx, panel, cfg);
  const auto report = robustness_suite(panel, smiles, cfg);
  for (const auto& w : report.warnings) ctx.warn("robustness", w);
  write_file(ctx.paths / "robustness_alpha.csv", [&](std::ostream& o) { write_regression_report(o, report.alpha); });
  write_file(ctx.paths / "robustness_extended.csv",
             [&](std::ostream& o) { write_regression_report(o, report.extended); });
  write_file(ctx.paths / "robustness_redraws.csv", [&](std::ostream& o) { write_redraw_report(o, report.redraws); });
  ctx.out << "robustness: " << report.alpha.size() << " alpha rows, " << report.extended.size()
          << " extended-cutoff rows, " << report.redraws.size() << " re-draw summaries\n";
}

void stage_plot(const Context& ctx) {
  const auto dir = ctx.paths / "plots";
  fs::create_directories(dir);
  std::vector<fs::path> dumps;
  for (const auto& entry : fs::directory_iterator(ctx.paths.out)) {
    const auto name = entry.path().filename().string();
    if (entry.is_regular_file() && name.starts_with("curves_") && name.ends_with(".csv")) dumps.push_back(entry.path());
  }
  std::sort(dumps.begin(), dumps.end());
  std::size_t charts = 0;
  for (const auto& path : dumps) {
    auto in = open_in(path);
    std::vector<std::string> warnings;
    const auto stem = path.stem().string();
    const auto chart = reading(path, [&] { return curve_chart(in, stem.substr(7), warnings); });
    for (const auto& w : warnings) ctx.warn("plot", w);
    write_file(dir / (stem + ".svg"), [&](std::ostream& o) { o << render_svg(chart); });
    ++charts;
  }

  const auto loadings = ctx.paths / "loadings.csv";
  if (fs::exists(loadings)) {
    std::map<std::pair<std::string, std::string>, std::string> labels;
    if (const auto comp = ctx.paths / "components.csv"; fs::exists(comp)) {
      auto in = open_in(comp);
      std::string line;
      std::getline(in, line);
      if (line != "maturity,component,label,explained") throw StageError(comp.string() + ": unexpected header");
      while (std::getline(in, line)) {
        std::stringstream ss(line);
        std::string m, c, l;
        std::getline(ss, m, ',');
        std::getline(ss, c, ',');
        std::getline(ss, l, ',');
        labels[{m, c}] = l;
      }
    }
    auto in = open_in(loadings);
    const auto all = reading(loadings, [&] { return loading_charts(in, labels); });
    for (const auto& [maturity, chart] : all) {
      write_file(dir / ("loadings_" + safe_name(maturity) + ".svg"), [&](std::ostream& o) { o << render_svg(chart); });
      ++charts;
    }
  } else {
    ctx.warn("plot", "no " + loadings.string() + "; loading charts skipped");
  }
  if (dumps.empty()) ctx.warn("plot", "no curve dumps in " + ctx.paths.out.string());
  ctx.out << "plot: " << charts << " charts -> " << dir.string() << '\n';
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Intraday option analytics around underlying return jumps", "ivjump"};
  app.fallthrough();
  app.require_subcommand(1, 1);
  std::string config_path;
  int jobs = 0;
  app.add_option("--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);

  const std::map<std::string, void (*)(const Context&)> stages{
      {"simulate", stage_simulate}, {"detect", stage_detect},         {"surfaces", stage_surfaces},
      {"pca", stage_pca},           {"eventstudy", stage_eventstudy}, {"robustness", stage_robustness},
      {"plot", stage_plot},
  };
  for (const auto& [name, fn] : stages) app.add_subcommand(name);

  try {
    std::vector<std::string> args;
    for (int i = argc - 1; i > 0; --i) args.emplace_back(argv[i]);
    app.parse(args);
  } catch (const CLI::CallForHelp&) {
    out << kUsage;
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "ivjump: " << e.what() << '\n' << kUsage;
    return 2;
  }

  const auto* sub = app.get_subcommands().front();
  const std::string stage = sub->get_name();
  try {
    Context ctx{Settings{}, {}, out, err};
    if (!config_path.empty()) ctx.settings.load_file(config_path);
    if (const char* seed = std::getenv("IVJUMP_SEED"); seed != nullptr && *seed != '\0') {
      ctx.settings.set("seed", seed);
    }
    if (jobs > 0) ctx.settings.set("jobs", std::to_string(jobs));
    ctx.paths = resolve_paths(ctx.settings);
    fs::create_directories(ctx.paths.out);
    write_file(ctx.paths / "resolved_config.txt", [&](std::ostream& o) { ctx.settings.write(o); });
    stages.at(stage)(ctx);
  } catch (const std::exception& e) {
    err << "ivjump " << stage << ": " << e.what() << '\n';
    return 1;
  }
  return 0;
}

}  // namespace ivjump::cli
