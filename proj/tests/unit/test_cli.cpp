#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>
#include <unistd.h>

#include "cli.hpp"
#include "ivjump/error.hpp"

namespace fs = std::filesystem;
using namespace ivjump;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int code;
  std::string out, err;
};

Run ivjump_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "ivjump");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::size_t count(const std::string& text, const std::string& needle) {
  std::size_t n = 0;
  for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
  return n;
}

class CliPipeline : public ::testing::Test {
 protected:
  static inline fs::path dir;
  static inline fs::path config;

  static void SetUpTestSuite() {
    dir = fs::temp_directory_path() / ("ivjump_cli_test_" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    config = dir / "planted.conf";
    std::ofstream c(config);
    c << "# planted-effect smoke configuration\n"
      << "output_dir = " << (dir / "run").string() << "\n"
      << "seed = 11\n"
      << "sim.days = 40\n"
      << "sim.planted_jump_days = 18\n"
      << "sim.immediate = 0.5   # vol points\n"
      << "sim.gradual = 0.3\n"
      << "sim.moneyness_step = 0.05\n"
      << "sim.quote_last_minute = 11:30\n"
      << "maturities = 3m\n"
      << "windows = 5,30\n"
      << "bootstrap.draws = 300\n"
      << "robustness.iterations = 4\n"
      << "robustness.windows = 5\n";
  }
  static void TearDownTestSuite() { fs::remove_all(dir); }
};

}  // namespace

TEST(Cli, UnknownSubcommandExitsTwo) {
  const auto r = ivjump_cli({"frobnicate"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("usage: ivjump"), std::string::npos);
  EXPECT_EQ(ivjump_cli({}).code, 2);
}

TEST(Cli, BinaryExitStatus) {
  const std::string cmd = std::string("\"") + IVJUMP_CLI_PATH + "\" frobnicate > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  ASSERT_TRUE(WIFEXITED(status));
  EXPECT_EQ(WEXITSTATUS(status), 2);
}

TEST(Cli, UnknownConfigKeyNamesStage) {
  const auto path = fs::temp_directory_path() / "ivjump_bad.conf";
  std::ofstream(path) << "no.such.key = 3\n";
  const auto r = ivjump_cli({"detect", "--config", path.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("ivjump detect"), std::string::npos);
  EXPECT_NE(r.err.find("no.such.key"), std::string::npos);
  fs::remove(path);
}

TEST(Cli, MissingInputNamesFile) {
  const auto out = fs::temp_directory_path() / "ivjump_empty_run";
  fs::remove_all(out);
  const auto path = fs::temp_directory_path() / "ivjump_empty.conf";
  std::ofstream(path) << "output_dir = " << out.string() << "\n";
  const auto r = ivjump_cli({"detect", "--config", path.string()});
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("underlying.csv"), std::string::npos);
  fs::remove(path);
  fs::remove_all(out);
}

TEST(Cli, SettingsParsing) {
  cli::Settings s;
  std::istringstream in("  lambda = 1e-4  # smoother\n\n# comment\nwindows=5, 60\n");
  s.load(in, "inline");
  EXPECT_EQ(s.get("lambda"), "1e-4");
  const auto cfg = cli::pipeline_config(s);
  EXPECT_DOUBLE_EQ(cfg.surface.lambda, 1e-4);
  EXPECT_EQ(cfg.windows, (std::vector<int>{5, 60}));

  s.set("windows", "5,45");
  EXPECT_THROW(cli::pipeline_config(s), Error);
  std::istringstream bad("lambda\n");
  EXPECT_THROW(s.load(bad, "inline"), Error);
}

TEST(Charts, EmptyBandOmittedWithWarning) {
  std::istringstream dump("minute,pos_mean,neg_mean,ref_mean,band_lo,band_hi\n0,0,0,0,,\n1,-0.1,0.2,0.01,,\n"
                          "2,-0.2,0.3,0.0,,\n");
  std::vector<std::string> warnings;
  const auto chart = cli::curve_chart(dump, "ATM-IV 3m", warnings);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("band omitted"), std::string::npos);
  const auto svg = cli::render_svg(chart);
  EXPECT_EQ(count(svg, "<polygon"), 0u);
  EXPECT_EQ(count(svg, "<polyline"), 3u);
}

TEST(Charts, SchemaMismatch) {
  std::istringstream dump("minute,pos,neg\n0,1,2\n");
  std::vector<std::string> warnings;
  try {
    cli::curve_chart(dump, "x", warnings);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::SchemaMismatch);
  }
}

TEST(Charts, Deterministic) {
  cli::Chart c;
  c.title = "t";
  c.lines = {{"a", "#1f4fbf", false, {0, 1, 2}, {0.0, 0.5, 0.25}}};
  c.band_x = {0, 1, 2};
  c.band_lo = {-0.1, -0.1, -0.1};
  c.band_hi = {0.1, 0.1, 0.1};
  EXPECT_EQ(cli::render_svg(c), cli::render_svg(c));
}

TEST_F(CliPipeline, StagesEndToEnd) {
  const auto run = dir / "run";
  for (const char* stage : {"simulate", "detect", "eventstudy"}) {
    const auto r = ivjump_cli({stage, "--config", config.string()});
    ASSERT_EQ(r.code, 0) << stage << ": " << r.err;
    EXPECT_NE(r.out.find(std::string(stage) + ":"), std::string::npos) << r.out;
  }
  for (const char* f : {"underlying.csv", "options.csv", "rates.csv", "truth.csv", "jumps.csv", "labels.csv",
                        "smiles.csv", "loadings.csv", "components.csv", "regression.csv", "resolved_config.txt"}) {
    EXPECT_TRUE(fs::exists(run / f)) << f;
  }

  // Regression report has the negative-jump coefficient populated.
  std::ifstream reg(run / "regression.csv");
  std::string line;
  std::getline(reg, line);
  EXPECT_EQ(line, "variable,maturity,window,include_first,beta0,betap,betan,betaiv,p0,pp,pn,piv,N");
  bool atm = false;
  while (std::getline(reg, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
    ASSERT_EQ(cells.size(), 13u);
    EXPECT_FALSE(cells[6].empty());
    EXPECT_TRUE(std::isfinite(std::stod(cells[6])));
    if (cells[0] == "ATM-IV" && cells[3] == "0") {
      atm = true;
      EXPECT_GT(std::stod(cells[6]), 0.0) << line;
    }
  }
  EXPECT_TRUE(atm);

  // Resolved configuration echoes the file values.
  const auto resolved = slurp(run / "resolved_config.txt");
  EXPECT_NE(resolved.find("sim.days = 40\n"), std::string::npos);
  EXPECT_NE(resolved.find("seed = 11\n"), std::string::npos);

  // Re-running a stage rewrites identical bytes.
  const auto jumps = slurp(run / "jumps.csv");
  ASSERT_EQ(ivjump_cli({"detect", "--config", config.string()}).code, 0);
  EXPECT_EQ(slurp(run / "jumps.csv"), jumps);

  // Plots: one chart per curve dump with three curves and a band, plus loadings.
  const auto p1 = ivjump_cli({"plot", "--config", config.string()});
  ASSERT_EQ(p1.code, 0) << p1.err;
  std::size_t curve_charts = 0;
  std::map<fs::path, std::string> first;
  for (const auto& e : fs::directory_iterator(run / "plots")) first[e.path()] = slurp(e.path());
  for (const auto& [path, svg] : first) {
    if (!path.filename().string().starts_with("curves_")) continue;
    ++curve_charts;
    EXPECT_EQ(count(svg, "<polygon"), 1u) << path;
    EXPECT_GE(count(svg, "<polyline"), 3u) << path;
    EXPECT_NE(svg.find("#1f4fbf"), std::string::npos);
    EXPECT_NE(svg.find("#c62828"), std::string::npos);
    EXPECT_NE(svg.find("stroke-dasharray"), std::string::npos);
  }
  EXPECT_GE(curve_charts, 2u);
  ASSERT_TRUE(first.contains(run / "plots" / "loadings_3m.svg"));
  const auto& loadings = first.at(run / "plots" / "loadings_3m.svg");
  for (const char* pc : {"pc1", "pc2", "pc3"}) EXPECT_NE(loadings.find(pc), std::string::npos);

  ASSERT_EQ(ivjump_cli({"plot", "--config", config.string()}).code, 0);
  for (const auto& [path, svg] : first) EXPECT_EQ(slurp(path), svg) << path;

  // Robustness stage, with the seed override and worker cap echoed.
  ::setenv("IVJUMP_SEED", "11", 1);
  const auto r = ivjump_cli({"robustness", "--config", config.string(), "--jobs", "2"});
  ::unsetenv("IVJUMP_SEED");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(slurp(run / "resolved_config.txt").find("jobs = 2\n"), std::string::npos);
  for (const char* f : {"robustness_alpha.csv", "robustness_extended.csv", "robustness_redraws.csv"}) {
    EXPECT_TRUE(fs::exists(run / f)) << f;
  }
  EXPECT_EQ(slurp(run / "robustness_redraws.csv")
                .rfind("variable,maturity,window,coefficient,statistic,mean,sd,q025,q975\n", 0),
            0u);

  ::setenv("IVJUMP_SEED", "77", 1);
  const auto s = ivjump_cli({"pca", "--config", config.string()});
  ::unsetenv("IVJUMP_SEED");
  ASSERT_EQ(s.code, 0) << s.err;
  EXPECT_NE(slurp(run / "resolved_config.txt").find("seed = 77\n"), std::string::npos);
}
