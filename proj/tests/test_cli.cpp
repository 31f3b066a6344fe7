#include "doctest.h"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "corlab/cli.hpp"

namespace fs = std::filesystem;
using namespace corlab;

namespace {

// ----- scratch-dir helpers -----

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "corlab-cli-tests" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path write_config(const fs::path& dir, const std::string& text,
                      const std::string& filename = "run.cfg") {
  const fs::path path = dir / filename;
  std::ofstream out(path, std::ios::binary);
  out << text;
  return path;
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

// Minimal model block shared by most run() tests: small grid, box window that
// tiles the pointer domain, two slices. Fast enough to run many times.
std::string small_check_config() {
  return "experiment = check\n"
         "model.preset = von-neumann\n"
         "model.g = 1.0\n"
         "model.n_grid = 32\n"
         "model.x_max = 4.0\n"
         "model.sigma0 = 1.0\n"
         "model.omega_s = 1.0\n"
         "scheme.slices = 2\n"
         "scheme.dt = 0.25\n"
         "window.kind = box\n"
         "window.width = 1.0\n"
         "window.normalization = povm\n"
         "output.dir = out\n"
         "output.plots = false\n";
}

int run_quiet(const fs::path& config) {
  // run() prints a one-line status; tests only care about the exit code
  // and the artifacts, so the line is left on the test log.
  return cli::run(config.string());
}

}  // namespace

// ----- parsing -----

TEST_CASE("parse_config fills every field and echoes raw pairs in order") {
  const fs::path dir = scratch_dir("parse-full");
  const fs::path path = write_config(dir,
      "experiment = consistency\n"
      "model.preset = von-neumann\n"
      "model.g = 2.0\n"
      "model.n_grid = 64\n"
      "model.x_max = 4.25\n"
      "model.sigma0 = 0.25\n"
      "model.omega_s = 0.5\n"
      "scheme.slices = 4\n"
      "scheme.dt = 0.125\n"
      "scheme.splitting = strang\n"
      "window.kind = gaussian\n"
      "window.width = 0.5\n"
      "window.normalization = amplitude\n"
      "measure.count = 12\n"
      "report.prob_floor = 0.02\n"
      "report.top_corridors = 8\n"
      "thresholds.env_ratio.max = 0.1\n"
      "thresholds.consistency_ratio.min = 0.0\n"
      "output.dir = artifacts\n"
      "output.plots = true\n");

  const cli::ExperimentConfig cfg = cli::parse_config(path.string());

  CHECK(cfg.experiment == cli::Experiment::consistency);
  CHECK(cfg.preset == "von-neumann");
  CHECK(cfg.g == doctest::Approx(2.0));
  CHECK(cfg.n_grid == 64);
  CHECK(cfg.x_max == doctest::Approx(4.25));
  CHECK(cfg.sigma0 == doctest::Approx(0.25));
  CHECK(cfg.omega_s == doctest::Approx(0.5));
  CHECK(cfg.scheme.slices == 4);
  CHECK(cfg.scheme.dt == doctest::Approx(0.125));
  CHECK(cfg.scheme.splitting == evolution::Splitting::strang);
  CHECK(cfg.window.kind == corridors::WindowKind::gaussian);
  CHECK(cfg.window.width == doctest::Approx(0.5));
  CHECK(cfg.window.normalization == corridors::Normalization::amplitude);
  CHECK(cfg.measure_count == 12);
  CHECK(cfg.prob_floor == doctest::Approx(0.02));
  CHECK(cfg.top_corridors == 8);
  CHECK(cfg.thresholds.max.at("env_ratio") == doctest::Approx(0.1));
  CHECK(cfg.thresholds.min.at("consistency_ratio") == doctest::Approx(0.0));
  CHECK(cfg.output_dir == "artifacts");
  CHECK(cfg.emit_plots);
  CHECK(cfg.config_dir == dir.string());

  // raw echo preserves file order, first and last keys included
  REQUIRE(cfg.raw.size() == 20);
  CHECK(cfg.raw.front().first == "experiment");
  CHECK(cfg.raw.front().second == "consistency");
  CHECK(cfg.raw.back().first == "output.plots");
  CHECK(cfg.raw.back().second == "true");
}

TEST_CASE("parse_config strips BOM, comments, and blank lines") {
  const fs::path dir = scratch_dir("parse-bom");
  const fs::path path = write_config(dir,
      "\xEF\xBB\xBF# leading comment\n"
      "\n"
      "experiment = check   # trailing comment\n"
      "   model.preset = qubit\n"
      "model.theta = 0.3\n"
      "\n"
      "# done\n");

  const cli::ExperimentConfig cfg = cli::parse_config(path.string());
  CHECK(cfg.experiment == cli::Experiment::check);
  CHECK(cfg.preset == "qubit");
  CHECK(cfg.theta == doctest::Approx(0.3));
  CHECK(cfg.raw.size() == 3);
}

TEST_CASE("parse_config rejects malformed input") {
  const fs::path dir = scratch_dir("parse-bad");
  const std::string base = "experiment = check\nmodel.preset = qubit\n";
  auto reject = [&](const std::string& text, const std::string& tag) {
    const fs::path path = write_config(dir, text, tag + ".cfg");
    CHECK_THROWS_AS(cli::parse_config(path.string()), cli::ConfigError);
  };

  reject("experiment = check\nno equals sign here\n", "no-equals");
  reject(base + " = 1.0\n", "empty-key");
  reject(base + "model.theta =\n", "empty-value");
  reject(base + "model.theta = 0.1\nmodel.theta = 0.2\n", "duplicate");
  reject(base + "model.gg = 1.0\n", "unknown-key");
  reject("model.preset = qubit\n", "missing-experiment");
  reject("experiment = check\n", "missing-preset");
  reject("experiment = dance\nmodel.preset = qubit\n", "bad-experiment");
  reject("experiment = check\nmodel.preset = harmonic\n", "bad-preset");
  reject(base + "scheme.splitting = verlet\n", "bad-splitting");
  reject(base + "window.kind = tent\n", "bad-window-kind");
  reject(base + "window.normalization = unit\n", "bad-normalization");
  reject(base + "model.g = fast\n", "non-numeric-double");
  reject(base + "scheme.slices = 2.5\n", "non-integer-int");
  reject(base + "output.plots = yes\n", "bad-bool");
  reject(base + "thresholds.env_ratio = 0.1\n", "threshold-no-suffix");
  reject(base + "thresholds.env_ratio.mid = 0.1\n", "threshold-bad-suffix");
  reject(base + "thresholds.flux_ratio.max = 0.1\n", "threshold-unknown-metric");
  reject(base + "scheme.dt = 0\n", "nonpositive-dt");
  reject(base + "window.width = -1\n", "negative-width");
  reject(base + "report.prob_floor = 0\n", "zero-floor");
  reject(base + "model.n_grid = -8\n", "negative-grid");

  CHECK_THROWS_AS(cli::parse_config((dir / "missing.cfg").string()),
                  cli::ConfigError);
}

TEST_CASE("CORLAB_WORKERS must be a positive integer when set") {
  const fs::path dir = scratch_dir("parse-workers");
  const fs::path path = write_config(dir, small_check_config());

  setenv("CORLAB_WORKERS", "abc", 1);
  CHECK_THROWS_AS(cli::parse_config(path.string()), cli::ConfigError);
  setenv("CORLAB_WORKERS", "0", 1);
  CHECK_THROWS_AS(cli::parse_config(path.string()), cli::ConfigError);
  setenv("CORLAB_WORKERS", "2", 1);
  CHECK_NOTHROW(cli::parse_config(path.string()));
  unsetenv("CORLAB_WORKERS");
  CHECK_NOTHROW(cli::parse_config(path.string()));
}

// ----- run(): exit codes and artifacts -----

TEST_CASE("run writes artifacts and returns 0 when thresholds hold") {
  const fs::path dir = scratch_dir("run-pass");
  const fs::path path = write_config(dir,
      small_check_config() +
      "thresholds.resolution_residual.max = 1e-8\n"
      "thresholds.reconstruction_residual.max = 1e-8\n"
      "thresholds.completeness_residual.max = 1e-8\n");

  CHECK(run_quiet(path) == 0);

  const fs::path out = dir / "out";
  REQUIRE(fs::exists(out / "metrics.csv"));
  REQUIRE(fs::exists(out / "summary.json"));

  // metrics.csv: header plus one row per metric
  std::istringstream metrics(slurp(out / "metrics.csv"));
  std::string line;
  std::getline(metrics, line);
  CHECK(line == "metric,value");
  std::vector<std::string> rows;
  while (std::getline(metrics, line))
    if (!line.empty()) rows.push_back(line);
  CHECK(rows.size() == 3);

  // summary.json: schema, config echo, per-metric threshold verdicts
  const nlohmann::json summary = nlohmann::json::parse(slurp(out / "summary.json"));
  CHECK(summary.at("tool") == "corlab");
  CHECK(summary.at("version") == cli::version_string());
  CHECK(summary.at("experiment") == "check");
  CHECK(summary.at("pass") == true);
  CHECK(summary.at("config").at("model.preset") == "von-neumann");
  const auto& res = summary.at("metrics").at("resolution_residual");
  CHECK(res.at("value").get<double>() <= 1e-8);
  CHECK(res.at("max").get<double>() == doctest::Approx(1e-8));
  CHECK(res.at("pass") == true);
  bool has_metrics_csv = false;
  for (const auto& a : summary.at("artifacts"))
    if (a.get<std::string>() == "metrics.csv") has_metrics_csv = true;
  CHECK(has_metrics_csv);
}

TEST_CASE("run returns 2 on config errors") {
  const fs::path dir = scratch_dir("run-config-error");

  CHECK(cli::run((dir / "absent.cfg").string()) == 2);

  const fs::path unknown = write_config(dir,
      small_check_config() + "model.gg = 1.0\n", "unknown.cfg");
  CHECK(run_quiet(unknown) == 2);

  // metric name is legal but the check experiment never produces it:
  // detected after the run, still a config mistake
  const fs::path unproduced = write_config(dir,
      small_check_config() + "thresholds.env_ratio.max = 0.5\n",
      "unproduced.cfg");
  CHECK(run_quiet(unproduced) == 2);
}

TEST_CASE("run returns 3 when a guard or precondition trips") {
  const fs::path dir = scratch_dir("run-guard");

  // box cells of width 3 cannot tile the pointer interval [-4, 4)
  const fs::path tiling = write_config(dir,
      "experiment = check\n"
      "model.preset = von-neumann\n"
      "model.n_grid = 32\n"
      "model.x_max = 4.0\n"
      "model.sigma0 = 1.0\n"
      "window.kind = box\n"
      "window.width = 3.0\n",
      "tiling.cfg");
  CHECK(run_quiet(tiling) == 3);

  // grid too coarse for the packet width guard
  const fs::path coarse = write_config(dir,
      "experiment = check\n"
      "model.preset = von-neumann\n"
      "model.n_grid = 8\n"
      "model.x_max = 4.0\n"
      "model.sigma0 = 0.3\n",
      "coarse.cfg");
  CHECK(run_quiet(coarse) == 3);
}

TEST_CASE("run returns 4 when a threshold fails") {
  const fs::path dir = scratch_dir("run-threshold");
  const fs::path path = write_config(dir,
      small_check_config() + "thresholds.resolution_residual.max = -1.0\n");
  CHECK(run_quiet(path) == 4);

  const nlohmann::json summary =
      nlohmann::json::parse(slurp(dir / "out" / "summary.json"));
  CHECK(summary.at("pass") == false);
  CHECK(summary.at("metrics").at("resolution_residual").at("pass") == false);
}

TEST_CASE("identical configs produce byte-identical artifacts") {
  const std::string text =
      "experiment = corridor-scan\n"
      "model.preset = von-neumann\n"
      "model.g = 1.5\n"
      "model.n_grid = 64\n"
      "model.x_max = 4.0\n"
      "model.sigma0 = 0.5\n"
      "scheme.slices = 3\n"
      "scheme.dt = 0.25\n"
      "window.kind = box\n"
      "window.width = 0.5\n"
      "scan.count = 5\n"
      "scan.span = 2.0\n"
      "output.dir = out\n"
      "output.plots = true\n";

  const fs::path dir_a = scratch_dir("rerun-a");
  const fs::path dir_b = scratch_dir("rerun-b");
  REQUIRE(run_quiet(write_config(dir_a, text)) == 0);
  REQUIRE(run_quiet(write_config(dir_b, text)) == 0);

  for (const std::string name :
       {"scan.csv", "metrics.csv", "summary.json", "scan.svg"}) {
    REQUIRE(fs::exists(dir_a / "out" / name));
    REQUIRE(fs::exists(dir_b / "out" / name));
    CHECK(slurp(dir_a / "out" / name) == slurp(dir_b / "out" / name));
  }

  // scan.csv: header plus exactly scan.count rows
  std::istringstream scan(slurp(dir_a / "out" / "scan.csv"));
  std::string line;
  std::getline(scan, line);
  CHECK(line == "alpha,offset,prob,pif_norm");
  std::size_t rows = 0;
  while (std::getline(scan, line))
    if (!line.empty()) ++rows;
  CHECK(rows == 5);
}

// ----- plotting -----

TEST_CASE("emit_plot renders a curve and rejects malformed CSV") {
  const fs::path dir = scratch_dir("plots");
  auto csv = [&](const std::string& text, const std::string& name) {
    const fs::path path = dir / name;
    std::ofstream out(path);
    out << text;
    return path.string();
  };
  const std::string svg = (dir / "plot.svg").string();

  const std::string good = csv("x,y\n0,1\n1,2\n2,1.5\n", "good.csv");
  cli::emit_plot(good, cli::PlotKind::scan, "x", "y", svg);
  const std::string rendered = slurp(svg);
  CHECK(rendered.find("<svg") != std::string::npos);
  CHECK(rendered.find("</svg>") != std::string::npos);

  CHECK_THROWS_AS(cli::emit_plot((dir / "absent.csv").string(),
                                 cli::PlotKind::scan, "x", "y", svg),
                  std::invalid_argument);
  CHECK_THROWS_AS(cli::emit_plot(good, cli::PlotKind::scan, "x", "z", svg),
                  std::invalid_argument);
  CHECK_THROWS_AS(cli::emit_plot(csv("x,y\n0\n", "ragged.csv"),
                                 cli::PlotKind::scan, "x", "y", svg),
                  std::invalid_argument);
  CHECK_THROWS_AS(cli::emit_plot(csv("x,y\n0,fast\n", "nonnum.csv"),
                                 cli::PlotKind::scan, "x", "y", svg),
                  std::invalid_argument);
  CHECK_THROWS_AS(cli::emit_plot(csv("x,y\n", "empty.csv"),
                                 cli::PlotKind::scan, "x", "y", svg),
                  std::invalid_argument);
  // log-scale kinds need strictly positive ordinates
  CHECK_THROWS_AS(cli::emit_plot(csv("x,y\n0,0\n1,1\n", "nonpos.csv"),
                                 cli::PlotKind::decay, "x", "y", svg),
                  std::invalid_argument);
}

// ----- misc surface -----

TEST_CASE("list_presets names every preset") {
  std::ostringstream os;
  cli::list_presets(os);
  const std::string text = os.str();
  CHECK(text.find("von-neumann") != std::string::npos);
  CHECK(text.find("spin-bath") != std::string::npos);
  CHECK(text.find("qubit") != std::string::npos);
}

TEST_CASE("version string is stable") {
  CHECK(cli::version_string() == std::string("0.1.0"));
}
