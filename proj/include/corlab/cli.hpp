#pragma once

#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "corlab/corridors.hpp"
#include "corlab/decoherence.hpp"
#include "corlab/evolution.hpp"
#include "corlab/model.hpp"

// Experiment runner: config parsing, named experiments over the model
// presets, CSV/JSON/SVG artifacts.
//
// Config grammar: UTF-8 text, one `key = value` pair per line, flat dotted
// keys, `#` starts a comment, blank lines ignored. Unknown or duplicate keys
// are rejected. Paths in the config resolve relative to the config file.
//
// Exit code contract: 0 all thresholds pass, 2 unreadable or invalid config,
// 3 guard or precondition violation, 4 threshold failure.
namespace corlab::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Experiment { check, consistency, pif, rpi_compare, corridor_scan, markov_limit };

struct ThresholdSpec {
  std::map<std::string, double> max;  // metric must be <= value
  std::map<std::string, double> min;  // metric must be >= value
};

struct ExperimentConfig {
  Experiment experiment = Experiment::check;

  std::string preset;  // von-neumann | spin-bath | qubit
  double g = 1.0;
  int n_grid = 32;
  double x_max = 4.0;
  double sigma0 = 1.0;
  double omega_s = 1.0;
  int n_spins = 3;
  double epsilon = 0.5;
  double theta = 0.0;

  evolution::SliceScheme scheme{4, 0.25, evolution::Splitting::exact_slice};
  corridors::Window window;
  std::size_t measure_count = 8;  // node count for gaussian measures

  std::size_t scan_count = 9;  // offset grid for scan / pif / rpi-compare
  double scan_span = 4.0;

  double markov_kappa = 1.0;
  double markov_t = 1.0;
  int markov_base_slices = 16;
  int markov_levels = 3;

  double prob_floor = 1e-3;
  std::size_t top_corridors = 64;

  ThresholdSpec thresholds;

  std::string output_dir = "out";
  bool emit_plots = true;

  // raw key/value pairs in file order, echoed into summary.json
  std::vector<std::pair<std::string, std::string>> raw;
  std::string config_dir;  // directory of the config file
};

ExperimentConfig parse_config(const std::string& path);

// Runs the configured experiment, writes artifacts under the config's
// output directory, prints a one-line wall-time note, and returns the exit
// code per the contract above. force_check reruns the config's model and
// window through the `check` experiment regardless of the experiment key.
int run(const std::string& config_path, bool force_check = false);

void list_presets(std::ostream& os);
std::string version_string();

// ----- plotting -----

enum class PlotKind {
  scan,    // linear x-y curve
  decay,   // log10 y against x, least-squares slope annotated
  ladder,  // log10-log10 with markers and successive ratios annotated
};

// Renders one curve from a CSV artifact into a standalone SVG. The named
// columns must exist and at least one data row must survive parsing.
void emit_plot(const std::string& csv_path, PlotKind kind,
               const std::string& x_col, const std::string& y_col,
               const std::string& svg_path);

}  // namespace corlab::cli
