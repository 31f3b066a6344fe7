#include "corlab/cli.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include "corlab/hilbert.hpp"
#include "corlab/rpi.hpp"
#include "json.hpp"

namespace fs = std::filesystem;

namespace corlab::cli {

using corridors::CorridorMeasure;
using corridors::CorridorSpec;
using corridors::Normalization;
using corridors::Window;
using corridors::WindowKind;
using model::CompoundModel;

namespace {

// ----- deterministic number formatting -----

std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string fmt_sig(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return buf;
}

// ----- config parsing -----

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double x = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' has non-numeric value '" + v + "'");
  }
}

long parse_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long x = std::stol(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return x;
  } catch (const std::exception&) {
    throw ConfigError("config: key '" + key + "' has non-integer value '" + v + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true") return true;
  if (v == "false") return false;
  throw ConfigError("config: key '" + key + "' must be true or false, got '" + v + "'");
}

const std::set<std::string>& known_metrics() {
  static const std::set<std::string> names = {
      "resolution_residual", "reconstruction_residual", "completeness_residual",
      "consistency_ratio", "env_ratio", "corridor_count", "max_prob",
      "sum_prob", "peak_offset", "sigma_ratio_on_branch", "sigma_ratio_max",
      "reassembly_err_max", "trace_dist_on_branch", "prob_rel_err_on_branch",
      "trace_dist_max", "trend_corr", "markov_ratio_min", "markov_ratio_max",
      "markov_dist_final", "dephasing_err_lindblad", "dephasing_err_channel"};
  return names;
}

Experiment parse_experiment(const std::string& v) {
  if (v == "check") return Experiment::check;
  if (v == "consistency") return Experiment::consistency;
  if (v == "pif") return Experiment::pif;
  if (v == "rpi-compare") return Experiment::rpi_compare;
  if (v == "corridor-scan") return Experiment::corridor_scan;
  if (v == "markov-limit") return Experiment::markov_limit;
  throw ConfigError("config: unknown experiment '" + v + "'");
}

const char* experiment_name(Experiment e) {
  switch (e) {
    case Experiment::check: return "check";
    case Experiment::consistency: return "consistency";
    case Experiment::pif: return "pif";
    case Experiment::rpi_compare: return "rpi-compare";
    case Experiment::corridor_scan: return "corridor-scan";
    case Experiment::markov_limit: return "markov-limit";
  }
  return "?";
}

}  // namespace

ExperimentConfig parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: cannot read '" + path + "'");

  ExperimentConfig cfg;
  cfg.config_dir = fs::path(path).parent_path().string();
  if (cfg.config_dir.empty()) cfg.config_dir = ".";

  std::set<std::string> seen;
  bool have_experiment = false, have_preset = false;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && line.size() >= 3 && line[0] == '\xEF' &&
        line[1] == '\xBB' && line[2] == '\xBF')
      line.erase(0, 3);
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("config line " + std::to_string(line_no) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty())
      throw ConfigError("config line " + std::to_string(line_no) + ": empty key or value");
    if (!seen.insert(key).second)
      throw ConfigError("config: duplicate key '" + key + "'");
    cfg.raw.emplace_back(key, value);

    if (key == "experiment") {
      cfg.experiment = parse_experiment(value);
      have_experiment = true;
    } else if (key == "model.preset") {
      if (value != "von-neumann" && value != "spin-bath" && value != "qubit")
        throw ConfigError("config: unknown preset '" + value + "'");
      cfg.preset = value;
      have_preset = true;
    } else if (key == "model.g") {
      cfg.g = parse_double(key, value);
    } else if (key == "model.n_grid") {
      cfg.n_grid = static_cast<int>(parse_int(key, value));
    } else if (key == "model.x_max") {
      cfg.x_max = parse_double(key, value);
    } else if (key == "model.sigma0") {
      cfg.sigma0 = parse_double(key, value);
    } else if (key == "model.omega_s") {
      cfg.omega_s = parse_double(key, value);
    } else if (key == "model.n_spins") {
      cfg.n_spins = static_cast<int>(parse_int(key, value));
    } else if (key == "model.epsilon") {
      cfg.epsilon = parse_double(key, value);
    } else if (key == "model.theta") {
      cfg.theta = parse_double(key, value);
    } else if (key == "scheme.slices") {
      cfg.scheme.slices = static_cast<int>(parse_int(key, value));
    } else if (key == "scheme.dt") {
      cfg.scheme.dt = parse_double(key, value);
    } else if (key == "scheme.splitting") {
      if (value == "exact")
        cfg.scheme.splitting = evolution::Splitting::exact_slice;
      else if (value == "strang")
        cfg.scheme.splitting = evolution::Splitting::strang;
      else
        throw ConfigError("config: unknown splitting '" + value + "'");
    } else if (key == "window.kind") {
      if (value == "box")
        cfg.window.kind = WindowKind::box;
      else if (value == "gaussian")
        cfg.window.kind = WindowKind::gaussian;
      else
        throw ConfigError("config: unknown window kind '" + value + "'");
    } else if (key == "window.width") {
      cfg.window.width = parse_double(key, value);
    } else if (key == "window.normalization") {
      if (value == "povm")
        cfg.window.normalization = Normalization::povm;
      else if (value == "amplitude")
        cfg.window.normalization = Normalization::amplitude;
      else
        throw ConfigError("config: unknown normalization '" + value + "'");
    } else if (key == "measure.count") {
      cfg.measure_count = static_cast<std::size_t>(parse_int(key, value));
    } else if (key == "scan.count") {
      cfg.scan_count = static_cast<std::size_t>(parse_int(key, value));
    } else if (key == "scan.span") {
      cfg.scan_span = parse_double(key, value);
    } else if (key == "markov.kappa") {
      cfg.markov_kappa = parse_double(key, value);
    } else if (key == "markov.t") {
      cfg.markov_t = parse_double(key, value);
    } else if (key == "markov.base_slices") {
      cfg.markov_base_slices = static_cast<int>(parse_int(key, value));
    } else if (key == "markov.levels") {
      cfg.markov_levels = static_cast<int>(parse_int(key, value));
    } else if (key == "report.prob_floor") {
      cfg.prob_floor = parse_double(key, value);
    } else if (key == "report.top_corridors") {
      cfg.top_corridors = static_cast<std::size_t>(parse_int(key, value));
    } else if (key == "output.dir") {
      cfg.output_dir = value;
    } else if (key == "output.plots") {
      cfg.emit_plots = parse_bool(key, value);
    } else if (key.rfind("thresholds.", 0) == 0) {
      const std::string rest = key.substr(11);
      const auto dot = rest.rfind('.');
      if (dot == std::string::npos)
        throw ConfigError("config: threshold key '" + key + "' needs .max or .min");
      const std::string metric = rest.substr(0, dot);
      const std::string bound = rest.substr(dot + 1);
      if (!known_metrics().count(metric))
        throw ConfigError("config: unknown threshold metric '" + metric + "'");
      if (bound == "max")
        cfg.thresholds.max[metric] = parse_double(key, value);
      else if (bound == "min")
        cfg.thresholds.min[metric] = parse_double(key, value);
      else
        throw ConfigError("config: threshold key '" + key + "' needs .max or .min");
    } else {
      throw ConfigError("config: unknown key '" + key + "'");
    }
  }
  if (!have_experiment) throw ConfigError("config: missing 'experiment'");
  if (!have_preset) throw ConfigError("config: missing 'model.preset'");

  if (cfg.scheme.slices < 1) throw ConfigError("config: scheme.slices must be >= 1");
  if (cfg.scheme.dt <= 0.0) throw ConfigError("config: scheme.dt must be positive");
  if (cfg.window.width <= 0.0) throw ConfigError("config: window.width must be positive");
  if (cfg.measure_count < 1) throw ConfigError("config: measure.count must be >= 1");
  if (cfg.scan_count < 1) throw ConfigError("config: scan.count must be >= 1");
  if (cfg.scan_span <= 0.0) throw ConfigError("config: scan.span must be positive");
  if (cfg.markov_kappa <= 0.0) throw ConfigError("config: markov.kappa must be positive");
  if (cfg.markov_t <= 0.0) throw ConfigError("config: markov.t must be positive");
  if (cfg.markov_base_slices < 1)
    throw ConfigError("config: markov.base_slices must be >= 1");
  if (cfg.markov_levels < 1) throw ConfigError("config: markov.levels must be >= 1");
  if (cfg.prob_floor <= 0.0) throw ConfigError("config: report.prob_floor must be positive");
  if (cfg.n_grid < 1) throw ConfigError("config: model.n_grid must be >= 1");
  if (cfg.n_spins < 1) throw ConfigError("config: model.n_spins must be >= 1");

  const char* workers = std::getenv("CORLAB_WORKERS");
  if (workers != nullptr) {
    const std::string w(workers);
    long n = 0;
    try {
      std::size_t used = 0;
      n = std::stol(w, &used);
      if (used != w.size()) n = 0;
    } catch (const std::exception&) {
      n = 0;
    }
    if (n < 1) throw ConfigError("CORLAB_WORKERS must be a positive integer");
  }
  return cfg;
}

namespace {

// ----- experiment plumbing -----

struct MetricTable {
  std::vector<std::pair<std::string, double>> rows;

  void add(const std::string& name, double v) { rows.emplace_back(name, v); }
  bool has(const std::string& name) const {
    for (const auto& [k, v] : rows)
      if (k == name) return true;
    return false;
  }
};

class CsvFile {
 public:
  CsvFile(const fs::path& path, const std::vector<std::string>& columns)
      : out_(path, std::ios::binary) {
    if (!out_) throw std::runtime_error("cannot write " + path.string());
    for (std::size_t i = 0; i < columns.size(); ++i) {
      if (i) out_ << ',';
      out_ << columns[i];
    }
    out_ << '\n';
  }

  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out_ << ',';
      out_ << cells[i];
    }
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

std::string cell(double v) { return fmt_double(v); }
std::string cell(std::size_t v) { return std::to_string(v); }

CompoundModel build_model(const ExperimentConfig& cfg) {
  if (cfg.preset == "von-neumann")
    return model::build_von_neumann(cfg.g, cfg.n_grid, cfg.x_max, cfg.sigma0,
                                    cfg.omega_s);
  if (cfg.preset == "spin-bath")
    return model::build_spin_bath(cfg.n_spins, cfg.g, cfg.epsilon, cfg.omega_s);
  return model::build_qubit(cfg.omega_s, cfg.theta);
}

CorridorMeasure build_measure(const ExperimentConfig& cfg, const CompoundModel& m) {
  if (cfg.window.kind == WindowKind::box)
    return corridors::box_measure(m, cfg.window.width);
  return corridors::gaussian_measure(m, cfg.window.width, cfg.measure_count);
}

std::vector<double> offset_grid(const ExperimentConfig& cfg) {
  std::vector<double> offsets(cfg.scan_count);
  if (cfg.scan_count == 1) {
    offsets[0] = 0.0;
    return offsets;
  }
  const double step = cfg.scan_span / static_cast<double>(cfg.scan_count - 1);
  for (std::size_t j = 0; j < cfg.scan_count; ++j)
    offsets[j] = -0.5 * cfg.scan_span + step * static_cast<double>(j);
  return offsets;
}

// corridors whose centers follow the dominant branch, shifted per offset
std::vector<CorridorSpec> branch_corridors(const ExperimentConfig& cfg,
                                           const CompoundModel& m,
                                           const std::vector<double>& offsets) {
  const auto traj = decoherence::branch_trajectories(m, cfg.scheme);
  const auto dom = static_cast<std::size_t>(decoherence::dominant_branch(m));
  std::vector<CorridorSpec> out;
  out.reserve(offsets.size());
  for (double off : offsets) {
    CorridorSpec c;
    c.window = cfg.window;
    c.measure_weight = 1.0;
    c.centers.reserve(traj[dom].size());
    for (double q : traj[dom]) c.centers.push_back(q + off);
    out.push_back(std::move(c));
  }
  return out;
}

std::size_t nearest_zero_offset(const std::vector<double>& offsets) {
  std::size_t best = 0;
  for (std::size_t j = 1; j < offsets.size(); ++j)
    if (std::abs(offsets[j]) < std::abs(offsets[best])) best = j;
  return best;
}

MetricTable run_check_experiment(const ExperimentConfig& cfg) {
  CompoundModel m = build_model(cfg);
  model::validate(m);
  CorridorMeasure meas = build_measure(cfg, m);

  MetricTable t;
  t.add("resolution_residual", corridors::resolution_check(m, cfg.window, meas));

  const bool povm_gauss = cfg.window.kind == WindowKind::gaussian &&
                          cfg.window.normalization == Normalization::povm;
  const Matrix u_dt = evolution::slice_propagator(m, cfg.scheme);
  const Matrix r_in = hilbert::kron(m.rho_in_s.matrix, m.rho_in_e.matrix);
  if (!povm_gauss) {
    t.add("reconstruction_residual",
          evolution::reconstruct_total(m, cfg.scheme, meas, cfg.window));
    Matrix slice_sum = Matrix::Zero(m.dim_total(), m.dim_total());
    for (std::size_t j = 0; j < meas.size(); ++j) {
      const Matrix w = corridors::weight_operator(m, cfg.window, meas.nodes[j]);
      slice_sum += meas.weights[j] * evolution::apply_env_weight(w, u_dt, m.dim_s);
    }
    Matrix chain = Matrix::Identity(m.dim_total(), m.dim_total());
    for (int k = 0; k < cfg.scheme.slices; ++k) chain = slice_sum * chain;
    t.add("completeness_residual",
          std::abs((chain * r_in * chain.adjoint()).trace().real() - 1.0));
  } else {
    std::vector<Matrix> w_ops(meas.size());
    for (std::size_t j = 0; j < meas.size(); ++j)
      w_ops[j] = corridors::weight_operator(m, cfg.window, meas.nodes[j]);
    Matrix rho = r_in;
    for (int k = 0; k < cfg.scheme.slices; ++k) {
      const Matrix evolved = u_dt * rho * u_dt.adjoint();
      Matrix next = Matrix::Zero(rho.rows(), rho.cols());
      for (std::size_t j = 0; j < meas.size(); ++j) {
        const Matrix half = evolution::apply_env_weight(w_ops[j], evolved, m.dim_s);
        next += meas.weights[j] *
                evolution::apply_env_weight(w_ops[j], half.adjoint(), m.dim_s).adjoint();
      }
      rho = next;
    }
    t.add("completeness_residual", std::abs(rho.trace().real() - 1.0));
  }
  return t;
}

MetricTable run_consistency_experiment(const ExperimentConfig& cfg,
                                       const fs::path& out,
                                       std::vector<std::string>& artifacts) {
  CompoundModel m = build_model(cfg);
  CorridorMeasure meas = build_measure(cfg, m);
  decoherence::ReportOptions opts;
  opts.prob_floor = cfg.prob_floor;
  opts.top_corridors = cfg.top_corridors;
  decoherence::DecoherenceReport rep =
      decoherence::consistency_report(m, cfg.scheme, meas, cfg.window, opts);

  CsvFile csv(out / "decoherence.csv",
              {"alpha", "beta", "re_P", "im_P", "coherence_ratio", "env_ratio"});
  for (const auto& row : rep.pair_rows)
    csv.row({cell(row.alpha), cell(row.beta), cell(row.p.real()),
             cell(row.p.imag()), cell(row.coherence_ratio), cell(row.env_ratio)});
  artifacts.push_back("decoherence.csv");

  MetricTable t;
  t.add("consistency_ratio", rep.consistency_ratio);
  t.add("env_ratio", rep.env_ratio);
  t.add("completeness_residual", rep.completeness_residual);
  t.add("corridor_count", static_cast<double>(rep.corridor_count));
  double max_prob = 0.0;
  for (double p : rep.probs) max_prob = std::max(max_prob, p);
  t.add("max_prob", max_prob);
  return t;
}

MetricTable run_pif_experiment(const ExperimentConfig& cfg, const fs::path& out,
                               std::vector<std::string>& artifacts) {
  CompoundModel m = build_model(cfg);
  const std::vector<double> offsets = offset_grid(cfg);
  const std::vector<CorridorSpec> cs = branch_corridors(cfg, m, offsets);
  const std::size_t on_branch = nearest_zero_offset(offsets);

  CsvFile csv(out / "pif.csv", {"alpha", "s_index", "sbar_index", "re_F", "im_F"});
  double sigma_on_branch = 0.0, sigma_max = 0.0, reassembly_max = 0.0;
  for (std::size_t j = 0; j < cs.size(); ++j) {
    decoherence::PifTable f = decoherence::pif_table(m, cfg.scheme, cs[j], cs[j]);
    for (Index a = 0; a < f.table.rows(); ++a)
      for (Index b = 0; b < f.table.cols(); ++b)
        csv.row({cell(j), cell(static_cast<std::size_t>(a)),
                 cell(static_cast<std::size_t>(b)), cell(f.table(a, b).real()),
                 cell(f.table(a, b).imag())});

    decoherence::PifFactorization fact = decoherence::factorize_pif(f);
    const double ratio = fact.negligible ? 0.0 : fact.sigma_ratio;
    sigma_max = std::max(sigma_max, ratio);
    if (j == on_branch) sigma_on_branch = ratio;

    evolution::PartialPropagator u = evolution::partial_propagator(m, cfg.scheme, cs[j]);
    evolution::PartialDensity pd = evolution::partial_density(m, u, u);
    const Matrix re = decoherence::reassemble_reduced(m, cfg.scheme, f);
    reassembly_max = std::max(reassembly_max, hilbert::max_abs(re - pd.reduced));
  }
  artifacts.push_back("pif.csv");

  MetricTable t;
  t.add("sigma_ratio_on_branch", sigma_on_branch);
  t.add("sigma_ratio_max", sigma_max);
  t.add("reassembly_err_max", reassembly_max);
  return t;
}

MetricTable run_compare_experiment(const ExperimentConfig& cfg,
                                   const fs::path& out,
                                   std::vector<std::string>& artifacts) {
  CompoundModel m = build_model(cfg);
  const std::vector<double> offsets = offset_grid(cfg);
  const std::vector<CorridorSpec> cs = branch_corridors(cfg, m, offsets);
  const std::size_t on_branch = nearest_zero_offset(offsets);

  std::vector<rpi::CompareRow> rows = rpi::compare_rpi_vs_exact(m, cfg.scheme, cs);

  CsvFile csv(out / "compare.csv",
              {"alpha", "trace_dist", "prob_rel_err", "factorization_residual"});
  for (const auto& r : rows)
    csv.row({cell(r.alpha), cell(r.trace_dist), cell(r.prob_rel_err),
             cell(r.factorization_residual)});
  artifacts.push_back("compare.csv");

  MetricTable t;
  t.add("trace_dist_on_branch", rows[on_branch].trace_dist);
  t.add("prob_rel_err_on_branch", rows[on_branch].prob_rel_err);
  double dist_max = 0.0;
  for (const auto& r : rows) dist_max = std::max(dist_max, r.trace_dist);
  t.add("trace_dist_max", dist_max);

  // Pearson correlation between factorization residual and trace distance
  double corr = 0.0;
  if (rows.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (const auto& r : rows) {
      mx += r.factorization_residual;
      my += r.trace_dist;
    }
    mx /= static_cast<double>(rows.size());
    my /= static_cast<double>(rows.size());
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (const auto& r : rows) {
      const double dx = r.factorization_residual - mx;
      const double dy = r.trace_dist - my;
      sxy += dx * dy;
      sxx += dx * dx;
      syy += dy * dy;
    }
    if (sxx > 0.0 && syy > 0.0) corr = sxy / std::sqrt(sxx * syy);
  }
  t.add("trend_corr", corr);
  return t;
}

MetricTable run_scan_experiment(const ExperimentConfig& cfg, const fs::path& out,
                                std::vector<std::string>& artifacts) {
  CompoundModel m = build_model(cfg);
  const std::vector<double> offsets = offset_grid(cfg);
  CorridorMeasure grid;
  grid.nodes = offsets;
  grid.weights.assign(offsets.size(), 1.0);
  grid.lo = offsets.front();
  grid.hi = offsets.back();
  std::vector<decoherence::ScanRow> rows =
      decoherence::classical_corridor_scan(m, cfg.scheme, grid, cfg.window);

  CsvFile csv(out / "scan.csv", {"alpha", "offset", "prob", "pif_norm"});
  for (const auto& r : rows)
    csv.row({cell(r.alpha), cell(r.offset), cell(r.prob), cell(r.pif_norm)});
  artifacts.push_back("scan.csv");

  MetricTable t;
  double max_prob = 0.0, sum_prob = 0.0, peak_offset = rows.front().offset;
  for (const auto& r : rows) {
    sum_prob += r.prob;
    if (r.prob > max_prob) {
      max_prob = r.prob;
      peak_offset = r.offset;
    }
  }
  t.add("max_prob", max_prob);
  t.add("sum_prob", sum_prob);
  t.add("peak_offset", peak_offset);
  return t;
}

MetricTable run_markov_experiment(const ExperimentConfig& cfg, const fs::path& out,
                                  std::vector<std::string>& artifacts) {
  CompoundModel m = build_model(cfg);
  std::vector<rpi::MarkovRow> rows = rpi::markov_limit_check(
      m.h_s, m.sys_obs, m.rho_in_s, cfg.markov_kappa, cfg.markov_t,
      cfg.markov_base_slices, cfg.markov_levels);

  CsvFile csv(out / "markov.csv", {"dt", "trace_dist"});
  for (const auto& r : rows) csv.row({cell(r.dt), cell(r.trace_dist)});
  artifacts.push_back("markov.csv");

  MetricTable t;
  double ratio_min = 1e300, ratio_max = 0.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double denom = rows[i - 1].trace_dist;
    const double ratio = denom > 1e-300 ? rows[i].trace_dist / denom : 0.0;
    ratio_min = std::min(ratio_min, ratio);
    ratio_max = std::max(ratio_max, ratio);
  }
  if (rows.size() < 2) ratio_min = ratio_max = 0.0;
  t.add("markov_ratio_min", ratio_min);
  t.add("markov_ratio_max", ratio_max);
  t.add("markov_dist_final", rows.back().trace_dist);

  // dephasing closed form needs a measured axis that commutes with h_s
  const Matrix comm = m.h_s * m.sys_obs - m.sys_obs * m.h_s;
  if (hilbert::max_abs(comm) < 1e-12 && m.dim_s >= 2) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(m.sys_obs);
    const Matrix rho0 = es.eigenvectors().adjoint() * m.rho_in_s.matrix *
                        es.eigenvectors();
    Index bi = 0, bj = 1;
    double best = -1.0;
    for (Index i = 0; i < m.dim_s; ++i)
      for (Index j = i + 1; j < m.dim_s; ++j)
        if (std::abs(rho0(i, j)) > best &&
            std::abs(es.eigenvalues()(i) - es.eigenvalues()(j)) > 1e-12) {
          best = std::abs(rho0(i, j));
          bi = i;
          bj = j;
        }
    const double gap = es.eigenvalues()(bi) - es.eigenvalues()(bj);
    const double rate = 0.5 * cfg.markov_kappa * gap * gap;

    rpi::LindbladGenerator gen{m.h_s, m.sys_obs, cfg.markov_kappa,
                               cfg.markov_t / 4096.0};
    const int samples = 64;
    CsvFile decay(out / "dephasing.csv", {"t", "offdiag"});
    hilbert::DensityOp state = m.rho_in_s;
    double t_now = 0.0;
    double err_lind = 0.0;
    decay.row({cell(0.0), cell(best)});
    for (int k = 1; k <= samples; ++k) {
      const double t_next = cfg.markov_t * k / samples;
      state = rpi::lindblad_evolve(gen, state, t_next - t_now);
      t_now = t_next;
      const Matrix r = es.eigenvectors().adjoint() * state.matrix * es.eigenvectors();
      const double mag = std::abs(r(bi, bj));
      decay.row({cell(t_now), cell(mag)});
      err_lind = std::max(err_lind, std::abs(mag - best * std::exp(-rate * t_now)));
    }
    artifacts.push_back("dephasing.csv");
    t.add("dephasing_err_lindblad", err_lind);

    const int finest = cfg.markov_base_slices << (cfg.markov_levels - 1);
    const Matrix chan = rpi::gaussian_channel_evolve(
        m.h_s, m.sys_obs, m.rho_in_s.matrix, cfg.markov_kappa, cfg.markov_t, finest);
    const Matrix rc = es.eigenvectors().adjoint() * chan * es.eigenvectors();
    t.add("dephasing_err_channel",
          std::abs(std::abs(rc(bi, bj)) - best * std::exp(-rate * cfg.markov_t)));
  }
  return t;
}

void write_metrics_csv(const fs::path& out, const MetricTable& t,
                       std::vector<std::string>& artifacts) {
  CsvFile csv(out / "metrics.csv", {"metric", "value"});
  for (const auto& [name, v] : t.rows) csv.row({name, cell(v)});
  artifacts.push_back("metrics.csv");
}

void write_summary(const fs::path& out, const ExperimentConfig& cfg,
                   Experiment experiment, const MetricTable& t, bool pass,
                   const std::vector<std::string>& artifacts) {
  nlohmann::ordered_json j;
  j["tool"] = "corlab";
  j["version"] = version_string();
  j["experiment"] = experiment_name(experiment);
  j["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : cfg.raw) j["config"][k] = v;
  j["metrics"] = nlohmann::ordered_json::object();
  for (const auto& [name, v] : t.rows) {
    nlohmann::ordered_json entry;
    entry["value"] = v;
    const auto mx = cfg.thresholds.max.find(name);
    const auto mn = cfg.thresholds.min.find(name);
    entry["max"] = mx == cfg.thresholds.max.end()
                       ? nlohmann::ordered_json(nullptr)
                       : nlohmann::ordered_json(mx->second);
    entry["min"] = mn == cfg.thresholds.min.end()
                       ? nlohmann::ordered_json(nullptr)
                       : nlohmann::ordered_json(mn->second);
    bool ok = true;
    if (mx != cfg.thresholds.max.end()) ok = ok && v <= mx->second;
    if (mn != cfg.thresholds.min.end()) ok = ok && v >= mn->second;
    entry["pass"] = ok;
    j["metrics"][name] = entry;
  }
  j["pass"] = pass;
  j["artifacts"] = artifacts;

  std::ofstream f(out / "summary.json", std::ios::binary);
  if (!f) throw std::runtime_error("cannot write summary.json");
  f << j.dump(2) << '\n';
}

void emit_experiment_plots(Experiment experiment, const fs::path& out,
                           const std::vector<std::string>& artifacts,
                           std::vector<std::string>& plot_files) {
  const auto have = [&](const char* name) {
    return std::find(artifacts.begin(), artifacts.end(), name) != artifacts.end();
  };
  if (experiment == Experiment::corridor_scan && have("scan.csv")) {
    emit_plot((out / "scan.csv").string(), PlotKind::scan, "offset", "prob",
              (out / "scan.svg").string());
    plot_files.push_back("scan.svg");
  } else if (experiment == Experiment::rpi_compare && have("compare.csv")) {
    emit_plot((out / "compare.csv").string(), PlotKind::scan, "alpha",
              "trace_dist", (out / "compare.svg").string());
    plot_files.push_back("compare.svg");
  } else if (experiment == Experiment::markov_limit) {
    if (have("markov.csv")) {
      emit_plot((out / "markov.csv").string(), PlotKind::ladder, "dt",
                "trace_dist", (out / "markov.svg").string());
      plot_files.push_back("markov.svg");
    }
    if (have("dephasing.csv")) {
      emit_plot((out / "dephasing.csv").string(), PlotKind::decay, "t",
                "offdiag", (out / "dephasing.svg").string());
      plot_files.push_back("dephasing.svg");
    }
  }
}

}  // namespace

int run(const std::string& config_path, bool force_check) {
  const auto t0 = std::chrono::steady_clock::now();
  ExperimentConfig cfg;
  try {
    cfg = parse_config(config_path);
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  const Experiment experiment = force_check ? Experiment::check : cfg.experiment;

  const fs::path out = fs::path(cfg.output_dir).is_absolute()
                           ? fs::path(cfg.output_dir)
                           : fs::path(cfg.config_dir) / cfg.output_dir;
  MetricTable metrics;
  std::vector<std::string> artifacts;
  try {
    std::error_code ec;
    fs::create_directories(out, ec);
    if (ec) throw std::runtime_error("cannot create output dir " + out.string());
    switch (experiment) {
      case Experiment::check:
        metrics = run_check_experiment(cfg);
        break;
      case Experiment::consistency:
        metrics = run_consistency_experiment(cfg, out, artifacts);
        break;
      case Experiment::pif:
        metrics = run_pif_experiment(cfg, out, artifacts);
        break;
      case Experiment::rpi_compare:
        metrics = run_compare_experiment(cfg, out, artifacts);
        break;
      case Experiment::corridor_scan:
        metrics = run_scan_experiment(cfg, out, artifacts);
        break;
      case Experiment::markov_limit:
        metrics = run_markov_experiment(cfg, out, artifacts);
        break;
    }
  } catch (const GuardError& e) {
    std::cerr << "guard: " << e.what() << '\n';
    return 3;
  } catch (const std::invalid_argument& e) {
    std::cerr << "precondition: " << e.what() << '\n';
    return 3;
  }

  // threshold keys must name metrics this run produced
  for (const auto& [name, v] : cfg.thresholds.max)
    if (!metrics.has(name)) {
      std::cerr << "error: threshold on metric '" << name
                << "' not produced by experiment " << experiment_name(experiment)
                << '\n';
      return 2;
    }
  for (const auto& [name, v] : cfg.thresholds.min)
    if (!metrics.has(name)) {
      std::cerr << "error: threshold on metric '" << name
                << "' not produced by experiment " << experiment_name(experiment)
                << '\n';
      return 2;
    }

  bool pass = true;
  for (const auto& [name, v] : metrics.rows) {
    const auto mx = cfg.thresholds.max.find(name);
    const auto mn = cfg.thresholds.min.find(name);
    if (mx != cfg.thresholds.max.end() && !(v <= mx->second)) pass = false;
    if (mn != cfg.thresholds.min.end() && !(v >= mn->second)) pass = false;
  }

  write_metrics_csv(out, metrics, artifacts);
  if (cfg.emit_plots) {
    std::vector<std::string> plots;
    emit_experiment_plots(experiment, out, artifacts, plots);
    artifacts.insert(artifacts.end(), plots.begin(), plots.end());
  }
  write_summary(out, cfg, experiment, metrics, pass, artifacts);

  const auto t1 = std::chrono::steady_clock::now();
  const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0);
  std::cout << experiment_name(experiment) << ": "
            << (pass ? "pass" : "threshold failure") << " (" << ms.count()
            << " ms, artifacts in " << out.string() << ")\n";
  return pass ? 0 : 4;
}

void list_presets(std::ostream& os) {
  os << "von-neumann  pointer on a periodic position grid\n"
     << "             model.g model.n_grid model.x_max model.sigma0 model.omega_s\n"
     << "spin-bath    central qubit against a bath of spins\n"
     << "             model.n_spins model.g model.epsilon model.omega_s\n"
     << "qubit        bare qubit, trivial environment\n"
     << "             model.omega_s model.theta\n";
}

std::string version_string() { return "0.1.0"; }

// ----- plotting -----

namespace {

struct Curve {
  std::vector<double> x, y;
};

Curve read_curve(const std::string& csv_path, const std::string& x_col,
                 const std::string& y_col) {
  std::ifstream in(csv_path);
  if (!in) throw std::invalid_argument("plot: cannot read " + csv_path);
  std::string line;
  if (!std::getline(in, line)) throw std::invalid_argument("plot: empty file");
  std::vector<std::string> cols;
  {
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cols.push_back(trim(c));
  }
  auto find_col = [&](const std::string& name) {
    for (std::size_t i = 0; i < cols.size(); ++i)
      if (cols[i] == name) return i;
    throw std::invalid_argument("plot: column '" + name + "' missing in " + csv_path);
  };
  const std::size_t xi = find_col(x_col);
  const std::size_t yi = find_col(y_col);

  Curve c;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string v;
    while (std::getline(ss, v, ',')) cells.push_back(v);
    if (cells.size() != cols.size())
      throw std::invalid_argument("plot: ragged row in " + csv_path);
    try {
      c.x.push_back(std::stod(cells[xi]));
      c.y.push_back(std::stod(cells[yi]));
    } catch (const std::exception&) {
      throw std::invalid_argument("plot: non-numeric cell in " + csv_path);
    }
  }
  if (c.x.empty()) throw std::invalid_argument("plot: no data rows in " + csv_path);
  return c;
}

struct AxisMap {
  double lo, hi, p0, p1;

  double operator()(double v) const {
    if (hi == lo) return 0.5 * (p0 + p1);
    return p0 + (v - lo) / (hi - lo) * (p1 - p0);
  }
};

std::string px(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", v);
  return buf;
}

}  // namespace

void emit_plot(const std::string& csv_path, PlotKind kind,
               const std::string& x_col, const std::string& y_col,
               const std::string& svg_path) {
  Curve c = read_curve(csv_path, x_col, y_col);

  std::string x_label = x_col, y_label = y_col;
  std::vector<double> tx = c.x, ty = c.y;
  if (kind == PlotKind::decay || kind == PlotKind::ladder) {
    for (double v : ty)
      if (v <= 0.0)
        throw std::invalid_argument("plot: log scale needs positive " + y_col);
    for (double& v : ty) v = std::log10(v);
    y_label = "log10(" + y_col + ")";
  }
  if (kind == PlotKind::ladder) {
    for (double v : tx)
      if (v <= 0.0)
        throw std::invalid_argument("plot: log scale needs positive " + x_col);
    for (double& v : tx) v = std::log10(v);
    x_label = "log10(" + x_col + ")";
  }

  double x_lo = tx[0], x_hi = tx[0], y_lo = ty[0], y_hi = ty[0];
  for (double v : tx) {
    x_lo = std::min(x_lo, v);
    x_hi = std::max(x_hi, v);
  }
  for (double v : ty) {
    y_lo = std::min(y_lo, v);
    y_hi = std::max(y_hi, v);
  }
  if (x_hi == x_lo) {
    x_lo -= 1.0;
    x_hi += 1.0;
  }
  if (y_hi == y_lo) {
    y_lo -= 1.0;
    y_hi += 1.0;
  }
  const double xp = 0.05 * (x_hi - x_lo), yp = 0.05 * (y_hi - y_lo);
  x_lo -= xp;
  x_hi += xp;
  y_lo -= yp;
  y_hi += yp;

  const double width = 640.0, height = 420.0;
  const double ml = 76.0, mr = 20.0, mt = 20.0, mb = 56.0;
  AxisMap X{x_lo, x_hi, ml, width - mr};
  AxisMap Y{y_lo, y_hi, height - mb, mt};

  std::ostringstream s;
  s << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"420\" "
       "viewBox=\"0 0 640 420\">\n"
    << "<rect width=\"640\" height=\"420\" fill=\"#ffffff\"/>\n";

  // grid + ticks
  for (int i = 0; i <= 4; ++i) {
    const double fx = x_lo + (x_hi - x_lo) * i / 4.0;
    const double fy = y_lo + (y_hi - y_lo) * i / 4.0;
    s << "<line x1=\"" << px(X(fx)) << "\" y1=\"" << px(mt) << "\" x2=\""
      << px(X(fx)) << "\" y2=\"" << px(height - mb)
      << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    s << "<line x1=\"" << px(ml) << "\" y1=\"" << px(Y(fy)) << "\" x2=\""
      << px(width - mr) << "\" y2=\"" << px(Y(fy))
      << "\" stroke=\"#dddddd\" stroke-width=\"1\"/>\n";
    s << "<text x=\"" << px(X(fx)) << "\" y=\"" << px(height - mb + 18)
      << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333333\" "
         "text-anchor=\"middle\">"
      << fmt_sig(fx, 4) << "</text>\n";
    s << "<text x=\"" << px(ml - 8) << "\" y=\"" << px(Y(fy) + 4)
      << "\" font-family=\"sans-serif\" font-size=\"11\" fill=\"#333333\" "
         "text-anchor=\"end\">"
      << fmt_sig(fy, 4) << "</text>\n";
  }
  // axes
  s << "<line x1=\"" << px(ml) << "\" y1=\"" << px(height - mb) << "\" x2=\""
    << px(width - mr) << "\" y2=\"" << px(height - mb)
    << "\" stroke=\"#333333\" stroke-width=\"1.5\"/>\n";
  s << "<line x1=\"" << px(ml) << "\" y1=\"" << px(mt) << "\" x2=\"" << px(ml)
    << "\" y2=\"" << px(height - mb)
    << "\" stroke=\"#333333\" stroke-width=\"1.5\"/>\n";
  // axis labels
  s << "<text x=\"" << px(0.5 * (ml + width - mr)) << "\" y=\""
    << px(height - 12)
    << "\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#111111\" "
       "text-anchor=\"middle\">"
    << x_label << "</text>\n";
  s << "<text x=\"16\" y=\"" << px(0.5 * (mt + height - mb))
    << "\" font-family=\"sans-serif\" font-size=\"13\" fill=\"#111111\" "
       "text-anchor=\"middle\" transform=\"rotate(-90 16 "
    << px(0.5 * (mt + height - mb)) << ")\">" << y_label << "</text>\n";

  // curve
  s << "<polyline fill=\"none\" stroke=\"#0b66aa\" stroke-width=\"2\" points=\"";
  for (std::size_t i = 0; i < tx.size(); ++i) {
    if (i) s << ' ';
    s << px(X(tx[i])) << ',' << px(Y(ty[i]));
  }
  s << "\"/>\n";
  if (kind == PlotKind::ladder || tx.size() <= 32) {
    for (std::size_t i = 0; i < tx.size(); ++i)
      s << "<circle cx=\"" << px(X(tx[i])) << "\" cy=\"" << px(Y(ty[i]))
        << "\" r=\"3\" fill=\"#0b66aa\"/>\n";
  }

  // annotations
  if (kind == PlotKind::decay && tx.size() >= 2) {
    double mx = 0.0, my = 0.0;
    const auto n = static_cast<double>(tx.size());
    for (std::size_t i = 0; i < tx.size(); ++i) {
      mx += tx[i];
      my += ty[i] * std::numbers::ln10;
    }
    mx /= n;
    my /= n;
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < tx.size(); ++i) {
      sxy += (tx[i] - mx) * (ty[i] * std::numbers::ln10 - my);
      sxx += (tx[i] - mx) * (tx[i] - mx);
    }
    const double slope = sxx > 0.0 ? sxy / sxx : 0.0;
    s << "<text x=\"" << px(width - mr - 6) << "\" y=\"" << px(mt + 16)
      << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#aa3311\" "
         "text-anchor=\"end\">ln-slope = "
      << fmt_sig(slope, 4) << "</text>\n";
  }
  if (kind == PlotKind::ladder && c.y.size() >= 2) {
    std::string ratios;
    for (std::size_t i = 1; i < c.y.size(); ++i) {
      if (i > 1) ratios += ", ";
      ratios += fmt_sig(c.y[i] / c.y[i - 1], 3);
    }
    s << "<text x=\"" << px(width - mr - 6) << "\" y=\"" << px(mt + 16)
      << "\" font-family=\"sans-serif\" font-size=\"12\" fill=\"#aa3311\" "
         "text-anchor=\"end\">step ratios: "
      << ratios << "</text>\n";
  }
  s << "</svg>\n";

  std::ofstream f(svg_path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + svg_path);
  f << s.str();
}

}  // namespace corlab::cli
