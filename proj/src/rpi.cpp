#include "corlab/rpi.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>

namespace corlab::rpi {

using model::CompoundModel;

namespace {

struct ObsBasis {
  RealVector values;
  Matrix vectors;
};

ObsBasis obs_basis(const Matrix& sys_obs) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sys_obs);
  return {es.eigenvalues(), es.eigenvectors()};
}

void decode_path(std::size_t p, Index dim, std::vector<Index>& lab) {
  for (std::size_t i = lab.size(); i-- > 0;) {
    lab[i] = static_cast<Index>(p % static_cast<std::size_t>(dim));
    p /= static_cast<std::size_t>(dim);
  }
}

// w[s] = prod_k v_k(s_k) detection: read candidate factors off a reference
// path, then verify every entry
std::optional<std::vector<Vector>> try_factor_slices(const Vector& w,
                                                     Index dim, int slices) {
  const auto n = static_cast<std::size_t>(w.size());
  std::size_t ref = 0;
  double best = 0.0;
  for (std::size_t p = 0; p < n; ++p)
    if (std::abs(w(static_cast<Index>(p))) > best) {
      best = std::abs(w(static_cast<Index>(p)));
      ref = p;
    }
  std::vector<Vector> v(static_cast<std::size_t>(slices));
  if (best == 0.0) {
    for (auto& vk : v) vk = Vector::Zero(dim);
    return v;
  }
  std::vector<Index> ref_lab(static_cast<std::size_t>(slices), 0);
  decode_path(ref, dim, ref_lab);
  // stride of slice k in the flattened path index
  std::vector<std::size_t> stride(static_cast<std::size_t>(slices), 1);
  for (int k = slices - 2; k >= 0; --k)
    stride[static_cast<std::size_t>(k)] =
        stride[static_cast<std::size_t>(k) + 1] * static_cast<std::size_t>(dim);
  const Complex w_ref = w(static_cast<Index>(ref));
  for (int k = 0; k < slices; ++k) {
    auto& vk = v[static_cast<std::size_t>(k)];
    vk.resize(dim);
    const std::size_t base =
        ref - static_cast<std::size_t>(ref_lab[static_cast<std::size_t>(k)]) *
                  stride[static_cast<std::size_t>(k)];
    for (Index s = 0; s < dim; ++s)
      vk(s) = w(static_cast<Index>(
                  base + static_cast<std::size_t>(s) *
                             stride[static_cast<std::size_t>(k)])) /
              w_ref;
  }
  // residual scale: first factor carries the reference amplitude
  v[0] *= w_ref;
  std::vector<Index> lab(static_cast<std::size_t>(slices), 0);
  for (std::size_t p = 0; p < n; ++p) {
    decode_path(p, dim, lab);
    Complex prod(1.0, 0.0);
    for (int k = 0; k < slices; ++k)
      prod *= v[static_cast<std::size_t>(k)](lab[static_cast<std::size_t>(k)]);
    if (std::abs(prod - w(static_cast<Index>(p))) > 1e-12 * best)
      return std::nullopt;
  }
  return v;
}

}  // namespace

// ----- effective propagators -----

Matrix rpi_product(const Matrix& h_s, const Matrix& sys_obs, double dt,
                   const std::vector<Vector>& slice_weights) {
  if (slice_weights.empty())
    throw std::invalid_argument("rpi_product: no slices");
  ObsBasis b = obs_basis(sys_obs);
  const Index d = h_s.rows();
  const Matrix g = b.vectors.adjoint() * hilbert::unitary_exp(h_s, dt) * b.vectors;
  Matrix acc = Matrix::Identity(d, d);
  for (const Vector& w : slice_weights) {
    if (w.size() != d)
      throw std::invalid_argument("rpi_product: weight length mismatch");
    acc = w.asDiagonal() * (g * acc);
  }
  return b.vectors * acc * b.vectors.adjoint();
}

Matrix rpi_path_sum(const Matrix& h_s, const Matrix& sys_obs, double dt,
                    const Vector& path_weight, int slices) {
  if (slices < 1)
    throw std::invalid_argument("rpi_path_sum: slices must be positive");
  ObsBasis b = obs_basis(sys_obs);
  const Index d = h_s.rows();
  const double paths_d = std::pow(static_cast<double>(d), slices);
  if (paths_d > static_cast<double>(decoherence::kPathGuard))
    throw GuardError("rpi_path_sum: label-path count exceeds the table guard");
  const auto paths = static_cast<std::size_t>(std::llround(paths_d));
  if (static_cast<std::size_t>(path_weight.size()) != paths)
    throw std::invalid_argument("rpi_path_sum: path weight length mismatch");

  const Matrix g = b.vectors.adjoint() * hilbert::unitary_exp(h_s, dt) * b.vectors;
  Matrix acc = Matrix::Zero(d, d);
  std::vector<Index> lab(static_cast<std::size_t>(slices), 0);
  for (std::size_t p = 0; p < paths; ++p) {
    decode_path(p, d, lab);
    Complex amp = path_weight(static_cast<Index>(p));
    for (std::size_t i = 1; i < lab.size(); ++i) amp *= g(lab[i], lab[i - 1]);
    // chain is |s_K> amp <s_1| G
    acc.row(lab.back()).noalias() += amp * g.row(lab.front());
  }
  return b.vectors * acc * b.vectors.adjoint();
}

RpiPropagator rpi_from_weights(const decoherence::SystemWeight& w,
                               const Matrix& h_s, const Matrix& sys_obs,
                               const evolution::SliceScheme& s) {
  if (w.dim_s != h_s.rows())
    throw std::invalid_argument("rpi_from_weights: weight dimension mismatch");
  if (w.slices != s.slices)
    throw std::invalid_argument("rpi_from_weights: slice count mismatch");
  RpiPropagator out;
  out.source = WeightSource::extracted;
  if (auto v = try_factor_slices(w.w, w.dim_s, w.slices)) {
    out.u = rpi_product(h_s, sys_obs, s.dt, *v);
  } else {
    out.u = rpi_path_sum(h_s, sys_obs, s.dt, w.w, w.slices);
  }
  return out;
}

// ----- selective and non-selective propagation -----

SelectiveResult selective_evolve(const RpiPropagator& u,
                                 const hilbert::DensityOp& rho_in) {
  if (u.u.cols() != rho_in.dim())
    throw std::invalid_argument("selective_evolve: dimension mismatch");
  SelectiveResult out;
  out.rho = u.u * rho_in.matrix * u.u.adjoint();
  out.prob = std::max(0.0, out.rho.trace().real());
  return out;
}

SelectiveStateResult selective_evolve(const RpiPropagator& u,
                                      const hilbert::QState& psi_in) {
  if (u.u.cols() != psi_in.dim())
    throw std::invalid_argument("selective_evolve: dimension mismatch");
  SelectiveStateResult out;
  out.psi = u.u * psi_in.amplitudes;
  out.prob = out.psi.squaredNorm();
  return out;
}

hilbert::DensityOp nonselective_reconstruct(
    const std::vector<RpiPropagator>& props, const std::vector<double>& mu,
    const hilbert::DensityOp& rho_in) {
  if (props.size() != mu.size())
    throw std::invalid_argument("nonselective_reconstruct: weight count mismatch");
  if (props.empty())
    throw std::invalid_argument("nonselective_reconstruct: no propagators");
  Matrix acc = Matrix::Zero(rho_in.dim(), rho_in.dim());
  for (std::size_t i = 0; i < props.size(); ++i)
    acc.noalias() += mu[i] * props[i].u * rho_in.matrix * props[i].u.adjoint();
  hilbert::DensityOp out;
  out.matrix = std::move(acc);
  out.normalized = std::abs(out.matrix.trace().real() - 1.0) < 1e-9;
  return out;
}

// ----- Gaussian readout stepping -----

double kappa_from_window(double sigma, double dt) {
  if (sigma <= 0.0 || dt <= 0.0)
    throw std::invalid_argument("kappa_from_window: sigma and dt must be positive");
  return 1.0 / (8.0 * sigma * sigma * dt);
}

double sigma_from_kappa(double kappa, double dt) {
  if (kappa <= 0.0 || dt <= 0.0)
    throw std::invalid_argument("sigma_from_kappa: kappa and dt must be positive");
  return 1.0 / std::sqrt(8.0 * kappa * dt);
}

Matrix gaussian_step_operator(const Matrix& h_s, const Matrix& sys_obs,
                              double kappa, double center, double dt) {
  if (kappa < 0.0 || dt <= 0.0)
    throw std::invalid_argument("gaussian_step_operator: bad kappa or dt");
  if (kappa * dt > kKappaDtGuard)
    throw GuardError("gaussian_step_operator: kappa * dt exceeds the step guard");
  ObsBasis b = obs_basis(sys_obs);
  const Index d = h_s.rows();
  Vector damp(d);
  for (Index i = 0; i < d; ++i) {
    const double u = b.values(i) - center;
    damp(i) = std::exp(-kappa * u * u * dt);
  }
  const Matrix half = hilbert::unitary_exp(h_s, 0.5 * dt);
  return half * (b.vectors * damp.asDiagonal() * b.vectors.adjoint()) * half;
}

hilbert::QState gaussian_rpi_step(const hilbert::QState& psi, double a_k,
                                  double kappa, double dt, const Matrix& h_s,
                                  const Matrix& sys_obs) {
  const Matrix step = gaussian_step_operator(h_s, sys_obs, kappa, a_k, dt);
  hilbert::QState out;
  out.amplitudes = step * psi.amplitudes;
  out.normalized = false;
  return out;
}

RpiPropagator gaussian_rpi_propagator(const Matrix& h_s,
                                      const Matrix& sys_obs,
                                      const MeasurementRecord& rec,
                                      double dt) {
  if (rec.kappa < 0.0)
    throw std::invalid_argument("gaussian_rpi_propagator: kappa must be nonnegative");
  if (rec.readout.empty())
    throw std::invalid_argument("gaussian_rpi_propagator: empty readout");
  RpiPropagator out;
  out.source = WeightSource::gaussian_analytic;
  out.u = Matrix::Identity(h_s.rows(), h_s.cols());
  for (double a_k : rec.readout)
    out.u = gaussian_step_operator(h_s, sys_obs, rec.kappa, a_k, dt) * out.u;
  return out;
}

// ----- Lindblad reference -----

Matrix lindblad_rhs(const LindbladGenerator& gen, const Matrix& rho) {
  const Complex i_unit(0.0, 1.0);
  Matrix comm = gen.h * rho - rho * gen.h;
  Matrix inner = gen.lindblad_op * rho - rho * gen.lindblad_op;
  Matrix outer = gen.lindblad_op * inner - inner * gen.lindblad_op;
  return -i_unit * comm - 0.5 * gen.kappa * outer;
}

hilbert::DensityOp lindblad_evolve(const LindbladGenerator& gen,
                                   const hilbert::DensityOp& rho_in,
                                   double t) {
  if (t < 0.0) throw std::invalid_argument("lindblad_evolve: negative time");
  if (gen.dt_max <= 0.0)
    throw std::invalid_argument("lindblad_evolve: dt_max must be positive");
  hilbert::DensityOp out;
  out.normalized = rho_in.normalized;
  if (t == 0.0) {
    out.matrix = rho_in.matrix;
    return out;
  }
  const int steps = std::max(1, static_cast<int>(std::ceil(t / gen.dt_max)));
  const double h = t / steps;
  Matrix rho = rho_in.matrix;
  for (int n = 0; n < steps; ++n) {
    Matrix k1 = lindblad_rhs(gen, rho);
    Matrix k2 = lindblad_rhs(gen, rho + 0.5 * h * k1);
    Matrix k3 = lindblad_rhs(gen, rho + 0.5 * h * k2);
    Matrix k4 = lindblad_rhs(gen, rho + h * k3);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  out.matrix = std::move(rho);
  return out;
}

// ----- Markov limit -----

namespace {

// trapezoid readout grid over the observable spectrum widened by eight
// windows; half-window spacing keeps the quadrature residual below 1e-7
struct NodeGrid {
  std::vector<double> nodes;
  std::vector<double> weights;
};

NodeGrid markov_grid(const RealVector& values, double sigma) {
  const double lo = values.minCoeff() - 8.0 * sigma;
  const double hi = values.maxCoeff() + 8.0 * sigma;
  const double span = hi - lo;
  const auto n = static_cast<std::size_t>(std::ceil(span / (0.5 * sigma))) + 1;
  NodeGrid grid;
  grid.nodes.resize(n);
  grid.weights.resize(n);
  const double h = span / static_cast<double>(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    grid.nodes[j] = lo + h * static_cast<double>(j);
    grid.weights[j] = (j == 0 || j == n - 1) ? 0.5 * h : h;
  }
  return grid;
}

}  // namespace

Matrix gaussian_channel_evolve(const Matrix& h_s, const Matrix& sys_obs,
                               const Matrix& rho0, double kappa, double t,
                               int slices) {
  if (slices < 1)
    throw std::invalid_argument("gaussian_channel_evolve: slices must be >= 1");
  if (kappa <= 0.0 || t <= 0.0)
    throw std::invalid_argument("gaussian_channel_evolve: kappa and t must be positive");
  ObsBasis b = obs_basis(sys_obs);
  const Index d = h_s.rows();

  const double dt = t / slices;
  const double sigma = sigma_from_kappa(kappa, dt);
  NodeGrid grid = markov_grid(b.values, sigma);

  const Matrix g = b.vectors.adjoint() * hilbert::unitary_exp(h_s, dt) * b.vectors;
  const double norm_c = std::pow(4.0 * std::numbers::pi * sigma * sigma, -0.25);
  std::vector<Eigen::ArrayXd> damp(grid.nodes.size());
  for (std::size_t j = 0; j < grid.nodes.size(); ++j) {
    damp[j].resize(d);
    for (Index i = 0; i < d; ++i) {
      const double u = b.values(i) - grid.nodes[j];
      damp[j](i) = norm_c * std::exp(-u * u / (8.0 * sigma * sigma));
    }
  }

  Matrix rho = b.vectors.adjoint() * rho0 * b.vectors;
  for (int n = 0; n < slices; ++n) {
    const Matrix evolved = g * rho * g.adjoint();
    Matrix next = Matrix::Zero(d, d);
    for (std::size_t j = 0; j < grid.nodes.size(); ++j) {
      // diagonal damping on both sides, scaled by the readout measure
      Matrix term = evolved;
      term.array().colwise() *= damp[j].cast<Complex>();
      term.array().rowwise() *= damp[j].transpose().cast<Complex>();
      next.noalias() += grid.weights[j] * term;
    }
    rho = next;
  }
  return b.vectors * rho * b.vectors.adjoint();
}

std::vector<MarkovRow> markov_limit_check(const Matrix& h_s,
                                          const Matrix& sys_obs,
                                          const hilbert::DensityOp& rho0,
                                          double kappa, double t,
                                          int base_slices, int levels) {
  if (levels < 1 || base_slices < 1)
    throw std::invalid_argument("markov_limit_check: ladder must have positive size");
  LindbladGenerator gen{h_s, sys_obs, kappa, t / 4096.0};
  const Matrix rho_ref = lindblad_evolve(gen, rho0, t).matrix;

  std::vector<MarkovRow> rows;
  rows.reserve(static_cast<std::size_t>(levels));
  int slices = base_slices;
  for (int level = 0; level < levels; ++level, slices *= 2) {
    MarkovRow row;
    row.dt = t / slices;
    row.sigma = sigma_from_kappa(kappa, row.dt);
    const Matrix rho =
        gaussian_channel_evolve(h_s, sys_obs, rho0.matrix, kappa, t, slices);
    row.trace_dist = hilbert::trace_distance(rho, rho_ref);
    rows.push_back(row);
  }
  return rows;
}

// ----- corridor-resolved comparison -----

std::vector<CompareRow> compare_rpi_vs_exact(
    const CompoundModel& m, const evolution::SliceScheme& s,
    const std::vector<corridors::CorridorSpec>& corridors_list) {
  std::vector<CompareRow> rows;
  rows.reserve(corridors_list.size());
  for (std::size_t a = 0; a < corridors_list.size(); ++a) {
    const corridors::CorridorSpec& c = corridors_list[a];
    CompareRow row;
    row.alpha = a;

    evolution::PartialPropagator u = evolution::partial_propagator(m, s, c);
    evolution::PartialDensity pd = evolution::partial_density(m, u, u);
    const double p_exact = pd.reduced.trace().real();

    decoherence::PifTable f = decoherence::pif_table(m, s, c, c);
    decoherence::PifFactorization fact = decoherence::factorize_pif(f);
    row.factorization_residual = fact.sigma_ratio;

    if (fact.negligible) {
      row.prob_rel_err = p_exact > 1e-12 ? 1.0 : 0.0;
      rows.push_back(row);
      continue;
    }

    RpiPropagator prop =
        rpi_from_weights(fact.alpha_weight, m.h_s, m.sys_obs, s);
    Matrix rho_rpi = prop.u * m.rho_in_s.matrix * prop.u.adjoint();
    const double p_rpi = rho_rpi.trace().real();

    row.prob_rel_err = std::abs(p_rpi - p_exact) / std::max(p_exact, 1e-300);
    if (p_exact > 0.0 && p_rpi > 0.0)
      row.trace_dist =
          hilbert::trace_distance(pd.reduced / p_exact, rho_rpi / p_rpi);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace corlab::rpi
