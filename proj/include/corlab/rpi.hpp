#pragma once

#include <cstddef>
#include <vector>

#include "corlab/corridors.hpp"
#include "corlab/decoherence.hpp"
#include "corlab/evolution.hpp"
#include "corlab/hilbert.hpp"
#include "corlab/model.hpp"

// Restricted-path evolution on the system alone. Corridor readout enters as
// path weights on the measured observable; the effective propagators here
// are non-unitary compressions of the unitary system dynamics.
namespace corlab::rpi {

// ----- effective propagators -----

enum class WeightSource { extracted, gaussian_analytic };

struct RpiPropagator {
  std::size_t alpha = 0;
  Matrix u;
  WeightSource source = WeightSource::extracted;
};

// Path weights in the convention of decoherence::PifTable: one complex entry
// per label path over ascending sys_obs eigenvalues, first slice most
// significant. Weights that factorize per slice are detected and evaluated
// as the ordered product (last slice leftmost) of diag(v_k) * exp(-i h_s dt);
// anything else goes through the explicit path sum, which refuses more than
// decoherence::kPathGuard paths.
RpiPropagator rpi_from_weights(const decoherence::SystemWeight& w,
                               const Matrix& h_s, const Matrix& sys_obs,
                               const evolution::SliceScheme& s);

// Per-slice factorized route, exposed for cross-checking against the path
// sum: slice_weights[k] holds one weight per sys_obs eigenvalue, ascending.
Matrix rpi_product(const Matrix& h_s, const Matrix& sys_obs, double dt,
                   const std::vector<Vector>& slice_weights);

// Unconditional path-sum route (same guard as the table builder).
Matrix rpi_path_sum(const Matrix& h_s, const Matrix& sys_obs, double dt,
                    const Vector& path_weight, int slices);

// ----- selective and non-selective propagation -----

struct SelectiveResult {
  Matrix rho;   // unnormalized conditional state U rho U^dag
  double prob;  // its trace
};

struct SelectiveStateResult {
  Vector psi;   // unnormalized conditional vector U psi
  double prob;  // its squared norm
};

SelectiveResult selective_evolve(const RpiPropagator& u,
                                 const hilbert::DensityOp& rho_in);
SelectiveStateResult selective_evolve(const RpiPropagator& u,
                                      const hilbert::QState& psi_in);

// sum_a mu_a U_a rho U_a^dag; Kraus form, so completely positive by
// construction. The result is flagged normalized only when its trace is 1
// within 1e-9.
hilbert::DensityOp nonselective_reconstruct(
    const std::vector<RpiPropagator>& props, const std::vector<double>& mu,
    const hilbert::DensityOp& rho_in);

// ----- Gaussian readout stepping -----

struct MeasurementRecord {
  std::vector<double> readout;  // one target value per slice
  double kappa = 0.0;           // measurement strength, >= 0
};

inline constexpr double kKappaDtGuard = 0.5;

double kappa_from_window(double sigma, double dt);
double sigma_from_kappa(double kappa, double dt);

// One slice of exp(-i h_s dt - kappa (sys_obs - center)^2 dt), split
// symmetrically so the damping sits between unitary half-steps. On a
// sys_obs eigenstate with commuting h_s the squared norm contracts by
// exactly exp(-2 kappa (lambda - center)^2 dt). Refuses
// kappa * dt > kKappaDtGuard.
Matrix gaussian_step_operator(const Matrix& h_s, const Matrix& sys_obs,
                              double kappa, double center, double dt);

// Spec'd state-level step: returns the unnormalized successor.
hilbert::QState gaussian_rpi_step(const hilbert::QState& psi, double a_k,
                                  double kappa, double dt, const Matrix& h_s,
                                  const Matrix& sys_obs);

// Whole-record propagator, slices ordered first to last.
RpiPropagator gaussian_rpi_propagator(const Matrix& h_s,
                                      const Matrix& sys_obs,
                                      const MeasurementRecord& rec, double dt);

// ----- Lindblad reference -----

struct LindbladGenerator {
  Matrix h;
  Matrix lindblad_op;     // Hermitian; jump operator is sqrt(kappa) * this
  double kappa = 0.0;
  double dt_max = 1e-3;   // integrator step cap
};

// -i[h, rho] - (kappa/2) [A, [A, rho]]
Matrix lindblad_rhs(const LindbladGenerator& gen, const Matrix& rho);

// classical RK4 with fixed step <= dt_max
hilbert::DensityOp lindblad_evolve(const LindbladGenerator& gen,
                                   const hilbert::DensityOp& rho_in, double t);

// ----- Markov limit -----

struct MarkovRow {
  double dt = 0.0;
  double sigma = 0.0;       // window width used at this rung
  double trace_dist = 0.0;  // channel iterate vs Lindblad at time t
};

// One rung of the nonselective Gaussian-window channel: evolve rho0 for
// total time t in `slices` steps of unitary evolution followed by the
// window average, with sigma fixed by kappa = 1 / (8 sigma^2 dt).
Matrix gaussian_channel_evolve(const Matrix& h_s, const Matrix& sys_obs,
                               const Matrix& rho0, double kappa, double t,
                               int slices);

// Nonselective Gaussian-window channel against the Lindblad flow, on a dt
// ladder that keeps kappa = 1 / (8 sigma^2 dt) fixed: each rung halves dt
// and doubles sigma^2. First-order convergence shows as successive
// trace_dist ratios near 1/2.
std::vector<MarkovRow> markov_limit_check(const Matrix& h_s,
                                          const Matrix& sys_obs,
                                          const hilbert::DensityOp& rho0,
                                          double kappa, double t,
                                          int base_slices, int levels);

// ----- corridor-resolved comparison -----

struct CompareRow {
  std::size_t alpha = 0;
  double trace_dist = 0.0;     // normalized restricted state vs exact reduced
  double prob_rel_err = 0.0;   // corridor weight mismatch, relative
  double factorization_residual = 0.0;  // sigma2/sigma1 of the pair table
};

// For each corridor: build its pair table, compress to a rank-1 system
// weight, propagate the system alone, and compare against the exact reduced
// conditional state from the compound evolution.
std::vector<CompareRow> compare_rpi_vs_exact(
    const model::CompoundModel& m, const evolution::SliceScheme& s,
    const std::vector<corridors::CorridorSpec>& corridors_list);

}  // namespace corlab::rpi
