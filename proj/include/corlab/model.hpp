#pragma once

// Compound system+environment models with a distinguished pointer observable.
// All presets use a product coupling H_I = sys_obs (x) coupling_env, so the
// environment factor of the interaction is available separately wherever the
// influence-functional machinery needs it.

#include "corlab/hilbert.hpp"

namespace corlab::model {

struct CompoundModel {
  Index dim_s = 0;
  Index dim_e = 0;

  Matrix h_s;           // dim_s
  Matrix h_e;           // dim_e
  Matrix h_i;           // dim_s * dim_e
  Matrix sys_obs;       // dim_s, Hermitian; measured system observable
  Matrix coupling_env;  // dim_e, Hermitian; H_I = sys_obs (x) coupling_env
  Matrix pointer_obs;   // dim_e, Hermitian; corridor windows act on this
  bool product_coupling = false;

  hilbert::DensityOp rho_in_s;  // factorized initial state, system factor
  hilbert::DensityOp rho_in_e;  // factorized initial state, environment factor

  // Half-open interval [lo, hi) containing the pointer spectrum; the default
  // domain that box partitions tile.
  double pointer_lo = 0.0;
  double pointer_hi = 0.0;

  Index dim_total() const { return dim_s * dim_e; }
};

// ----- Pauli / identity helpers -----

Matrix pauli_x();
Matrix pauli_y();
Matrix pauli_z();
Matrix identity(Index n);

// ----- presets -----

// Measurement-pointer model on a periodic position grid: H_S = (omega_s/2) s_z,
// H_E = 0, and the coupling g * s_z (x) P shifts the pointer position at rate
// +-g per s_z branch. P is the symmetrized cyclic-difference momentum, so
// branch motion carries a small grid-dispersion error. Pointer observable is
// the position grid X; initial environment state is a Gaussian wavepacket of
// width sigma0 centered at 0; initial system state defaults to |+>.
CompoundModel build_von_neumann(double g, Index n_grid, double x_max,
                                double sigma0, double omega_s);

// Central qubit coupled to n_spins bath qubits: H_E = (epsilon/2) sum s_z^(k),
// H_I = g * s_z (x) sum s_x^(k), pointer observable is the collective
// magnetization sum s_z^(k), initial environment state is the H_E ground state.
CompoundModel build_spin_bath(int n_spins, double g, double epsilon,
                              double omega_s);

// Bare qubit with a trivial one-dimensional environment; useful when only the
// system-side machinery is exercised. theta tilts H_S away from the measured
// axis: H_S = (omega_s/2)(cos(theta) s_z + sin(theta) s_x), sys_obs = s_z.
CompoundModel build_qubit(double omega_s, double theta);

// ----- assembly / checks -----

Matrix total_hamiltonian(const CompoundModel& m);

// Throws if Hermiticity, the product-coupling reconstruction, or the
// factorized initial state is violated.
void validate(const CompoundModel& m);

}  // namespace corlab::model
