#include "corlab/model.hpp"

#include <cmath>

namespace corlab::model {

namespace {

const Complex kI(0.0, 1.0);

Matrix plus_state_density() {
  Vector plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  return plus * plus.adjoint();
}

// kron chain embedding `op` at site k of n qubit sites
Matrix embed_site(const Matrix& op, int k, int n) {
  Matrix out = Matrix::Identity(1, 1);
  for (int j = 0; j < n; ++j)
    out = hilbert::kron(out, j == k ? op : identity(2));
  return out;
}

}  // namespace

Matrix pauli_x() {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

Matrix pauli_y() {
  Matrix m(2, 2);
  m << 0, -kI, kI, 0;
  return m;
}

Matrix pauli_z() {
  Matrix m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

Matrix identity(Index n) { return Matrix::Identity(n, n); }

CompoundModel build_von_neumann(double g, Index n_grid, double x_max,
                                double sigma0, double omega_s) {
  if (n_grid < 8)
    throw std::invalid_argument("build_von_neumann: n_grid must be >= 8");
  if (!(sigma0 > 0.0) || !(x_max >= 3.0 * sigma0 - 1e-12))
    throw std::invalid_argument("build_von_neumann: need x_max >= 3*sigma0 > 0");
  const double dx = 2.0 * x_max / static_cast<double>(n_grid);
  if (sigma0 < 3.0 * dx - 1e-12)
    throw GuardError("build_von_neumann: grid too coarse, sigma0 spans fewer than 3 cells");

  CompoundModel m;
  m.dim_s = 2;
  m.dim_e = n_grid;
  m.h_s = 0.5 * omega_s * pauli_z();

  // position grid x_j = -x_max + j*dx, periodic in j
  RealVector x(n_grid);
  for (Index j = 0; j < n_grid; ++j) x(j) = -x_max + dx * static_cast<double>(j);
  m.pointer_obs = Matrix::Zero(n_grid, n_grid);
  for (Index j = 0; j < n_grid; ++j) m.pointer_obs(j, j) = x(j);

  // symmetrized cyclic-difference momentum: P = -i (S+ - S-) / (2 dx)
  Matrix p = Matrix::Zero(n_grid, n_grid);
  for (Index j = 0; j < n_grid; ++j) {
    p(j, (j + 1) % n_grid) += -kI / (2.0 * dx);
    p(j, (j + n_grid - 1) % n_grid) += kI / (2.0 * dx);
  }

  m.h_e = Matrix::Zero(n_grid, n_grid);
  m.sys_obs = pauli_z();
  m.coupling_env = g * p;
  m.h_i = hilbert::kron(m.sys_obs, m.coupling_env);
  m.product_coupling = true;

  Vector packet(n_grid);
  for (Index j = 0; j < n_grid; ++j)
    packet(j) = std::exp(-x(j) * x(j) / (4.0 * sigma0 * sigma0));
  packet /= packet.norm();
  m.rho_in_e = hilbert::DensityOp{packet * packet.adjoint(), true};
  m.rho_in_s = hilbert::DensityOp{plus_state_density(), true};

  m.pointer_lo = -x_max;
  m.pointer_hi = x_max;
  return m;
}

CompoundModel build_spin_bath(int n_spins, double g, double epsilon,
                              double omega_s) {
  if (n_spins < 1 || n_spins > 6)
    throw std::invalid_argument("build_spin_bath: n_spins must be in [1, 6]");
  const Index dim_e = Index(1) << n_spins;

  CompoundModel m;
  m.dim_s = 2;
  m.dim_e = dim_e;
  m.h_s = 0.5 * omega_s * pauli_z();

  Matrix sum_z = Matrix::Zero(dim_e, dim_e);
  Matrix sum_x = Matrix::Zero(dim_e, dim_e);
  for (int k = 0; k < n_spins; ++k) {
    sum_z += embed_site(pauli_z(), k, n_spins);
    sum_x += embed_site(pauli_x(), k, n_spins);
  }

  m.h_e = 0.5 * epsilon * sum_z;
  m.sys_obs = pauli_z();
  m.coupling_env = g * sum_x;
  m.h_i = hilbert::kron(m.sys_obs, m.coupling_env);
  m.product_coupling = true;
  m.pointer_obs = sum_z;

  Eigen::SelfAdjointEigenSolver<Matrix> es(m.h_e);
  Vector ground = es.eigenvectors().col(0);
  m.rho_in_e = hilbert::DensityOp{ground * ground.adjoint(), true};
  m.rho_in_s = hilbert::DensityOp{plus_state_density(), true};

  m.pointer_lo = -static_cast<double>(n_spins) - 1.0;
  m.pointer_hi = static_cast<double>(n_spins) + 1.0;
  return m;
}

CompoundModel build_qubit(double omega_s, double theta) {
  CompoundModel m;
  m.dim_s = 2;
  m.dim_e = 1;
  m.h_s = 0.5 * omega_s * (std::cos(theta) * pauli_z() + std::sin(theta) * pauli_x());
  m.h_e = Matrix::Zero(1, 1);
  m.sys_obs = pauli_z();
  m.coupling_env = Matrix::Zero(1, 1);
  m.h_i = Matrix::Zero(2, 2);
  m.product_coupling = true;
  m.pointer_obs = Matrix::Zero(1, 1);
  m.rho_in_e = hilbert::DensityOp{Matrix::Identity(1, 1), true};
  m.rho_in_s = hilbert::DensityOp{plus_state_density(), true};
  m.pointer_lo = -1.0;
  m.pointer_hi = 1.0;
  return m;
}

Matrix total_hamiltonian(const CompoundModel& m) {
  return hilbert::kron(m.h_s, identity(m.dim_e)) +
         hilbert::kron(identity(m.dim_s), m.h_e) + m.h_i;
}

void validate(const CompoundModel& m) {
  if (m.dim_s < 1 || m.dim_e < 1)
    throw std::invalid_argument("validate: dimensions must be positive");
  if (m.dim_total() > 256)
    throw GuardError("validate: total dimension exceeds 256");
  using hilbert::hermiticity_error;
  const double tol = hilbert::kHermitianTol;
  if (hermiticity_error(m.h_s) > tol || hermiticity_error(m.h_e) > tol ||
      hermiticity_error(m.h_i) > tol || hermiticity_error(m.sys_obs) > tol ||
      hermiticity_error(m.pointer_obs) > tol)
    throw std::invalid_argument("validate: non-Hermitian model operator");
  if (m.product_coupling) {
    Matrix rebuilt = hilbert::kron(m.sys_obs, m.coupling_env);
    if (hilbert::max_abs(rebuilt - m.h_i) > tol)
      throw std::invalid_argument("validate: H_I does not match sys_obs (x) coupling_env");
  }
  hilbert::make_density(m.rho_in_s.matrix, m.rho_in_s.normalized);
  hilbert::make_density(m.rho_in_e.matrix, m.rho_in_e.normalized);
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.pointer_obs, Eigen::EigenvaluesOnly);
  if (m.dim_e > 0 && es.eigenvalues().size() > 0) {
    if (es.eigenvalues().minCoeff() < m.pointer_lo ||
        es.eigenvalues().maxCoeff() >= m.pointer_hi)
      throw std::invalid_argument("validate: pointer spectrum escapes [pointer_lo, pointer_hi)");
  }
}

}  // namespace corlab::model
