#pragma once

// Dense complex linear algebra kernel shared by every other layer:
// Kronecker products, environment traces, Hermitian propagators, trace
// distances and the rank-1 diagnostics used for factorization checks.

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>

namespace corlab {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using Complex = std::complex<double>;
using Index = Eigen::Index;

// Guard violations (size/enumeration caps) are distinguished from plain
// precondition errors so callers can map them to a dedicated exit code.
class GuardError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace hilbert {

inline constexpr double kHermitianTol = 1e-10;

// ----- state carriers -----

struct QState {
  Vector amplitudes;
  bool normalized = true;

  Index dim() const { return amplitudes.size(); }
};

struct DensityOp {
  Matrix matrix;
  bool normalized = true;

  Index dim() const { return matrix.rows(); }
};

// Validating constructors. Internal code that builds states whose invariants
// hold by construction may aggregate-initialize instead.
QState make_state(Vector amplitudes, bool normalized = true);
DensityOp make_density(Matrix matrix, bool normalized = true);

DensityOp projector(const QState& psi);

// ----- elementwise / norm helpers -----

double max_abs(const Matrix& m);
double hermiticity_error(const Matrix& m);  // max |(M - M^dag)_ij|
double operator_norm(const Matrix& m);      // largest singular value
double trace_norm(const Matrix& m);         // sum of singular values
double purity(const Matrix& rho);           // Re tr(rho^2)

// ----- core operations -----

Matrix kron(const Matrix& a, const Matrix& b);

// Trace over the second (environment) factor of a dim_s*dim_e square matrix.
Matrix partial_trace_env(const Matrix& m, Index dim_s, Index dim_e);

// exp(-i H t) for Hermitian H, via eigendecomposition.
Matrix unitary_exp(const Matrix& h, double t);

// 1/2 * trace norm of (a - b); inputs must be Hermitian and equal-sized.
double trace_distance(const DensityOp& a, const DensityOp& b);
double trace_distance(const Matrix& a, const Matrix& b);

// ----- rank-1 factorization diagnostic -----

// F ~ left * right.adjoint() with sigma_ratio = sigma2/sigma1 measuring the
// residual. Both vectors are scaled by sqrt(sigma1); the global phase is
// fixed so the largest-magnitude entry of `left` is real positive (first
// index wins ties).
struct Rank1Factorization {
  double sigma_ratio = 0.0;
  Vector left;
  Vector right;
};

Rank1Factorization rank1_residual(const Matrix& f);

}  // namespace hilbert
}  // namespace corlab
