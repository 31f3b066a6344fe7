#include "corlab/hilbert.hpp"

#include <unsupported/Eigen/KroneckerProduct>

#include <cmath>

namespace corlab::hilbert {

namespace {

void require_square(const Matrix& m, const char* who) {
  if (m.rows() != m.cols())
    throw std::invalid_argument(std::string(who) + ": matrix must be square");
}

void require_hermitian(const Matrix& m, const char* who) {
  require_square(m, who);
  if (hermiticity_error(m) > kHermitianTol)
    throw std::invalid_argument(std::string(who) + ": matrix not Hermitian within 1e-10");
}

}  // namespace

// ----- state carriers -----

QState make_state(Vector amplitudes, bool normalized) {
  if (amplitudes.size() == 0)
    throw std::invalid_argument("make_state: empty amplitude vector");
  if (normalized && std::abs(amplitudes.squaredNorm() - 1.0) > 1e-12)
    throw std::invalid_argument("make_state: squared norm differs from 1 beyond 1e-12");
  return QState{std::move(amplitudes), normalized};
}

DensityOp make_density(Matrix matrix, bool normalized) {
  require_hermitian(matrix, "make_density");
  Eigen::SelfAdjointEigenSolver<Matrix> es(matrix, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -kHermitianTol)
    throw std::invalid_argument("make_density: negative eigenvalue beyond tolerance");
  if (normalized && std::abs(matrix.trace().real() - 1.0) > kHermitianTol)
    throw std::invalid_argument("make_density: trace differs from 1 beyond tolerance");
  return DensityOp{std::move(matrix), normalized};
}

DensityOp projector(const QState& psi) {
  Matrix m = psi.amplitudes * psi.amplitudes.adjoint();
  return DensityOp{std::move(m), psi.normalized};
}

// ----- norm helpers -----

double max_abs(const Matrix& m) {
  return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

double hermiticity_error(const Matrix& m) {
  if (m.rows() != m.cols()) return std::numeric_limits<double>::infinity();
  return max_abs(m - m.adjoint());
}

double operator_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

double trace_norm(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues().sum();
}

double purity(const Matrix& rho) {
  require_square(rho, "purity");
  return (rho * rho).trace().real();
}

// ----- core operations -----

Matrix kron(const Matrix& a, const Matrix& b) {
  return Eigen::kroneckerProduct(a, b).eval();
}

Matrix partial_trace_env(const Matrix& m, Index dim_s, Index dim_e) {
  if (dim_s < 1 || dim_e < 1)
    throw std::invalid_argument("partial_trace_env: dimensions must be positive");
  if (m.rows() != dim_s * dim_e || m.cols() != dim_s * dim_e)
    throw std::invalid_argument("partial_trace_env: matrix is not (dim_s*dim_e) square");
  Matrix out = Matrix::Zero(dim_s, dim_s);
  for (Index i = 0; i < dim_s; ++i)
    for (Index j = 0; j < dim_s; ++j) {
      Complex acc(0.0, 0.0);
      for (Index e = 0; e < dim_e; ++e) acc += m(i * dim_e + e, j * dim_e + e);
      out(i, j) = acc;
    }
  return out;
}

Matrix unitary_exp(const Matrix& h, double t) {
  require_hermitian(h, "unitary_exp");
  Eigen::SelfAdjointEigenSolver<Matrix> es(h);
  const RealVector& ev = es.eigenvalues();
  Vector phases(ev.size());
  for (Index k = 0; k < ev.size(); ++k)
    phases(k) = std::exp(Complex(0.0, -ev(k) * t));
  return es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
}

double trace_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw std::invalid_argument("trace_distance: dimension mismatch");
  require_hermitian(a, "trace_distance");
  require_hermitian(b, "trace_distance");
  Eigen::SelfAdjointEigenSolver<Matrix> es(a - b, Eigen::EigenvaluesOnly);
  return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double trace_distance(const DensityOp& a, const DensityOp& b) {
  return trace_distance(a.matrix, b.matrix);
}

// ----- rank-1 factorization diagnostic -----

Rank1Factorization rank1_residual(const Matrix& f) {
  if (f.size() == 0 || max_abs(f) == 0.0)
    throw std::invalid_argument("rank1_residual: zero matrix has no factorization");
  Eigen::JacobiSVD<Matrix> svd(f, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const RealVector& sv = svd.singularValues();
  Rank1Factorization out;
  out.sigma_ratio = sv.size() > 1 ? sv(1) / sv(0) : 0.0;
  const double scale = std::sqrt(sv(0));
  out.left = scale * svd.matrixU().col(0);
  out.right = scale * svd.matrixV().col(0);
  Index imax = 0;
  out.left.cwiseAbs().maxCoeff(&imax);
  Complex pivot = out.left(imax);
  if (std::abs(pivot) > 0.0) {
    Complex phase = std::abs(pivot) / pivot;  // rotates pivot onto the real axis
    out.left *= phase;
    out.right *= phase;
  }
  return out;
}

}  // namespace corlab::hilbert
