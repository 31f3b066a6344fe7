#include "corlab/evolution.hpp"

#include <cmath>
#include <numbers>

namespace corlab::evolution {

using corridors::Normalization;
using corridors::Window;
using corridors::WindowKind;

void validate_scheme(const SliceScheme& s) {
  if (s.slices < 1)
    throw std::invalid_argument("validate_scheme: slices must be >= 1");
  if (!(s.dt > 0.0))
    throw std::invalid_argument("validate_scheme: dt must be positive");
}

Matrix compound_propagator(const model::CompoundModel& m, double t) {
  return hilbert::unitary_exp(model::total_hamiltonian(m), t);
}

Matrix slice_propagator(const model::CompoundModel& m, const SliceScheme& s) {
  validate_scheme(s);
  if (s.splitting == Splitting::exact_slice)
    return hilbert::unitary_exp(model::total_hamiltonian(m), s.dt);
  // strang: free half-step, interaction, free half-step
  Matrix half = hilbert::kron(hilbert::unitary_exp(m.h_s, 0.5 * s.dt),
                              hilbert::unitary_exp(m.h_e, 0.5 * s.dt));
  return half * hilbert::unitary_exp(m.h_i, s.dt) * half;
}

Matrix apply_env_weight(const Matrix& w, const Matrix& m, Index dim_s) {
  const Index dim_e = w.rows();
  if (m.rows() != dim_s * dim_e)
    throw std::invalid_argument("apply_env_weight: dimension mismatch");
  Matrix out(m.rows(), m.cols());
  for (Index s = 0; s < dim_s; ++s)
    out.middleRows(s * dim_e, dim_e).noalias() =
        w * m.middleRows(s * dim_e, dim_e);
  return out;
}

PartialPropagator partial_propagator(const model::CompoundModel& m,
                                     const SliceScheme& s,
                                     const corridors::CorridorSpec& c) {
  validate_scheme(s);
  if (c.slices() != s.slices)
    throw std::invalid_argument("partial_propagator: corridor and scheme slice counts differ");
  const Matrix u_dt = slice_propagator(m, s);
  Matrix acc = Matrix::Identity(m.dim_total(), m.dim_total());
  for (int k = 0; k < s.slices; ++k) {
    acc = u_dt * acc;
    Matrix w = corridors::weight_operator(m, c.window, c.centers[static_cast<std::size_t>(k)]);
    acc = apply_env_weight(w, acc, m.dim_s);
  }
  PartialPropagator out;
  out.corridor = c;
  out.matrix = std::move(acc);
  out.may_exceed_unit_norm =
      c.window.kind == WindowKind::gaussian &&
      c.window.normalization == Normalization::amplitude &&
      c.window.width < 1.0 / std::sqrt(2.0 * std::numbers::pi);
  return out;
}

double reconstruct_total(const model::CompoundModel& m, const SliceScheme& s,
                         const corridors::CorridorMeasure& meas,
                         const Window& w) {
  validate_scheme(s);
  if (w.kind == WindowKind::gaussian && w.normalization == Normalization::povm)
    throw std::invalid_argument(
        "reconstruct_total: povm gaussian windows do not sum to the identity; "
        "use amplitude normalization or a box partition");
  const Matrix u_dt = slice_propagator(m, s);
  Matrix slice_sum = Matrix::Zero(m.dim_total(), m.dim_total());
  for (std::size_t j = 0; j < meas.size(); ++j) {
    Matrix wj = corridors::weight_operator(m, w, meas.nodes[j]);
    slice_sum += meas.weights[j] * apply_env_weight(wj, u_dt, m.dim_s);
  }
  Matrix total = Matrix::Identity(m.dim_total(), m.dim_total());
  Matrix exact = total;
  for (int k = 0; k < s.slices; ++k) {
    total = slice_sum * total;
    exact = u_dt * exact;
  }
  return hilbert::operator_norm(total - exact);
}

PartialDensity partial_density(const model::CompoundModel& m,
                               const PartialPropagator& ua,
                               const PartialPropagator& ub) {
  const Index d = m.dim_total();
  if (ua.matrix.rows() != d || ub.matrix.rows() != d)
    throw std::invalid_argument("partial_density: propagator dimension mismatch");
  const Matrix r_in = hilbert::kron(m.rho_in_s.matrix, m.rho_in_e.matrix);
  PartialDensity out;
  out.compound = ua.matrix * r_in * ub.matrix.adjoint();
  out.reduced = hilbert::partial_trace_env(out.compound, m.dim_s, m.dim_e);
  return out;
}

}  // namespace corlab::evolution
