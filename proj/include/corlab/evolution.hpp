#pragma once

// Time-sliced compound evolution decomposed over corridors. A corridor's
// partial propagator applies, for each slice, the slice propagator followed
// by that slice's window on the environment:
//
//   U_alpha = prod_{k=K..1} (1 (x) W(a_k)) * U_dt
//
// Summing mu_alpha * U_alpha over a complete corridor set recovers (U_dt)^K
// exactly for box partitions and up to quadrature residual for amplitude
// windows.

#include "corlab/corridors.hpp"

namespace corlab::evolution {

enum class Splitting { exact_slice, strang };

struct SliceScheme {
  int slices = 1;
  double dt = 0.0;
  Splitting splitting = Splitting::exact_slice;

  double total_time() const { return dt * slices; }
};

struct PartialPropagator {
  corridors::CorridorSpec corridor;
  Matrix matrix;  // dim_s * dim_e
  // true when amplitude-normalized gaussian windows allow the operator norm
  // to exceed 1 (peak profile value > 1)
  bool may_exceed_unit_norm = false;
};

struct PartialDensity {
  Matrix compound;  // U_alpha R_in U_beta^dag, unnormalized
  Matrix reduced;   // environment trace of the above
};

void validate_scheme(const SliceScheme& s);

// exp(-i H_tot t); the oracle that sliced products are checked against.
Matrix compound_propagator(const model::CompoundModel& m, double t);

// One slice of the chosen splitting. exact_slice exponentiates H_tot whole;
// strang sandwiches exp(-i H_I dt) between half-steps of the free part.
Matrix slice_propagator(const model::CompoundModel& m, const SliceScheme& s);

PartialPropagator partial_propagator(const model::CompoundModel& m,
                                     const SliceScheme& s,
                                     const corridors::CorridorSpec& c);

// Operator-norm residual || sum_alpha mu_alpha U_alpha - (U_dt)^K ||,
// evaluated through the per-slice factorization of the corridor sum.
// Rejects povm-normalized gaussian windows, whose sum is not a resolution
// of the identity.
double reconstruct_total(const model::CompoundModel& m, const SliceScheme& s,
                         const corridors::CorridorMeasure& meas,
                         const corridors::Window& w);

// R_alphabeta = U_alpha R_in U_beta^dag with R_in = rho_in_s (x) rho_in_e,
// plus its environment trace.
PartialDensity partial_density(const model::CompoundModel& m,
                               const PartialPropagator& ua,
                               const PartialPropagator& ub);

// (1 (x) W) * m without forming the Kronecker product.
Matrix apply_env_weight(const Matrix& w, const Matrix& m, Index dim_s);

}  // namespace corlab::evolution
