#pragma once

// Decoherence diagnostics over corridor decompositions.
//
// For corridors alpha, beta the generalized functional P_ab = tr R_ab with
// R_ab = U_a R_in U_b^dag measures interference between corridor pairs; the
// environment-traced rho_ab measures how far the reduced state decomposes
// over corridors. Both are summarized as suppression ratios relative to the
// diagonal. The partial influence functional F_ab[s|sbar] carries the full
// environment response along system eigenbasis label paths; when it
// factorizes (rank 1), the corridor admits a system-only propagator.

#include "corlab/evolution.hpp"

#include <optional>

namespace corlab::decoherence {

// tr R_alphabeta
Complex decoherence_functional(const evolution::PartialDensity& pd);

// ----- corridor-pair consistency sweep -----

struct ReportOptions {
  // A corridor is significant when its probability mass mu_a * P_aa is at
  // least prob_floor times the largest such mass; the ratio maxima run over
  // pairs of significant corridors. Ratios of negligible corridors are
  // noise, not decoherence data.
  double prob_floor = 1e-3;
  std::size_t top_corridors = 64;   // corridors retained in pair_rows
  std::size_t max_rank = 16;        // initial-state rank guard
  std::size_t p_matrix_cap = 4096;  // survivors beyond this: P left empty
};

struct PairRow {
  std::size_t alpha = 0;
  std::size_t beta = 0;
  Complex p;
  double coherence_ratio = 0.0;
  double env_ratio = 0.0;
};

struct DecoherenceReport {
  std::size_t corridor_count = 0;
  std::vector<double> probs;  // normalized mu_a Re P_aa, all corridors

  std::vector<std::size_t> significant;  // corridor ids the pair scan kept
  Matrix p;  // P over significant x significant (empty above p_matrix_cap)

  // max over scanned pairs alpha != beta of |P_ab| / sqrt(P_aa P_bb);
  // both ratios report 1 when fewer than two corridors are significant,
  // since such a sweep distinguishes nothing and suppresses nothing
  double consistency_ratio = 0.0;
  // max over scanned pairs alpha != beta of ||rho_ab||_tr / sqrt(P_aa P_bb)
  double env_ratio = 0.0;
  // box / amplitude windows: |sum_ab mu_a mu_b P_ab - 1| via the per-slice
  // factorization; povm gaussian windows: |sum_a mu_a P_aa - 1| via the
  // iterated channel
  double completeness_residual = 0.0;

  std::vector<PairRow> pair_rows;  // upper triangle among top corridors
};

DecoherenceReport consistency_report(const model::CompoundModel& m,
                                     const evolution::SliceScheme& s,
                                     const corridors::CorridorMeasure& meas,
                                     const corridors::Window& w,
                                     const ReportOptions& opts = {});

// ----- partial influence functionals -----

// Table over system eigenbasis label paths s = (s_1..s_K), one label per
// slice, first slice most significant in the flattened index:
//   F[s|sbar] = tr_E[ E^a_K(s_K)..E^a_1(s_1) rho_E E^b_1(sbar_1)^dag..E^b_K(sbar_K)^dag ]
// with E^a_k(s) = W(a_k) exp(-i (H_E + A_s B) dt). Labels follow the
// ascending eigenvalue order of sys_obs.
struct PifTable {
  Matrix table;  // dim_s^K square; row = s, column = sbar
  Index dim_s = 0;
  int slices = 0;

  std::size_t path_count() const { return static_cast<std::size_t>(table.rows()); }
};

inline constexpr std::size_t kPathGuard = 4096;

PifTable pif_table(const model::CompoundModel& m,
                   const evolution::SliceScheme& s,
                   const corridors::CorridorSpec& a,
                   const corridors::CorridorSpec& b);

// Reduced density contribution reassembled from the table and the system
// amplitude chains: rho_ab = sum_{s,sbar} F[s|sbar] rho_in(s_1, sbar_1)
// chain(s) chain(sbar)^dag. Matches evolution::partial_density exactly when
// [H_S, sys_obs] = 0 and the scheme uses exact slices.
Matrix reassemble_reduced(const model::CompoundModel& m,
                          const evolution::SliceScheme& s, const PifTable& f);

// ----- rank-1 weight extraction -----

struct SystemWeight {
  Vector w;  // one amplitude per label path, sqrt(sigma1)-scaled
  double residual = 0.0;
  Index dim_s = 0;
  int slices = 0;
};

struct PifFactorization {
  bool negligible = false;  // table norm below floor; weights absent
  double sigma_ratio = 0.0;
  SystemWeight alpha_weight;
  SystemWeight beta_weight;  // F ~ alpha.w * beta.w^dag
};

PifFactorization factorize_pif(const PifTable& f, double negligible_floor = 1e-12);

// ----- classical corridor scan -----

// Conditional pointer trajectories <Q>(t_k), one per sys_obs eigenvalue in
// ascending order: the environment evolved under that branch's conditional
// Hamiltonian H_E + lambda * B. Product-coupling models only.
std::vector<std::vector<double>> branch_trajectories(
    const model::CompoundModel& m, const evolution::SliceScheme& s);

// branch with the largest initial population in the sys_obs eigenbasis;
// ties resolve to the lower eigenvalue
Index dominant_branch(const model::CompoundModel& m);

struct ScanRow {
  std::size_t alpha = 0;
  double offset = 0.0;    // shift applied to the dominant branch trajectory
  double distance = 0.0;  // min over branches of max_k |a_k - <Q>_branch(t_k)|
  double prob = 0.0;      // tr R_aa, unnormalized
  double pif_norm = 0.0;  // Frobenius norm of the corridor's diagonal table
};

// Sweeps corridors whose centers track the dominant branch's conditional
// pointer trajectory shifted by each node of `offsets`.
std::vector<ScanRow> classical_corridor_scan(const model::CompoundModel& m,
                                             const evolution::SliceScheme& s,
                                             const corridors::CorridorMeasure& offsets,
                                             const corridors::Window& w);

}  // namespace corlab::decoherence
