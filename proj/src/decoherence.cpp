#include "corlab/decoherence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace corlab::decoherence {

using corridors::CorridorMeasure;
using corridors::CorridorSpec;
using corridors::Normalization;
using corridors::Window;
using corridors::WindowKind;
using evolution::SliceScheme;
using model::CompoundModel;

namespace {

double window_profile(double u, const Window& w) {
  if (w.kind == WindowKind::box)
    return (u >= -0.5 * w.width && u < 0.5 * w.width) ? 1.0 : 0.0;
  const double s2 = w.width * w.width;
  if (w.normalization == Normalization::amplitude)
    return std::exp(-u * u / (2.0 * s2)) / (w.width * std::sqrt(2.0 * std::numbers::pi));
  return std::exp(-u * u / (8.0 * s2)) / std::pow(4.0 * std::numbers::pi * s2, 0.25);
}

struct EnvBasis {
  RealVector values;  // pointer eigenvalues, ascending when rotated
  Matrix rot;         // empty when the pointer observable is already diagonal
};

EnvBasis env_basis(const Matrix& pointer_obs) {
  EnvBasis b;
  Matrix off = pointer_obs;
  off.diagonal().setZero();
  if (hilbert::max_abs(off) < 1e-14) {
    b.values = pointer_obs.diagonal().real();
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(pointer_obs);
    b.values = es.eigenvalues();
    b.rot = es.eigenvectors();
  }
  return b;
}

Matrix rotate_env_operator(const EnvBasis& b, const Matrix& op) {
  if (b.rot.size() == 0) return op;
  return b.rot.adjoint() * op * b.rot;
}

Matrix rotate_compound(const EnvBasis& b, const Matrix& op, Index dim_s) {
  if (b.rot.size() == 0) return op;
  const Matrix big = hilbert::kron(model::identity(dim_s), b.rot);
  return big.adjoint() * op * big;
}

// rank columns of rho_s (x) rho_e, scaled by sqrt(eigenvalue), environment
// factor expressed in the pointer eigenbasis
Matrix initial_columns(const CompoundModel& m, const EnvBasis& b,
                       std::size_t max_rank) {
  Eigen::SelfAdjointEigenSolver<Matrix> es_s(m.rho_in_s.matrix);
  Eigen::SelfAdjointEigenSolver<Matrix> es_e(m.rho_in_e.matrix);
  std::vector<std::pair<double, std::pair<Index, Index>>> kept;
  for (Index a = 0; a < m.dim_s; ++a)
    for (Index c = 0; c < m.dim_e; ++c) {
      const double lam = es_s.eigenvalues()(a) * es_e.eigenvalues()(c);
      if (lam > 1e-14) kept.push_back({lam, {a, c}});
    }
  if (kept.empty())
    throw std::invalid_argument("consistency sweep: initial state has no weight");
  if (kept.size() > max_rank)
    throw GuardError("consistency sweep: initial-state rank exceeds the configured cap");
  std::sort(kept.begin(), kept.end(),
            [](const auto& x, const auto& y) { return x.first > y.first; });
  Matrix cols(m.dim_total(), static_cast<Index>(kept.size()));
  for (std::size_t r = 0; r < kept.size(); ++r) {
    Vector env = es_e.eigenvectors().col(kept[r].second.second);
    if (b.rot.size() != 0) env = b.rot.adjoint() * env;
    cols.col(static_cast<Index>(r)) =
        std::sqrt(kept[r].first) *
        hilbert::kron(es_s.eigenvectors().col(kept[r].second.first), env);
  }
  return cols;
}

void scale_env_blocks(Matrix& x, const Eigen::ArrayXd& profile, Index dim_s) {
  const Index dim_e = profile.size();
  for (Index s = 0; s < dim_s; ++s)
    x.middleRows(s * dim_e, dim_e).array().colwise() *=
        profile.cast<Complex>();
}

// trace norm of a small matrix; 2x2 handled in closed form
double small_trace_norm(const Matrix& m) {
  if (m.rows() == 2 && m.cols() == 2) {
    const double a = m.squaredNorm();
    const double d = 2.0 * std::abs(m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0));
    return std::sqrt(std::max(0.0, a + d));
  }
  return hilbert::trace_norm(m);
}

struct SweepContext {
  const Matrix* u_dt;
  const std::vector<Eigen::ArrayXd>* profiles;
  const std::vector<double>* weights;
  Index dim_s;
  int slices;
  std::size_t g;
};

void sweep_norms(const SweepContext& ctx, const Matrix& x, int depth,
                 std::size_t base, std::vector<double>& norms) {
  if (depth == ctx.slices) {
    norms[base] = x.squaredNorm();
    return;
  }
  const Matrix y = (*ctx.u_dt) * x;
  for (std::size_t j = 0; j < ctx.g; ++j) {
    Matrix z = y;
    scale_env_blocks(z, (*ctx.profiles)[j], ctx.dim_s);
    sweep_norms(ctx, z, depth + 1, base * ctx.g + j, norms);
  }
}

void sweep_collect(const SweepContext& ctx, const Matrix& x, int depth,
                   std::size_t base, double mu_prefix, double step_gain,
                   double cutoff, const std::vector<Index>& column_of,
                   Matrix& out) {
  if (depth == ctx.slices) {
    const Index col = column_of[base];
    if (col >= 0)
      out.col(col) = Eigen::Map<const Vector>(x.data(), x.size());
    return;
  }
  // a slice cannot raise the mass mu * |x|^2 beyond the peak profile gain
  // times the largest node weight
  const int remaining = ctx.slices - depth;
  if (mu_prefix * x.squaredNorm() * std::pow(step_gain, remaining) < cutoff)
    return;
  const Matrix y = (*ctx.u_dt) * x;
  for (std::size_t j = 0; j < ctx.g; ++j) {
    Matrix z = y;
    scale_env_blocks(z, (*ctx.profiles)[j], ctx.dim_s);
    sweep_collect(ctx, z, depth + 1, base * ctx.g + j,
                  mu_prefix * (*ctx.weights)[j], step_gain, cutoff, column_of,
                  out);
  }
}

}  // namespace

Complex decoherence_functional(const evolution::PartialDensity& pd) {
  return pd.compound.trace();
}

// ----- consistency sweep -----

DecoherenceReport consistency_report(const CompoundModel& m,
                                     const SliceScheme& s,
                                     const CorridorMeasure& meas,
                                     const Window& w,
                                     const ReportOptions& opts) {
  evolution::validate_scheme(s);
  const std::size_t g = meas.size();
  if (g == 0)
    throw std::invalid_argument("consistency_report: empty measure");
  const double total = std::pow(static_cast<double>(g), s.slices);
  if (total > static_cast<double>(corridors::kEnumerationGuard))
    throw GuardError("consistency_report: corridor count exceeds enumeration guard");
  const auto count = static_cast<std::size_t>(std::llround(total));

  EnvBasis basis = env_basis(m.pointer_obs);
  const Matrix u_dt = rotate_compound(basis, evolution::slice_propagator(m, s), m.dim_s);
  const Matrix init = initial_columns(m, basis, opts.max_rank);

  std::vector<Eigen::ArrayXd> profiles(g);
  double peak = 0.0;
  for (std::size_t j = 0; j < g; ++j) {
    profiles[j].resize(basis.values.size());
    for (Index e = 0; e < basis.values.size(); ++e)
      profiles[j](e) = window_profile(basis.values(e) - meas.nodes[j], w);
    peak = std::max(peak, profiles[j].maxCoeff());
  }

  SweepContext ctx{&u_dt, &profiles, &meas.weights, m.dim_s, s.slices, g};

  DecoherenceReport rep;
  rep.corridor_count = count;

  // pass 1: every corridor's weight P_aa
  std::vector<double> norms(count, 0.0);
  sweep_norms(ctx, init, 0, 0, norms);

  // measure weights and probability masses
  std::vector<double> mu(count, 1.0);
  {
    std::vector<std::size_t> idx(static_cast<std::size_t>(s.slices), 0);
    for (std::size_t c = 0; c < count; ++c) {
      double v = 1.0;
      for (std::size_t k = 0; k < idx.size(); ++k) v *= meas.weights[idx[k]];
      mu[c] = v;
      for (int k = s.slices - 1; k >= 0; --k) {
        auto& ik = idx[static_cast<std::size_t>(k)];
        if (++ik < g) break;
        ik = 0;
      }
    }
  }
  double max_mass = 0.0, prob_sum = 0.0;
  rep.probs.resize(count);
  for (std::size_t c = 0; c < count; ++c) {
    rep.probs[c] = mu[c] * norms[c];
    max_mass = std::max(max_mass, rep.probs[c]);
    prob_sum += rep.probs[c];
  }
  if (max_mass <= 0.0)
    throw std::invalid_argument("consistency_report: all corridors carry zero weight");

  // pass 2: collect significant corridors (mass within prob_floor of the top)
  const double cutoff = opts.prob_floor * max_mass;
  std::vector<Index> column_of(count, -1);
  for (std::size_t c = 0; c < count; ++c)
    if (rep.probs[c] >= cutoff) {
      column_of[c] = static_cast<Index>(rep.significant.size());
      rep.significant.push_back(c);
    }
  const auto n_sig = static_cast<Index>(rep.significant.size());
  if (static_cast<std::size_t>(init.size()) * static_cast<std::size_t>(n_sig) >
      (std::size_t{1} << 26))
    throw GuardError("consistency_report: significant corridor set too large, raise prob_floor");
  double max_weight = 0.0;
  for (double v : meas.weights) max_weight = std::max(max_weight, v);
  Matrix big(init.size(), n_sig);
  sweep_collect(ctx, init, 0, 0, 1.0, peak * peak * max_weight, cutoff,
                column_of, big);
  if (prob_sum > 0.0)
    for (double& v : rep.probs) v /= prob_sum;

  // pair scan over significant corridors
  const Index dim_e = basis.values.size();
  const Index rank = init.cols();

  const Index tile = 512;
  Matrix blocks;  // per (i,j) system pair, stacked gram tiles
  for (Index j0 = 0; j0 < n_sig; j0 += tile) {
    const Index nj = std::min(tile, n_sig - j0);
    for (Index i0 = j0; i0 < n_sig; i0 += tile) {
      const Index ni = std::min(tile, n_sig - i0);
      // gram(i,j): ni x nj inner products of env blocks
      std::vector<Matrix> gram(static_cast<std::size_t>(m.dim_s * m.dim_s));
      for (Index bi = 0; bi < m.dim_s; ++bi)
        for (Index bj = 0; bj < m.dim_s; ++bj) {
          Matrix acc = Matrix::Zero(ni, nj);
          for (Index r = 0; r < rank; ++r) {
            const Index row0 = r * m.dim_total();
            acc.noalias() +=
                big.block(row0 + bi * dim_e, i0, dim_e, ni).adjoint() *
                big.block(row0 + bj * dim_e, j0, dim_e, nj);
          }
          // acc(a, b) = <psi_a block bi | psi_b block bj>
          gram[static_cast<std::size_t>(bi * m.dim_s + bj)] = std::move(acc);
        }
      Matrix rho_ab(m.dim_s, m.dim_s);
      for (Index a = 0; a < ni; ++a) {
        const Index b_end = (i0 == j0) ? a : nj;
        for (Index b = 0; b < b_end; ++b) {
          const std::size_t ca = rep.significant[static_cast<std::size_t>(i0 + a)];
          const std::size_t cb = rep.significant[static_cast<std::size_t>(j0 + b)];
          const double denom = std::sqrt(norms[ca] * norms[cb]);
          if (denom <= 0.0) continue;
          Complex p_ab(0.0, 0.0);
          for (Index bi = 0; bi < m.dim_s; ++bi) {
            p_ab += gram[static_cast<std::size_t>(bi * m.dim_s + bi)](a, b);
            for (Index bj = 0; bj < m.dim_s; ++bj)
              rho_ab(bj, bi) = gram[static_cast<std::size_t>(bi * m.dim_s + bj)](a, b);
          }
          // rho_ab(i,j) = sum_e psi_a(i,e) conj(psi_b(j,e)): gram holds the
          // conjugate, row/col swapped above
          rep.consistency_ratio =
              std::max(rep.consistency_ratio, std::abs(p_ab) / denom);
          rep.env_ratio =
              std::max(rep.env_ratio, small_trace_norm(rho_ab) / denom);
        }
      }
    }
  }

  // a sweep that resolves fewer than two significant corridors demonstrates
  // no decoherence at all (nothing was distinguished), so both suppression
  // ratios report 1 rather than a vacuous maximum over an empty pair set
  if (n_sig < 2) {
    rep.consistency_ratio = 1.0;
    rep.env_ratio = 1.0;
  }

  if (n_sig <= static_cast<Index>(opts.p_matrix_cap) && n_sig > 0)
    rep.p = (big.adjoint() * big).transpose();

  // completeness
  const bool povm_gauss =
      w.kind == WindowKind::gaussian && w.normalization == Normalization::povm;
  if (!povm_gauss) {
    Matrix slice_sum = Matrix::Zero(u_dt.rows(), u_dt.cols());
    for (std::size_t j = 0; j < g; ++j) {
      Matrix term = u_dt;
      scale_env_blocks(term, profiles[j], m.dim_s);
      slice_sum += meas.weights[j] * term;
    }
    Matrix chain = init;
    for (int k = 0; k < s.slices; ++k) chain = slice_sum * chain;
    rep.completeness_residual = std::abs(chain.squaredNorm() - 1.0);
  } else {
    double acc = 0.0, comp = 0.0;  // compensated sum over mu_a P_aa
    for (std::size_t c = 0; c < count; ++c) {
      const double term = mu[c] * norms[c];
      const double t = acc + term;
      comp += std::abs(acc) >= std::abs(term) ? (acc - t) + term : (term - t) + acc;
      acc = t;
    }
    rep.completeness_residual = std::abs(acc + comp - 1.0);
  }

  // per-pair rows among the highest-probability corridors
  std::vector<std::size_t> top(rep.significant);
  std::sort(top.begin(), top.end(), [&](std::size_t x, std::size_t y) {
    return rep.probs[x] != rep.probs[y] ? rep.probs[x] > rep.probs[y] : x < y;
  });
  if (top.size() > opts.top_corridors) top.resize(opts.top_corridors);
  std::sort(top.begin(), top.end());
  for (std::size_t ia = 0; ia < top.size(); ++ia)
    for (std::size_t ib = ia; ib < top.size(); ++ib) {
      const std::size_t ca = top[ia], cb = top[ib];
      const Index col_a = column_of[ca], col_b = column_of[cb];
      PairRow row;
      row.alpha = ca;
      row.beta = cb;
      Matrix rho_ab(m.dim_s, m.dim_s);
      Complex p_ab(0.0, 0.0);
      for (Index bi = 0; bi < m.dim_s; ++bi)
        for (Index bj = 0; bj < m.dim_s; ++bj) {
          Complex acc(0.0, 0.0);
          for (Index r = 0; r < rank; ++r) {
            const Index row0 = r * m.dim_total();
            acc += big.col(col_a)
                       .segment(row0 + bi * dim_e, dim_e)
                       .dot(big.col(col_b).segment(row0 + bj * dim_e, dim_e));
          }
          // acc = <psi_a(bi)|psi_b(bj)> => rho_ab(bj, bi) pattern as above,
          // but we want rho for (alpha, beta) = conj of that: use adjoint
          rho_ab(bi, bj) = std::conj(acc);
          if (bi == bj) p_ab += std::conj(acc);
        }
      row.p = p_ab;
      const double denom = std::sqrt(norms[ca] * norms[cb]);
      row.coherence_ratio = denom > 0.0 ? std::abs(p_ab) / denom : 0.0;
      row.env_ratio = denom > 0.0 ? small_trace_norm(rho_ab) / denom : 0.0;
      rep.pair_rows.push_back(row);
    }

  return rep;
}

// ----- partial influence functionals -----

namespace {

struct PifSide {
  Matrix leaves;  // (dim_e * rank) x path_count, lexicographic paths
};

// leaves of E_K(s_K)...E_1(s_1) C over all label paths
PifSide pif_chains(const CompoundModel& m, const SliceScheme& s,
                   const CorridorSpec& c, const EnvBasis& basis,
                   const std::vector<Matrix>& v_label, const Matrix& env_cols) {
  const auto paths = static_cast<std::size_t>(
      std::llround(std::pow(static_cast<double>(m.dim_s), s.slices)));
  const Index dim_e = m.dim_e;
  const Index rank = env_cols.cols();
  std::vector<Eigen::ArrayXd> prof(static_cast<std::size_t>(s.slices));
  for (int k = 0; k < s.slices; ++k) {
    prof[static_cast<std::size_t>(k)].resize(dim_e);
    for (Index e = 0; e < dim_e; ++e)
      prof[static_cast<std::size_t>(k)](e) =
          window_profile(basis.values(e) - c.centers[static_cast<std::size_t>(k)], c.window);
  }
  PifSide side;
  side.leaves.resize(dim_e * rank, static_cast<Index>(paths));
  // depth-first over label paths, first slice most significant
  struct Frame {
    Matrix x;
  };
  std::vector<Matrix> stack(static_cast<std::size_t>(s.slices) + 1);
  stack[0] = env_cols;
  std::vector<Index> label(static_cast<std::size_t>(s.slices), 0);
  std::size_t leaf = 0;
  int depth = 0;
  while (true) {
    if (depth == s.slices) {
      side.leaves.col(static_cast<Index>(leaf++)) = Eigen::Map<const Vector>(
          stack[static_cast<std::size_t>(depth)].data(),
          stack[static_cast<std::size_t>(depth)].size());
      // ascend to the next path
      --depth;
      while (depth >= 0 &&
             label[static_cast<std::size_t>(depth)] == m.dim_s - 1) {
        label[static_cast<std::size_t>(depth)] = 0;
        --depth;
      }
      if (depth < 0) break;
      ++label[static_cast<std::size_t>(depth)];
    }
    // apply slice `depth` with the current label
    Matrix next =
        v_label[static_cast<std::size_t>(label[static_cast<std::size_t>(depth)])] *
        stack[static_cast<std::size_t>(depth)];
    next.array().colwise() *= prof[static_cast<std::size_t>(depth)].cast<Complex>();
    stack[static_cast<std::size_t>(depth) + 1] = std::move(next);
    ++depth;
  }
  return side;
}

Matrix sys_eigvecs(const Matrix& sys_obs) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sys_obs);
  return es.eigenvectors();
}

RealVector sys_eigvals(const Matrix& sys_obs) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(sys_obs);
  return es.eigenvalues();
}

}  // namespace

PifTable pif_table(const CompoundModel& m, const SliceScheme& s,
                   const CorridorSpec& a, const CorridorSpec& b) {
  evolution::validate_scheme(s);
  if (!m.product_coupling)
    throw std::invalid_argument("pif_table: requires a product-coupling model");
  if (a.slices() != s.slices || b.slices() != s.slices)
    throw std::invalid_argument("pif_table: corridor slice counts differ from scheme");
  const double paths_d = std::pow(static_cast<double>(m.dim_s), s.slices);
  if (paths_d > static_cast<double>(kPathGuard))
    throw GuardError("pif_table: label-path count exceeds the table guard");

  EnvBasis basis = env_basis(m.pointer_obs);
  const RealVector a_vals = sys_eigvals(m.sys_obs);
  std::vector<Matrix> v_label(static_cast<std::size_t>(m.dim_s));
  for (Index l = 0; l < m.dim_s; ++l)
    v_label[static_cast<std::size_t>(l)] = rotate_env_operator(
        basis, hilbert::unitary_exp(m.h_e + a_vals(l) * m.coupling_env, s.dt));

  Eigen::SelfAdjointEigenSolver<Matrix> es_e(m.rho_in_e.matrix);
  std::vector<std::pair<double, Index>> kept;
  for (Index c = 0; c < m.dim_e; ++c)
    if (es_e.eigenvalues()(c) > 1e-14) kept.push_back({es_e.eigenvalues()(c), c});
  Matrix env_cols(m.dim_e, static_cast<Index>(kept.size()));
  for (std::size_t r = 0; r < kept.size(); ++r) {
    Vector col = es_e.eigenvectors().col(kept[r].second);
    if (basis.rot.size() != 0) col = basis.rot.adjoint() * col;
    env_cols.col(static_cast<Index>(r)) = std::sqrt(kept[r].first) * col;
  }

  PifSide alpha = pif_chains(m, s, a, basis, v_label, env_cols);
  const bool same = a.centers == b.centers &&
                    a.window.kind == b.window.kind &&
                    a.window.width == b.window.width &&
                    a.window.normalization == b.window.normalization;
  PifSide beta = same ? alpha : pif_chains(m, s, b, basis, v_label, env_cols);

  PifTable out;
  out.dim_s = m.dim_s;
  out.slices = s.slices;
  out.table = (beta.leaves.adjoint() * alpha.leaves).transpose();
  return out;
}

Matrix reassemble_reduced(const CompoundModel& m, const SliceScheme& s,
                          const PifTable& f) {
  if (f.dim_s != m.dim_s)
    throw std::invalid_argument("reassemble_reduced: table dimension mismatch");
  const Matrix t = sys_eigvecs(m.sys_obs);
  const Matrix gs = t.adjoint() * hilbert::unitary_exp(m.h_s, s.dt) * t;
  // evolve-then-weight: the first slice propagator acts on the initial state
  const Matrix rho_in =
      gs * (t.adjoint() * m.rho_in_s.matrix * t) * gs.adjoint();

  const auto paths = f.path_count();
  const auto k = static_cast<std::size_t>(f.slices);
  std::vector<Index> first(paths), last(paths);
  std::vector<Complex> chain(paths);
  for (std::size_t p = 0; p < paths; ++p) {
    // decode labels, first slice most significant
    std::size_t rem = p;
    std::vector<Index> lab(k);
    for (std::size_t i = k; i-- > 0;) {
      lab[i] = static_cast<Index>(rem % static_cast<std::size_t>(m.dim_s));
      rem /= static_cast<std::size_t>(m.dim_s);
    }
    first[p] = lab[0];
    last[p] = lab[k - 1];
    Complex amp(1.0, 0.0);
    for (std::size_t i = 1; i < k; ++i) amp *= gs(lab[i], lab[i - 1]);
    chain[p] = amp;
  }

  Matrix acc = Matrix::Zero(m.dim_s, m.dim_s);
  for (std::size_t p = 0; p < paths; ++p)
    for (std::size_t q = 0; q < paths; ++q) {
      const Complex v = f.table(static_cast<Index>(p), static_cast<Index>(q)) *
                        rho_in(first[p], first[q]) * chain[p] *
                        std::conj(chain[q]);
      acc(last[p], last[q]) += v;
    }
  return t * acc * t.adjoint();
}

PifFactorization factorize_pif(const PifTable& f, double negligible_floor) {
  PifFactorization out;
  if (f.table.norm() < negligible_floor) {
    out.negligible = true;
    return out;
  }
  hilbert::Rank1Factorization r1 = hilbert::rank1_residual(f.table);
  out.sigma_ratio = r1.sigma_ratio;
  out.alpha_weight = SystemWeight{std::move(r1.left), r1.sigma_ratio, f.dim_s, f.slices};
  out.beta_weight = SystemWeight{std::move(r1.right), r1.sigma_ratio, f.dim_s, f.slices};
  return out;
}

// ----- classical corridor scan -----

std::vector<std::vector<double>> branch_trajectories(const CompoundModel& m,
                                                     const SliceScheme& s) {
  evolution::validate_scheme(s);
  if (!m.product_coupling)
    throw std::invalid_argument("branch_trajectories: requires a product-coupling model");
  EnvBasis basis = env_basis(m.pointer_obs);
  const RealVector a_vals = sys_eigvals(m.sys_obs);
  const auto k = static_cast<std::size_t>(s.slices);
  std::vector<std::vector<double>> traj(static_cast<std::size_t>(m.dim_s),
                                        std::vector<double>(k, 0.0));
  for (Index l = 0; l < m.dim_s; ++l) {
    Matrix v = rotate_env_operator(
        basis, hilbert::unitary_exp(m.h_e + a_vals(l) * m.coupling_env, s.dt));
    Matrix rho = rotate_env_operator(basis, m.rho_in_e.matrix);
    for (std::size_t step = 0; step < k; ++step) {
      rho = v * rho * v.adjoint();
      double q = 0.0;
      for (Index e = 0; e < m.dim_e; ++e)
        q += basis.values(e) * rho(e, e).real();
      traj[static_cast<std::size_t>(l)][step] = q;
    }
  }
  return traj;
}

Index dominant_branch(const CompoundModel& m) {
  const Matrix t = sys_eigvecs(m.sys_obs);
  const Matrix rho_s = t.adjoint() * m.rho_in_s.matrix * t;
  Index dom = 0;
  for (Index l = 1; l < m.dim_s; ++l)
    if (rho_s(l, l).real() > rho_s(dom, dom).real()) dom = l;
  return dom;
}

std::vector<ScanRow> classical_corridor_scan(const CompoundModel& m,
                                             const SliceScheme& s,
                                             const CorridorMeasure& offsets,
                                             const Window& w) {
  evolution::validate_scheme(s);
  if (!m.product_coupling)
    throw std::invalid_argument("classical_corridor_scan: requires a product-coupling model");
  if (offsets.size() == 0)
    throw std::invalid_argument("classical_corridor_scan: empty offset grid");

  const auto k = static_cast<std::size_t>(s.slices);
  const std::vector<std::vector<double>> traj = branch_trajectories(m, s);
  const Index dom = dominant_branch(m);

  const Matrix r_in = hilbert::kron(m.rho_in_s.matrix, m.rho_in_e.matrix);
  Eigen::SelfAdjointEigenSolver<Matrix> es_r(r_in);
  std::vector<ScanRow> rows;
  rows.reserve(offsets.size());
  for (std::size_t j = 0; j < offsets.size(); ++j) {
    ScanRow row;
    row.alpha = j;
    row.offset = offsets.nodes[j];
    CorridorSpec c;
    c.window = w;
    c.measure_weight = offsets.weights[j];
    c.centers.resize(k);
    for (std::size_t step = 0; step < k; ++step)
      c.centers[step] = traj[static_cast<std::size_t>(dom)][step] + row.offset;

    double dist = std::numeric_limits<double>::infinity();
    for (Index l = 0; l < m.dim_s; ++l) {
      double worst = 0.0;
      for (std::size_t step = 0; step < k; ++step)
        worst = std::max(worst, std::abs(c.centers[step] -
                                         traj[static_cast<std::size_t>(l)][step]));
      dist = std::min(dist, worst);
    }
    row.distance = dist;

    evolution::PartialPropagator u = evolution::partial_propagator(m, s, c);
    double prob = 0.0;
    for (Index r = 0; r < es_r.eigenvalues().size(); ++r) {
      const double lam = es_r.eigenvalues()(r);
      if (lam > 1e-14) prob += lam * (u.matrix * es_r.eigenvectors().col(r)).squaredNorm();
    }
    row.prob = prob;
    row.pif_norm = pif_table(m, s, c, c).table.norm();
    rows.push_back(row);
  }
  return rows;
}

}  // namespace corlab::decoherence
