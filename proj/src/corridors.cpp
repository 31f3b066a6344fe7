#include "corlab/corridors.hpp"

#include <cmath>
#include <numbers>

namespace corlab::corridors {

namespace {

double box_profile(double u, double width) {
  return (u >= -0.5 * width && u < 0.5 * width) ? 1.0 : 0.0;
}

double gaussian_profile(double u, double sigma, Normalization n) {
  if (n == Normalization::amplitude)
    return std::exp(-u * u / (2.0 * sigma * sigma)) /
           (sigma * std::sqrt(2.0 * std::numbers::pi));
  return std::exp(-u * u / (8.0 * sigma * sigma)) /
         std::pow(4.0 * std::numbers::pi * sigma * sigma, 0.25);
}

double profile(double u, const Window& w) {
  return w.kind == WindowKind::box ? box_profile(u, w.width)
                                   : gaussian_profile(u, w.width, w.normalization);
}

void require_window(const Window& w, const char* who) {
  if (!(w.width > 0.0))
    throw std::invalid_argument(std::string(who) + ": window width must be positive");
}

struct Spectrum {
  RealVector values;
  Matrix vectors;  // empty when the observable is diagonal
  bool diagonal = false;
};

Spectrum analyze(const Matrix& obs) {
  if (hilbert::hermiticity_error(obs) > hilbert::kHermitianTol)
    throw std::invalid_argument("window_on_observable: observable not Hermitian");
  Spectrum s;
  Matrix off = obs;
  off.diagonal().setZero();
  if (hilbert::max_abs(off) < 1e-14) {
    s.diagonal = true;
    s.values = obs.diagonal().real();
  } else {
    Eigen::SelfAdjointEigenSolver<Matrix> es(obs);
    s.values = es.eigenvalues();
    s.vectors = es.eigenvectors();
  }
  return s;
}

Matrix apply_profile(const Spectrum& s, const Window& w, double center) {
  const Index n = s.values.size();
  Vector diag(n);
  for (Index i = 0; i < n; ++i) diag(i) = profile(s.values(i) - center, w);
  if (s.diagonal) return Matrix(diag.asDiagonal());
  return s.vectors * diag.asDiagonal() * s.vectors.adjoint();
}

}  // namespace

// ----- measures -----

CorridorMeasure box_measure(const model::CompoundModel& m, double width) {
  require_window(Window{WindowKind::box, width, Normalization::povm}, "box_measure");
  const double span = m.pointer_hi - m.pointer_lo;
  if (!(span > 0.0))
    throw std::invalid_argument("box_measure: empty pointer domain");
  const double cells = span / width;
  const auto count = static_cast<std::size_t>(std::llround(cells));
  if (count < 1 || std::abs(cells - static_cast<double>(count)) > 1e-9 * std::max(1.0, cells))
    throw std::invalid_argument("box_measure: cells must tile the pointer domain exactly");
  CorridorMeasure meas;
  meas.lo = m.pointer_lo;
  meas.hi = m.pointer_hi;
  meas.nodes.resize(count);
  meas.weights.assign(count, 1.0);
  for (std::size_t j = 0; j < count; ++j)
    meas.nodes[j] = m.pointer_lo + (static_cast<double>(j) + 0.5) * width;
  return meas;
}

CorridorMeasure gaussian_measure(const model::CompoundModel& m, double sigma,
                                 std::size_t node_count) {
  if (!(sigma > 0.0))
    throw std::invalid_argument("gaussian_measure: sigma must be positive");
  if (node_count < 2)
    throw std::invalid_argument("gaussian_measure: need at least 2 nodes");
  Eigen::SelfAdjointEigenSolver<Matrix> es(m.pointer_obs, Eigen::EigenvaluesOnly);
  const double lo = es.eigenvalues().minCoeff() - 6.0 * sigma;
  const double hi = es.eigenvalues().maxCoeff() + 6.0 * sigma;
  const double h = (hi - lo) / static_cast<double>(node_count - 1);
  CorridorMeasure meas;
  meas.lo = lo;
  meas.hi = hi;
  meas.nodes.resize(node_count);
  meas.weights.assign(node_count, h);
  for (std::size_t j = 0; j < node_count; ++j)
    meas.nodes[j] = lo + h * static_cast<double>(j);
  meas.weights.front() = 0.5 * h;
  meas.weights.back() = 0.5 * h;
  return meas;
}

std::size_t nearest_node(const CorridorMeasure& meas, double value) {
  if (meas.nodes.empty())
    throw std::invalid_argument("nearest_node: empty measure");
  std::size_t best = 0;
  double best_d = std::abs(meas.nodes[0] - value);
  for (std::size_t j = 1; j < meas.nodes.size(); ++j) {
    const double d = std::abs(meas.nodes[j] - value);
    if (d < best_d) {
      best = j;
      best_d = d;
    }
  }
  return best;
}

// ----- window operators -----

Matrix window_on_observable(const Matrix& obs, const Window& w, double center) {
  require_window(w, "window_on_observable");
  return apply_profile(analyze(obs), w, center);
}

Matrix weight_operator(const model::CompoundModel& m, const Window& w,
                       double center) {
  require_window(w, "weight_operator");
  Spectrum s = analyze(m.pointer_obs);
  if (w.kind == WindowKind::box) {
    if (center < m.pointer_lo || center >= m.pointer_hi)
      throw std::invalid_argument("weight_operator: box center outside pointer domain");
  } else {
    // keep a margin past the 6 sigma quadrature padding of gaussian_measure
    const double lo = s.values.minCoeff() - 7.0 * w.width;
    const double hi = s.values.maxCoeff() + 7.0 * w.width;
    if (center < lo || center > hi)
      throw std::invalid_argument("weight_operator: gaussian center beyond spectrum +- 7 sigma");
  }
  return apply_profile(s, w, center);
}

double resolution_check(const model::CompoundModel& m, const Window& w,
                        const CorridorMeasure& meas) {
  require_window(w, "resolution_check");
  if (meas.size() == 0)
    throw std::invalid_argument("resolution_check: empty measure");
  Spectrum s = analyze(m.pointer_obs);
  RealVector acc = RealVector::Zero(s.values.size());
  for (std::size_t j = 0; j < meas.size(); ++j) {
    for (Index i = 0; i < s.values.size(); ++i) {
      const double v = profile(s.values(i) - meas.nodes[j], w);
      acc(i) += meas.weights[j] *
                (w.normalization == Normalization::povm ? v * v : v);
    }
  }
  // diagonal in the pointer eigenbasis, so the operator norm is a max
  return (acc.array() - 1.0).abs().maxCoeff();
}

// ----- enumeration -----

std::vector<CorridorSpec> enumerate_corridors(const CorridorMeasure& meas,
                                              const Window& w, int slices) {
  if (slices < 1)
    throw std::invalid_argument("enumerate_corridors: need at least one slice");
  const std::size_t g = meas.size();
  if (g == 0)
    throw std::invalid_argument("enumerate_corridors: empty measure");
  const double total = std::pow(static_cast<double>(g), slices);
  if (total > static_cast<double>(kEnumerationGuard))
    throw GuardError("enumerate_corridors: corridor count exceeds enumeration guard");
  const auto count = static_cast<std::size_t>(std::llround(total));

  std::vector<CorridorSpec> out;
  out.reserve(count);
  std::vector<std::size_t> idx(static_cast<std::size_t>(slices), 0);
  for (std::size_t c = 0; c < count; ++c) {
    out.push_back(corridor_from_nodes(meas, w, idx));
    for (int k = slices - 1; k >= 0; --k) {  // rightmost slice fastest
      if (++idx[static_cast<std::size_t>(k)] < g) break;
      idx[static_cast<std::size_t>(k)] = 0;
    }
  }
  return out;
}

CorridorSpec corridor_from_nodes(const CorridorMeasure& meas, const Window& w,
                                 const std::vector<std::size_t>& nodes) {
  if (nodes.empty())
    throw std::invalid_argument("corridor_from_nodes: need at least one slice");
  CorridorSpec c;
  c.window = w;
  c.centers.reserve(nodes.size());
  c.measure_weight = 1.0;
  for (std::size_t j : nodes) {
    if (j >= meas.size())
      throw std::invalid_argument("corridor_from_nodes: node index out of range");
    c.centers.push_back(meas.nodes[j]);
    c.measure_weight *= meas.weights[j];
  }
  return c;
}

}  // namespace corlab::corridors
