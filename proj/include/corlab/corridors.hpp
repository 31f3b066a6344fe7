#pragma once

// Measurement corridors: per-slice window operators diagonal in the pointer
// eigenbasis, quadrature measures over window centers, and the enumeration of
// corridor tuples. Two window kinds are supported:
//
//  box      indicator of [center - width/2, center + width/2); a partition of
//           the pointer domain resolves the identity exactly under either
//           normalization convention.
//  gaussian amplitude convention:  w(u) = exp(-u^2 / (2 sigma^2)) / (sigma sqrt(2 pi))
//           povm convention:       w(u) = exp(-u^2 / (8 sigma^2)) / (4 pi sigma^2)^(1/4)
//           The povm shape constant is chosen so that the non-selective
//           per-slice channel matches a double-commutator generator of
//           strength kappa = 1 / (8 sigma^2 dt).
//
// Amplitude windows satisfy sum_j mu_j W(a_j) ~ 1, povm windows satisfy
// sum_j mu_j W(a_j)^2 ~ 1, each up to quadrature residual.

#include "corlab/model.hpp"

#include <vector>

namespace corlab::corridors {

enum class WindowKind { box, gaussian };
enum class Normalization { amplitude, povm };

struct Window {
  WindowKind kind = WindowKind::box;
  double width = 1.0;  // box cell width, or gaussian sigma
  Normalization normalization = Normalization::povm;
};

// Quadrature measure over window centers: integral f(a) da ~ sum_j mu_j f(a_j).
// Box partitions use unit weights (counting measure over cells).
struct CorridorMeasure {
  std::vector<double> nodes;
  std::vector<double> weights;
  double lo = 0.0;
  double hi = 0.0;

  std::size_t size() const { return nodes.size(); }
};

// One corridor: a window center per time slice plus the product quadrature
// weight it carries in corridor sums.
struct CorridorSpec {
  std::vector<double> centers;
  Window window;
  double measure_weight = 1.0;

  int slices() const { return static_cast<int>(centers.size()); }
};

inline constexpr std::size_t kEnumerationGuard = 1000000;

// ----- measures -----

// Cells of the given width tiling [pointer_lo, pointer_hi) exactly.
CorridorMeasure box_measure(const model::CompoundModel& m, double width);

// Trapezoid rule with node_count uniform nodes on [min spec - 6 sigma,
// max spec + 6 sigma].
CorridorMeasure gaussian_measure(const model::CompoundModel& m, double sigma,
                                 std::size_t node_count);

std::size_t nearest_node(const CorridorMeasure& meas, double value);

// ----- window operators -----

// Window profile applied to the spectrum of an arbitrary Hermitian
// observable; shared by pointer-side and system-side channels.
Matrix window_on_observable(const Matrix& obs, const Window& w, double center);

// Positive operator diagonal in the pointer eigenbasis with profile
// w(lambda - center). Throws if the center lies outside the pointer domain
// (box) or outside spectrum +- 7 sigma (gaussian), a margin past the
// 6 sigma padding of gaussian_measure.
Matrix weight_operator(const model::CompoundModel& m, const Window& w,
                       double center);

// Residual of the resolution of identity over the measure, in operator norm:
// amplitude windows sum W, povm windows sum W^2.
double resolution_check(const model::CompoundModel& m, const Window& w,
                        const CorridorMeasure& meas);

// ----- enumeration -----

// All size(meas)^slices corridors in lexicographic node order (first slice
// most significant); measure_weight is the product of node weights.
std::vector<CorridorSpec> enumerate_corridors(const CorridorMeasure& meas,
                                              const Window& w, int slices);

// Corridor assembled from explicit node indices, one per slice.
CorridorSpec corridor_from_nodes(const CorridorMeasure& meas, const Window& w,
                                 const std::vector<std::size_t>& nodes);

}  // namespace corlab::corridors
