#include <cmath>
#include <vector>

#include "doctest.h"

#include "corlab/corridors.hpp"
#include "corlab/hilbert.hpp"
#include "corlab/model.hpp"
#include "support.hpp"

using namespace corlab;
using corridors::CorridorMeasure;
using corridors::Normalization;
using corridors::Window;
using corridors::WindowKind;

namespace {

Window box_window(double width) {
  Window w;
  w.kind = WindowKind::box;
  w.width = width;
  w.normalization = Normalization::povm;
  return w;
}

Window gaussian_window(double sigma, Normalization norm) {
  Window w;
  w.kind = WindowKind::gaussian;
  w.width = sigma;
  w.normalization = norm;
  return w;
}

}  // namespace

// ----- measures -----

TEST_CASE("box measure tiles the pointer domain with unit weights") {
  const model::CompoundModel m = model::build_von_neumann(1.0, 32, 4.0, 1.0, 1.0);
  const CorridorMeasure meas = corridors::box_measure(m, 1.0);
  REQUIRE(meas.size() == 8);
  CHECK(meas.lo == doctest::Approx(-4.0));
  CHECK(meas.hi == doctest::Approx(4.0));
  for (std::size_t j = 0; j < meas.size(); ++j) {
    CHECK(meas.nodes[j] ==
          doctest::Approx(-3.5 + static_cast<double>(j)).epsilon(1e-14));
    CHECK(meas.weights[j] == 1.0);
  }
}

TEST_CASE("box measure rejects widths that do not tile the domain") {
  const model::CompoundModel m = model::build_von_neumann(1.0, 32, 4.0, 1.0, 1.0);
  CHECK_THROWS_AS((void)corridors::box_measure(m, 1.5), std::invalid_argument);
  CHECK_THROWS_AS((void)corridors::box_measure(m, 0.0), std::invalid_argument);
  CHECK_THROWS_AS((void)corridors::box_measure(m, -1.0), std::invalid_argument);
  CHECK_NOTHROW((void)corridors::box_measure(m, 8.0));  // one giant cell
}

TEST_CASE("gaussian measure is a trapezoid rule padded six sigma past the spectrum") {
  const model::CompoundModel m = model::build_von_neumann(1.0, 32, 4.0, 1.0, 1.0);
  const double sigma = 0.5;
  const std::size_t n = 33;
  const CorridorMeasure meas = corridors::gaussian_measure(m, sigma, n);
  REQUIRE(meas.size() == n);
  // the grid spectrum runs over [-4, 4) in steps of 0.25, so the last
  // eigenvalue is 3.75 and the padded span is [-7, 6.75]
  CHECK(meas.lo == doctest::Approx(-4.0 - 6.0 * sigma).epsilon(1e-14));
  CHECK(meas.hi == doctest::Approx(3.75 + 6.0 * sigma).epsilon(1e-14));
  const double h = (meas.hi - meas.lo) / static_cast<double>(n - 1);
  CHECK(meas.nodes.front() == doctest::Approx(meas.lo));
  CHECK(meas.nodes.back() == doctest::Approx(meas.hi));
  CHECK(meas.weights.front() == doctest::Approx(0.5 * h));
  CHECK(meas.weights.back() == doctest::Approx(0.5 * h));
  double total = 0.0;
  for (double w : meas.weights) total += w;
  CHECK(total == doctest::Approx(meas.hi - meas.lo).epsilon(1e-12));
  CHECK_THROWS_AS((void)corridors::gaussian_measure(m, 0.0, 16),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)corridors::gaussian_measure(m, 0.5, 1),
                  std::invalid_argument);
}

TEST_CASE("nearest node picks the closest center and the lower index on ties") {
  const model::CompoundModel m = model::build_von_neumann(1.0, 32, 4.0, 1.0, 1.0);
  const CorridorMeasure meas = corridors::box_measure(m, 1.0);  // -3.5 .. 3.5
  CHECK(corridors::nearest_node(meas, -3.4) == 0);
  CHECK(corridors::nearest_node(meas, 3.2) == 7);
  CHECK(corridors::nearest_node(meas, 100.0) == 7);
  CHECK(corridors::nearest_node(meas, -3.0) == 0);  // exact midpoint
  CHECK_THROWS_AS((void)corridors::nearest_node(CorridorMeasure{}, 0.0),
                  std::invalid_argument);
}

// ----- window operators -----

TEST_CASE("box weight operators are projectors that commute with the pointer") {
  const model::CompoundModel m = model::build_von_neumann(1.0, 32, 4.0, 1.0, 1.0);
  const Window w = box_window(1.0);
  const CorridorMeasure meas = corridors::box_measure(m, 1.0);
  for (double c : meas.nodes) {
    const Matrix op = corridors::weight_operator(m, w, c);
    CHECK(hilbert::max_abs(op * op - op) == 0.0);
    CHECK(hilbert::max_abs(op * m.pointer_obs - m.pointer_obs * op) < 1e-12);
  }
}

TEST_CASE("box cells pick up disjoint slices of the grid that sum to identity") {
  const model::CompoundModel m = model::build_von_neumann(1.0, 32, 4.0, 1.0, 1.0);
  const Window w = box_window(2.0);
  const CorridorMeasure meas = corridors::box_measure(m, 2.0);
  Matrix sum = Matrix::Zero(m.dim_e, m.dim_e);
  for (double c : meas.nodes) sum += corridors::weight_operator(m, w, c);
  CHECK(hilbert::max_abs(sum - model::identity(m.dim_e)) == 0.0);
}

TEST_CASE("gaussian weight operators translate with their center on the grid") {
  const model::CompoundModel m = model::build_von_neumann(1.0, 32, 4.0, 1.0, 1.0);
  const double dx = 8.0 / 32.0;
  const Window w = gaussian_window(0.5, Normalization::povm);
  const Matrix a = corridors::weight_operator(m, w, 0.0);
  const Matrix b = corridors::weight_operator(m, w, dx);
  for (Index j = 1; j < m.dim_e; ++j)
    CHECK(std::abs(b(j, j) - a(j - 1, j - 1)) < 1e-12);
}

TEST_CASE("window profiles are basis covariant for smooth windows") {
  auto gen = testing::engine(404);
  const model::CompoundModel m = model::build_von_neumann(1.0, 32, 4.0, 1.0, 1.0);
  const Matrix q = Matrix(m.pointer_obs);
  // conjugate the pointer by a random unitary and compare the window in
  // both frames; gaussian profiles are Lipschitz so eigenvalue jitter is safe
  const Matrix r = testing::random_matrix(m.dim_e, m.dim_e, gen);
  const Eigen::HouseholderQR<Matrix> qr(r);
  const Matrix v = qr.householderQ();
  const Matrix rotated = v * q * v.adjoint();
  const Window w = gaussian_window(0.7, Normalization::amplitude);
  const Matrix direct = corridors::window_on_observable(rotated, w, 0.4);
  const Matrix moved =
      v * corridors::window_on_observable(q, w, 0.4) * v.adjoint();
  CHECK(hilbert::max_abs(direct - moved) < 1e-10);
  CHECK(hilbert::max_abs(direct * rotated - rotated * direct) < 1e-10);
}

TEST_CASE("window operators reject bad centers, widths, and observables") {
  const model::CompoundModel m = model::build_von_neumann(1.0, 32, 4.0, 1.0, 1.0);
  CHECK_THROWS_AS((void)corridors::weight_operator(m, box_window(1.0), 4.5),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)corridors::weight_operator(m, box_window(1.0), -4.1),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      (void)corridors::weight_operator(m, gaussian_window(0.5, Normalization::povm), 8.0),
      std::invalid_argument);
  CHECK_THROWS_AS((void)corridors::weight_operator(m, box_window(0.0), 0.0),
                  std::invalid_argument);
  Matrix skew = Matrix::Zero(4, 4);
  skew(0, 1) = 1.0;
  CHECK_THROWS_AS(
      (void)corridors::window_on_observable(skew, box_window(1.0), 0.0),
      std::invalid_argument);
}

// ----- resolution of identity -----

TEST_CASE("a box partition resolves the identity exactly") {
  const model::CompoundModel m = model::build_von_neumann(1.0, 32, 4.0, 1.0, 1.0);
  const CorridorMeasure meas = corridors::box_measure(m, 1.0);
  Window w = box_window(1.0);
  w.normalization = Normalization::povm;
  CHECK(corridors::resolution_check(m, w, meas) < 1e-12);
  w.normalization = Normalization::amplitude;
  CHECK(corridors::resolution_check(m, w, meas) < 1e-12);
}

TEST_CASE("dense gaussian quadrature resolves the identity to the tail error") {
  const model::CompoundModel m = model::build_von_neumann(1.0, 32, 4.0, 1.0, 1.0);
  const double sigma = 0.5;
  const CorridorMeasure meas = corridors::gaussian_measure(m, sigma, 64);
  // amplitude windows integrate to one; the padded span leaves only the
  // six-sigma tail, far below the threshold
  CHECK(corridors::resolution_check(
            m, gaussian_window(sigma, Normalization::amplitude), meas) < 1e-6);
  // squared povm windows are twice as wide, so the truncated tail dominates
  // at a few parts in a hundred thousand
  CHECK(corridors::resolution_check(
            m, gaussian_window(sigma, Normalization::povm), meas) < 1e-4);
  CHECK_THROWS_AS(
      (void)corridors::resolution_check(
          m, gaussian_window(sigma, Normalization::povm), CorridorMeasure{}),
      std::invalid_argument);
}

// ----- enumeration -----

TEST_CASE("corridor enumeration walks the product lattice with the last slice fastest") {
  const model::CompoundModel m = model::build_von_neumann(1.0, 32, 4.0, 1.0, 1.0);
  const CorridorMeasure meas = corridors::box_measure(m, 2.0);  // 4 nodes
  const Window w = box_window(2.0);
  const auto all = corridors::enumerate_corridors(meas, w, 3);
  REQUIRE(all.size() == 64);
  for (const auto& c : all) REQUIRE(c.slices() == 3);
  CHECK(all[0].centers == std::vector<double>{meas.nodes[0], meas.nodes[0], meas.nodes[0]});
  CHECK(all[1].centers == std::vector<double>{meas.nodes[0], meas.nodes[0], meas.nodes[1]});
  CHECK(all[4].centers == std::vector<double>{meas.nodes[0], meas.nodes[1], meas.nodes[0]});
  CHECK(all.back().centers ==
        std::vector<double>{meas.nodes[3], meas.nodes[3], meas.nodes[3]});
  // box weights are all one, so every product weight is one
  for (const auto& c : all) CHECK(c.measure_weight == 1.0);
}

TEST_CASE("enumeration multiplies quadrature weights and respects the guard") {
  const model::CompoundModel m = model::build_von_neumann(1.0, 32, 4.0, 1.0, 1.0);
  const CorridorMeasure meas = corridors::gaussian_measure(m, 0.5, 5);
  const Window w = gaussian_window(0.5, Normalization::povm);
  const auto all = corridors::enumerate_corridors(meas, w, 2);
  REQUIRE(all.size() == 25);
  CHECK(all[0].measure_weight ==
        doctest::Approx(meas.weights[0] * meas.weights[0]).epsilon(1e-14));
  CHECK(all[7].measure_weight ==
        doctest::Approx(meas.weights[1] * meas.weights[2]).epsilon(1e-14));

  const CorridorMeasure wide = corridors::gaussian_measure(m, 0.5, 101);
  CHECK_THROWS_AS((void)corridors::enumerate_corridors(wide, w, 3), GuardError);
  CHECK_THROWS_AS((void)corridors::enumerate_corridors(meas, w, 0),
                  std::invalid_argument);
}

TEST_CASE("explicit node lists build corridors with matching centers") {
  const model::CompoundModel m = model::build_von_neumann(1.0, 32, 4.0, 1.0, 1.0);
  const CorridorMeasure meas = corridors::gaussian_measure(m, 0.5, 9);
  const Window w = gaussian_window(0.5, Normalization::povm);
  const auto c = corridors::corridor_from_nodes(meas, w, {0, 4, 8});
  REQUIRE(c.slices() == 3);
  CHECK(c.centers[0] == meas.nodes[0]);
  CHECK(c.centers[1] == meas.nodes[4]);
  CHECK(c.centers[2] == meas.nodes[8]);
  CHECK(c.measure_weight ==
        doctest::Approx(meas.weights[0] * meas.weights[4] * meas.weights[8])
            .epsilon(1e-14));
  CHECK_THROWS_AS((void)corridors::corridor_from_nodes(meas, w, {0, 9}),
                  std::invalid_argument);
  CHECK_THROWS_AS((void)corridors::corridor_from_nodes(meas, w, {}),
                  std::invalid_argument);
}
