#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "corlab/cli.hpp"
#include "corlab/decoherence.hpp"
#include "corlab/rpi.hpp"

namespace py = pybind11;
using namespace corlab;

PYBIND11_MODULE(_corlab, m) {
  m.doc() = "Corridor decoherence laboratory: restricted propagators, "
            "influence functionals and restricted-path evolution";

  py::register_exception<GuardError>(m, "GuardError");

  // ----- hilbert -----

  py::class_<hilbert::QState>(m, "QState")
      .def(py::init([](const Vector& amp, bool normalized) {
             return hilbert::make_state(amp, normalized);
           }),
           py::arg("amplitudes"), py::arg("normalized") = true)
      .def_readonly("amplitudes", &hilbert::QState::amplitudes)
      .def_readonly("normalized", &hilbert::QState::normalized)
      .def_property_readonly("dim", &hilbert::QState::dim);

  py::class_<hilbert::DensityOp>(m, "DensityOp")
      .def(py::init([](const Matrix& mat, bool normalized) {
             return hilbert::make_density(mat, normalized);
           }),
           py::arg("matrix"), py::arg("normalized") = true)
      .def_readonly("matrix", &hilbert::DensityOp::matrix)
      .def_readonly("normalized", &hilbert::DensityOp::normalized)
      .def_property_readonly("dim", &hilbert::DensityOp::dim);

  m.def("kron", &hilbert::kron, py::arg("a"), py::arg("b"));
  m.def("partial_trace_env", &hilbert::partial_trace_env, py::arg("m"),
        py::arg("dim_s"), py::arg("dim_e"));
  m.def("unitary_exp", &hilbert::unitary_exp, py::arg("h"), py::arg("t"));
  m.def("trace_distance",
        py::overload_cast<const Matrix&, const Matrix&>(&hilbert::trace_distance),
        py::arg("a"), py::arg("b"));
  m.def("purity", &hilbert::purity, py::arg("rho"));

  // ----- model -----

  py::class_<model::CompoundModel>(m, "CompoundModel")
      .def_readonly("dim_s", &model::CompoundModel::dim_s)
      .def_readonly("dim_e", &model::CompoundModel::dim_e)
      .def_readonly("h_s", &model::CompoundModel::h_s)
      .def_readonly("h_e", &model::CompoundModel::h_e)
      .def_readonly("sys_obs", &model::CompoundModel::sys_obs)
      .def_readonly("coupling_env", &model::CompoundModel::coupling_env)
      .def_readonly("pointer_obs", &model::CompoundModel::pointer_obs)
      .def_readonly("rho_in_s", &model::CompoundModel::rho_in_s)
      .def_readonly("rho_in_e", &model::CompoundModel::rho_in_e)
      .def_property_readonly("dim_total", &model::CompoundModel::dim_total);

  m.def("build_von_neumann", &model::build_von_neumann, py::arg("g"),
        py::arg("n_grid"), py::arg("x_max"), py::arg("sigma0"),
        py::arg("omega_s"));
  m.def("build_spin_bath", &model::build_spin_bath, py::arg("n_spins"),
        py::arg("g"), py::arg("epsilon"), py::arg("omega_s"));
  m.def("build_qubit", &model::build_qubit, py::arg("omega_s"), py::arg("theta"));
  m.def("total_hamiltonian", &model::total_hamiltonian, py::arg("model"));

  // ----- corridors -----

  py::enum_<corridors::WindowKind>(m, "WindowKind")
      .value("box", corridors::WindowKind::box)
      .value("gaussian", corridors::WindowKind::gaussian);

  py::enum_<corridors::Normalization>(m, "Normalization")
      .value("povm", corridors::Normalization::povm)
      .value("amplitude", corridors::Normalization::amplitude);

  py::class_<corridors::Window>(m, "Window")
      .def(py::init<>())
      .def_readwrite("kind", &corridors::Window::kind)
      .def_readwrite("width", &corridors::Window::width)
      .def_readwrite("normalization", &corridors::Window::normalization);

  py::class_<corridors::CorridorMeasure>(m, "CorridorMeasure")
      .def_readonly("nodes", &corridors::CorridorMeasure::nodes)
      .def_readonly("weights", &corridors::CorridorMeasure::weights)
      .def_readonly("lo", &corridors::CorridorMeasure::lo)
      .def_readonly("hi", &corridors::CorridorMeasure::hi)
      .def_property_readonly("size", &corridors::CorridorMeasure::size);

  py::class_<corridors::CorridorSpec>(m, "CorridorSpec")
      .def(py::init<>())
      .def_readwrite("centers", &corridors::CorridorSpec::centers)
      .def_readwrite("window", &corridors::CorridorSpec::window)
      .def_readwrite("measure_weight", &corridors::CorridorSpec::measure_weight);

  m.def("box_measure", &corridors::box_measure, py::arg("model"), py::arg("width"));
  m.def("gaussian_measure", &corridors::gaussian_measure, py::arg("model"),
        py::arg("sigma"), py::arg("node_count"));
  m.def("weight_operator", &corridors::weight_operator, py::arg("model"),
        py::arg("window"), py::arg("center"));
  m.def("resolution_check", &corridors::resolution_check, py::arg("model"),
        py::arg("window"), py::arg("measure"));
  m.def("enumerate_corridors", &corridors::enumerate_corridors, py::arg("measure"),
        py::arg("window"), py::arg("slices"));
  m.def("corridor_from_nodes", &corridors::corridor_from_nodes, py::arg("measure"),
        py::arg("window"), py::arg("nodes"));

  // ----- evolution -----

  py::enum_<evolution::Splitting>(m, "Splitting")
      .value("exact_slice", evolution::Splitting::exact_slice)
      .value("strang", evolution::Splitting::strang);

  py::class_<evolution::SliceScheme>(m, "SliceScheme")
      .def(py::init<>())
      .def_readwrite("slices", &evolution::SliceScheme::slices)
      .def_readwrite("dt", &evolution::SliceScheme::dt)
      .def_readwrite("splitting", &evolution::SliceScheme::splitting);

  py::class_<evolution::PartialPropagator>(m, "PartialPropagator")
      .def_readonly("corridor", &evolution::PartialPropagator::corridor)
      .def_readonly("matrix", &evolution::PartialPropagator::matrix)
      .def_readonly("may_exceed_unit_norm",
                    &evolution::PartialPropagator::may_exceed_unit_norm);

  py::class_<evolution::PartialDensity>(m, "PartialDensity")
      .def_readonly("compound", &evolution::PartialDensity::compound)
      .def_readonly("reduced", &evolution::PartialDensity::reduced);

  m.def("slice_propagator", &evolution::slice_propagator, py::arg("model"),
        py::arg("scheme"));
  m.def("partial_propagator", &evolution::partial_propagator, py::arg("model"),
        py::arg("scheme"), py::arg("corridor"));
  m.def("partial_density", &evolution::partial_density, py::arg("model"),
        py::arg("ua"), py::arg("ub"));
  m.def("reconstruct_total", &evolution::reconstruct_total, py::arg("model"),
        py::arg("scheme"), py::arg("measure"), py::arg("window"));

  // ----- decoherence -----

  py::class_<decoherence::ReportOptions>(m, "ReportOptions")
      .def(py::init<>())
      .def_readwrite("prob_floor", &decoherence::ReportOptions::prob_floor)
      .def_readwrite("top_corridors", &decoherence::ReportOptions::top_corridors)
      .def_readwrite("max_rank", &decoherence::ReportOptions::max_rank)
      .def_readwrite("p_matrix_cap", &decoherence::ReportOptions::p_matrix_cap);

  py::class_<decoherence::PairRow>(m, "PairRow")
      .def_readonly("alpha", &decoherence::PairRow::alpha)
      .def_readonly("beta", &decoherence::PairRow::beta)
      .def_readonly("p", &decoherence::PairRow::p)
      .def_readonly("coherence_ratio", &decoherence::PairRow::coherence_ratio)
      .def_readonly("env_ratio", &decoherence::PairRow::env_ratio);

  py::class_<decoherence::DecoherenceReport>(m, "DecoherenceReport")
      .def_readonly("corridor_count", &decoherence::DecoherenceReport::corridor_count)
      .def_readonly("probs", &decoherence::DecoherenceReport::probs)
      .def_readonly("significant", &decoherence::DecoherenceReport::significant)
      .def_readonly("p", &decoherence::DecoherenceReport::p)
      .def_readonly("consistency_ratio",
                    &decoherence::DecoherenceReport::consistency_ratio)
      .def_readonly("env_ratio", &decoherence::DecoherenceReport::env_ratio)
      .def_readonly("completeness_residual",
                    &decoherence::DecoherenceReport::completeness_residual)
      .def_readonly("pair_rows", &decoherence::DecoherenceReport::pair_rows);

  py::class_<decoherence::PifTable>(m, "PifTable")
      .def_readonly("table", &decoherence::PifTable::table)
      .def_readonly("dim_s", &decoherence::PifTable::dim_s)
      .def_readonly("slices", &decoherence::PifTable::slices)
      .def_property_readonly("path_count", &decoherence::PifTable::path_count);

  py::class_<decoherence::SystemWeight>(m, "SystemWeight")
      .def_readonly("w", &decoherence::SystemWeight::w)
      .def_readonly("residual", &decoherence::SystemWeight::residual)
      .def_readonly("dim_s", &decoherence::SystemWeight::dim_s)
      .def_readonly("slices", &decoherence::SystemWeight::slices);

  py::class_<decoherence::PifFactorization>(m, "PifFactorization")
      .def_readonly("negligible", &decoherence::PifFactorization::negligible)
      .def_readonly("sigma_ratio", &decoherence::PifFactorization::sigma_ratio)
      .def_readonly("alpha_weight", &decoherence::PifFactorization::alpha_weight)
      .def_readonly("beta_weight", &decoherence::PifFactorization::beta_weight);

  py::class_<decoherence::ScanRow>(m, "ScanRow")
      .def_readonly("alpha", &decoherence::ScanRow::alpha)
      .def_readonly("offset", &decoherence::ScanRow::offset)
      .def_readonly("distance", &decoherence::ScanRow::distance)
      .def_readonly("prob", &decoherence::ScanRow::prob)
      .def_readonly("pif_norm", &decoherence::ScanRow::pif_norm);

  m.def("consistency_report", &decoherence::consistency_report, py::arg("model"),
        py::arg("scheme"), py::arg("measure"), py::arg("window"),
        py::arg("options") = decoherence::ReportOptions{});
  m.def("pif_table", &decoherence::pif_table, py::arg("model"), py::arg("scheme"),
        py::arg("alpha"), py::arg("beta"));
  m.def("reassemble_reduced", &decoherence::reassemble_reduced, py::arg("model"),
        py::arg("scheme"), py::arg("pif"));
  m.def("factorize_pif", &decoherence::factorize_pif, py::arg("pif"),
        py::arg("negligible_floor") = 1e-12);
  m.def("classical_corridor_scan", &decoherence::classical_corridor_scan,
        py::arg("model"), py::arg("scheme"), py::arg("measure"), py::arg("window"));
  m.def("branch_trajectories", &decoherence::branch_trajectories, py::arg("model"),
        py::arg("scheme"));
  m.def("dominant_branch", &decoherence::dominant_branch, py::arg("model"));

  // ----- rpi -----

  py::enum_<rpi::WeightSource>(m, "WeightSource")
      .value("extracted", rpi::WeightSource::extracted)
      .value("gaussian_analytic", rpi::WeightSource::gaussian_analytic);

  py::class_<rpi::RpiPropagator>(m, "RpiPropagator")
      .def_readonly("alpha", &rpi::RpiPropagator::alpha)
      .def_readonly("u", &rpi::RpiPropagator::u)
      .def_readonly("source", &rpi::RpiPropagator::source);

  py::class_<rpi::SelectiveResult>(m, "SelectiveResult")
      .def_readonly("rho", &rpi::SelectiveResult::rho)
      .def_readonly("prob", &rpi::SelectiveResult::prob);

  py::class_<rpi::SelectiveStateResult>(m, "SelectiveStateResult")
      .def_readonly("psi", &rpi::SelectiveStateResult::psi)
      .def_readonly("prob", &rpi::SelectiveStateResult::prob);

  py::class_<rpi::MeasurementRecord>(m, "MeasurementRecord")
      .def(py::init<>())
      .def_readwrite("readout", &rpi::MeasurementRecord::readout)
      .def_readwrite("kappa", &rpi::MeasurementRecord::kappa);

  py::class_<rpi::LindbladGenerator>(m, "LindbladGenerator")
      .def(py::init<>())
      .def_readwrite("h", &rpi::LindbladGenerator::h)
      .def_readwrite("lindblad_op", &rpi::LindbladGenerator::lindblad_op)
      .def_readwrite("kappa", &rpi::LindbladGenerator::kappa)
      .def_readwrite("dt_max", &rpi::LindbladGenerator::dt_max);

  py::class_<rpi::MarkovRow>(m, "MarkovRow")
      .def_readonly("dt", &rpi::MarkovRow::dt)
      .def_readonly("sigma", &rpi::MarkovRow::sigma)
      .def_readonly("trace_dist", &rpi::MarkovRow::trace_dist);

  py::class_<rpi::CompareRow>(m, "CompareRow")
      .def_readonly("alpha", &rpi::CompareRow::alpha)
      .def_readonly("trace_dist", &rpi::CompareRow::trace_dist)
      .def_readonly("prob_rel_err", &rpi::CompareRow::prob_rel_err)
      .def_readonly("factorization_residual",
                    &rpi::CompareRow::factorization_residual);

  m.def("rpi_from_weights", &rpi::rpi_from_weights, py::arg("weights"),
        py::arg("h_s"), py::arg("sys_obs"), py::arg("scheme"));
  m.def("rpi_product", &rpi::rpi_product, py::arg("h_s"), py::arg("sys_obs"),
        py::arg("dt"), py::arg("slice_weights"));
  m.def("rpi_path_sum", &rpi::rpi_path_sum, py::arg("h_s"), py::arg("sys_obs"),
        py::arg("dt"), py::arg("path_weight"), py::arg("slices"));
  m.def("selective_evolve",
        py::overload_cast<const rpi::RpiPropagator&, const hilbert::DensityOp&>(
            &rpi::selective_evolve),
        py::arg("propagator"), py::arg("rho"));
  m.def("selective_evolve_state",
        py::overload_cast<const rpi::RpiPropagator&, const hilbert::QState&>(
            &rpi::selective_evolve),
        py::arg("propagator"), py::arg("psi"));
  m.def("nonselective_reconstruct", &rpi::nonselective_reconstruct,
        py::arg("propagators"), py::arg("mu"), py::arg("rho_in"));
  m.def("kappa_from_window", &rpi::kappa_from_window, py::arg("sigma"), py::arg("dt"));
  m.def("sigma_from_kappa", &rpi::sigma_from_kappa, py::arg("kappa"), py::arg("dt"));
  m.def("gaussian_step_operator", &rpi::gaussian_step_operator, py::arg("h_s"),
        py::arg("sys_obs"), py::arg("kappa"), py::arg("center"), py::arg("dt"));
  m.def("gaussian_rpi_step", &rpi::gaussian_rpi_step, py::arg("psi"), py::arg("a_k"),
        py::arg("kappa"), py::arg("dt"), py::arg("h_s"), py::arg("sys_obs"));
  m.def("gaussian_rpi_propagator", &rpi::gaussian_rpi_propagator, py::arg("h_s"),
        py::arg("sys_obs"), py::arg("record"), py::arg("dt"));
  m.def("lindblad_evolve", &rpi::lindblad_evolve, py::arg("generator"),
        py::arg("rho_in"), py::arg("t"));
  m.def("gaussian_channel_evolve", &rpi::gaussian_channel_evolve, py::arg("h_s"),
        py::arg("sys_obs"), py::arg("rho0"), py::arg("kappa"), py::arg("t"),
        py::arg("slices"));
  m.def("markov_limit_check", &rpi::markov_limit_check, py::arg("h_s"),
        py::arg("sys_obs"), py::arg("rho0"), py::arg("kappa"), py::arg("t"),
        py::arg("base_slices"), py::arg("levels"));
  m.def("compare_rpi_vs_exact", &rpi::compare_rpi_vs_exact, py::arg("model"),
        py::arg("scheme"), py::arg("corridors"));

  // ----- cli -----

  m.def("run_experiment", &cli::run, py::arg("config_path"),
        py::arg("force_check") = false,
        "Run a config file exactly like the command line tool; returns its "
        "exit code");
  m.attr("__version__") = cli::version_string();
}
