#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "qrelay/config.hpp"
#include "qrelay/correlator.hpp"
#include "qrelay/pipeline.hpp"
#include "qrelay/qstate.hpp"
#include "qrelay/tomography.hpp"

namespace py = pybind11;
using namespace qrelay;

PYBIND11_MODULE(_qrelay, m) {
    m.doc() = "photon-level simulator and time-tag analysis for a GHz-clocked "
              "time-bin teleportation relay";

    m.def(
        "pair_state_at_delay",
        [](double fss_uev, double tau_ps) {
            return qstate::pair_state_at_delay(fss_uev, tau_ps).amps;
        },
        py::arg("fss_uev"), py::arg("tau_ps"),
        "amplitudes (HH, HV, VH, VV) of the time-evolving cascade pair state");

    m.def(
        "fidelity_phi_plus",
        [](const Eigen::Matrix4cd& rho) {
            return qstate::fidelity(qstate::DensityMatrix{rho}, qstate::TwoQubitState::phi_plus());
        },
        py::arg("rho"));

    m.def(
        "concurrence",
        [](const Eigen::Matrix4cd& rho) { return qstate::concurrence(qstate::DensityMatrix{rho}); },
        py::arg("rho"));

    m.def(
        "mle_reconstruct",
        [](const std::vector<std::vector<std::int64_t>>& counts, double window_center_ps,
           double window_width_ps) {
            if (counts.size() != tomo::kSettings)
                throw std::invalid_argument("counts must have 9 settings");
            tomo::TomoCounts c;
            c.window = {window_center_ps, window_width_ps};
            for (int s = 0; s < tomo::kSettings; ++s) {
                if (counts[s].size() != tomo::kOutcomes)
                    throw std::invalid_argument("each setting needs 4 outcome counts");
                for (int o = 0; o < tomo::kOutcomes; ++o) c.counts[s][o] = counts[s][o];
            }
            const auto r = tomo::mle_reconstruct(c);
            py::dict d;
            d["rho"] = r.rho.matrix();
            d["fidelity_phi_plus"] = r.fidelity_phi_plus;
            d["concurrence"] = r.concurrence;
            d["iterations"] = r.iterations;
            d["converged"] = r.converged;
            return d;
        },
        py::arg("counts"), py::arg("window_center_ps") = 0.0, py::arg("window_width_ps") = 96.0,
        "diluted RrhoR maximum-likelihood tomography from a 9x4 count table");

    m.def(
        "g2_histogram",
        [](const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b, double bin_ps,
           double range_ps, double duration_ps, int threads) {
            const auto h = corr::g2_histogram(a, b, bin_ps, range_ps, duration_ps, threads);
            py::dict d;
            d["t_min_ps"] = h.t_min_ps;
            d["bin_ps"] = h.bin_ps;
            d["counts"] = h.counts;
            d["normalized"] = h.normalized();
            return d;
        },
        py::arg("a"), py::arg("b"), py::arg("bin_ps"), py::arg("range_ps"),
        py::arg("duration_ps"), py::arg("threads") = 1);

    m.def(
        "run",
        [](const std::string& config_path, const std::string& out_dir, py::object seed) {
            auto c = cfg::parse_config_file(config_path);
            if (!seed.is_none()) c.seed = seed.cast<std::uint64_t>();
            return pipeline::run_experiment(c, out_dir).dump();
        },
        py::arg("config_path"), py::arg("out_dir") = std::string{}, py::arg("seed") = py::none(),
        "run a preset end-to-end; returns the JSON report as a string");

    m.def("validate_config", &cfg::validate_config_file, py::arg("path"),
          "diagnostics for a config file; empty when valid");
}
