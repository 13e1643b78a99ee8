#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "qrelay/correlator.hpp"
#include "qrelay/qstate.hpp"

namespace qrelay::tomo {

// Analyzer settings ordered (HV, DA, RL) x (HV, DA, RL); setting index
// s = 3*basis_xx + basis_x, outcome index o = 2*outcome_xx + outcome_x.
inline constexpr int kSettings = 9;
inline constexpr int kOutcomes = 4;

qstate::Basis setting_basis_xx(int s);
qstate::Basis setting_basis_x(int s);
// Rank-1 projector |xx outcome> (x) |x outcome> for (setting, outcome).
Eigen::Vector4cd projector_ket(int s, int o);

// 36-entry coincidence count table for one post-selection window.
struct TomoCounts {
    std::array<std::array<std::int64_t, kOutcomes>, kSettings> counts{};
    corr::Window window;
    double duration_ps = 0.0;

    std::int64_t total() const;
    std::int64_t setting_total(int s) const;
};

// Per-setting tag streams: one (XX outcome, X outcome) channel quadruple.
struct SettingTags {
    std::vector<std::int64_t> xx[2];
    std::vector<std::int64_t> x[2];
};

// Coincidences with X-XX delay inside the window, accumulated per projector.
TomoCounts assemble_counts(const std::array<SettingTags, kSettings>& tags,
                           const corr::Window& w);

// James-style linear inversion; Hermitian and trace-1 by construction but
// possibly non-physical (negative eigenvalues).
Eigen::Matrix4cd linear_reconstruct(const TomoCounts& c);

// Clamp negative eigenvalues and renormalize the trace.
qstate::DensityMatrix project_to_physical(const Eigen::Matrix4cd& m);

struct TomoResult {
    qstate::DensityMatrix rho;
    double fidelity_phi_plus = 0.0;
    double fidelity_max_ent = 0.0;  // filled by windowed series
    double concurrence = 0.0;
    double log_likelihood = 0.0;
    int iterations = 0;
    bool converged = false;
};

// Diluted RrhoR maximum-likelihood reconstruction (dilution 0.5); stops when
// the log-likelihood improves by < 1e-10 or after 10000 iterations.
TomoResult mle_reconstruct(const TomoCounts& c);

double log_likelihood(const TomoCounts& c, const Eigen::Matrix4cd& rho);

struct WindowedFidelityRow {
    double center_ps = 0.0;
    double fidelity_phi_plus = 0.0;
    double fidelity_max_ent = 0.0;
    double concurrence = 0.0;
    std::int64_t total_counts = 0;
    bool skipped = false;  // < 100 counts in the window
};

// Sliding-window reconstruction; F_max_ent is the fidelity to the
// time-evolving state at the window center.
std::vector<WindowedFidelityRow> windowed_fidelity_series(
    const std::array<SettingTags, kSettings>& tags, double width_ps, double step_ps,
    double center_min_ps, double center_max_ps, double fss_uev);

// Dominant oscillation period of a fidelity series via the discrete Fourier
// peak (mean-subtracted, quadratically interpolated). Returns 0 if no peak.
double series_oscillation_period(const std::vector<WindowedFidelityRow>& rows);

}  // namespace qrelay::tomo
