#pragma once

#include <numbers>

// Canonical internal units: time in picoseconds, energy in micro-eV.
// The hbar conversion lives here and nowhere else.
namespace qrelay::constants {

inline constexpr double hbar_ev_s = 6.582119569e-16;
inline constexpr double hbar_uev_ps = hbar_ev_s * 1e6 * 1e12;  // 658.2119569 ueV*ps
inline constexpr double h_uev_ps = 2.0 * std::numbers::pi * hbar_uev_ps;

// Phase accrued by the fine-structure splitting over a dwell time:
// phi = dE * tau / hbar.
inline double fss_phase(double fss_uev, double tau_ps) {
    return fss_uev * tau_ps / hbar_uev_ps;
}

// Oscillation period h/dE of the entangled-state phase, in ps.
inline double fss_period_ps(double fss_uev) {
    return h_uev_ps / fss_uev;
}

}  // namespace qrelay::constants
