#pragma once

#include <cstdint>
#include <vector>

#include "qrelay/qstate.hpp"

namespace qrelay::source {

// Excitation clock. `cw` switches the pulsed Gaussian excitation to a
// rate-matched uniform-in-period surrogate for CW driving.
struct ClockConfig {
    double repetition_rate_ghz = 1.07;
    double pulse_fwhm_ps = 160.0;
    std::uint64_t n_cycles = 0;
    double epoch_ps = 0.0;
    bool cw = false;

    double period_ps() const { return 1000.0 / repetition_rate_ghz; }
    double pulse_sigma_ps() const { return pulse_fwhm_ps / 2.3548200450309493; }
    void validate() const;
};

struct QDParams {
    double lifetime_xx_ps = 256.0;
    double lifetime_x_ps = 1560.0;
    double fss_uev = 6.2;
    double p_excite = 0.9;
    double p_reexcite = 0.0;
    double shelving_prob = 0.0;
    double shelving_lifetime_ps = 5000.0;
    double background_rate_hz = 0.0;  // uncorrelated counts/s per emission line
    double hv_coherence_floor = 0.0;  // classical HH/VV correlation weight
    // A pulse cannot excite the dot while a previous cascade is still in
    // flight. Tracked per RNG block; the dot is taken as ground at block
    // boundaries (error <= one event per 1024 cycles).
    bool occupancy_gating = true;

    void validate() const;
};

enum class EventKind : std::uint8_t {
    cascade,
    background_xx,
    background_x,
    reexcited_cascade,
};

// One emission event. Truth fields (kind, truth_tau) are carried for
// calibration checks only and are stripped before any analysis.
struct EmissionEvent {
    std::uint64_t cycle_index = 0;
    double t_xx_ps = 0.0;  // absolute XX emission time (background_x: unused)
    double t_x_ps = 0.0;   // absolute X emission time (background_xx: unused)
    EventKind kind = EventKind::cascade;
    double truth_tau_ps = 0.0;  // t_x - t_xx for cascades

    bool has_xx() const { return kind != EventKind::background_x; }
    bool has_x() const { return kind != EventKind::background_xx; }
};

struct LaserPhoton {
    std::uint64_t cycle_index = 0;
    double t_ps = 0.0;
    qstate::PolState pol;
    int multiplicity = 1;  // photon count of the parent pulse
};

// Generates the events of one RNG block (rng::kCyclesPerBlock cycles).
// Deterministic in (params, seed, block); output sorted by emission time.
void generate_cascade_block(const QDParams& qd, const ClockConfig& clock, std::uint64_t seed,
                            std::uint64_t block, std::vector<EmissionEvent>& out);

void generate_laser_block(const qstate::PolState& state, double mean_photon,
                          const ClockConfig& clock, std::uint64_t seed, std::uint64_t block,
                          std::vector<LaserPhoton>& out);

// Whole-run convenience wrappers; block results are merged in cycle order,
// so the stream is bit-identical for any thread count.
std::vector<EmissionEvent> simulate_cascades(const QDParams& qd, const ClockConfig& clock,
                                             std::uint64_t seed, int threads = 1);

std::vector<LaserPhoton> simulate_laser(const qstate::PolState& state, double mean_photon,
                                        const ClockConfig& clock, std::uint64_t seed,
                                        int threads = 1);

// Two-photon density matrix carried by a cascade pair:
//   purity * |Psi(tau)><Psi(tau)| + w_cl * (|HH><HH|+|VV><VV|)/2
//     + (1 - purity - w_cl) * I/4
// with w_cl = qd.hv_coherence_floor.
qstate::DensityMatrix sample_pair_density(const EmissionEvent& event, const QDParams& qd,
                                          double purity);

std::uint64_t n_blocks(const ClockConfig& clock);

}  // namespace qrelay::source
