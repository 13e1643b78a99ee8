#pragma once

#include <optional>
#include <random>
#include <utility>
#include <vector>

#include "qrelay/qstate.hpp"
#include "qrelay/timetag.hpp"

namespace qrelay::optics {

struct configuration_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct AMZIParams {
    double delay_ps = 5000.0;
    double phase_rad = 0.0;
    double insertion_loss = 0.0;
    enum class Mode { pol_to_timebin, timebin_to_pol } mode = Mode::pol_to_timebin;

    void validate() const;
};

struct DetectorParams {
    // 100/sqrt2 per detector, so a two-detector delay resolves at ~100 ps
    double jitter_sigma_ps = 70.71067811865475;
    double efficiency = 1.0;
    double dark_rate_hz = 0.0;
    double dead_time_ps = 0.0;

    void validate() const;
};

struct BSMConfig {
    double visibility = 1.0;
    double coincidence_window_ps = 500.0;

    void validate() const;
};

// A photon in the optical chain: either polarisation encoded, or a coherent
// early/late time-bin superposition with the early slot at t_ps.
struct Photon {
    double t_ps = 0.0;
    qstate::PolState pol;
    std::complex<double> amp_early{0.0, 0.0};
    std::complex<double> amp_late{0.0, 0.0};
    double bin_delay_ps = 0.0;
    bool timebin = false;
    bool non_overlapped = false;  // satellite transcoder output
};

// Encoder AMZI (PBS-routed, deterministic): V amplitude -> early slot at t,
// H amplitude -> late slot at t + delay with relative phase amzi.phase.
// Empty result models insertion loss.
std::optional<Photon> transcode_pol_to_timebin(const Photon& photon, const AMZIParams& amzi,
                                               std::mt19937_64& gen);

// Decoder AMZI: early -> V via the long arm, late -> H via the short arm,
// recombining at t_early + delay. Non-recombining arm combinations emit into
// satellite slots at t_early and t_early + 2*delay, flagged non_overlapped;
// the unmonitored output port and insertion loss drop the photon.
std::optional<Photon> transcode_timebin_to_pol(const Photon& photon, const AMZIParams& amzi,
                                               std::mt19937_64& gen);

// Samples a detection slot for a time-bin photon: (arrival time, 0 = early,
// 1 = late).
std::pair<double, int> sample_timebin_arrival(const Photon& photon, std::mt19937_64& gen);

struct Herald {
    double t_h_ps = 0.0;
    double t_v_ps = 0.0;
    bool genuine = false;
};

// Result of one input-photon / X-photon meeting at the BSM beamsplitter.
// `herald` is set when a same-port H*V pattern occurred. `bob_state` is the
// (2x2) state carried onward by the XX photon. `classical_clicks` are
// non-interfering single-photon clicks (time, channel 0 = H, 1 = V).
struct BsmOutcome {
    std::optional<Herald> herald;
    Eigen::Matrix2cd bob_state;
    std::vector<std::pair<double, int>> classical_clicks;
};

// Hong-Ou-Mandel Bell-state measurement. With probability cfg.visibility the
// photons interfere and the joint (input (x) X) state is projected onto
// Psi+; only that outcome heralds, the other Bell outcomes are discarded.
// Otherwise the photons are distinguishable and produce classical clicks,
// leaving Bob's photon in the unconditioned reduced XX state.
BsmOutcome hom_bsm(const qstate::PolState& input, double t_input_ps, double t_x_ps,
                   const qstate::DensityMatrix& pair_rho, const BSMConfig& cfg,
                   std::mt19937_64& gen);

// Born-rule analyzer outcomes. outcome 0 = first basis letter.
int analyze_polarization(const qstate::PolState& pol, qstate::Basis basis, std::mt19937_64& gen);
int analyze_state(const Eigen::Matrix2cd& rho, qstate::Basis basis, std::mt19937_64& gen);
// Joint sampling for pair-linked photons; XX-X correlations are exact.
std::pair<int, int> analyze_pair(const qstate::DensityMatrix& rho, qstate::Basis basis_xx,
                                 qstate::Basis basis_x, std::mt19937_64& gen);

struct Click {
    double t_ps = 0.0;
    std::uint8_t flags = 0;
};

// Physical detector: efficiency thinning, Gaussian timestamp jitter rounded
// to 1 ps, dark counts over [t0, t1), and per-channel dead time.
std::vector<tt::TimeTag> detect(std::vector<Click> truth_clicks, const DetectorParams& det,
                                std::uint8_t channel, double t0_ps, double t1_ps,
                                std::uint64_t seed);

}  // namespace qrelay::optics
