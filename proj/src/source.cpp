#include "qrelay/source.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>

#include "qrelay/rng.hpp"

namespace qrelay::source {

void ClockConfig::validate() const {
    if (repetition_rate_ghz <= 0.0) throw qstate::validation_error("repetition_rate must be > 0");
    if (pulse_fwhm_ps < 0.0) throw qstate::validation_error("pulse_fwhm must be >= 0");
    if (!cw && pulse_fwhm_ps >= period_ps())
        throw qstate::validation_error("pulse_fwhm must be smaller than the clock period");
}

void QDParams::validate() const {
    if (lifetime_xx_ps <= 0.0 || lifetime_x_ps <= 0.0 || shelving_lifetime_ps <= 0.0)
        throw qstate::validation_error("lifetimes must be > 0");
    for (double p : {p_excite, p_reexcite, shelving_prob, hv_coherence_floor})
        if (p < 0.0 || p > 1.0) throw qstate::validation_error("probabilities must be in [0,1]");
    if (fss_uev < 0.0) throw qstate::validation_error("fss must be >= 0");
    if (background_rate_hz < 0.0) throw qstate::validation_error("background_rate must be >= 0");
}

std::uint64_t n_blocks(const ClockConfig& clock) {
    return (clock.n_cycles + rng::kCyclesPerBlock - 1) / rng::kCyclesPerBlock;
}

namespace {

// stream tags for substream derivation
constexpr std::uint64_t kTagCascade = 0x10;
constexpr std::uint64_t kTagBackground = 0x11;
constexpr std::uint64_t kTagLaser = 0x20;

double sample_exp(std::mt19937_64& gen, double mean) {
    return std::exponential_distribution<double>{1.0 / mean}(gen);
}

double sample_gauss(std::mt19937_64& gen, double mean, double sigma) {
    return std::normal_distribution<double>{mean, sigma}(gen);
}

}  // namespace

void generate_cascade_block(const QDParams& qd, const ClockConfig& clock, std::uint64_t seed,
                            std::uint64_t block, std::vector<EmissionEvent>& out) {
    out.clear();
    const double period = clock.period_ps();
    const double sigma = clock.pulse_sigma_ps();
    const std::uint64_t c0 = block * rng::kCyclesPerBlock;
    const std::uint64_t c1 = std::min(c0 + rng::kCyclesPerBlock, clock.n_cycles);
    if (c0 >= c1) return;

    auto gen = rng::make_engine(seed, kTagCascade, block);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    double t_free = -std::numeric_limits<double>::infinity();

    for (std::uint64_t c = c0; c < c1; ++c) {
        const double cycle_start = clock.epoch_ps + static_cast<double>(c) * period;
        if (uni(gen) >= qd.p_excite) continue;

        double t_exc;
        if (clock.cw) {
            t_exc = cycle_start + uni(gen) * period;
        } else {
            t_exc = sample_gauss(gen, cycle_start, sigma);
        }
        if (qd.occupancy_gating && t_exc < t_free) continue;

        double shelf = 0.0;
        if (qd.shelving_prob > 0.0 && uni(gen) < qd.shelving_prob)
            shelf = sample_exp(gen, qd.shelving_lifetime_ps);

        EmissionEvent ev;
        ev.cycle_index = c;
        ev.kind = EventKind::cascade;
        ev.t_xx_ps = t_exc + shelf + sample_exp(gen, qd.lifetime_xx_ps);
        ev.truth_tau_ps = sample_exp(gen, qd.lifetime_x_ps);
        ev.t_x_ps = ev.t_xx_ps + ev.truth_tau_ps;
        out.push_back(ev);
        t_free = ev.t_x_ps;

        // At most one re-excitation per pulse, seeded only when the first XX
        // decay still falls inside the pulse envelope.
        if (qd.p_reexcite > 0.0 && !clock.cw &&
            std::abs(ev.t_xx_ps - cycle_start) <= clock.pulse_fwhm_ps &&
            uni(gen) < qd.p_reexcite) {
            EmissionEvent re;
            re.cycle_index = c;
            re.kind = EventKind::reexcited_cascade;
            const double t_exc2 = ev.t_xx_ps + sample_exp(gen, 0.5 * clock.pulse_fwhm_ps);
            re.t_xx_ps = t_exc2 + sample_exp(gen, qd.lifetime_xx_ps);
            re.truth_tau_ps = sample_exp(gen, qd.lifetime_x_ps);
            re.t_x_ps = re.t_xx_ps + re.truth_tau_ps;
            out.push_back(re);
            t_free = std::max(t_free, re.t_x_ps);
        }
    }

    // Uncorrelated background, one homogeneous Poisson process per line over
    // the block's time span.
    if (qd.background_rate_hz > 0.0) {
        auto bgen = rng::make_engine(seed, kTagBackground, block);
        const double span_ps = static_cast<double>(c1 - c0) * period;
        const double t0 = clock.epoch_ps + static_cast<double>(c0) * period;
        const double mean = qd.background_rate_hz * span_ps * 1e-12;
        std::poisson_distribution<int> pois(mean);
        std::uniform_real_distribution<double> ut(0.0, span_ps);
        for (EventKind kind : {EventKind::background_xx, EventKind::background_x}) {
            const int n = pois(bgen);
            for (int i = 0; i < n; ++i) {
                EmissionEvent ev;
                ev.kind = kind;
                const double t = t0 + ut(bgen);
                ev.cycle_index = c0 + static_cast<std::uint64_t>((t - t0) / period);
                if (kind == EventKind::background_xx)
                    ev.t_xx_ps = t;
                else
                    ev.t_x_ps = t;
                out.push_back(ev);
            }
        }
    }

    std::sort(out.begin(), out.end(), [](const EmissionEvent& a, const EmissionEvent& b) {
        const double ta = a.has_xx() ? a.t_xx_ps : a.t_x_ps;
        const double tb = b.has_xx() ? b.t_xx_ps : b.t_x_ps;
        return ta < tb;
    });
}

void generate_laser_block(const qstate::PolState& state, double mean_photon,
                          const ClockConfig& clock, std::uint64_t seed, std::uint64_t block,
                          std::vector<LaserPhoton>& out) {
    out.clear();
    const double period = clock.period_ps();
    const double sigma = clock.pulse_sigma_ps();
    const std::uint64_t c0 = block * rng::kCyclesPerBlock;
    const std::uint64_t c1 = std::min(c0 + rng::kCyclesPerBlock, clock.n_cycles);
    if (c0 >= c1) return;

    auto gen = rng::make_engine(seed, kTagLaser, block);
    std::poisson_distribution<int> pois(mean_photon);
    for (std::uint64_t c = c0; c < c1; ++c) {
        const double cycle_start = clock.epoch_ps + static_cast<double>(c) * period;
        const int n = pois(gen);
        for (int i = 0; i < n; ++i) {
            LaserPhoton ph;
            ph.cycle_index = c;
            ph.t_ps = sample_gauss(gen, cycle_start, sigma);
            ph.pol = state;
            ph.multiplicity = n;
            out.push_back(ph);
        }
    }
    std::sort(out.begin(), out.end(),
              [](const LaserPhoton& a, const LaserPhoton& b) { return a.t_ps < b.t_ps; });
}

namespace {

template <typename T, typename Fn>
std::vector<T> run_blocks(const ClockConfig& clock, int threads, Fn&& per_block) {
    const std::uint64_t nb = n_blocks(clock);
    std::vector<std::vector<T>> parts(nb);
    rng::parallel_blocks(nb, threads, [&](std::uint64_t b) { per_block(b, parts[b]); });
    std::size_t total = 0;
    for (const auto& p : parts) total += p.size();
    std::vector<T> all;
    all.reserve(total);
    for (auto& p : parts) all.insert(all.end(), p.begin(), p.end());
    return all;
}

}  // namespace

std::vector<EmissionEvent> simulate_cascades(const QDParams& qd, const ClockConfig& clock,
                                             std::uint64_t seed, int threads) {
    qd.validate();
    clock.validate();
    return run_blocks<EmissionEvent>(clock, threads, [&](std::uint64_t b, auto& out) {
        generate_cascade_block(qd, clock, seed, b, out);
    });
}

std::vector<LaserPhoton> simulate_laser(const qstate::PolState& state, double mean_photon,
                                        const ClockConfig& clock, std::uint64_t seed,
                                        int threads) {
    if (mean_photon <= 0.0) throw qstate::validation_error("mean_photon must be > 0");
    clock.validate();
    return run_blocks<LaserPhoton>(clock, threads, [&](std::uint64_t b, auto& out) {
        generate_laser_block(state, mean_photon, clock, seed, b, out);
    });
}

qstate::DensityMatrix sample_pair_density(const EmissionEvent& event, const QDParams& qd,
                                          double purity) {
    if (event.kind != EventKind::cascade && event.kind != EventKind::reexcited_cascade)
        throw qstate::validation_error("sample_pair_density: event is not a cascade");
    const double w_cl = qd.hv_coherence_floor;
    if (purity < 0.0 || purity > 1.0 || purity + w_cl > 1.0 + 1e-12)
        throw qstate::validation_error("sample_pair_density: purity + w_cl must be in [0,1]");
    const auto psi = qstate::pair_state_at_delay(qd.fss_uev, event.truth_tau_ps);
    Eigen::Matrix4cd m = purity * (psi.amps * psi.amps.adjoint());
    m += (1.0 - purity - w_cl) * 0.25 * Eigen::Matrix4cd::Identity();
    m(0, 0) += 0.5 * w_cl;
    m(3, 3) += 0.5 * w_cl;
    return qstate::DensityMatrix{m};
}

}  // namespace qrelay::source
