#include "qrelay/optics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qrelay/rng.hpp"

namespace qrelay::optics {

using qstate::Basis;
using qstate::Complex;
using qstate::PolState;

void AMZIParams::validate() const {
    if (delay_ps <= 0.0) throw configuration_error("amzi delay must be > 0");
    if (insertion_loss < 0.0 || insertion_loss >= 1.0)
        throw configuration_error("amzi insertion_loss must be in [0,1)");
}

void DetectorParams::validate() const {
    if (efficiency < 0.0 || efficiency > 1.0)
        throw configuration_error("detector efficiency must be in [0,1]");
    if (dead_time_ps < 0.0) throw configuration_error("detector dead_time must be >= 0");
    if (jitter_sigma_ps < 0.0) throw configuration_error("detector jitter must be >= 0");
    if (dark_rate_hz < 0.0) throw configuration_error("detector dark_rate must be >= 0");
}

void BSMConfig::validate() const {
    if (visibility < 0.0 || visibility > 1.0)
        throw configuration_error("bsm visibility must be in [0,1]");
    if (coincidence_window_ps <= 0.0)
        throw configuration_error("bsm coincidence_window must be > 0");
}

std::optional<Photon> transcode_pol_to_timebin(const Photon& photon, const AMZIParams& amzi,
                                               std::mt19937_64& gen) {
    if (amzi.mode != AMZIParams::Mode::pol_to_timebin)
        throw configuration_error("transcoder is not in pol_to_timebin mode");
    if (photon.timebin) throw configuration_error("photon is already time-bin encoded");
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    if (amzi.insertion_loss > 0.0 && uni(gen) < amzi.insertion_loss) return std::nullopt;
    Photon out = photon;
    out.timebin = true;
    out.amp_early = photon.pol.v;
    out.amp_late = photon.pol.h * std::exp(Complex{0.0, amzi.phase_rad});
    out.bin_delay_ps = amzi.delay_ps;
    return out;
}

std::optional<Photon> transcode_timebin_to_pol(const Photon& photon, const AMZIParams& amzi,
                                               std::mt19937_64& gen) {
    if (amzi.mode != AMZIParams::Mode::timebin_to_pol)
        throw configuration_error("transcoder is not in timebin_to_pol mode");
    if (!photon.timebin) throw configuration_error("photon is not time-bin encoded");
    if (std::abs(photon.bin_delay_ps - amzi.delay_ps) > 1.0)
        throw configuration_error("encoder/decoder AMZI delay mismatch > 1 ps");
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    if (amzi.insertion_loss > 0.0 && uni(gen) < amzi.insertion_loss) return std::nullopt;

    // Four arm combinations at 1/4 amplitude-squared each; half of the total
    // exits the unmonitored port.
    const double p_early_sat = 0.25 * std::norm(photon.amp_early);
    const double p_late_sat = 0.25 * std::norm(photon.amp_late);
    const double u = uni(gen);
    Photon out;
    out.timebin = false;
    if (u < 0.25) {
        // early+long and late+short recombine; the long arm carries the
        // decoder phase on the V component.
        out.t_ps = photon.t_ps + amzi.delay_ps;
        out.pol = PolState{photon.amp_late,
                           photon.amp_early * std::exp(Complex{0.0, amzi.phase_rad})};
        out.non_overlapped = photon.non_overlapped;
        return out;
    }
    if (u < 0.25 + p_early_sat) {
        out.t_ps = photon.t_ps;  // early + short arm
        out.pol = PolState::vertical();
        out.non_overlapped = true;
        return out;
    }
    if (u < 0.25 + p_early_sat + p_late_sat) {
        out.t_ps = photon.t_ps + 2.0 * amzi.delay_ps;  // late + long arm
        out.pol = PolState::horizontal();
        out.non_overlapped = true;
        return out;
    }
    return std::nullopt;
}

std::pair<double, int> sample_timebin_arrival(const Photon& photon, std::mt19937_64& gen) {
    if (!photon.timebin) return {photon.t_ps, 0};
    const double p_early = std::norm(photon.amp_early);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    if (uni(gen) < p_early) return {photon.t_ps, 0};
    return {photon.t_ps + photon.bin_delay_ps, 1};
}

BsmOutcome hom_bsm(const PolState& input, double t_input_ps, double t_x_ps,
                   const qstate::DensityMatrix& pair_rho, const BSMConfig& cfg,
                   std::mt19937_64& gen) {
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    BsmOutcome out;
    out.bob_state = pair_rho.reduced_xx();

    if (uni(gen) < cfg.visibility) {
        // Indistinguishable: project (input (x) X) onto Psi+. The conditional
        // Bob matrix is B[xx,xx'] = sum_{x,x'} K(x) K*(x') rho[(xx,x),(xx',x')]
        // with K(H) = a_v/sqrt2, K(V) = a_h/sqrt2.
        const Complex k[2] = {input.v / std::sqrt(2.0), input.h / std::sqrt(2.0)};
        Eigen::Matrix2cd b = Eigen::Matrix2cd::Zero();
        const auto& r = pair_rho.matrix();
        for (int xx = 0; xx < 2; ++xx)
            for (int xxp = 0; xxp < 2; ++xxp)
                for (int x = 0; x < 2; ++x)
                    for (int xp = 0; xp < 2; ++xp)
                        b(xx, xxp) += k[x] * std::conj(k[xp]) * r(2 * xx + x, 2 * xxp + xp);
        const double p_herald = b.trace().real();
        if (uni(gen) < p_herald) {
            Herald h;
            h.genuine = true;
            if (uni(gen) < 0.5) {
                h.t_h_ps = t_input_ps;
                h.t_v_ps = t_x_ps;
            } else {
                h.t_h_ps = t_x_ps;
                h.t_v_ps = t_input_ps;
            }
            out.herald = h;
            out.bob_state = b / p_herald;
        }
        // Other Bell outcomes do not produce a same-port H*V pattern and are
        // discarded.
        return out;
    }

    // Distinguishable photons: independent classical routing, H/V cross
    // clicks at the classical rate; Bob keeps the unconditioned reduced state.
    const double p_in_h = std::norm(input.h);
    const Eigen::Matrix2cd rx = pair_rho.reduced_x();
    const double p_x_h = rx(0, 0).real() / std::max(1e-300, rx.trace().real());
    if (uni(gen) < 0.5)
        out.classical_clicks.emplace_back(t_input_ps, uni(gen) < p_in_h ? 0 : 1);
    if (uni(gen) < 0.5)
        out.classical_clicks.emplace_back(t_x_ps, uni(gen) < p_x_h ? 0 : 1);
    return out;
}

int analyze_polarization(const PolState& pol, Basis basis, std::mt19937_64& gen) {
    const double p0 = pol.overlap(qstate::basis_state(basis, 0));
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    return uni(gen) < p0 ? 0 : 1;
}

int analyze_state(const Eigen::Matrix2cd& rho, Basis basis, std::mt19937_64& gen) {
    const PolState s0 = qstate::basis_state(basis, 0);
    const Eigen::Vector2cd v = s0.vec();
    const double p0 = (v.adjoint() * rho * v)(0).real();
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    return uni(gen) < p0 ? 0 : 1;
}

std::pair<int, int> analyze_pair(const qstate::DensityMatrix& rho, Basis basis_xx,
                                 Basis basis_x, std::mt19937_64& gen) {
    double p[4];
    double acc = 0.0;
    for (int oxx = 0; oxx < 2; ++oxx)
        for (int ox = 0; ox < 2; ++ox)
            acc += p[2 * oxx + ox] = qstate::joint_outcome_probability(rho, basis_xx, basis_x, oxx, ox);
    std::uniform_real_distribution<double> uni(0.0, acc);
    double u = uni(gen);
    for (int i = 0; i < 4; ++i) {
        if (u < p[i] || i == 3) return {i / 2, i % 2};
        u -= p[i];
    }
    return {1, 1};
}

std::vector<tt::TimeTag> detect(std::vector<Click> truth_clicks, const DetectorParams& det,
                                std::uint8_t channel, double t0_ps, double t1_ps,
                                std::uint64_t seed) {
    det.validate();
    auto gen = rng::make_engine(seed, 0x1000ull + channel, 0);
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::normal_distribution<double> jitter(0.0, det.jitter_sigma_ps);

    std::vector<tt::TimeTag> tags;
    tags.reserve(truth_clicks.size());
    for (const Click& c : truth_clicks) {
        if (det.efficiency < 1.0 && uni(gen) >= det.efficiency) continue;
        double t = c.t_ps;
        if (det.jitter_sigma_ps > 0.0) t += jitter(gen);
        tags.push_back({static_cast<std::int64_t>(std::llround(t)), channel, c.flags});
    }

    if (det.dark_rate_hz > 0.0 && t1_ps > t0_ps) {
        const double mean = det.dark_rate_hz * (t1_ps - t0_ps) * 1e-12;
        std::poisson_distribution<long> pois(mean);
        const long n = pois(gen);
        std::uniform_real_distribution<double> ut(t0_ps, t1_ps);
        for (long i = 0; i < n; ++i)
            tags.push_back({static_cast<std::int64_t>(std::llround(ut(gen))), channel, 0});
    }

    tt::sort_tags(tags);

    if (det.dead_time_ps > 0.0 && !tags.empty()) {
        std::vector<tt::TimeTag> alive;
        alive.reserve(tags.size());
        std::int64_t last = std::numeric_limits<std::int64_t>::min();
        const auto dead = static_cast<std::int64_t>(std::llround(det.dead_time_ps));
        for (const auto& t : tags) {
            if (last != std::numeric_limits<std::int64_t>::min() && t.t_ps - last < dead) continue;
            alive.push_back(t);
            last = t.t_ps;
        }
        return alive;
    }
    return tags;
}

}  // namespace qrelay::optics
