#include "qrelay/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <numeric>

#include "qrelay/optics.hpp"
#include "qrelay/rng.hpp"
#include "qrelay/source.hpp"

namespace qrelay::pipeline {

namespace {

using optics::Click;
using qstate::Basis;
using qstate::PolState;

constexpr std::uint64_t kTagRouting = 0x30;
constexpr std::uint64_t kTagAnalyzers = 0x40;
constexpr std::uint64_t kTagRelay = 0x50;
constexpr std::uint64_t kTagSetting = 0x200;

double span_ps(const source::ClockConfig& clock) {
    return static_cast<double>(clock.n_cycles) * clock.period_ps();
}

// Per-block click buffers merged in block order, so the truth streams are
// identical for any thread count.
template <std::size_t N>
struct BlockClicks {
    std::array<std::vector<Click>, N> ch;
};

template <std::size_t N, typename Fn>
std::array<std::vector<Click>, N> run_click_blocks(const source::ClockConfig& clock, int threads,
                                                   Fn&& per_block) {
    const std::uint64_t nb = source::n_blocks(clock);
    std::vector<BlockClicks<N>> parts(nb);
    rng::parallel_blocks(nb, threads, [&](std::uint64_t b) { per_block(b, parts[b]); });
    std::array<std::vector<Click>, N> merged;
    for (std::size_t i = 0; i < N; ++i) {
        std::size_t total = 0;
        for (const auto& p : parts) total += p.ch[i].size();
        merged[i].reserve(total);
        for (const auto& p : parts)
            merged[i].insert(merged[i].end(), p.ch[i].begin(), p.ch[i].end());
    }
    return merged;
}

std::vector<std::int64_t> sorted_times(std::vector<tt::TimeTag> tags) {
    tt::sort_tags(tags);
    return tt::times_of(tags);
}

struct BobReadout {
    Basis basis = Basis::HV;
    int expected = 0;  // analyzer outcome index matching ideal teleportation
};

BobReadout bob_readout(const PolState& input) {
    const PolState expect = qstate::apply_teleport_correction(input);
    for (Basis b : {Basis::HV, Basis::DA, Basis::RL})
        for (int o = 0; o < 2; ++o)
            if (expect.overlap(qstate::basis_state(b, o)) > 0.999) return {b, o};
    throw optics::configuration_error("laser input does not map onto an analyzer eigenstate");
}

}  // namespace

std::vector<std::int64_t> TagRun::channel_times(std::uint8_t ch) const {
    std::vector<std::int64_t> out;
    for (const auto& t : tags)
        if (t.channel == ch) out.push_back(t.t_ps);
    return out;
}

std::vector<std::int64_t> TagRun::channel_times_overlapped(std::uint8_t ch) const {
    std::vector<std::int64_t> out;
    for (const auto& t : tags)
        if (t.channel == ch && !(t.flags & tt::kFlagNonOverlapped)) out.push_back(t.t_ps);
    return out;
}

TagRun simulate_emission(const cfg::ExperimentConfig& c) {
    c.clock.validate();
    c.qd.validate();
    auto clicks = run_click_blocks<3>(c.clock, c.threads, [&](std::uint64_t b, BlockClicks<3>& out) {
        std::vector<source::EmissionEvent> events;
        source::generate_cascade_block(c.qd, c.clock, c.seed, b, events);
        auto gen = rng::make_engine(c.seed, kTagRouting, b);
        std::uniform_real_distribution<double> uni(0.0, 1.0);
        for (const auto& ev : events) {
            if (ev.has_xx()) out.ch[0].push_back({ev.t_xx_ps, 0});
            // X line split on a balanced beamsplitter for the HBT arms
            if (ev.has_x()) out.ch[uni(gen) < 0.5 ? 1 : 2].push_back({ev.t_x_ps, 0});
        }
    });

    TagRun run;
    run.t0_ps = c.clock.epoch_ps;
    run.t1_ps = c.clock.epoch_ps + span_ps(c.clock);
    auto t2 = optics::detect(std::move(clicks[0]), c.detectors[2], tt::kChBobP, run.t0_ps,
                             run.t1_ps, c.seed);
    auto t4 = optics::detect(std::move(clicks[1]), c.detectors[4], tt::kChAuxA, run.t0_ps,
                             run.t1_ps, c.seed);
    auto t5 = optics::detect(std::move(clicks[2]), c.detectors[5], tt::kChAuxB, run.t0_ps,
                             run.t1_ps, c.seed);
    run.tags.reserve(t2.size() + t4.size() + t5.size());
    for (auto* v : {&t2, &t4, &t5}) run.tags.insert(run.tags.end(), v->begin(), v->end());
    tt::sort_tags(run.tags);
    return run;
}

std::array<tomo::SettingTags, tomo::kSettings> simulate_entanglement(
    const cfg::ExperimentConfig& c) {
    c.clock.validate();
    c.qd.validate();
    std::array<tomo::SettingTags, tomo::kSettings> out;
    const double t0 = c.clock.epoch_ps;
    const double t1 = c.clock.epoch_ps + span_ps(c.clock);

    for (int s = 0; s < tomo::kSettings; ++s) {
        const std::uint64_t seed_s =
            rng::substream_seed(c.seed, kTagSetting + static_cast<std::uint64_t>(s), 0);
        const Basis bxx = tomo::setting_basis_xx(s);
        const Basis bx = tomo::setting_basis_x(s);

        auto clicks =
            run_click_blocks<4>(c.clock, c.threads, [&](std::uint64_t b, BlockClicks<4>& out_b) {
                std::vector<source::EmissionEvent> events;
                source::generate_cascade_block(c.qd, c.clock, seed_s, b, events);
                auto gen = rng::make_engine(seed_s, kTagAnalyzers, b);
                std::uniform_real_distribution<double> uni(0.0, 1.0);
                for (const auto& ev : events) {
                    switch (ev.kind) {
                        case source::EventKind::cascade:
                        case source::EventKind::reexcited_cascade: {
                            const auto rho = source::sample_pair_density(ev, c.qd, c.purity);
                            auto [oxx, ox] = optics::analyze_pair(rho, bxx, bx, gen);
                            out_b.ch[oxx].push_back({ev.t_xx_ps, 0});
                            out_b.ch[2 + ox].push_back({ev.t_x_ps, 0});
                            break;
                        }
                        case source::EventKind::background_xx:
                            out_b.ch[uni(gen) < 0.5 ? 0 : 1].push_back({ev.t_xx_ps, 0});
                            break;
                        case source::EventKind::background_x:
                            out_b.ch[uni(gen) < 0.5 ? 2 : 3].push_back({ev.t_x_ps, 0});
                            break;
                    }
                }
            });

        out[static_cast<std::size_t>(s)].xx[0] = sorted_times(
            optics::detect(std::move(clicks[0]), c.detectors[2], 0, t0, t1, seed_s));
        out[static_cast<std::size_t>(s)].xx[1] = sorted_times(
            optics::detect(std::move(clicks[1]), c.detectors[3], 1, t0, t1, seed_s));
        out[static_cast<std::size_t>(s)].x[0] = sorted_times(
            optics::detect(std::move(clicks[2]), c.detectors[4], 2, t0, t1, seed_s));
        out[static_cast<std::size_t>(s)].x[1] = sorted_times(
            optics::detect(std::move(clicks[3]), c.detectors[5], 3, t0, t1, seed_s));
    }
    return out;
}

TagRun simulate_teleport(const cfg::ExperimentConfig& c) {
    c.clock.validate();
    c.qd.validate();
    c.bsm.validate();
    const PolState input = c.laser.input_pol();
    const bool timebin_readout = c.preset == cfg::Preset::teleport_timebin;
    const BobReadout readout = timebin_readout ? BobReadout{Basis::HV, 0} : bob_readout(input);

    // The laser clock is advanced so the Charlie-decoded (recombined) photon
    // lands alignment_offset after the cycle start, on the X arrival peak.
    source::ClockConfig lc = c.clock;
    lc.pulse_fwhm_ps = c.laser.pulse_fwhm_ps;
    lc.epoch_ps = c.clock.epoch_ps + c.laser.alignment_offset_ps - c.amzi_charlie.delay_ps;

    auto clicks = run_click_blocks<4>(c.clock, c.threads, [&](std::uint64_t b, BlockClicks<4>& out) {
        std::vector<source::EmissionEvent> events;
        source::generate_cascade_block(c.qd, c.clock, c.seed, b, events);
        std::vector<source::LaserPhoton> photons;
        source::generate_laser_block(input, c.laser.mean_photon, lc, c.seed, b, photons);
        std::stable_sort(events.begin(), events.end(),
                         [](const auto& a, const auto& bb) { return a.cycle_index < bb.cycle_index; });
        std::stable_sort(photons.begin(), photons.end(),
                         [](const auto& a, const auto& bb) { return a.cycle_index < bb.cycle_index; });

        auto gen = rng::make_engine(c.seed, kTagRelay, b);
        std::uniform_real_distribution<double> uni(0.0, 1.0);

        auto stray_click = [&](double t, const PolState& pol, bool satellite) {
            // unpaired photon at the BSM splitter: half exits the unmonitored
            // port, the monitored half resolves H/V by the Born rule
            if (uni(gen) >= 0.5) return;
            const int o = optics::analyze_polarization(pol, Basis::HV, gen);
            out.ch[o].push_back({t, satellite ? tt::kFlagNonOverlapped : std::uint8_t{0}});
        };
        auto bob_click = [&](const Eigen::Matrix2cd& bob_state, double t_xx) {
            if (timebin_readout) {
                const int o = optics::analyze_state(bob_state, Basis::HV, gen);
                if (c.amzi_bob.insertion_loss > 0.0 && uni(gen) < c.amzi_bob.insertion_loss)
                    return;
                // output encoder: V fills the early slot, H the late slot
                const double t = o == 1 ? t_xx : t_xx + c.amzi_bob.delay_ps;
                out.ch[2].push_back({t, 0});
            } else {
                const int o = optics::analyze_state(bob_state, readout.basis, gen);
                out.ch[o == readout.expected ? 2 : 3].push_back({t_xx, 0});
            }
        };

        std::size_t ie = 0;
        std::size_t ip = 0;
        while (ie < events.size() || ip < photons.size()) {
            std::uint64_t cycle = std::numeric_limits<std::uint64_t>::max();
            if (ie < events.size()) cycle = events[ie].cycle_index;
            if (ip < photons.size()) cycle = std::min(cycle, photons[ip].cycle_index);
            const std::size_t e0 = ie;
            while (ie < events.size() && events[ie].cycle_index == cycle) ++ie;
            const std::size_t p0 = ip;
            while (ip < photons.size() && photons[ip].cycle_index == cycle) ++ip;

            // Alice encoder followed by Charlie decoder for every laser photon
            std::vector<optics::Photon> decoded;
            for (std::size_t i = p0; i < ip; ++i) {
                optics::Photon ph;
                ph.t_ps = photons[i].t_ps;
                ph.pol = photons[i].pol;
                auto enc = optics::transcode_pol_to_timebin(ph, c.amzi_alice, gen);
                if (!enc) continue;
                auto dec = optics::transcode_timebin_to_pol(*enc, c.amzi_charlie, gen);
                if (dec) decoded.push_back(*dec);
            }
            std::size_t bsm_photon = decoded.size();
            for (std::size_t i = 0; i < decoded.size(); ++i)
                if (!decoded[i].non_overlapped) {
                    bsm_photon = i;
                    break;
                }

            bool bsm_done = false;
            for (std::size_t i = e0; i < static_cast<std::size_t>(ie); ++i) {
                const auto& ev = events[i];
                switch (ev.kind) {
                    case source::EventKind::cascade:
                    case source::EventKind::reexcited_cascade: {
                        const auto rho = source::sample_pair_density(ev, c.qd, c.purity);
                        Eigen::Matrix2cd bob_state = rho.reduced_xx();
                        if (!bsm_done && bsm_photon < decoded.size()) {
                            bsm_done = true;
                            const auto& lp = decoded[bsm_photon];
                            auto res = optics::hom_bsm(lp.pol, lp.t_ps, ev.t_x_ps, rho, c.bsm, gen);
                            if (res.herald) {
                                out.ch[0].push_back({res.herald->t_h_ps, 0});
                                out.ch[1].push_back({res.herald->t_v_ps, 0});
                            }
                            for (const auto& [t, ch] : res.classical_clicks)
                                out.ch[ch].push_back({t, 0});
                            bob_state = res.bob_state;
                        } else {
                            // X photon reaches the splitter without a partner
                            const Eigen::Matrix2cd rx = rho.reduced_x();
                            if (uni(gen) < 0.5) {
                                const int o = optics::analyze_state(rx, Basis::HV, gen);
                                out.ch[o].push_back({ev.t_x_ps, 0});
                            }
                        }
                        bob_click(bob_state, ev.t_xx_ps);
                        break;
                    }
                    case source::EventKind::background_x:
                        stray_click(ev.t_x_ps, uni(gen) < 0.5 ? PolState::horizontal()
                                                              : PolState::vertical(),
                                    false);
                        break;
                    case source::EventKind::background_xx:
                        bob_click(Eigen::Matrix2cd::Identity() * 0.5, ev.t_xx_ps);
                        break;
                }
            }

            for (std::size_t i = 0; i < decoded.size(); ++i) {
                if (bsm_done && i == bsm_photon) continue;
                stray_click(decoded[i].t_ps, decoded[i].pol, decoded[i].non_overlapped);
            }
        }
    });

    TagRun run;
    run.t0_ps = c.clock.epoch_ps;
    run.t1_ps = c.clock.epoch_ps + span_ps(c.clock);
    for (std::uint8_t ch = 0; ch < 4; ++ch) {
        auto tags = optics::detect(std::move(clicks[ch]), c.detectors[ch], ch, run.t0_ps,
                                   run.t1_ps, c.seed);
        run.tags.insert(run.tags.end(), tags.begin(), tags.end());
    }
    tt::sort_tags(run.tags);
    return run;
}

TeleportGrids teleport_grids(const TagRun& run, const cfg::ExperimentConfig& c) {
    corr::G3Options opt;
    opt.bin_ps = c.analysis.grid_bin_ps;
    opt.herald_window_ps = c.analysis.herald_window_ps;
    opt.charlie_range_ps = c.analysis.charlie_range_ps;
    opt.bob_range_ps = c.analysis.bob_range_ps;
    opt.bob_offset_ps = c.analysis.bob_offset_ps;
    opt.accidental_shift_ps = 25.0 * c.clock.period_ps();

    // satellite-flagged herald clicks are excluded from the BSM streams
    const auto h = run.channel_times_overlapped(tt::kChCharlieH);
    const auto v = run.channel_times_overlapped(tt::kChCharlieV);

    TeleportGrids g;
    g.pass = corr::g3_grid(h, v, run.channel_times(tt::kChBobP), opt);
    if (c.preset == cfg::Preset::teleport_timebin) {
        // single Bob detector; pass/fail are windows of one grid
        g.fail = g.pass;
        // slot centres in grid coordinates; t_Bob = 0 is simultaneous
        // detection of all three photons, so bob_offset in the preset carries
        // the 5 ns long-arm delay of the output transcoder
        const bool expect_late = bob_readout(c.laser.input_pol()).expected == 0;
        const double late = c.amzi_bob.delay_ps;
        g.pass_center_bob_ps = (expect_late ? late : 0.0) - opt.bob_offset_ps;
        g.fail_center_bob_ps = (expect_late ? 0.0 : late) - opt.bob_offset_ps;
    } else {
        g.fail = corr::g3_grid(h, v, run.channel_times(tt::kChBobQ), opt);
    }
    return g;
}

json config_to_json(const cfg::ExperimentConfig& c) {
    json j;
    j["preset"] = cfg::to_string(c.preset);
    j["seed"] = c.seed;
    // threads is an execution detail, not physics; leaving it out keeps the
    // persisted report independent of how the run was scheduled
    j["purity"] = c.purity;
    j["clock"] = {{"repetition_rate_ghz", c.clock.repetition_rate_ghz},
                  {"pulse_fwhm_ps", c.clock.pulse_fwhm_ps},
                  {"cycles", c.clock.n_cycles},
                  {"epoch_ps", c.clock.epoch_ps},
                  {"cw", c.clock.cw}};
    j["qd"] = {{"lifetime_xx_ps", c.qd.lifetime_xx_ps},
               {"lifetime_x_ps", c.qd.lifetime_x_ps},
               {"fss_uev", c.qd.fss_uev},
               {"p_excite", c.qd.p_excite},
               {"p_reexcite", c.qd.p_reexcite},
               {"shelving_prob", c.qd.shelving_prob},
               {"shelving_lifetime_ps", c.qd.shelving_lifetime_ps},
               {"background_rate_hz", c.qd.background_rate_hz},
               {"occupancy_gating", c.qd.occupancy_gating},
               {"hv_coherence_floor", c.qd.hv_coherence_floor}};
    json dets = json::array();
    for (const auto& d : c.detectors)
        dets.push_back({{"jitter_sigma_ps", d.jitter_sigma_ps},
                        {"efficiency", d.efficiency},
                        {"dark_rate_hz", d.dark_rate_hz},
                        {"dead_time_ps", d.dead_time_ps}});
    j["detectors"] = dets;
    auto amzi = [](const optics::AMZIParams& a) {
        return json{{"delay_ps", a.delay_ps},
                    {"phase_rad", a.phase_rad},
                    {"insertion_loss", a.insertion_loss},
                    {"mode", a.mode == optics::AMZIParams::Mode::pol_to_timebin
                                 ? "pol_to_timebin"
                                 : "timebin_to_pol"}};
    };
    j["amzi"] = {{"alice", amzi(c.amzi_alice)},
                 {"charlie", amzi(c.amzi_charlie)},
                 {"bob", amzi(c.amzi_bob)}};
    j["bsm"] = {{"visibility", c.bsm.visibility},
                {"coincidence_window_ps", c.bsm.coincidence_window_ps}};
    j["laser"] = {{"input", c.laser.input_label},
                  {"mean_photon", c.laser.mean_photon},
                  {"pulse_fwhm_ps", c.laser.pulse_fwhm_ps},
                  {"alignment_offset_ps", c.laser.alignment_offset_ps}};
    j["analysis"] = {{"g2_bin_ps", c.analysis.g2_bin_ps},
                     {"g2_range_ps", c.analysis.g2_range_ps},
                     {"grid_bin_ps", c.analysis.grid_bin_ps},
                     {"grid_periods", c.analysis.grid_periods},
                     {"lifetime_bin_ps", c.analysis.lifetime_bin_ps},
                     {"tomo_window_ps", c.analysis.tomo_window_ps},
                     {"tomo_step_ps", c.analysis.tomo_step_ps},
                     {"tomo_center_min_ps", c.analysis.tomo_center_min_ps},
                     {"tomo_center_max_ps", c.analysis.tomo_center_max_ps},
                     {"teleport_windows_ps", c.analysis.teleport_windows_ps},
                     {"herald_window_ps", c.analysis.herald_window_ps},
                     {"charlie_range_ps", c.analysis.charlie_range_ps},
                     {"bob_range_ps", c.analysis.bob_range_ps},
                     {"bob_offset_ps", c.analysis.bob_offset_ps}};
    return j;
}

namespace {

void write_histogram_csv(const std::string& path, const corr::Histogram1D& h) {
    std::ofstream out(path);
    out << "bin_start_ps,count\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i)
        out << h.t_min_ps + h.bin_ps * static_cast<double>(i) << "," << h.counts[i] << "\n";
}

void write_grid_csv(const std::string& path, const corr::Grid2D& g) {
    std::ofstream out(path);
    out << "# rows: a bins from " << g.a_min_ps << " ps, cols: b bins from " << g.b_min_ps
        << " ps, bin " << g.bin_ps << " ps\n";
    for (std::size_t ia = 0; ia < g.na; ++ia) {
        for (std::size_t ib = 0; ib < g.nb; ++ib) out << (ib ? "," : "") << g.at(ia, ib);
        out << "\n";
    }
}

// central-peak counts over the mean of up to five side peaks per side,
// window width = one clock period
double windowed_g2_zero(const corr::Histogram1D& h, double period_ps) {
    auto window_counts = [&](double center) -> std::pair<std::int64_t, bool> {
        const double lo = center - 0.5 * period_ps;
        const double hi = center + 0.5 * period_ps;
        if (lo < h.t_min_ps || hi > h.t_max_ps()) return {0, false};
        std::int64_t acc = 0;
        for (std::size_t i = 0; i < h.counts.size(); ++i) {
            const double bc = h.t_min_ps + (static_cast<double>(i) + 0.5) * h.bin_ps;
            if (bc >= lo && bc < hi) acc += h.counts[i];
        }
        return {acc, true};
    };
    const auto [n0, ok0] = window_counts(0.0);
    if (!ok0) return std::numeric_limits<double>::quiet_NaN();
    double side = 0.0;
    int n_side = 0;
    for (int k : {-5, -4, -3, -2, -1, 1, 2, 3, 4, 5}) {
        const auto [nk, ok] = window_counts(static_cast<double>(k) * period_ps);
        if (ok) {
            side += static_cast<double>(nk);
            ++n_side;
        }
    }
    if (n_side == 0 || side == 0.0) return std::numeric_limits<double>::quiet_NaN();
    return static_cast<double>(n0) / (side / static_cast<double>(n_side));
}

json lifetime_json(const corr::LifetimeEstimate& e) {
    return {{"tau_ps", e.tau_ps}, {"stderr_ps", e.stderr_ps}, {"wrap_around", e.wrap_around}};
}

json run_emission(const cfg::ExperimentConfig& c, const std::string& out_dir) {
    const auto run = simulate_emission(c);
    const double duration = run.t1_ps - run.t0_ps;
    const double period = c.clock.period_ps();

    const auto xx = run.channel_times(tt::kChBobP);
    const auto xa = run.channel_times(tt::kChAuxA);
    const auto xb = run.channel_times(tt::kChAuxB);
    std::vector<std::int64_t> x_all;
    x_all.reserve(xa.size() + xb.size());
    std::merge(xa.begin(), xa.end(), xb.begin(), xb.end(), std::back_inserter(x_all));

    const auto g2 = corr::g2_histogram(xa, xb, c.analysis.g2_bin_ps, c.analysis.g2_range_ps,
                                       duration, c.threads);
    const auto grid = corr::clocked_g2_grid(xa, xb, period, c.clock.epoch_ps,
                                            c.analysis.grid_bin_ps, c.analysis.grid_periods,
                                            c.threads);
    const auto fold_x = corr::intensity_vs_clock_phase(x_all, period, c.clock.epoch_ps,
                                                       c.analysis.lifetime_bin_ps);
    const auto fold_xx = corr::intensity_vs_clock_phase(xx, period, c.clock.epoch_ps,
                                                        c.analysis.lifetime_bin_ps);

    json r;
    r["singles"] = {{"xx", xx.size()}, {"x", x_all.size()}};
    r["g2_zero_windowed"] = windowed_g2_zero(g2, period);
    r["g2_block0"] = grid.g2_block0;
    r["period_warning"] = grid.period_warning;
    try {
        r["lifetime_x"] = lifetime_json(corr::lifetime_estimate(fold_x));
    } catch (const corr::analysis_error& e) {
        r["lifetime_x"] = {{"error", e.what()}};
    }
    try {
        r["lifetime_xx"] = lifetime_json(corr::lifetime_estimate(fold_xx));
    } catch (const corr::analysis_error& e) {
        r["lifetime_xx"] = {{"error", e.what()}};
    }
    auto on_off = [](const corr::Histogram1D& h) -> double {
        if (h.counts.empty()) return std::numeric_limits<double>::quiet_NaN();
        const auto mx = *std::max_element(h.counts.begin(), h.counts.end());
        const auto mn = *std::min_element(h.counts.begin(), h.counts.end());
        return mx > 0 ? static_cast<double>(mn) / static_cast<double>(mx)
                      : std::numeric_limits<double>::quiet_NaN();
    };
    r["on_off_ratio_x"] = on_off(fold_x);
    r["on_off_ratio_xx"] = on_off(fold_xx);

    if (!out_dir.empty()) {
        write_histogram_csv(out_dir + "/g2.csv", g2);
        write_grid_csv(out_dir + "/clocked_grid.csv", grid.grid);
        write_histogram_csv(out_dir + "/intensity_x.csv", fold_x);
        write_histogram_csv(out_dir + "/intensity_xx.csv", fold_xx);
        tt::write_qtt(out_dir + "/tags.qtt", run.tags,
                      static_cast<std::uint64_t>(std::llround(duration)));
        if (c.analysis.debug_events) {
            const auto events = source::simulate_cascades(c.qd, c.clock, c.seed, c.threads);
            std::ofstream ev(out_dir + "/events.csv");
            ev << "cycle_index,t_xx_ps,t_x_ps,kind,truth_tau_ps\n";
            for (const auto& e : events)
                ev << e.cycle_index << "," << e.t_xx_ps << "," << e.t_x_ps << ","
                   << static_cast<int>(e.kind) << "," << e.truth_tau_ps << "\n";
        }
    }
    return r;
}

json rho_json(const Eigen::Matrix4cd& m) {
    json re = json::array();
    json im = json::array();
    for (int i = 0; i < 4; ++i) {
        json row_r = json::array();
        json row_i = json::array();
        for (int j = 0; j < 4; ++j) {
            row_r.push_back(m(i, j).real());
            row_i.push_back(m(i, j).imag());
        }
        re.push_back(row_r);
        im.push_back(row_i);
    }
    return {{"re", re}, {"im", im}};
}

json run_entanglement(const cfg::ExperimentConfig& c, const std::string& out_dir) {
    const auto tags = simulate_entanglement(c);
    const auto& an = c.analysis;

    const auto series = tomo::windowed_fidelity_series(tags, an.tomo_window_ps, an.tomo_step_ps,
                                                       an.tomo_center_min_ps, an.tomo_center_max_ps,
                                                       c.qd.fss_uev);
    double best_f = -1.0;
    double best_center = 0.0;
    for (const auto& row : series) {
        if (row.skipped) continue;
        if (row.fidelity_phi_plus > best_f) {
            best_f = row.fidelity_phi_plus;
            best_center = row.center_ps;
        }
    }
    if (best_f < 0.0) throw corr::analysis_error("no tomography window has enough counts");

    const auto counts =
        tomo::assemble_counts(tags, corr::Window{best_center, an.tomo_window_ps});
    const auto result = tomo::mle_reconstruct(counts);

    json r;
    r["window"] = {{"center_ps", best_center}, {"width_ps", an.tomo_window_ps}};
    r["counts_total"] = counts.total();
    r["fidelity_phi_plus"] = result.fidelity_phi_plus;
    r["concurrence"] = result.concurrence;
    r["mle"] = {{"iterations", result.iterations},
                {"converged", result.converged},
                {"log_likelihood", result.log_likelihood}};
    r["rho"] = rho_json(result.rho.matrix());
    r["oscillation_period_ps"] = tomo::series_oscillation_period(series);
    json rows = json::array();
    for (const auto& row : series)
        rows.push_back({{"center_ps", row.center_ps},
                        {"fidelity_phi_plus", row.fidelity_phi_plus},
                        {"fidelity_max_ent", row.fidelity_max_ent},
                        {"concurrence", row.concurrence},
                        {"counts", row.total_counts},
                        {"skipped", row.skipped}});
    r["series"] = rows;

    if (!out_dir.empty()) {
        std::ofstream csv(out_dir + "/fidelity_series.csv");
        csv << "center_ps,fidelity_phi_plus,fidelity_max_ent,concurrence,counts,skipped\n";
        for (const auto& row : series)
            csv << row.center_ps << "," << row.fidelity_phi_plus << "," << row.fidelity_max_ent
                << "," << row.concurrence << "," << row.total_counts << "," << row.skipped
                << "\n";
        std::ofstream cc(out_dir + "/tomo_counts.csv");
        cc << "setting,outcome,count\n";
        for (int s = 0; s < tomo::kSettings; ++s)
            for (int o = 0; o < tomo::kOutcomes; ++o)
                cc << s << "," << o << ","
                   << counts.counts[static_cast<std::size_t>(s)][static_cast<std::size_t>(o)]
                   << "\n";
    }
    return r;
}

json run_teleport(const cfg::ExperimentConfig& c, const std::string& out_dir) {
    const auto run = simulate_teleport(c);
    const auto grids = teleport_grids(run, c);

    json r;
    r["input"] = c.laser.input_label;
    r["n_heralds"] = grids.pass.n_heralds;
    r["accidental_per_bin"] = grids.pass.accidental_per_bin;
    r["bob_center_pass_ps"] = grids.pass_center_bob_ps;
    r["bob_center_fail_ps"] = grids.fail_center_bob_ps;
    json windows = json::array();
    auto widths = c.analysis.teleport_windows_ps;
    std::sort(widths.begin(), widths.end());
    for (double w : widths) {
        try {
            const auto f = corr::teleport_fidelity_at(grids.pass.counts, grids.fail.counts, w,
                                                      0.0, grids.pass_center_bob_ps, 0.0,
                                                      grids.fail_center_bob_ps);
            windows.push_back({{"width_ps", w},
                               {"fidelity", f.fidelity},
                               {"sigma", f.sigma},
                               {"pass_counts", f.pass_counts},
                               {"fail_counts", f.fail_counts}});
        } catch (const corr::analysis_error&) {
            windows.push_back({{"width_ps", w}, {"undefined", true}});
        }
    }
    r["windows"] = windows;

    if (!out_dir.empty()) {
        write_grid_csv(out_dir + "/g3_pass.csv", grids.pass.counts);
        if (c.preset == cfg::Preset::teleport_superposition)
            write_grid_csv(out_dir + "/g3_fail.csv", grids.fail.counts);
        tt::write_qtt(out_dir + "/tags.qtt", run.tags,
                      static_cast<std::uint64_t>(std::llround(run.t1_ps - run.t0_ps)));
    }
    return r;
}

}  // namespace

std::string content_hash(const json& results) {
    const std::string dump = results.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : dump) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

json run_experiment(const cfg::ExperimentConfig& c, const std::string& out_dir) {
    if (!out_dir.empty()) std::filesystem::create_directories(out_dir);
    const auto start = std::chrono::steady_clock::now();

    json results;
    switch (c.preset) {
        case cfg::Preset::emission:
            results = run_emission(c, out_dir);
            break;
        case cfg::Preset::entanglement:
            results = run_entanglement(c, out_dir);
            break;
        case cfg::Preset::teleport_superposition:
        case cfg::Preset::teleport_timebin:
            results = run_teleport(c, out_dir);
            break;
    }

    json report;
    report["format"] = 1;
    report["generator"] = "qrelay 0.1.0";
    report["preset"] = cfg::to_string(c.preset);
    report["config"] = config_to_json(c);
    report["results"] = results;
    report["content_hash"] = content_hash(results);

    // The persisted report carries no timing so identical config and seed
    // produce byte-identical files; timing only lives in the returned value.
    if (!out_dir.empty()) {
        std::ofstream out(out_dir + "/report.json");
        out << report.dump(2) << "\n";
    }
    report["wall_clock_s"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return report;
}

json mean_fidelity_report(const std::vector<json>& reports, double window_ps) {
    if (reports.empty()) throw corr::analysis_error("mean_fidelity_report: no reports");
    json inputs = json::array();
    double mean = 0.0;
    double var = 0.0;
    for (const auto& rep : reports) {
        if (!rep.contains("results") || !rep["results"].contains("windows"))
            throw corr::analysis_error("report has no teleportation results");
        bool found = false;
        for (const auto& w : rep["results"]["windows"]) {
            if (w.contains("undefined")) continue;
            if (std::abs(w["width_ps"].get<double>() - window_ps) < 1e-6) {
                const double f = w["fidelity"].get<double>();
                const double s = w["sigma"].get<double>();
                mean += f;
                var += s * s;
                inputs.push_back({{"input", rep["results"].value("input", "?")},
                                  {"fidelity", f},
                                  {"sigma", s}});
                found = true;
                break;
            }
        }
        if (!found)
            throw corr::analysis_error("report lacks a defined fidelity at the requested window");
    }
    const auto n = static_cast<double>(reports.size());
    mean /= n;
    const double sigma = std::sqrt(var) / n;
    json out;
    out["window_ps"] = window_ps;
    out["inputs"] = inputs;
    out["mean_fidelity"] = mean;
    out["sigma"] = sigma;
    out["classical_bound"] = 2.0 / 3.0;
    out["classical_excess_sigmas"] = sigma > 0.0
                                         ? (mean - 2.0 / 3.0) / sigma
                                         : std::numeric_limits<double>::infinity();
    return out;
}

namespace {

void diff_walk(const json& a, const json& b, const std::string& path,
               std::vector<std::string>& out) {
    if (path == "/wall_clock_s") return;
    if (a.type() != b.type()) {
        out.push_back(path.empty() ? "/" : path);
        return;
    }
    if (a.is_object()) {
        for (auto it = a.begin(); it != a.end(); ++it) {
            if (!b.contains(it.key()))
                out.push_back(path + "/" + it.key());
            else
                diff_walk(it.value(), b.at(it.key()), path + "/" + it.key(), out);
        }
        for (auto it = b.begin(); it != b.end(); ++it)
            if (!a.contains(it.key())) out.push_back(path + "/" + it.key());
        return;
    }
    if (a.is_array()) {
        const std::size_t n = std::max(a.size(), b.size());
        for (std::size_t i = 0; i < n; ++i) {
            const std::string p = path + "/" + std::to_string(i);
            if (i >= a.size() || i >= b.size())
                out.push_back(p);
            else
                diff_walk(a[i], b[i], p, out);
        }
        return;
    }
    if (a != b) out.push_back(path.empty() ? "/" : path);
}

}  // namespace

std::vector<std::string> report_diff(const json& a, const json& b) {
    std::vector<std::string> out;
    diff_walk(a, b, "", out);
    return out;
}

}  // namespace qrelay::pipeline
