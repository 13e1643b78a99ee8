#include "qrelay/correlator.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace qrelay::corr {

void Histogram1D::merge(const Histogram1D& other) {
    if (bin_ps != other.bin_ps || t_min_ps != other.t_min_ps ||
        counts.size() != other.counts.size())
        throw analysis_error("Histogram1D::merge: geometry mismatch");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
    n_singles_a += other.n_singles_a;
    n_singles_b += other.n_singles_b;
    duration_ps = std::max(duration_ps, other.duration_ps);
    normalization_undefined = normalization_undefined || other.normalization_undefined;
}

std::vector<double> Histogram1D::normalized() const {
    if (normalization_undefined || n_singles_a == 0 || n_singles_b == 0 || duration_ps <= 0.0)
        return {};
    const double level = static_cast<double>(n_singles_a) * static_cast<double>(n_singles_b) *
                         bin_ps / duration_ps;
    std::vector<double> out(counts.size());
    for (std::size_t i = 0; i < counts.size(); ++i)
        out[i] = static_cast<double>(counts[i]) / level;
    return out;
}

void Grid2D::merge(const Grid2D& other) {
    if (bin_ps != other.bin_ps || a_min_ps != other.a_min_ps || b_min_ps != other.b_min_ps ||
        na != other.na || nb != other.nb)
        throw analysis_error("Grid2D::merge: geometry mismatch");
    for (std::size_t i = 0; i < counts.size(); ++i) counts[i] += other.counts[i];
}

std::int64_t Grid2D::window_sum(double ca_ps, double cb_ps, double width_ps) const {
    const double half = 0.5 * width_ps;
    std::int64_t sum = 0;
    for (std::size_t ia = 0; ia < na; ++ia) {
        const double ta = a_min_ps + (static_cast<double>(ia) + 0.5) * bin_ps;
        if (ta < ca_ps - half || ta >= ca_ps + half) continue;
        for (std::size_t ib = 0; ib < nb; ++ib) {
            const double tb = b_min_ps + (static_cast<double>(ib) + 0.5) * bin_ps;
            if (tb < cb_ps - half || tb >= cb_ps + half) continue;
            sum += at(ia, ib);
        }
    }
    return sum;
}

namespace {

// Two-pointer sweep over the a-range [ia0, ia1); counts pairs with
// t_b - t_a in [-range, +range).
void g2_sweep(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
              std::size_t ia0, std::size_t ia1, double bin_ps, double range_ps,
              std::vector<std::int64_t>& counts) {
    if (ia0 >= ia1 || b.empty()) return;
    const auto lo0 = static_cast<std::int64_t>(a[ia0] - static_cast<std::int64_t>(range_ps) - 1);
    std::size_t jb = std::lower_bound(b.begin(), b.end(), lo0) - b.begin();
    const double inv_bin = 1.0 / bin_ps;
    const std::size_t nbins = counts.size();
    for (std::size_t ia = ia0; ia < ia1; ++ia) {
        const std::int64_t ta = a[ia];
        const double lo = static_cast<double>(ta) - range_ps;
        const double hi = static_cast<double>(ta) + range_ps;
        while (jb < b.size() && static_cast<double>(b[jb]) < lo) ++jb;
        for (std::size_t j = jb; j < b.size() && static_cast<double>(b[j]) < hi; ++j) {
            const double d = static_cast<double>(b[j] - ta) + range_ps;
            const auto idx = static_cast<std::size_t>(d * inv_bin);
            if (idx < nbins) ++counts[idx];
        }
    }
}

}  // namespace

Histogram1D g2_histogram(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                         double bin_ps, double range_ps, double duration_ps, int threads) {
    if (bin_ps <= 0.0 || range_ps <= 0.0) throw analysis_error("g2: bin and range must be > 0");
    Histogram1D h;
    h.bin_ps = bin_ps;
    h.t_min_ps = -range_ps;
    h.counts.assign(static_cast<std::size_t>(std::ceil(2.0 * range_ps / bin_ps)), 0);
    h.n_singles_a = a.size();
    h.n_singles_b = b.size();
    h.duration_ps = duration_ps;
    if (a.empty() || b.empty()) {
        h.normalization_undefined = true;
        return h;
    }

    const int nthreads = std::max(1, threads);
    if (nthreads == 1) {
        g2_sweep(a, b, 0, a.size(), bin_ps, range_ps, h.counts);
        return h;
    }
    std::vector<std::vector<std::int64_t>> partial(nthreads,
                                                   std::vector<std::int64_t>(h.counts.size(), 0));
    std::vector<std::thread> pool;
    const std::size_t chunk = (a.size() + nthreads - 1) / nthreads;
    for (int t = 0; t < nthreads; ++t) {
        const std::size_t i0 = std::min(a.size(), t * chunk);
        const std::size_t i1 = std::min(a.size(), i0 + chunk);
        pool.emplace_back([&, t, i0, i1] { g2_sweep(a, b, i0, i1, bin_ps, range_ps, partial[t]); });
    }
    for (auto& th : pool) th.join();
    for (const auto& p : partial)
        for (std::size_t i = 0; i < p.size(); ++i) h.counts[i] += p[i];
    return h;
}

ClockedGrid clocked_g2_grid(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                            double period_ps, double epoch_ps, double bin_ps,
                            std::size_t n_periods, int threads) {
    (void)threads;
    if (period_ps <= 0.0 || bin_ps <= 0.0 || n_periods == 0)
        throw analysis_error("clocked_g2_grid: invalid geometry");
    const double span = period_ps * static_cast<double>(n_periods);
    const auto nbin = static_cast<std::size_t>(std::ceil(span / bin_ps));

    ClockedGrid out;
    out.n_periods = n_periods;
    out.grid.bin_ps = bin_ps;
    out.grid.a_min_ps = 0.0;
    out.grid.b_min_ps = 0.0;
    out.grid.na = nbin;
    out.grid.nb = nbin;
    out.grid.clock_period_ps = period_ps;
    out.grid.counts.assign(nbin * nbin, 0);
    if (a.empty() || b.empty()) return out;

    std::vector<std::int64_t> block(n_periods * n_periods, 0);
    std::size_t jb = 0;
    for (const std::int64_t ta : a) {
        const double w = std::floor((static_cast<double>(ta) - epoch_ps) / span);
        const double w_lo = epoch_ps + w * span;
        const double w_hi = w_lo + span;
        while (jb < b.size() && static_cast<double>(b[jb]) < w_lo) ++jb;
        const double pa = static_cast<double>(ta) - w_lo;
        const auto ia = std::min(nbin - 1, static_cast<std::size_t>(pa / bin_ps));
        const auto ba = std::min(n_periods - 1, static_cast<std::size_t>(pa / period_ps));
        for (std::size_t j = jb; j < b.size() && static_cast<double>(b[j]) < w_hi; ++j) {
            const double pb = static_cast<double>(b[j]) - w_lo;
            const auto ib = std::min(nbin - 1, static_cast<std::size_t>(pb / bin_ps));
            const auto bb = std::min(n_periods - 1, static_cast<std::size_t>(pb / period_ps));
            ++out.grid.at(ia, ib);
            ++block[ba * n_periods + bb];
        }
    }

    std::int64_t diag = 0, off = 0;
    for (std::size_t i = 0; i < n_periods; ++i)
        for (std::size_t j = 0; j < n_periods; ++j)
            (i == j ? diag : off) += block[i * n_periods + j];
    const double off_mean =
        static_cast<double>(off) / static_cast<double>(n_periods * (n_periods - 1));
    const double diag_mean = static_cast<double>(diag) / static_cast<double>(n_periods);
    out.g2_block0 = off_mean > 0.0 ? diag_mean / off_mean : 0.0;

    // Autodetect the data periodicity from the delay histogram peak around
    // one nominal period; warn when it disagrees by more than 5%.
    {
        const double fine = period_ps / 100.0;
        Histogram1D probe = g2_histogram(a.subspan(0, std::min<std::size_t>(a.size(), 200000)), b,
                                         fine, 1.6 * period_ps, 0.0, 1);
        const std::size_t i_lo = static_cast<std::size_t>((0.5 * period_ps + 1.6 * period_ps) / fine);
        double best = -1.0, mean = 0.0;
        std::size_t best_i = 0, n_used = 0;
        for (std::size_t i = i_lo; i < probe.counts.size(); ++i) {
            const double c = static_cast<double>(probe.counts[i]);
            mean += c;
            ++n_used;
            if (c > best) {
                best = c;
                best_i = i;
            }
        }
        if (n_used > 0) mean /= static_cast<double>(n_used);
        const double peak_pos = probe.t_min_ps + (static_cast<double>(best_i) + 0.5) * fine;
        if (mean > 0.0 && best > 3.0 * mean &&
            std::abs(peak_pos - period_ps) / period_ps > 0.05)
            out.period_warning = true;
    }
    return out;
}

G3Grid g3_grid(std::span<const std::int64_t> herald_h, std::span<const std::int64_t> herald_v,
               std::span<const std::int64_t> bob, const G3Options& opt) {
    G3Grid out;
    const auto na = static_cast<std::size_t>(std::ceil(2.0 * opt.charlie_range_ps / opt.bin_ps));
    const auto nb = static_cast<std::size_t>(std::ceil(2.0 * opt.bob_range_ps / opt.bin_ps));
    out.counts.bin_ps = opt.bin_ps;
    out.counts.a_min_ps = -opt.charlie_range_ps;
    out.counts.b_min_ps = -opt.bob_range_ps;
    out.counts.na = na;
    out.counts.nb = nb;
    out.counts.counts.assign(na * nb, 0);
    if (herald_h.empty() || herald_v.empty() || bob.empty()) return out;

    std::int64_t accidental_total = 0;

    auto fill = [&](double bob_shift, Grid2D* grid, std::int64_t* total) {
        std::size_t jv = 0;
        std::size_t jb = 0;
        std::uint64_t heralds = 0;
        for (const std::int64_t th : herald_h) {
            const double lo_v = static_cast<double>(th) - opt.herald_window_ps;
            const double hi_v = static_cast<double>(th) + opt.herald_window_ps;
            while (jv < herald_v.size() && static_cast<double>(herald_v[jv]) < lo_v) ++jv;
            for (std::size_t j = jv; j < herald_v.size() && static_cast<double>(herald_v[j]) <= hi_v;
                 ++j) {
                const double tv = static_cast<double>(herald_v[j]);
                const double t_charlie = static_cast<double>(th) - tv;
                const double t_mid = 0.5 * (static_cast<double>(th) + tv);
                ++heralds;
                if (t_charlie < -opt.charlie_range_ps || t_charlie >= opt.charlie_range_ps)
                    continue;
                const double lo_b = t_mid + opt.bob_offset_ps + bob_shift - opt.bob_range_ps;
                const double hi_b = t_mid + opt.bob_offset_ps + bob_shift + opt.bob_range_ps;
                while (jb < bob.size() && static_cast<double>(bob[jb]) < lo_b) ++jb;
                while (jb > 0 && static_cast<double>(bob[jb - 1]) >= lo_b) --jb;
                const auto ia = static_cast<std::size_t>(
                    (t_charlie + opt.charlie_range_ps) / opt.bin_ps);
                for (std::size_t k = jb; k < bob.size() && static_cast<double>(bob[k]) < hi_b; ++k) {
                    const double t_bob =
                        static_cast<double>(bob[k]) - t_mid - opt.bob_offset_ps - bob_shift;
                    const auto ib =
                        static_cast<std::size_t>((t_bob + opt.bob_range_ps) / opt.bin_ps);
                    if (grid) {
                        if (ia < grid->na && ib < grid->nb) ++grid->at(ia, ib);
                    } else if (ia < na && ib < nb) {
                        ++*total;
                    }
                }
            }
        }
        return heralds;
    };

    out.n_heralds = fill(0.0, &out.counts, nullptr);
    if (opt.accidental_shift_ps > 0.0) {
        fill(opt.accidental_shift_ps, nullptr, &accidental_total);
        out.accidental_per_bin =
            static_cast<double>(accidental_total) / static_cast<double>(na * nb);
    }
    return out;
}

FidelityResult teleport_fidelity_at(const Grid2D& pass, const Grid2D& fail, double width_ps,
                                    double pass_ca, double pass_cb, double fail_ca,
                                    double fail_cb) {
    if (width_ps <= 0.0) throw analysis_error("teleport_fidelity: window width must be > 0");
    FidelityResult r;
    r.pass_counts = pass.window_sum(pass_ca, pass_cb, width_ps);
    r.fail_counts = fail.window_sum(fail_ca, fail_cb, width_ps);
    const std::int64_t total = r.pass_counts + r.fail_counts;
    if (total == 0) throw analysis_error("teleport_fidelity: zero counts in window");
    r.fidelity = static_cast<double>(r.pass_counts) / static_cast<double>(total);
    r.sigma = std::sqrt(std::max(r.fidelity * (1.0 - r.fidelity), 1.0 / static_cast<double>(total)) /
                        static_cast<double>(total));
    return r;
}

FidelityResult teleport_fidelity(const Grid2D& pass, const Grid2D& fail, const Window& w) {
    if (pass.bin_ps != fail.bin_ps || pass.na != fail.na || pass.nb != fail.nb)
        throw analysis_error("teleport_fidelity: grid geometry mismatch");
    return teleport_fidelity_at(pass, fail, w.width_ps, w.center_ps, w.center_ps, w.center_ps,
                                w.center_ps);
}

std::vector<SweepRow> window_sweep(const Grid2D& pass, const Grid2D& fail,
                                   std::span<const double> widths_ps) {
    std::vector<SweepRow> rows;
    std::vector<double> widths(widths_ps.begin(), widths_ps.end());
    std::sort(widths.begin(), widths.end());
    for (double w : widths) {
        SweepRow row;
        row.width_ps = w;
        try {
            const auto r = teleport_fidelity(pass, fail, Window{0.0, w});
            row.fidelity = r.fidelity;
            row.sigma = r.sigma;
        } catch (const analysis_error&) {
            row.undefined = true;
        }
        rows.push_back(row);
    }
    return rows;
}

Histogram1D intensity_vs_clock_phase(std::span<const std::int64_t> tags, double period_ps,
                                     double epoch_ps, double bin_ps) {
    if (period_ps <= 0.0 || bin_ps <= 0.0)
        throw analysis_error("intensity_vs_clock_phase: invalid geometry");
    Histogram1D h;
    h.bin_ps = bin_ps;
    h.t_min_ps = 0.0;
    const auto n = static_cast<std::size_t>(std::ceil(period_ps / bin_ps));
    h.counts.assign(n, 0);
    h.n_singles_a = tags.size();
    for (const std::int64_t t : tags) {
        double p = std::fmod(static_cast<double>(t) - epoch_ps, period_ps);
        if (p < 0.0) p += period_ps;
        ++h.counts[std::min(n - 1, static_cast<std::size_t>(p / bin_ps))];
    }
    return h;
}

LifetimeEstimate lifetime_estimate(const Histogram1D& folded) {
    const auto& c = folded.counts;
    const std::size_t n = c.size();
    std::int64_t total = 0;
    for (auto v : c) total += v;
    if (total < 1000) throw analysis_error("lifetime_estimate: needs >= 1000 tags");

    const std::size_t peak =
        static_cast<std::size_t>(std::max_element(c.begin(), c.end()) - c.begin());
    const double peak_count = static_cast<double>(c[peak]);

    // Walk the decaying tail, wrapping around the fold; stop at the 5%
    // threshold or when the next excitation pulse rises again.
    std::vector<std::size_t> tail;
    bool wrap = true;
    double prev = peak_count;
    for (std::size_t i = 2; i + 1 < n; ++i) {
        const std::size_t idx = (peak + i) % n;
        const double v = static_cast<double>(c[idx]);
        if (v < 0.05 * peak_count) {
            wrap = false;
            break;
        }
        if (v > prev * 1.3 + 5.0) break;  // pulse turn-on reached
        tail.push_back(idx);
        prev = v;
    }
    if (tail.size() < 5) throw analysis_error("lifetime_estimate: tail shorter than 5 bins");

    // WLS on log-counts; Poisson noise gives var(log c) ~ 1/c, so weight = c.
    double sw = 0, swx = 0, swy = 0, swxx = 0, swxy = 0;
    for (std::size_t k = 0; k < tail.size(); ++k) {
        const double cnt = static_cast<double>(c[tail[k]]);
        if (cnt <= 0.0) continue;
        const double x = static_cast<double>(k) * folded.bin_ps;
        const double y = std::log(cnt);
        sw += cnt;
        swx += cnt * x;
        swy += cnt * y;
        swxx += cnt * x * x;
        swxy += cnt * x * y;
    }
    const double det = sw * swxx - swx * swx;
    if (det <= 0.0) throw analysis_error("lifetime_estimate: singular fit");
    const double slope = (sw * swxy - swx * swy) / det;
    if (slope >= 0.0) throw analysis_error("lifetime_estimate: non-decaying tail");
    const double var_slope = sw / det;
    LifetimeEstimate est;
    est.tau_ps = -1.0 / slope;
    est.stderr_ps = std::sqrt(var_slope) / (slope * slope);
    est.wrap_around = wrap;
    return est;
}

}  // namespace qrelay::corr
