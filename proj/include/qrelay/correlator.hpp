#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "qrelay/timetag.hpp"

namespace qrelay::corr {

struct analysis_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Half-open bins [t, t+bin).
struct Histogram1D {
    double bin_ps = 1.0;
    double t_min_ps = 0.0;
    std::vector<std::int64_t> counts;
    std::uint64_t n_singles_a = 0;
    std::uint64_t n_singles_b = 0;
    double duration_ps = 0.0;
    bool normalization_undefined = false;

    double t_max_ps() const { return t_min_ps + bin_ps * static_cast<double>(counts.size()); }
    // Elementwise sum; geometries must match.
    void merge(const Histogram1D& other);
    // counts / (rate_a * rate_b * bin * duration); Poissonian level = 1.
    std::vector<double> normalized() const;
};

struct Grid2D {
    double bin_ps = 40.0;
    double a_min_ps = 0.0;
    double b_min_ps = 0.0;
    std::size_t na = 0;
    std::size_t nb = 0;
    std::vector<std::int64_t> counts;  // row-major, a * nb + b
    double clock_period_ps = 0.0;

    std::int64_t& at(std::size_t ia, std::size_t ib) { return counts[ia * nb + ib]; }
    std::int64_t at(std::size_t ia, std::size_t ib) const { return counts[ia * nb + ib]; }
    void merge(const Grid2D& other);
    // Total counts in the square window width x width centered at (ca, cb).
    std::int64_t window_sum(double ca_ps, double cb_ps, double width_ps) const;
};

// Post-selection window (full width, centered).
struct Window {
    double center_ps = 0.0;
    double width_ps = 96.0;
};

// Correlation histogram of pair delays t_b - t_a in [-range, +range).
Histogram1D g2_histogram(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                         double bin_ps, double range_ps, double duration_ps, int threads = 1);

struct ClockedGrid {
    Grid2D grid;
    double g2_block0 = 0.0;
    bool period_warning = false;
    std::size_t n_periods = 0;
};

// Clock-referenced two-time grid: (t_a mod span, t_b mod span) for pairs in
// the same span window, span = n_periods * period. g2_block0 compares the
// same-cycle diagonal blocks with the mean off-diagonal block.
ClockedGrid clocked_g2_grid(std::span<const std::int64_t> a, std::span<const std::int64_t> b,
                            double period_ps, double epoch_ps, double bin_ps,
                            std::size_t n_periods = 7, int threads = 1);

struct G3Grid {
    Grid2D counts;                  // axes: (t_Charlie, t_Bob)
    double accidental_per_bin = 0;  // shifted-clock estimate
    std::uint64_t n_heralds = 0;
};

struct G3Options {
    double bin_ps = 40.0;
    double herald_window_ps = 500.0;
    double charlie_range_ps = 2500.0;
    double bob_range_ps = 2500.0;
    double bob_offset_ps = 0.0;  // subtracted from t_Bob (fibre-delay reference)
    double accidental_shift_ps = 0.0;  // >= 20 clock periods; 0 disables
};

// Triple coincidences: t_Charlie = t_H - t_V for H/V pairs within the herald
// window, t_Bob = t_bob - (t_H + t_V)/2 - bob_offset.
G3Grid g3_grid(std::span<const std::int64_t> herald_h, std::span<const std::int64_t> herald_v,
               std::span<const std::int64_t> bob, const G3Options& opt);

struct FidelityResult {
    double fidelity = 0.0;
    double sigma = 0.0;
    std::int64_t pass_counts = 0;
    std::int64_t fail_counts = 0;
};

// pass/(pass+fail) inside the square window, binomial error.
FidelityResult teleport_fidelity(const Grid2D& pass, const Grid2D& fail, const Window& w);
// Variant with distinct window centers per grid (time-bin logical readout).
FidelityResult teleport_fidelity_at(const Grid2D& pass, const Grid2D& fail, double width_ps,
                                    double pass_ca, double pass_cb, double fail_ca,
                                    double fail_cb);

struct SweepRow {
    double width_ps = 0.0;
    double fidelity = 0.0;
    double sigma = 0.0;
    bool undefined = false;
};

std::vector<SweepRow> window_sweep(const Grid2D& pass, const Grid2D& fail,
                                   std::span<const double> widths_ps);

// Tags folded modulo the clock period.
Histogram1D intensity_vs_clock_phase(std::span<const std::int64_t> tags, double period_ps,
                                     double epoch_ps, double bin_ps);

struct LifetimeEstimate {
    double tau_ps = 0.0;
    double stderr_ps = 0.0;
    bool wrap_around = false;  // decay truncated by the clock period
};

// Weighted least squares on log-counts over the monotone tail (peak + 2 bins
// up to the 5%-of-peak bin or the end of the period). Requires >= 5 tail
// bins and >= 1000 tags.
LifetimeEstimate lifetime_estimate(const Histogram1D& folded);

}  // namespace qrelay::corr
