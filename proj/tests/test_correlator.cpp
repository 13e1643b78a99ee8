#include <cmath>
#include <random>

#include "doctest.h"
#include "qrelay/correlator.hpp"

using namespace qrelay::corr;

namespace {

std::vector<std::int64_t> poisson_times(double rate_per_ps, double duration_ps,
                                        std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::exponential_distribution<double> gap(rate_per_ps);
    std::vector<std::int64_t> out;
    for (double t = gap(gen); t < duration_ps; t += gap(gen))
        out.push_back(static_cast<std::int64_t>(t));
    return out;
}

}  // namespace

TEST_CASE("g2 histogram counts known pairs") {
    const std::vector<std::int64_t> a = {0, 1000};
    const std::vector<std::int64_t> b = {10, 990, 5000};
    const auto h = g2_histogram(a, b, 100.0, 500.0, 1e4, 1);
    // delays in range: 10-0 = 10, 990-1000 = -10; 990-0 and 5000-x are out
    REQUIRE(h.counts.size() == 10);
    std::int64_t total = 0;
    for (auto c : h.counts) total += c;
    CHECK(total == 2);
    CHECK(h.counts[5] == 1);  // [0, 100)
    CHECK(h.counts[4] == 1);  // [-100, 0)
    CHECK(h.n_singles_a == 2);
    CHECK(h.n_singles_b == 3);
}

TEST_CASE("threaded g2 equals single-threaded g2") {
    const auto a = poisson_times(1e-4, 5e8, 1);
    const auto b = poisson_times(1e-4, 5e8, 2);
    const auto h1 = g2_histogram(a, b, 50.0, 4000.0, 5e8, 1);
    const auto h4 = g2_histogram(a, b, 50.0, 4000.0, 5e8, 4);
    CHECK(h1.counts == h4.counts);
}

TEST_CASE("uncorrelated Poisson streams normalize to one") {
    const auto a = poisson_times(2e-4, 1e9, 3);
    const auto b = poisson_times(1e-4, 1e9, 4);
    const auto h = g2_histogram(a, b, 100.0, 5000.0, 1e9, 1);
    const auto norm = h.normalized();
    REQUIRE(!norm.empty());
    double mean = 0.0;
    std::int64_t total = 0;
    for (auto c : h.counts) total += c;
    for (double v : norm) mean += v;
    mean /= static_cast<double>(norm.size());
    const double sigma = 1.0 / std::sqrt(static_cast<double>(total));
    CHECK(std::abs(mean - 1.0) < 4.0 * sigma);
}

TEST_CASE("clocked grid: block zero tracks same-cycle correlation") {
    // a and b fire together in a random half of the cycles: same-cycle pairs
    // are twice as likely as cross-cycle accidentals, so g2_block0 is near 2
    const double period = 934.58;
    std::mt19937_64 gen(8);
    std::bernoulli_distribution fire(0.5);
    std::vector<std::int64_t> a;
    std::vector<std::int64_t> b;
    for (int i = 0; i < 40000; ++i) {
        if (!fire(gen)) continue;
        a.push_back(static_cast<std::int64_t>(i * period + 100.0));
        b.push_back(static_cast<std::int64_t>(i * period + 300.0));
    }
    const auto same = clocked_g2_grid(a, b, period, 0.0, 40.0, 7, 1);
    CHECK(same.g2_block0 == doctest::Approx(2.0).epsilon(0.1));

    // now a and b fire on disjoint cycle subsets: antibunched
    std::vector<std::int64_t> a2;
    std::vector<std::int64_t> b2;
    for (int i = 0; i < 40000; ++i) {
        if (fire(gen))
            a2.push_back(static_cast<std::int64_t>(i * period + 100.0));
        else
            b2.push_back(static_cast<std::int64_t>(i * period + 300.0));
    }
    const auto anti = clocked_g2_grid(a2, b2, period, 0.0, 40.0, 7, 1);
    CHECK(anti.g2_block0 < 0.2);
}

TEST_CASE("grid window sum respects centered square windows") {
    Grid2D g;
    g.bin_ps = 40.0;
    g.a_min_ps = -200.0;
    g.b_min_ps = -200.0;
    g.na = 10;
    g.nb = 10;
    g.counts.assign(100, 1);
    // window of one bin around the center of bin (5,5)
    CHECK(g.window_sum(20.0, 20.0, 40.0) == 1);
    CHECK(g.window_sum(20.0, 20.0, 120.0) == 9);
    CHECK(g.window_sum(0.0, 0.0, 1e9) == 100);
}

TEST_CASE("lifetime estimator recovers a synthetic exponential") {
    std::mt19937_64 gen(12);
    std::exponential_distribution<double> decay(1.0 / 256.0);
    Histogram1D folded;
    folded.bin_ps = 50.0;
    folded.counts.assign(200, 0);  // 10 ns fold
    for (int i = 0; i < 200000; ++i) {
        const double t = decay(gen);
        const auto idx = static_cast<std::size_t>(t / folded.bin_ps);
        if (idx < folded.counts.size()) ++folded.counts[idx];
    }
    const auto est = lifetime_estimate(folded);
    CHECK(est.tau_ps == doctest::Approx(256.0).epsilon(0.03));
    CHECK(!est.wrap_around);
    Histogram1D tiny;
    tiny.bin_ps = 50.0;
    tiny.counts.assign(10, 1);
    CHECK_THROWS_AS(lifetime_estimate(tiny), analysis_error);
}

TEST_CASE("g3 grid pins t_Charlie and t_Bob to the herald pair") {
    // one herald pair at (1000, 1040) and bob clicks at the midpoint
    std::vector<std::int64_t> hh = {1000};
    std::vector<std::int64_t> hv = {1040};
    std::vector<std::int64_t> bob = {1020, 1520};
    G3Options opt;
    opt.bin_ps = 40.0;
    opt.charlie_range_ps = 400.0;
    opt.bob_range_ps = 400.0;
    const auto g = g3_grid(hh, hv, bob, opt);
    CHECK(g.n_heralds == 1);
    // t_Charlie = -40 lands in the bin centred at -20; t_Bob = 0 in the bin
    // centred at +20; the second bob click at +500 is outside the range
    std::int64_t total = 0;
    for (auto c : g.counts.counts) total += c;
    CHECK(total == 1);
    CHECK(g.counts.window_sum(-20.0, 20.0, 40.0) == 1);
}

TEST_CASE("teleport fidelity is binomial pass fraction") {
    Grid2D pass;
    pass.bin_ps = 40.0;
    pass.a_min_ps = -200.0;
    pass.b_min_ps = -200.0;
    pass.na = 10;
    pass.nb = 10;
    pass.counts.assign(100, 0);
    Grid2D fail = pass;
    pass.at(5, 5) = 90;
    fail.at(5, 5) = 10;
    const auto r = teleport_fidelity(pass, fail, Window{20.0, 40.0});
    CHECK(r.fidelity == doctest::Approx(0.9));
    CHECK(r.pass_counts == 90);
    CHECK(r.fail_counts == 10);
    CHECK(r.sigma == doctest::Approx(std::sqrt(0.09 / 100.0)));
    CHECK_THROWS_AS(teleport_fidelity(pass, fail, Window{-1000.0, 40.0}), analysis_error);
}
