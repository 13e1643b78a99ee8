#include "qrelay/tomography.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <numeric>

namespace qrelay::tomo {

using qstate::Basis;

qstate::Basis setting_basis_xx(int s) { return static_cast<Basis>(s / 3); }
qstate::Basis setting_basis_x(int s) { return static_cast<Basis>(s % 3); }

Eigen::Vector4cd projector_ket(int s, int o) {
    const auto xx = qstate::basis_state(setting_basis_xx(s), o / 2);
    const auto x = qstate::basis_state(setting_basis_x(s), o % 2);
    return qstate::TwoQubitState::product(xx, x).amps;
}

std::int64_t TomoCounts::total() const {
    std::int64_t t = 0;
    for (const auto& s : counts)
        for (auto v : s) t += v;
    return t;
}

std::int64_t TomoCounts::setting_total(int s) const {
    std::int64_t t = 0;
    for (auto v : counts[s]) t += v;
    return t;
}

TomoCounts assemble_counts(const std::array<SettingTags, kSettings>& tags,
                           const corr::Window& w) {
    if (w.width_ps <= 0.0) throw qstate::validation_error("assemble_counts: window width <= 0");
    TomoCounts out;
    out.window = w;
    const double lo = w.center_ps - 0.5 * w.width_ps;
    const double hi = w.center_ps + 0.5 * w.width_ps;
    for (int s = 0; s < kSettings; ++s) {
        for (int oxx = 0; oxx < 2; ++oxx) {
            for (int ox = 0; ox < 2; ++ox) {
                const auto& a = tags[s].xx[oxx];
                const auto& b = tags[s].x[ox];
                std::size_t jb = 0;
                std::int64_t n = 0;
                for (const std::int64_t txx : a) {
                    while (jb < b.size() && static_cast<double>(b[jb] - txx) < lo) ++jb;
                    while (jb > 0 && static_cast<double>(b[jb - 1] - txx) >= lo) --jb;
                    for (std::size_t j = jb;
                         j < b.size() && static_cast<double>(b[j] - txx) < hi; ++j)
                        ++n;
                }
                out.counts[s][2 * oxx + ox] = n;
            }
        }
    }
    return out;
}

namespace {

Eigen::Matrix2cd pauli(int i) {
    Eigen::Matrix2cd m;
    const std::complex<double> I{0, 1};
    switch (i) {
        case 0: m << 1, 0, 0, 1; break;
        case 1: m << 0, 1, 1, 0; break;           // X: DA basis
        case 2: m << 0, -I, I, 0; break;          // Y: RL basis
        default: m << 1, 0, 0, -1; break;         // Z: HV basis
    }
    return m;
}

// Pauli operator measured by an analyzer basis (outcome 0 = +1 eigenstate).
int pauli_of_basis(Basis b) {
    switch (b) {
        case Basis::HV: return 3;
        case Basis::DA: return 1;
        case Basis::RL: return 2;
    }
    return 3;
}

Eigen::Matrix4cd kron2(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    Eigen::Matrix4cd m;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) m.block<2, 2>(2 * i, 2 * j) = a(i, j) * b;
    return m;
}

}  // namespace

Eigen::Matrix4cd linear_reconstruct(const TomoCounts& c) {
    // Stokes-like correlation parameters from the 9 settings; single-qubit
    // terms averaged over the partner's settings.
    double S[4][4] = {};
    S[0][0] = 1.0;
    double singles_xx[4] = {};
    double singles_x[4] = {};
    int n_xx[4] = {};
    int n_x[4] = {};
    for (int s = 0; s < kSettings; ++s) {
        const std::int64_t tot = c.setting_total(s);
        if (tot <= 0)
            throw qstate::validation_error("linear_reconstruct: zero counts in a setting");
        const int i = pauli_of_basis(setting_basis_xx(s));
        const int j = pauli_of_basis(setting_basis_x(s));
        const double n00 = static_cast<double>(c.counts[s][0]);
        const double n01 = static_cast<double>(c.counts[s][1]);
        const double n10 = static_cast<double>(c.counts[s][2]);
        const double n11 = static_cast<double>(c.counts[s][3]);
        const double t = static_cast<double>(tot);
        S[i][j] = (n00 - n01 - n10 + n11) / t;
        singles_xx[i] += (n00 + n01 - n10 - n11) / t;
        ++n_xx[i];
        singles_x[j] += (n00 - n01 + n10 - n11) / t;
        ++n_x[j];
    }
    for (int i = 1; i < 4; ++i) {
        S[i][0] = singles_xx[i] / std::max(1, n_xx[i]);
        S[0][i] = singles_x[i] / std::max(1, n_x[i]);
    }
    Eigen::Matrix4cd rho = Eigen::Matrix4cd::Zero();
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j)
            if (S[i][j] != 0.0) rho += 0.25 * S[i][j] * kron2(pauli(i), pauli(j));
    return rho;
}

qstate::DensityMatrix project_to_physical(const Eigen::Matrix4cd& m) {
    const Eigen::Matrix4cd herm = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(herm);
    Eigen::Vector4d ev = es.eigenvalues().cwiseMax(0.0);
    const double tr = ev.sum();
    if (tr <= 0.0) return qstate::DensityMatrix::maximally_mixed();
    ev /= tr;
    const Eigen::Matrix4cd out =
        es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().adjoint();
    return qstate::DensityMatrix{0.5 * (out + out.adjoint())};
}

double log_likelihood(const TomoCounts& c, const Eigen::Matrix4cd& rho) {
    double ll = 0.0;
    for (int s = 0; s < kSettings; ++s) {
        for (int o = 0; o < kOutcomes; ++o) {
            const std::int64_t n = c.counts[s][o];
            if (n == 0) continue;
            const Eigen::Vector4cd v = projector_ket(s, o);
            const double p = std::max(1e-12, (v.adjoint() * rho * v)(0).real());
            ll += static_cast<double>(n) * std::log(p);
        }
    }
    return ll;
}

TomoResult mle_reconstruct(const TomoCounts& c) {
    const std::int64_t total = c.total();
    if (total <= 0) throw qstate::validation_error("mle_reconstruct: no counts");
    for (int s = 0; s < kSettings; ++s)
        if (c.setting_total(s) <= 0)
            throw qstate::validation_error("mle_reconstruct: zero counts in a setting");

    // Full-rank start: projected linear inversion mixed with I/4 so the
    // RrhoR flow can grow every eigenvector.
    Eigen::Matrix4cd rho =
        0.75 * project_to_physical(linear_reconstruct(c)).matrix() +
        0.25 * 0.25 * Eigen::Matrix4cd::Identity();

    Eigen::Vector4cd kets[kSettings * kOutcomes];
    double freq[kSettings * kOutcomes];
    for (int s = 0; s < kSettings; ++s)
        for (int o = 0; o < kOutcomes; ++o) {
            kets[s * kOutcomes + o] = projector_ket(s, o);
            freq[s * kOutcomes + o] =
                static_cast<double>(c.counts[s][o]) / static_cast<double>(total);
        }

    constexpr double kDilution = 0.5;
    constexpr int kMaxIter = 10000;
    double ll = -std::numeric_limits<double>::infinity();
    Eigen::Matrix4cd best = rho;
    double best_ll = ll;
    int it = 0;
    bool converged = false;
    for (; it < kMaxIter; ++it) {
        Eigen::Matrix4cd r_op = Eigen::Matrix4cd::Zero();
        double new_ll = 0.0;
        for (int k = 0; k < kSettings * kOutcomes; ++k) {
            const Eigen::Vector4cd& v = kets[k];
            const double p = std::max(1e-12, (v.adjoint() * rho * v)(0).real());
            if (freq[k] > 0.0) {
                r_op += (freq[k] / p) * (v * v.adjoint());
                new_ll += freq[k] * std::log(p);
            }
        }
        new_ll *= static_cast<double>(total);
        if (new_ll > best_ll) {
            best_ll = new_ll;
            best = rho;
        }
        if (std::abs(new_ll - ll) < 1e-10) {
            converged = true;
            break;
        }
        ll = new_ll;
        const Eigen::Matrix4cd rd =
            (1.0 - kDilution) * Eigen::Matrix4cd::Identity() + kDilution * r_op;
        Eigen::Matrix4cd next = rd * rho * rd.adjoint();
        next /= next.trace().real();
        rho = 0.5 * (next + next.adjoint());
    }

    TomoResult res{project_to_physical(best)};
    res.fidelity_phi_plus = qstate::fidelity(res.rho, qstate::TwoQubitState::phi_plus());
    res.concurrence = qstate::concurrence(res.rho);
    res.log_likelihood = best_ll;
    res.iterations = it;
    res.converged = converged;
    return res;
}

std::vector<WindowedFidelityRow> windowed_fidelity_series(
    const std::array<SettingTags, kSettings>& tags, double width_ps, double step_ps,
    double center_min_ps, double center_max_ps, double fss_uev) {
    if (width_ps <= 0.0 || step_ps <= 0.0)
        throw qstate::validation_error("windowed_fidelity_series: width and step must be > 0");
    std::vector<WindowedFidelityRow> rows;
    for (double center = center_min_ps; center <= center_max_ps + 1e-9; center += step_ps) {
        WindowedFidelityRow row;
        row.center_ps = center;
        const TomoCounts counts = assemble_counts(tags, corr::Window{center, width_ps});
        row.total_counts = counts.total();
        bool any_zero_setting = false;
        for (int s = 0; s < kSettings; ++s) any_zero_setting |= counts.setting_total(s) == 0;
        if (row.total_counts < 100 || any_zero_setting) {
            row.skipped = true;
            rows.push_back(row);
            continue;
        }
        const TomoResult res = mle_reconstruct(counts);
        row.fidelity_phi_plus = res.fidelity_phi_plus;
        row.concurrence = res.concurrence;
        row.fidelity_max_ent = qstate::fidelity(
            res.rho, qstate::pair_state_at_delay(fss_uev, std::max(0.0, center)));
        rows.push_back(row);
    }
    return rows;
}

double series_oscillation_period(const std::vector<WindowedFidelityRow>& rows) {
    std::vector<double> y;
    double step = 0.0;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].skipped) continue;
        if (!y.empty() && step == 0.0) step = rows[i].center_ps - rows[i - 1].center_ps;
        y.push_back(rows[i].fidelity_phi_plus);
    }
    if (y.size() < 8 || step <= 0.0) return 0.0;
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    for (double& v : y) v -= mean;

    // Zero-padded DFT magnitude; quadratic interpolation around the peak.
    const std::size_t n = y.size();
    const std::size_t nfft = 16 * n;
    auto mag = [&](std::size_t k) {
        double re = 0.0, im = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double ph = -2.0 * std::numbers::pi * static_cast<double>(k * i) /
                              static_cast<double>(nfft);
            re += y[i] * std::cos(ph);
            im += y[i] * std::sin(ph);
        }
        return std::hypot(re, im);
    };
    std::size_t best_k = 1;
    double best_m = -1.0;
    for (std::size_t k = 1; k <= nfft / 2; ++k) {
        const double m = mag(k);
        if (m > best_m) {
            best_m = m;
            best_k = k;
        }
    }
    double k_ref = static_cast<double>(best_k);
    if (best_k > 1 && best_k < nfft / 2) {
        const double m0 = mag(best_k - 1), m1 = best_m, m2 = mag(best_k + 1);
        const double denom = m0 - 2.0 * m1 + m2;
        if (std::abs(denom) > 1e-12) k_ref += 0.5 * (m0 - m2) / denom;
    }
    if (k_ref <= 0.0) return 0.0;
    return static_cast<double>(nfft) * step / k_ref;
}

}  // namespace qrelay::tomo
