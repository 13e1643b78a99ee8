#include "qrelay/qstate.hpp"

#include <algorithm>
#include <cmath>

#include "qrelay/units.hpp"

namespace qrelay::qstate {

namespace {
constexpr double kNormTol = 1e-12;
constexpr double kHermTol = 1e-10;

const Complex kI{0.0, 1.0};
}  // namespace

PolState::PolState(Complex ah, Complex av) : h(ah), v(av) {
    const double n2 = std::norm(h) + std::norm(v);
    if (n2 <= 0.0) throw validation_error("PolState: zero vector");
    if (std::abs(n2 - 1.0) > kNormTol) {
        const double n = std::sqrt(n2);
        h /= n;
        v /= n;
    }
}

PolState PolState::diagonal() { return {Complex{1}, Complex{1}}; }
PolState PolState::antidiagonal() { return {Complex{1}, Complex{-1}}; }
PolState PolState::right_circular() { return {Complex{1}, kI}; }
PolState PolState::left_circular() { return {Complex{1}, -kI}; }

double PolState::overlap(const PolState& other) const {
    return std::norm(std::conj(h) * other.h + std::conj(v) * other.v);
}

Basis basis_from_string(const std::string& s) {
    if (s == "HV" || s == "hv") return Basis::HV;
    if (s == "DA" || s == "da") return Basis::DA;
    if (s == "RL" || s == "rl") return Basis::RL;
    throw validation_error("unknown analyzer basis: " + s);
}

std::string to_string(Basis b) {
    switch (b) {
        case Basis::HV: return "HV";
        case Basis::DA: return "DA";
        case Basis::RL: return "RL";
    }
    return "?";
}

PolState basis_state(Basis b, int outcome) {
    if (outcome != 0 && outcome != 1) throw validation_error("outcome must be 0 or 1");
    switch (b) {
        case Basis::HV: return outcome == 0 ? PolState::horizontal() : PolState::vertical();
        case Basis::DA: return outcome == 0 ? PolState::diagonal() : PolState::antidiagonal();
        case Basis::RL: return outcome == 0 ? PolState::right_circular() : PolState::left_circular();
    }
    throw validation_error("invalid basis");
}

TwoQubitState::TwoQubitState() : amps(Eigen::Vector4cd::Zero()) { amps(0) = 1.0; }

TwoQubitState::TwoQubitState(const Eigen::Vector4cd& a) : amps(a) {
    const double n2 = amps.squaredNorm();
    if (n2 <= 0.0) throw validation_error("TwoQubitState: zero vector");
    if (std::abs(n2 - 1.0) > kNormTol) amps /= std::sqrt(n2);
}

TwoQubitState TwoQubitState::phi_plus() {
    Eigen::Vector4cd a{1, 0, 0, 1};
    return TwoQubitState{a / std::sqrt(2.0)};
}
TwoQubitState TwoQubitState::phi_minus() {
    Eigen::Vector4cd a{1, 0, 0, -1};
    return TwoQubitState{a / std::sqrt(2.0)};
}
TwoQubitState TwoQubitState::psi_plus() {
    Eigen::Vector4cd a{0, 1, 1, 0};
    return TwoQubitState{a / std::sqrt(2.0)};
}
TwoQubitState TwoQubitState::psi_minus() {
    Eigen::Vector4cd a{0, 1, -1, 0};
    return TwoQubitState{a / std::sqrt(2.0)};
}

TwoQubitState TwoQubitState::product(const PolState& xx, const PolState& x) {
    Eigen::Vector4cd a;
    a << xx.h * x.h, xx.h * x.v, xx.v * x.h, xx.v * x.v;
    return TwoQubitState{a};
}

DensityMatrix::DensityMatrix(const Eigen::Matrix4cd& m) : m_(m) {
    if ((m_ - m_.adjoint()).cwiseAbs().maxCoeff() > kHermTol)
        throw validation_error("DensityMatrix: not Hermitian");
    if (std::abs(m_.trace().real() - 1.0) > kHermTol || std::abs(m_.trace().imag()) > kHermTol)
        throw validation_error("DensityMatrix: trace != 1");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix4cd> es(m_, Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-10)
        throw validation_error("DensityMatrix: negative eigenvalue");
}

DensityMatrix DensityMatrix::pure(const TwoQubitState& psi) {
    return DensityMatrix{psi.amps * psi.amps.adjoint()};
}

DensityMatrix DensityMatrix::maximally_mixed() {
    return DensityMatrix{Eigen::Matrix4cd::Identity() * 0.25};
}

DensityMatrix DensityMatrix::classical_hv_mixture() {
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Zero();
    m(0, 0) = 0.5;
    m(3, 3) = 0.5;
    return DensityMatrix{m};
}

Eigen::Matrix2cd DensityMatrix::reduced_xx() const {
    Eigen::Matrix2cd r;
    r(0, 0) = m_(0, 0) + m_(1, 1);
    r(0, 1) = m_(0, 2) + m_(1, 3);
    r(1, 0) = m_(2, 0) + m_(3, 1);
    r(1, 1) = m_(2, 2) + m_(3, 3);
    return r;
}

Eigen::Matrix2cd DensityMatrix::reduced_x() const {
    Eigen::Matrix2cd r;
    r(0, 0) = m_(0, 0) + m_(2, 2);
    r(0, 1) = m_(0, 1) + m_(2, 3);
    r(1, 0) = m_(1, 0) + m_(3, 2);
    r(1, 1) = m_(1, 1) + m_(3, 3);
    return r;
}

TwoQubitState pair_state_at_delay(double fss_uev, double tau_ps) {
    if (tau_ps < 0.0 || fss_uev < 0.0)
        throw validation_error("pair_state_at_delay: fss and tau must be >= 0");
    const double phi = constants::fss_phase(fss_uev, tau_ps);
    Eigen::Vector4cd a{1, 0, 0, std::exp(kI * phi)};
    return TwoQubitState{a / std::sqrt(2.0)};
}

double fidelity(const DensityMatrix& rho, const TwoQubitState& target) {
    const Complex f = target.amps.adjoint() * rho.matrix() * target.amps;
    return std::clamp(f.real(), 0.0, 1.0);
}

namespace {
Eigen::Matrix4cd sigma_y_tensor_sigma_y() {
    Eigen::Matrix4cd s = Eigen::Matrix4cd::Zero();
    // sigma_y (x) sigma_y in the (HH, HV, VH, VV) basis
    s(0, 3) = -1;
    s(1, 2) = 1;
    s(2, 1) = 1;
    s(3, 0) = -1;
    return s;
}
}  // namespace

double concurrence(const DensityMatrix& rho) {
    static const Eigen::Matrix4cd yy = sigma_y_tensor_sigma_y();
    const Eigen::Matrix4cd& r = rho.matrix();
    const Eigen::Matrix4cd m = r * yy * r.conjugate() * yy;
    Eigen::ComplexEigenSolver<Eigen::Matrix4cd> es(m, false);
    std::array<double, 4> lam{};
    for (int i = 0; i < 4; ++i) lam[i] = std::sqrt(std::max(0.0, es.eigenvalues()(i).real()));
    std::sort(lam.begin(), lam.end(), std::greater<>());
    return std::clamp(lam[0] - lam[1] - lam[2] - lam[3], 0.0, 1.0);
}

PolState apply_teleport_correction(const PolState& input) {
    return PolState{input.v, input.h};
}

double joint_outcome_probability(const DensityMatrix& rho, Basis basis_xx, Basis basis_x,
                                 int outcome_xx, int outcome_x) {
    const TwoQubitState proj =
        TwoQubitState::product(basis_state(basis_xx, outcome_xx), basis_state(basis_x, outcome_x));
    return fidelity(rho, proj);
}

DensityMatrix dephase_hv_coherence(const DensityMatrix& rho, double factor) {
    if (factor < 0.0 || factor > 1.0)
        throw validation_error("dephase_hv_coherence: factor must be in [0,1]");
    Eigen::Matrix4cd m = rho.matrix();
    m(0, 3) *= factor;
    m(3, 0) *= factor;
    return DensityMatrix{m};
}

namespace {
template <typename Mat>
double trace_distance_impl(const Mat& a, const Mat& b) {
    Eigen::SelfAdjointEigenSolver<Mat> es(a - b, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}
}  // namespace

double trace_distance(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b) {
    return trace_distance_impl(a, b);
}

double trace_distance4(const Eigen::Matrix4cd& a, const Eigen::Matrix4cd& b) {
    return trace_distance_impl(a, b);
}

}  // namespace qrelay::qstate
