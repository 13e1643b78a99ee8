#pragma once

#include <complex>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace qrelay::qstate {

using Complex = std::complex<double>;

// Thrown when a state or density matrix fails its physicality checks.
struct validation_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Single-photon polarisation state (|H>, |V> amplitudes), kept normalized.
// Conventions: D = (H+V)/sqrt2, A = (H-V)/sqrt2, R = (H+iV)/sqrt2, L = (H-iV)/sqrt2.
struct PolState {
    Complex h{1.0, 0.0};
    Complex v{0.0, 0.0};

    PolState() = default;
    PolState(Complex ah, Complex av);

    static PolState horizontal() { return {1, 0}; }
    static PolState vertical() { return {0, 1}; }
    static PolState diagonal();
    static PolState antidiagonal();
    static PolState right_circular();
    static PolState left_circular();

    Eigen::Vector2cd vec() const { return {h, v}; }
    // |<this|other>|^2; global-phase insensitive.
    double overlap(const PolState& other) const;
};

enum class Basis { HV, DA, RL };

Basis basis_from_string(const std::string& s);
std::string to_string(Basis b);

// Eigenstate `outcome` (0 = H/D/R, 1 = V/A/L) of an analyzer basis.
PolState basis_state(Basis b, int outcome);

// Two-photon polarisation state; amplitude order (HH, HV, VH, VV),
// first slot = XX photon, second = X photon.
struct TwoQubitState {
    Eigen::Vector4cd amps;

    TwoQubitState();
    explicit TwoQubitState(const Eigen::Vector4cd& a);

    static TwoQubitState phi_plus();
    static TwoQubitState phi_minus();
    static TwoQubitState psi_plus();
    static TwoQubitState psi_minus();
    static TwoQubitState product(const PolState& xx, const PolState& x);
};

// 4x4 density matrix in the (HH, HV, VH, VV) basis. The constructor
// enforces hermiticity (1e-10), unit trace (1e-10) and positivity
// (eigenvalues >= -1e-10).
class DensityMatrix {
  public:
    explicit DensityMatrix(const Eigen::Matrix4cd& m);

    static DensityMatrix pure(const TwoQubitState& psi);
    static DensityMatrix maximally_mixed();
    // (|HH><HH| + |VV><VV|)/2 -- the phase-averaged classical mixture.
    static DensityMatrix classical_hv_mixture();

    const Eigen::Matrix4cd& matrix() const { return m_; }

    // Reduced state of the XX (first) or X (second) photon.
    Eigen::Matrix2cd reduced_xx() const;
    Eigen::Matrix2cd reduced_x() const;

  private:
    Eigen::Matrix4cd m_;
};

// (|HH> + e^{i phi} |VV>)/sqrt2 with phi = fss*tau/hbar (Eq. of the
// time-evolving cascade state). fss in ueV, tau in ps, both >= 0.
TwoQubitState pair_state_at_delay(double fss_uev, double tau_ps);

// <target|rho|target>, clamped to [0,1].
double fidelity(const DensityMatrix& rho, const TwoQubitState& target);

// Wootters concurrence.
double concurrence(const DensityMatrix& rho);

// Bit flip (sigma_x) applied by heralding on the Psi+ BSM outcome with an
// uncorrected analyzer: H <-> V, A -> A, R -> L (up to global phase).
PolState apply_teleport_correction(const PolState& input);

// Born-rule probability of observing (outcome_xx, outcome_x) when the XX
// photon is analyzed in basis_xx and the X photon in basis_x.
double joint_outcome_probability(const DensityMatrix& rho, Basis basis_xx,
                                 Basis basis_x, int outcome_xx, int outcome_x);

// Multiplies the HH<->VV coherences by `factor` in [0,1].
DensityMatrix dephase_hv_coherence(const DensityMatrix& rho, double factor);

// Projector distance helpers used in tests and the optics chain.
double trace_distance(const Eigen::Matrix2cd& a, const Eigen::Matrix2cd& b);
double trace_distance4(const Eigen::Matrix4cd& a, const Eigen::Matrix4cd& b);

}  // namespace qrelay::qstate
