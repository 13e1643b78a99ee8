#include <cmath>
#include <random>

#include "doctest.h"
#include "qrelay/qstate.hpp"

using namespace qrelay::qstate;

TEST_CASE("basis states are the standard cardinal states") {
    CHECK(basis_state(Basis::HV, 0).overlap(PolState::horizontal()) == doctest::Approx(1.0));
    CHECK(basis_state(Basis::HV, 1).overlap(PolState::vertical()) == doctest::Approx(1.0));
    CHECK(basis_state(Basis::DA, 0).overlap(PolState::diagonal()) == doctest::Approx(1.0));
    CHECK(basis_state(Basis::DA, 1).overlap(PolState::antidiagonal()) == doctest::Approx(1.0));
    CHECK(basis_state(Basis::RL, 0).overlap(PolState::right_circular()) == doctest::Approx(1.0));
    CHECK(basis_state(Basis::RL, 1).overlap(PolState::left_circular()) == doctest::Approx(1.0));
    // mutually unbiased
    CHECK(PolState::horizontal().overlap(PolState::diagonal()) == doctest::Approx(0.5));
    CHECK(PolState::diagonal().overlap(PolState::right_circular()) == doctest::Approx(0.5));
}

TEST_CASE("pair state phase evolution") {
    // phi = fss * tau / hbar; one full turn at 2*pi*hbar/fss = 667.09 ps
    const double period = 2.0 * M_PI * 658.2119569 / 6.2;
    CHECK(period == doctest::Approx(667.09).epsilon(1e-4));

    const auto at = [](double tau) {
        return fidelity(DensityMatrix::pure(pair_state_at_delay(6.2, tau)),
                        TwoQubitState::phi_plus());
    };
    CHECK(at(0.0) == doctest::Approx(1.0));
    CHECK(at(period) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(at(period / 2.0) == doctest::Approx(0.0).epsilon(1e-9));
    // zero splitting freezes the state
    CHECK(fidelity(DensityMatrix::pure(pair_state_at_delay(0.0, 1e6)),
                   TwoQubitState::phi_plus()) == doctest::Approx(1.0));
}

TEST_CASE("Werner state concurrence is (3p-1)/2") {
    for (double p : {0.0, 0.2, 1.0 / 3.0, 0.5, 0.8, 1.0}) {
        const Eigen::Matrix4cd w =
            p * DensityMatrix::pure(TwoQubitState::phi_plus()).matrix() +
            (1.0 - p) * 0.25 * Eigen::Matrix4cd::Identity();
        const double expected = std::max(0.0, (3.0 * p - 1.0) / 2.0);
        CHECK(concurrence(DensityMatrix(w)) == doctest::Approx(expected).epsilon(1e-10));
    }
}

TEST_CASE("Bell states: unit concurrence, orthogonal fidelities") {
    const TwoQubitState bells[4] = {TwoQubitState::phi_plus(), TwoQubitState::phi_minus(),
                                    TwoQubitState::psi_plus(), TwoQubitState::psi_minus()};
    for (int i = 0; i < 4; ++i) {
        CHECK(concurrence(DensityMatrix::pure(bells[i])) == doctest::Approx(1.0));
        for (int j = 0; j < 4; ++j)
            CHECK(fidelity(DensityMatrix::pure(bells[i]), bells[j]) ==
                  doctest::Approx(i == j ? 1.0 : 0.0));
    }
    CHECK(concurrence(DensityMatrix::maximally_mixed()) == doctest::Approx(0.0));
    CHECK(concurrence(DensityMatrix::classical_hv_mixture()) == doctest::Approx(0.0));
}

TEST_CASE("teleport correction is a bit flip and an involution") {
    CHECK(apply_teleport_correction(PolState::horizontal()).overlap(PolState::vertical()) ==
          doctest::Approx(1.0));
    CHECK(apply_teleport_correction(PolState::diagonal()).overlap(PolState::diagonal()) ==
          doctest::Approx(1.0));
    CHECK(apply_teleport_correction(PolState::right_circular())
              .overlap(PolState::left_circular()) == doctest::Approx(1.0));
    std::mt19937_64 gen(7);
    std::normal_distribution<double> n;
    for (int i = 0; i < 20; ++i) {
        const PolState s{{n(gen), n(gen)}, {n(gen), n(gen)}};
        CHECK(apply_teleport_correction(apply_teleport_correction(s)).overlap(s) ==
              doctest::Approx(1.0));
    }
}

TEST_CASE("joint outcome probabilities follow the Born rule") {
    const auto rho = DensityMatrix::pure(TwoQubitState::phi_plus());
    // phi+ correlations: same outcome in HV and DA, opposite in RL
    CHECK(joint_outcome_probability(rho, Basis::HV, Basis::HV, 0, 0) == doctest::Approx(0.5));
    CHECK(joint_outcome_probability(rho, Basis::HV, Basis::HV, 0, 1) == doctest::Approx(0.0));
    CHECK(joint_outcome_probability(rho, Basis::DA, Basis::DA, 1, 1) == doctest::Approx(0.5));
    CHECK(joint_outcome_probability(rho, Basis::RL, Basis::RL, 0, 0) == doctest::Approx(0.0));
    CHECK(joint_outcome_probability(rho, Basis::RL, Basis::RL, 0, 1) == doctest::Approx(0.5));
    double total = 0.0;
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            total += joint_outcome_probability(rho, Basis::HV, Basis::RL, a, b);
    CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("dephasing kills concurrence of phi+") {
    const auto rho = DensityMatrix::pure(TwoQubitState::phi_plus());
    CHECK(concurrence(dephase_hv_coherence(rho, 0.0)) == doctest::Approx(0.0));
    CHECK(concurrence(dephase_hv_coherence(rho, 0.4)) == doctest::Approx(0.4));
    CHECK(concurrence(dephase_hv_coherence(rho, 1.0)) == doctest::Approx(1.0));
}

TEST_CASE("density matrix constructor rejects unphysical input") {
    Eigen::Matrix4cd m = Eigen::Matrix4cd::Identity();  // trace 4
    CHECK_THROWS_AS(DensityMatrix{m}, validation_error);
    m = 0.25 * Eigen::Matrix4cd::Identity();
    m(0, 1) = 1.0;  // not hermitian
    CHECK_THROWS_AS(DensityMatrix{m}, validation_error);
    m = Eigen::Matrix4cd::Zero();
    m(0, 0) = 1.5;
    m(1, 1) = -0.5;  // negative eigenvalue
    CHECK_THROWS_AS(DensityMatrix{m}, validation_error);
}
