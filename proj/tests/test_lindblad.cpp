#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "omcv/analysis.hpp"
#include "omcv/lindblad.hpp"
#include "omcv/states.hpp"
#include "oracles.hpp"

using namespace omcv;

TEST_SUITE_BEGIN("lindblad");

TEST_CASE("liouvillian_apply: basics and trace preservation") {
    TensorSpace space = TensorSpace::single(4, "cavity");
    QOperator zero_h(space, Matrix::Zero(4, 4));

    SUBCASE("no Hamiltonian, no collapse: zero derivative") {
        OpenSystem sys(zero_h, {});
        QState one = QState::mixed(space, [] {
            Matrix r = Matrix::Zero(4, 4);
            r(1, 1) = 1.0;
            return r;
        }());
        CHECK(liouvillian_apply(sys, one).norm() == doctest::Approx(0.0));
    }

    SUBCASE("single-photon decay") {
        OpenSystem sys(zero_h, {{annihilation(4), 1.0}});
        QState one = QState::mixed(space, [] {
            Matrix r = Matrix::Zero(4, 4);
            r(1, 1) = 1.0;
            return r;
        }());
        Matrix deriv = liouvillian_apply(sys, one);
        CHECK(deriv(0, 0).real() == doctest::Approx(1.0));
        CHECK(deriv(1, 1).real() == doctest::Approx(-1.0));
        CHECK(std::abs(deriv.trace()) < 1e-14);
    }

    SUBCASE("random density: traceless and Hermitian to 1e-12") {
        std::mt19937_64 rng(5);
        std::uniform_real_distribution<double> coeff(-1.0, 1.0);
        Matrix g(4, 4);
        for (int i = 0; i < 4; ++i)
            for (int j = 0; j < 4; ++j) g(i, j) = Complex(coeff(rng), coeff(rng));
        Matrix rho = g * g.adjoint();
        rho /= rho.trace().real();
        QOperator h(space, [&] {
            Matrix m(4, 4);
            for (int i = 0; i < 4; ++i)
                for (int j = 0; j < 4; ++j) m(i, j) = Complex(coeff(rng), coeff(rng));
            return Matrix((m + m.adjoint()).eval());
        }());
        OpenSystem sys(h, {{annihilation(4), 0.7}, {creation(4), 0.2}});
        Matrix deriv = liouvillian_apply(sys, QState::mixed(space, rho));
        CHECK(std::abs(deriv.trace()) < 1e-12);
        CHECK((deriv - deriv.adjoint()).norm() < 1e-12 * deriv.norm());
    }
}

TEST_CASE("liouvillian_apply agrees with the basis-built superoperator") {
    std::mt19937_64 rng(17);
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    TensorSpace space({2, 3});
    const long long d = space.dim();
    Matrix hm(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) hm(i, j) = Complex(coeff(rng), coeff(rng));
    hm = (hm + hm.adjoint()).eval();
    QOperator h(space, hm);
    QOperator c1 = embed(annihilation(2), 0, space);
    QOperator c2 = embed(annihilation(3), 1, space);
    OpenSystem sys(h, {{c1, 0.8}, {c2, 0.3}});

    Matrix g(d, d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) g(i, j) = Complex(coeff(rng), coeff(rng));
    Matrix rho = g * g.adjoint();
    rho /= rho.trace().real();

    Matrix got = liouvillian_apply(sys, QState::mixed(space, rho));

    oracles::CMat L = oracles::superoperator_by_basis(
        hm, {{c1.matrix(), 0.8}, {c2.matrix(), 0.3}});
    Eigen::Map<Vector> flat(rho.data(), d * d);
    Vector image = L * flat;
    Matrix expected = Eigen::Map<Matrix>(image.data(), d, d);
    CHECK((got - expected).norm() < 1e-12);

    // The library's materialized form must agree with the basis-built one.
    Matrix lib_L = materialized_liouvillian(sys);
    CHECK((lib_L - L).norm() < 1e-12 * L.norm());
}

TEST_CASE("evolve: cavity decay against the analytic law") {
    TensorSpace space = TensorSpace::single(5, "cavity");
    QOperator h(space, Matrix::Zero(5, 5));
    OpenSystem sys(h, {{annihilation(5), 1.0}});
    QState one = QState::mixed(space, [] {
        Matrix r = Matrix::Zero(5, 5);
        r(1, 1) = 1.0;
        return r;
    }());
    std::vector<Observable> obs{{"n", number_operator(5)}};
    EvolutionResult res = evolve(sys, one, 1.0, obs);
    CHECK(res.observable_values[0].back().real() == doctest::Approx(std::exp(-1.0)).epsilon(1e-6));
    CHECK(res.diagnostics.max_trace_drift < 1e-6);
    CHECK(res.diagnostics.min_eigenvalue > -1e-6);

    SUBCASE("fixed-step mode matches") {
        EvolutionOptions fixed;
        fixed.stepper = EvolutionOptions::Stepper::Fixed;
        EvolutionResult res2 = evolve(sys, one, 1.0, obs, fixed);
        CHECK(res2.observable_values[0].back().real() ==
              doctest::Approx(std::exp(-1.0)).epsilon(1e-6));
    }
}

TEST_CASE("evolve: zero generator is the identity map") {
    TensorSpace space = TensorSpace::single(4);
    OpenSystem sys(QOperator(space, Matrix::Zero(4, 4)), {});
    QState start = QState::mixed(space, [] {
        Matrix r = Matrix::Zero(4, 4);
        r(0, 0) = 0.25;
        r(1, 1) = 0.75;
        r(0, 1) = r(1, 0) = 0.2;
        return r;
    }());
    EvolutionResult res = evolve(sys, start, 2.0);
    CHECK((res.final_state.density() - start.density()).norm() < 1e-12);
}

TEST_CASE("evolve: sideband cooling pulls the thermal occupation down") {
    // kappa >> beta beam splitter drains the mechanical mode.
    TensorSpace space = TensorSpace::cavity_mechanics(3, {6});
    const double beta = 0.1, kappa = 1.0;
    DriveSet drives = DriveSet::single(beta);
    QOperator h = rwa_hamiltonian(drives, space);
    OpenSystem sys(h, standard_dissipators(space, kappa, RealVector::Zero(1),
                                           RealVector::Zero(1)));
    QState cavity = QState::pure(TensorSpace::single(3, "cavity"), Vector::Unit(3, 0));
    QState mech = thermal_state(1.0, 6, StateOptions{0.05, 1 << 21});
    QState start = tensor(cavity, mech);

    QOperator n_mech = embed(number_operator(6), 1, space);
    std::vector<Observable> obs{{"n_mech", n_mech}};
    EvolutionResult res = evolve(sys, start, 120.0, obs);
    CHECK(res.observable_values[0].back().real() < 0.02);

    // Small-dim Liouvillian eigen-oracle: the steady state has the mode empty.
    oracles::CMat rho_ss = oracles::steady_state_by_eigen(
        h.matrix(), {{std::sqrt(kappa) * embed(annihilation(3), 0, space).matrix(), 1.0}});
    const Complex n_ss = (n_mech.matrix() * rho_ss).trace();
    CHECK(std::abs(n_ss) < 1e-8);
}

TEST_CASE("evolve: trace and positivity stay within tolerance on a driven system") {
    TensorSpace space = TensorSpace::cavity_mechanics(4, {8});
    DriveSet drives = cubic_drive_couplings(1.0, 0.33, 0.1);
    OpenSystem sys(rwa_hamiltonian(drives, space),
                   standard_dissipators(space, 10.0, RealVector::Zero(1), RealVector::Zero(1)));
    QState start = QState::pure(space, Vector::Unit(space.dim(), 0));
    EvolutionOptions opts;
    opts.positivity_checks = 5;
    EvolutionResult res = evolve(sys, start, 5.0, {}, opts);
    CHECK(res.diagnostics.max_trace_drift < 1e-6);
    CHECK(res.diagnostics.min_eigenvalue > -1e-6);
}

TEST_CASE("steady state: both solvers give the cavity vacuum under pure decay") {
    TensorSpace space = TensorSpace::single(4, "cavity");
    OpenSystem sys(QOperator(space, Matrix::Zero(4, 4)), {{annihilation(4), 0.5}});

    QState null_ss = steady_state_nullspace(sys);
    CHECK(null_ss.density()(0, 0).real() == doctest::Approx(1.0).epsilon(1e-9));

    SteadyStateOptions opts;
    opts.method = SteadyStateOptions::Method::Integrate;
    opts.max_time = 80.0;
    opts.initial = thermal_state(0.7, 4, StateOptions{0.1, 1 << 21});
    QState int_ss = steady_state_integrate(sys, opts);
    CHECK(state_fidelity(null_ss, int_ss) > 1.0 - 1e-6);
}

TEST_CASE("steady state: solvers agree on a driven-dissipative system") {
    TensorSpace space = TensorSpace::cavity_mechanics(3, {8});
    DriveSet drives = cubic_drive_couplings(1.0, 0.3, 0.05);
    OpenSystem sys(rwa_hamiltonian(drives, space),
                   standard_dissipators(space, 10.0, RealVector::Zero(1), RealVector::Zero(1)));

    QState via_null = steady_state_nullspace(sys);

    SteadyStateOptions opts;
    opts.method = SteadyStateOptions::Method::Integrate;
    opts.max_time = 120.0;
    opts.checkpoint_interval = 6.0;
    QState via_time = steady_state_integrate(sys, opts);

    CHECK(state_fidelity(via_null, via_time) > 1.0 - 1e-6);

    // Residual contract.
    CHECK(liouvillian_apply(sys, via_null).norm() <
          1e-8 * sys.hamiltonian_frobenius() * 1.01);
}

TEST_CASE("steady state: contraction to a unique fixed point from distinct starts") {
    TensorSpace space = TensorSpace::cavity_mechanics(3, {8});
    DriveSet drives = cubic_drive_couplings(1.0, 0.3, 0.05);
    OpenSystem sys(rwa_hamiltonian(drives, space),
                   standard_dissipators(space, 10.0, RealVector::Zero(1), RealVector::Zero(1)));

    SteadyStateOptions opts;
    opts.method = SteadyStateOptions::Method::Integrate;
    opts.max_time = 150.0;
    opts.checkpoint_interval = 7.5;

    QState from_vacuum = steady_state_integrate(sys, opts);

    QState cavity = QState::pure(TensorSpace::single(3, "cavity"), Vector::Unit(3, 0));
    opts.initial = tensor(cavity, thermal_state(0.4, 8, StateOptions{0.05, 1 << 21}));
    QState from_thermal = steady_state_integrate(sys, opts);

    const double mech_fid = state_fidelity(partial_trace(from_vacuum, {1}),
                                           partial_trace(from_thermal, {1}));
    CHECK(mech_fid > 1.0 - 1e-4);
}

TEST_CASE("steady state: non-convergence within the budget is reported") {
    TensorSpace space = TensorSpace::cavity_mechanics(3, {6});
    DriveSet drives = DriveSet::single(1.0, -0.3);
    OpenSystem sys(rwa_hamiltonian(drives, space),
                   standard_dissipators(space, 10.0, RealVector::Zero(1), RealVector::Zero(1)));
    SteadyStateOptions opts;
    opts.method = SteadyStateOptions::Method::Integrate;
    opts.max_time = 0.5;  // far below the relaxation time
    try {
        steady_state_integrate(sys, opts);
        FAIL("expected NumericalError");
    } catch (const NumericalError& err) {
        CHECK(err.residual > 0.0);
    }
}

TEST_CASE("materialized liouvillian refuses oversized spaces") {
    TensorSpace space = TensorSpace::cavity_mechanics(4, {20});
    OpenSystem sys(QOperator(space, Matrix::Zero(space.dim(), space.dim())),
                   standard_dissipators(space, 1.0, RealVector::Zero(1), RealVector::Zero(1)));
    CHECK_THROWS_AS(materialized_liouvillian(sys), ResourceError);
}

TEST_CASE("partial trace") {
    TensorSpace cav = TensorSpace::single(3, "cavity");
    TensorSpace mech = TensorSpace::single(4, "mech1");

    SUBCASE("keep-all is the identity") {
        QState s = QState::pure(cav, Vector::Unit(3, 1));
        QState out = partial_trace(s, {0});
        CHECK(out.is_pure());
        CHECK((out.vector() - s.vector()).norm() == doctest::Approx(0.0));
    }

    SUBCASE("product state reduces exactly") {
        QState a = QState::pure(cav, Vector::Unit(3, 1));
        QState b = thermal_state(0.6, 4, StateOptions{0.1, 1 << 21});
        QState joint = tensor(a, b);
        QState red = partial_trace(joint, {1});
        CHECK((red.to_density() - b.to_density()).norm() < 1e-12);
    }

    SUBCASE("Bell-like state reduces to the maximally mixed state") {
        TensorSpace two({2, 2});
        Vector bell = Vector::Zero(4);
        bell(0) = bell(3) = 1.0 / std::numbers::sqrt2;
        QState state = QState::pure(two, bell);
        QState red = partial_trace(state, {0});
        Matrix expected = 0.5 * Matrix::Identity(2, 2);
        CHECK((red.to_density() - expected).norm() < 1e-12);
        // Entropy check: both eigenvalues 1/2.
        Eigen::SelfAdjointEigenSolver<Matrix> es(red.to_density(), Eigen::EigenvaluesOnly);
        CHECK(es.eigenvalues()(0) == doctest::Approx(0.5));
    }

    SUBCASE("bad mode indices are rejected") {
        QState s = QState::pure(cav, Vector::Unit(3, 0));
        CHECK_THROWS_AS(partial_trace(s, {2}), DimensionError);
        CHECK_THROWS_AS(partial_trace(s, {}), DimensionError);
    }
}

TEST_CASE("expectation values") {
    TensorSpace space = TensorSpace::single(8);
    QState two = QState::pure(space, Vector::Unit(8, 2));
    CHECK(expectation(number_operator(8), two).real() == doctest::Approx(2.0));
    CHECK(expectation(single_mode_identity(8), two).real() == doctest::Approx(1.0));

    QState sq = squeezed_vacuum(2.0, 40);
    QOperator q = position_quadrature(40);
    CHECK(expectation(q * q, sq).real() == doctest::Approx(2.0).epsilon(1e-6));

    CHECK_THROWS_AS(expectation(number_operator(4), two), DimensionError);
}

TEST_CASE("state fidelity covers pure and mixed combinations") {
    TensorSpace space = TensorSpace::single(6);
    QState zero = QState::pure(space, Vector::Unit(6, 0));
    QState one = QState::pure(space, Vector::Unit(6, 1));
    CHECK(state_fidelity(zero, zero) == doctest::Approx(1.0));
    CHECK(state_fidelity(zero, one) == doctest::Approx(0.0));

    TensorSpace wide = TensorSpace::single(30);
    QState zero30 = QState::pure(wide, Vector::Unit(30, 0));
    QState th = thermal_state(1.0, 30);
    CHECK(state_fidelity(zero30, th) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-8));

    // Uhlmann fidelity of a state with itself.
    CHECK(state_fidelity(th, th) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_SUITE_END();
