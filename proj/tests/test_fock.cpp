#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "omcv/fock.hpp"
#include "oracles.hpp"

using namespace omcv;

TEST_SUITE_BEGIN("fock");

TEST_CASE("annihilation ladder action") {
    QOperator b2 = annihilation(2);
    CHECK(b2.matrix()(0, 1).real() == doctest::Approx(1.0));  // b|1> = |0>

    QOperator b5 = annihilation(5);
    Vector four = Vector::Unit(5, 4);
    Vector lowered = b5.matrix() * four;
    CHECK(lowered(3).real() == doctest::Approx(2.0));  // b|4> = 2|3>

    Vector vac = Vector::Unit(5, 0);
    CHECK((b5.matrix() * vac).norm() == doctest::Approx(0.0));

    CHECK_THROWS_AS(annihilation(1), DimensionError);
}

TEST_CASE("quadratures and canonical commutator") {
    auto [q, p] = quadratures(8);
    CHECK(q.is_hermitian());
    CHECK(p.is_hermitian());

    Vector vac = Vector::Unit(8, 0);
    CHECK(vac.dot(q.matrix() * vac).real() == doctest::Approx(0.0));
    CHECK(vac.dot(q.matrix() * q.matrix() * vac).real() == doctest::Approx(0.5));

    Matrix comm = q.matrix() * p.matrix() - p.matrix() * q.matrix();
    for (int n = 0; n < 7; ++n) {
        CHECK(comm(n, n).imag() == doctest::Approx(1.0).epsilon(1e-12));
        CHECK(comm(n, n).real() == doctest::Approx(0.0));
    }
}

TEST_CASE("rotated quadrature limits") {
    auto [q, p] = quadratures(10);
    CHECK((rotated_quadrature(10, 0.0).matrix() - q.matrix()).norm() < 1e-14);
    CHECK((rotated_quadrature(10, std::numbers::pi / 2).matrix() - p.matrix()).norm() < 1e-14);
    Matrix diag45 = (q.matrix() + p.matrix()) / std::numbers::sqrt2;
    CHECK((rotated_quadrature(10, std::numbers::pi / 4).matrix() - diag45).norm() < 1e-14);
}

TEST_CASE("embed places operators with cavity-first ordering") {
    TensorSpace two({2, 2});
    QOperator b = annihilation(2);
    Matrix expected = oracles::kron(Matrix::Identity(2, 2), b.matrix());
    CHECK((embed(b, 1, two).matrix() - expected).norm() < 1e-15);

    TensorSpace three({2, 3, 4});
    CHECK((embed(single_mode_identity(3), 1, three).matrix() -
           Matrix::Identity(24, 24)).norm() < 1e-15);

    QOperator q1 = embed(position_quadrature(3), 1, three);
    QOperator p2 = embed(momentum_quadrature(4), 2, three);
    CHECK((q1.matrix() * p2.matrix() - p2.matrix() * q1.matrix()).norm() < 1e-14);

    CHECK_THROWS_AS(embed(annihilation(3), 0, two), DimensionError);
}

TEST_CASE("embed preserves spectra with multiplicity") {
    TensorSpace space({3, 4});
    QOperator n = number_operator(4);
    QOperator lifted = embed(n, 1, space);
    Eigen::SelfAdjointEigenSolver<Matrix> es(lifted.matrix(), Eigen::EigenvaluesOnly);
    // Eigenvalues 0,1,2,3 each with multiplicity 3.
    for (int v = 0; v < 4; ++v)
        for (int copy = 0; copy < 3; ++copy)
            CHECK(es.eigenvalues()(v * 3 + copy) == doctest::Approx(v).epsilon(1e-12));
}

TEST_CASE("two_mode_embed equals the product of embeds") {
    TensorSpace space({3, 4, 5});
    QOperator a = creation(3);
    QOperator m = annihilation(5);
    Matrix direct = two_mode_embed(a, 0, m, 2, space).matrix();
    Matrix via_product = (embed(a, 0, space) * embed(m, 2, space)).matrix();
    CHECK((direct - via_product).norm() < 1e-14);
}

TEST_CASE("matrix_exp basics") {
    QOperator n = number_operator(6);
    CHECK((matrix_exp(n, 0.0).matrix() - Matrix::Identity(6, 6)).norm() < 1e-14);

    QOperator phase = matrix_exp(n, kI * std::numbers::pi);
    Vector one = Vector::Unit(6, 1);
    CHECK((phase.matrix() * one + one).norm() < 1e-12);  // e^{i pi n}|1> = -|1>

    CHECK_THROWS_AS(
        matrix_exp(n, Complex(std::numeric_limits<double>::infinity(), 0.0)), DomainError);
}

TEST_CASE("matrix_exp of the cubic generator matches the eigendecomposition oracle") {
    const int cutoff = 20;
    QOperator q = position_quadrature(cutoff);
    QOperator q3 = q * q * q;
    QOperator u = matrix_exp(q3, kI * 0.1);

    Matrix udu = u.matrix().adjoint() * u.matrix();
    CHECK((udu - Matrix::Identity(cutoff, cutoff)).norm() < 1e-9);

    // Independent oracle: diagonalize the Hermitian generator directly.
    Eigen::SelfAdjointEigenSolver<Matrix> es(q3.matrix());
    Vector phases(cutoff);
    for (int k = 0; k < cutoff; ++k) phases(k) = std::exp(kI * (0.1 * es.eigenvalues()(k)));
    Matrix expected = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
    CHECK((u.matrix() - expected).norm() < 1e-11);
}

TEST_CASE("matrix_exp is unitary for random Hermitian generators") {
    std::mt19937_64 rng(42);
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 8;
        Matrix g(d, d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) g(i, j) = Complex(coeff(rng), coeff(rng));
        g = (g + g.adjoint()).eval();
        const double theta = 10.0 * coeff(rng);
        QOperator u = matrix_exp(QOperator(TensorSpace::single(d), g), kI * theta);
        CHECK((u.matrix().adjoint() * u.matrix() - Matrix::Identity(d, d)).norm() < 1e-9);
    }
}

TEST_CASE("matrix_exp general fallback satisfies exp(A)exp(-A) = I") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> coeff(-0.5, 0.5);
    Matrix a(6, 6);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 6; ++j) a(i, j) = Complex(coeff(rng), coeff(rng));
    QOperator op(TensorSpace::single(6), a);
    Matrix prod = matrix_exp(op, 1.0).matrix() * matrix_exp(op, -1.0).matrix();
    CHECK((prod - Matrix::Identity(6, 6)).norm() < 1e-12);
}

TEST_CASE("hermite functions: values, orthogonality, recurrence") {
    auto psi0 = hermite_functions(0.0, 3);
    CHECK(psi0[0] == doctest::Approx(0.7511255444649425).epsilon(1e-12));  // pi^{-1/4}
    CHECK(psi0[1] == doctest::Approx(0.0));

    // Quadrature oracle for <psi_0|psi_2> = 0.
    const double overlap = oracles::trapezoid(
        [](double m) {
            auto psi = hermite_functions(m, 3);
            return psi[0] * psi[2];
        },
        -12.0, 12.0, 4001);
    CHECK(std::abs(overlap) < 1e-6);

    // Normalization of psi_5 as an extra quadrature check.
    const double norm5 = oracles::trapezoid(
        [](double m) {
            auto psi = hermite_functions(m, 6);
            return psi[5] * psi[5];
        },
        -12.0, 12.0, 4001);
    CHECK(norm5 == doctest::Approx(1.0).epsilon(1e-9));

    // Recurrence consistency at scattered points.
    for (double m : {-2.7, -0.4, 0.0, 1.3, 3.9}) {
        auto psi = hermite_functions(m, 24);
        for (int n = 1; n + 1 < 24; ++n) {
            const double rhs = (std::numbers::sqrt2 * m * psi[n] - std::sqrt(double(n)) * psi[n - 1]) /
                               std::sqrt(double(n + 1));
            CHECK(psi[n + 1] == doctest::Approx(rhs).epsilon(1e-10));
        }
    }
}

TEST_CASE("quadrature eigenvector satisfies Q_phi v = m v on low Fock components") {
    const int cutoff = 40;
    for (double phi : {0.0, 0.7, std::numbers::pi / 2, 2.1}) {
        for (double m : {-1.2, 0.3, 2.0}) {
            Vector v = quadrature_eigenvector(m, phi, cutoff);
            Matrix qphi = rotated_quadrature(cutoff, phi).matrix();
            Vector resid = qphi * v - m * v;
            // The truncation error lives in the top components.
            CHECK(resid.head(cutoff - 8).norm() < 1e-8 * v.norm());
        }
    }
}

TEST_CASE("state validation enforces the declared invariants") {
    TensorSpace s = TensorSpace::single(3);
    Vector bad = Vector::Ones(3);
    CHECK_THROWS_AS(QState::pure(s, bad), DomainError);

    Matrix rho = Matrix::Zero(3, 3);
    rho(0, 0) = 0.9;  // trace 0.9
    CHECK_THROWS_AS(QState::mixed(s, rho), DomainError);

    rho(1, 1) = 0.1;
    rho(0, 1) = 0.5;  // not Hermitian
    CHECK_THROWS_AS(QState::mixed(s, rho), DomainError);

    rho(0, 1) = 0.0;
    CHECK_NOTHROW(QState::mixed(s, rho));
}

TEST_CASE("tensor products compose spaces cavity-first") {
    QState cav = QState::pure(TensorSpace::single(2, "cavity"), Vector::Unit(2, 1));
    QState mech = QState::pure(TensorSpace::single(3, "mech1"), Vector::Unit(3, 0));
    QState joint = tensor(cav, mech);
    CHECK(joint.space().dim() == 6);
    CHECK(std::abs(joint.vector()(3) - 1.0) < 1e-15);  // |1>|0> at index 1*3+0

    QState joint_mixed = tensor(cav, QState::mixed(TensorSpace::single(3), [] {
        Matrix r = Matrix::Zero(3, 3);
        r(0, 0) = 0.5;
        r(1, 1) = 0.5;
        return r;
    }()));
    CHECK(joint_mixed.to_density().trace().real() == doctest::Approx(1.0));
}

TEST_CASE("apply_single_mode matches embed multiplication") {
    TensorSpace space({3, 4, 2});
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> coeff(-1.0, 1.0);
    Vector psi(space.dim());
    for (Eigen::Index i = 0; i < psi.size(); ++i) psi(i) = Complex(coeff(rng), coeff(rng));
    psi /= psi.norm();

    Matrix op(4, 4);
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < 4; ++j) op(i, j) = Complex(coeff(rng), coeff(rng));

    Vector expected = embed(QOperator(TensorSpace::single(4), op), 1, space).matrix() * psi;
    Vector actual = psi;
    apply_single_mode(op, 1, space, actual);
    CHECK((expected - actual).norm() < 1e-13);
}

TEST_SUITE_END();
