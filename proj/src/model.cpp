#include "omcv/model.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace omcv {

DriveSet DriveSet::single(Complex g1, Complex g2, Complex g3, Complex g4, Complex g5) {
    DriveSet d;
    d.modes.push_back({g1, g2, g3, g4, g5});
    return d;
}

void DriveSet::check_finite() const {
    for (const auto& m : modes)
        for (Complex g : {m.g1, m.g2, m.g3, m.g4, m.g5})
            if (!std::isfinite(g.real()) || !std::isfinite(g.imag()))
                throw DomainError("DriveSet couplings must be finite");
}

void PhysicalParams::validate() const {
    const auto n = Omega.size();
    if (Gamma_m.size() != n || nbar.size() != n || G_L.size() != n || G_Q.size() != n)
        throw DimensionError("PhysicalParams: per-mode vectors must have equal length");
    if (!(kappa > 0.0)) throw DomainError("PhysicalParams: kappa must be > 0");
    for (Eigen::Index j = 0; j < n; ++j) {
        if (!(Omega(j) > 0.0)) throw DomainError("PhysicalParams: Omega must be > 0");
        if (Gamma_m(j) < 0.0) throw DomainError("PhysicalParams: Gamma_m must be >= 0");
        if (nbar(j) < 0.0) throw DomainError("PhysicalParams: nbar must be >= 0");
    }
}

PhysicalParams PhysicalParams::rates(double kappa, RealVector Gamma_m, RealVector nbar) {
    PhysicalParams p;
    const auto n = Gamma_m.size();
    p.Omega = RealVector::Ones(n);
    p.kappa = kappa;
    p.Gamma_m = std::move(Gamma_m);
    p.nbar = std::move(nbar);
    p.G_L = RealVector::Ones(n);
    p.G_Q = RealVector::Ones(n);
    p.validate();
    return p;
}

namespace {

// g1 b + g2 b^dag + g3 b^2 + g4 b^dag^2 + g5 {b, b^dag} on one mode.
Matrix mode_drive_matrix(const DriveSet::ModeDrives& g, int cutoff) {
    Matrix b = annihilation(cutoff).matrix();
    Matrix bd = b.adjoint();
    return g.g1 * b + g.g2 * bd + g.g3 * b * b + g.g4 * bd * bd + g.g5 * (b * bd + bd * b);
}

}  // namespace

QOperator rwa_hamiltonian(const DriveSet& drives, const TensorSpace& space) {
    drives.check_finite();
    if (space.modes() != drives.n_modes() + 1)
        throw DimensionError("rwa_hamiltonian: space needs 1 cavity + " +
                             std::to_string(drives.n_modes()) + " mechanical modes");
    const int c0 = space.cutoff(0);
    QOperator ad = creation(c0);
    Matrix h = Matrix::Zero(space.dim(), space.dim());
    for (int j = 0; j < drives.n_modes(); ++j) {
        QOperator mj(TensorSpace::single(space.cutoff(j + 1)),
                     mode_drive_matrix(drives.modes[j], space.cutoff(j + 1)));
        h += two_mode_embed(ad, 0, mj, j + 1, space).matrix();
    }
    h = (h + h.adjoint()).eval();  // + H.c.
    return QOperator(space, std::move(h));
}

DriveSet cubic_drive_couplings(double g1, double r, double gamma) {
    if (!(g1 > 0.0)) throw DomainError("cubic_drive_couplings: g1 must be > 0");
    if (r < 0.0 || r >= 1.0)
        throw DomainError("cubic_drive_couplings: r outside [0,1) is unstable");
    const Complex quad = -kI * (3.0 / (2.0 * std::numbers::sqrt2)) * gamma * (1.0 + r) * g1;
    return DriveSet::single(g1, -r * g1, quad, quad, quad);
}

double s_of_r(double r) {
    if (r < 0.0 || r >= 1.0) throw DomainError("s_of_r: r must lie in [0,1)");
    return std::sqrt((1.0 + r) / (1.0 - r));
}

ClassicalSteadyState classical_steady_state(const Vector& eps, const RealVector& Delta,
                                            const PhysicalParams& params) {
    params.validate();
    if (eps.size() != Delta.size())
        throw DimensionError("classical_steady_state: eps and Delta must have equal length");
    const Eigen::Index tones = eps.size();
    const Eigen::Index n = params.Omega.size();

    constexpr double damping = 0.5;
    constexpr int max_iter = 10000;
    constexpr double tol = 1e-10;

    RealVector Q0 = RealVector::Zero(n);
    Vector alpha = Vector::Zero(tones);
    double residual = 0.0;
    for (int it = 0; it < max_iter; ++it) {
        const double photon = alpha.squaredNorm();
        RealVector Q_next(n);
        for (Eigen::Index j = 0; j < n; ++j)
            Q_next(j) = -params.G_L(j) * photon / (params.Omega(j) + 2.0 * params.G_Q(j) * photon);
        double shift = 0.0;
        for (Eigen::Index j = 0; j < n; ++j)
            shift += params.G_L(j) * Q0(j) + params.G_Q(j) * Q0(j) * Q0(j);
        Vector alpha_next(tones);
        for (Eigen::Index k = 0; k < tones; ++k)
            alpha_next(k) = -kI * eps(k) / (0.5 * params.kappa + kI * (-Delta(k) + shift));

        residual = std::max((Q_next - Q0).cwiseAbs().maxCoeff(),
                            (alpha_next - alpha).cwiseAbs().maxCoeff());
        Q0 = (1.0 - damping) * Q0 + damping * Q_next;
        alpha = (1.0 - damping) * alpha + damping * alpha_next;
        if (residual < tol) return {Q0, alpha, residual, it + 1};
    }
    throw NumericalError("classical_steady_state: no convergence after " +
                             std::to_string(max_iter) + " iterations, residual " +
                             std::to_string(residual),
                         residual);
}

StabilityReport drift_matrix(const DriveSet& drives, double kappa, double Gamma) {
    drives.check_finite();
    if (drives.n_modes() != 1) throw DimensionError("drift_matrix: defined for N=1");
    const Complex g1 = drives.modes[0].g1;
    const Complex g2 = drives.modes[0].g2;
    const double R1 = (g1 + g2).real(), I1 = (g1 + g2).imag();
    const double R2 = (g1 - g2).real(), I2 = (g1 - g2).imag();

    StabilityReport rep;
    rep.drift << -0.5 * kappa, 0.0, I1, R2,
        0.0, -0.5 * kappa, -R1, I2,
        -I2, R2, 0.0, 0.0,
        -R1, -I1, 0.0, -Gamma;
    Eigen::EigenSolver<Eigen::Matrix4d> es(rep.drift);
    rep.eigen_real_parts = es.eigenvalues().real();
    rep.rh_margin = R1 * R2 + I1 * I2;
    rep.stable_rh = std::abs(g1) > std::abs(g2);
    rep.stable_eig = (rep.eigen_real_parts.array() < 0.0).all();
    return rep;
}

namespace {

RwaValidityReport make_report(double worst, double Omega, double margin) {
    RwaValidityReport rep;
    rep.ratio = worst / Omega;
    rep.margin = margin;
    rep.pass = rep.ratio < margin;
    return rep;
}

}  // namespace

RwaValidityReport rwa_validity(const DriveSet& drives, double R, double Omega, double margin) {
    drives.check_finite();
    if (!(Omega > 0.0) || !(R > 0.0)) throw DomainError("rwa_validity: Omega and R must be > 0");
    double worst = 0.0;
    for (const auto& m : drives.modes) {
        for (Complex g : {m.g1, m.g2, m.g3, m.g4, m.g5}) worst = std::max(worst, std::abs(g));
        for (Complex g : {m.g3, m.g4, m.g5}) worst = std::max(worst, R * std::abs(g));
        for (Complex g : {m.g1, m.g2}) worst = std::max(worst, std::abs(g) / R);
    }
    return make_report(worst, Omega, margin);
}

RwaValidityReport rwa_validity_cubic(double g1, double R, double Omega, double margin) {
    if (!(Omega > 0.0) || !(R > 0.0))
        throw DomainError("rwa_validity_cubic: Omega and R must be > 0");
    const double a = std::abs(g1);
    const double worst = std::max({a, R * a, a / R});
    return make_report(worst, Omega, margin);
}

std::array<QOperator, 4> counter_rotating_blocks(const DriveSet& drives, double R,
                                                 const TensorSpace& space) {
    drives.check_finite();
    if (drives.n_modes() != 1)
        throw DimensionError("counter_rotating_blocks: defined for N=1");
    if (space.modes() != 2)
        throw DimensionError("counter_rotating_blocks: space must be cavity + 1 mode");
    if (!(R > 0.0)) throw DomainError("counter_rotating_blocks: R must be > 0");

    const auto& g = drives.modes[0];
    const int c0 = space.cutoff(0), c1 = space.cutoff(1);
    const Matrix a = annihilation(c0).matrix();
    const Matrix ad = a.adjoint();
    const Matrix b = annihilation(c1).matrix();
    const Matrix bd = b.adjoint();
    const Matrix b2 = b * b;
    const Matrix bd2 = bd * bd;
    const Matrix anti = b * bd + bd * b;

    auto cav = [&](Complex via_adjoint, Complex via_plain) -> QOperator {
        return QOperator(TensorSpace::single(c0), via_adjoint * ad + via_plain * a);
    };
    auto place = [&](const QOperator& cav_op, const Matrix& mech) -> Matrix {
        return two_mode_embed(cav_op, 0, QOperator(TensorSpace::single(c1), mech), 1, space)
            .matrix();
    };
    const double Rinv = 1.0 / R;

    Matrix h1 = R * place(cav(g.g3, std::conj(g.g4)), b) + R * place(cav(g.g5, std::conj(g.g5)), bd) +
                Rinv * place(cav(g.g2, std::conj(g.g1)), bd2) +
                Rinv * place(cav(g.g1, std::conj(g.g2)), anti);
    Matrix h2 = place(cav(g.g1, std::conj(g.g2)), bd) + place(cav(g.g5, std::conj(g.g5)), bd2) +
                place(cav(g.g3, std::conj(g.g4)), anti);
    Matrix h3 = R * place(cav(g.g3, std::conj(g.g4)), bd) + Rinv * place(cav(g.g1, std::conj(g.g2)), bd2);
    Matrix h4 = place(cav(g.g3, std::conj(g.g4)), bd2);

    return {QOperator(space, std::move(h1)), QOperator(space, std::move(h2)),
            QOperator(space, std::move(h3)), QOperator(space, std::move(h4))};
}

QOperator counter_rotating_hamiltonian(const DriveSet& drives, double R, double Omega,
                                       const TensorSpace& space, double t) {
    if (!(Omega > 0.0)) throw DomainError("counter_rotating_hamiltonian: Omega must be > 0");
    auto blocks = counter_rotating_blocks(drives, R, space);
    Matrix h = Matrix::Zero(space.dim(), space.dim());
    for (int l = 0; l < 4; ++l) {
        const Complex phase = std::exp(kI * ((l + 1) * Omega * t));
        h += phase * blocks[l].matrix();
    }
    h = (h + h.adjoint()).eval();
    return QOperator(space, std::move(h));
}

TimeDependentHamiltonian::TimeDependentHamiltonian(QOperator constant,
                                                   std::vector<HarmonicBlock> blocks)
    : constant_(std::move(constant)), blocks_(std::move(blocks)) {
    for (const auto& blk : blocks_)
        if (blk.block.space() != constant_.space())
            throw DimensionError("TimeDependentHamiltonian: block space mismatch");
}

double TimeDependentHamiltonian::max_frequency() const {
    double f = 0.0;
    for (const auto& blk : blocks_) f = std::max(f, std::abs(blk.frequency));
    return f;
}

QOperator TimeDependentHamiltonian::operator()(double t) const {
    Matrix h = constant_.matrix();
    for (const auto& blk : blocks_) {
        const Complex phase = std::exp(kI * (blk.frequency * t));
        h += phase * blk.block.matrix() + std::conj(phase) * blk.block.matrix().adjoint();
    }
    return QOperator(constant_.space(), std::move(h));
}

TimeDependentHamiltonian full_hamiltonian_with_crt(const DriveSet& drives, double R,
                                                   double Omega, const TensorSpace& space) {
    if (!(Omega > 0.0)) throw DomainError("full_hamiltonian_with_crt: Omega must be > 0");
    QOperator h_rwa = rwa_hamiltonian(drives, space);
    auto blocks = counter_rotating_blocks(drives, R, space);
    std::vector<TimeDependentHamiltonian::HarmonicBlock> harmonics;
    harmonics.reserve(4);
    for (int l = 0; l < 4; ++l)
        harmonics.push_back({std::move(blocks[l]), (l + 1) * Omega});
    return TimeDependentHamiltonian(std::move(h_rwa), std::move(harmonics));
}

QOperator measurement_hamiltonian(double beta, double phi, int mode_k, const TensorSpace& space) {
    if (mode_k < 1 || mode_k >= space.modes())
        throw DimensionError("measurement_hamiltonian: k must be a mechanical mode index");
    QOperator x = position_quadrature(space.cutoff(0));
    QOperator qphi = rotated_quadrature(space.cutoff(mode_k), phi);
    QOperator h = two_mode_embed(x, 0, qphi, mode_k, space);
    return 2.0 * beta * h;
}

}  // namespace omcv
