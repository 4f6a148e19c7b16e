#include "omcv/states.hpp"

#include <cmath>
#include <string>

namespace omcv {

void ClusterSpec::validate() const {
    const int n = nodes();
    if (n < 1) throw DimensionError("ClusterSpec: empty adjacency");
    if (adjacency.cols() != n) throw DimensionError("ClusterSpec: adjacency must be square");
    for (int i = 0; i < n; ++i) {
        if (adjacency(i, i) != 0) throw DomainError("ClusterSpec: adjacency diagonal must be zero");
        for (int j = 0; j < n; ++j) {
            if (adjacency(i, j) != adjacency(j, i))
                throw DomainError("ClusterSpec: adjacency must be symmetric");
            if (adjacency(i, j) != 0 && adjacency(i, j) != 1)
                throw DomainError("ClusterSpec: weighted graphs are rejected, entries must be 0/1");
        }
    }
    if (squeezing.size() != n || cubic.size() != n)
        throw DimensionError("ClusterSpec: squeezing and cubic vectors must have one entry per node");
    for (int j = 0; j < n; ++j)
        if (!(squeezing(j) > 0.0)) throw DomainError("ClusterSpec: squeezing must be positive");
}

ClusterSpec ClusterSpec::two_node(double s1, double s2, double gamma1, double gamma2) {
    ClusterSpec spec;
    spec.adjacency = Eigen::MatrixXi::Zero(2, 2);
    spec.adjacency(0, 1) = spec.adjacency(1, 0) = 1;
    spec.squeezing = RealVector(2);
    spec.squeezing << s1, s2;
    spec.cubic = RealVector(2);
    spec.cubic << gamma1, gamma2;
    return spec;
}

namespace {

// S(s)|0> in a space truncated at `cutoff`, built from the truncated
// generator -(i/2)(qp+pq) ln s = (ln s / 2)(b^dag^2 - b^2).
Vector squeezed_vacuum_vector(double s, int cutoff) {
    const double zeta = std::log(s);
    QOperator b = annihilation(cutoff);
    QOperator bd = b.dagger();
    QOperator gen(b.space(), bd.matrix() * bd.matrix() - b.matrix() * b.matrix());
    QOperator squeezer = matrix_exp(gen, Complex(0.5 * zeta, 0.0));
    Vector psi = squeezer.matrix().col(0);
    psi /= psi.norm();
    return psi;
}

Vector cubic_phase_vector(double gamma, double s, int cutoff) {
    Vector psi = squeezed_vacuum_vector(s, cutoff);
    if (gamma != 0.0) {
        QOperator q = position_quadrature(cutoff);
        QOperator q3 = q * q * q;
        psi = matrix_exp(q3, kI * gamma).matrix() * psi;
        psi /= psi.norm();
    }
    return psi;
}

double tail_loss(const Vector& padded, int cutoff) {
    return 1.0 - padded.head(cutoff).squaredNorm();
}

int padded_cutoff(int cutoff) { return cutoff + std::max(10, cutoff / 4); }

}  // namespace

double squeezed_vacuum_norm_loss(double s, int cutoff) {
    return tail_loss(squeezed_vacuum_vector(s, padded_cutoff(cutoff)), cutoff);
}

double cubic_phase_norm_loss(double gamma, double s, int cutoff) {
    return tail_loss(cubic_phase_vector(gamma, s, padded_cutoff(cutoff)), cutoff);
}

QState squeezed_vacuum(double s, int cutoff, const StateOptions& opts) {
    if (!(s > 0.0)) throw DomainError("squeezed_vacuum: s must be > 0");
    if (cutoff < 2) throw DimensionError("squeezed_vacuum: cutoff must be >= 2");
    double loss = squeezed_vacuum_norm_loss(s, cutoff);
    if (loss > opts.norm_loss_tol)
        throw TruncationError("squeezed_vacuum: norm loss " + std::to_string(loss) +
                                  " exceeds tolerance at cutoff " + std::to_string(cutoff),
                              loss);
    return QState::pure(TensorSpace::single(cutoff), squeezed_vacuum_vector(s, cutoff));
}

QState cubic_phase_state(double gamma, double s, int cutoff, const StateOptions& opts) {
    if (!(s > 0.0)) throw DomainError("cubic_phase_state: s must be > 0");
    if (cutoff < 2) throw DimensionError("cubic_phase_state: cutoff must be >= 2");
    double loss = cubic_phase_norm_loss(gamma, s, cutoff);
    if (loss > opts.norm_loss_tol)
        throw TruncationError("cubic_phase_state: norm loss " + std::to_string(loss) +
                                  " exceeds tolerance at cutoff " + std::to_string(cutoff),
                              loss);
    return QState::pure(TensorSpace::single(cutoff), cubic_phase_vector(gamma, s, cutoff));
}

QState cluster_state(const ClusterSpec& spec, const std::vector<int>& cutoffs,
                     const StateOptions& opts) {
    spec.validate();
    const int n = spec.nodes();
    if (static_cast<int>(cutoffs.size()) != n)
        throw DimensionError("cluster_state: one cutoff per node required");

    TensorSpace space(cutoffs);
    if (space.dim() > opts.dim_budget)
        throw ResourceError("cluster_state: total dimension " + std::to_string(space.dim()) +
                            " exceeds budget " + std::to_string(opts.dim_budget));

    // Product of squeezed vacua (each already checked against the loss tolerance).
    Vector psi(space.dim());
    {
        std::vector<Vector> locals;
        locals.reserve(n);
        for (int j = 0; j < n; ++j)
            locals.push_back(squeezed_vacuum(spec.squeezing(j), cutoffs[j], opts).vector());
        for (long long idx = 0; idx < space.dim(); ++idx) {
            long long rem = idx;
            Complex amp = 1.0;
            for (int j = 0; j < n; ++j) {
                const long long str = space.stride(j);
                amp *= locals[j](rem / str);
                rem %= str;
            }
            psi(idx) = amp;
        }
    }

    // E(A) Gamma(gamma) is diagonal in the joint position eigenbasis of the
    // truncated q_j. Diagonalize each mode's q once, rotate, phase, rotate back.
    std::vector<Matrix> rot(n);
    std::vector<RealVector> lambda(n);
    for (int j = 0; j < n; ++j) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(position_quadrature(cutoffs[j]).matrix());
        rot[j] = es.eigenvectors();
        lambda[j] = es.eigenvalues();
    }
    for (int j = 0; j < n; ++j) apply_single_mode(rot[j].adjoint(), j, space, psi);
    for (long long idx = 0; idx < space.dim(); ++idx) {
        long long rem = idx;
        double phase = 0.0;
        RealVector pos(n);
        for (int j = 0; j < n; ++j) {
            const long long str = space.stride(j);
            pos(j) = lambda[j](rem / str);
            rem %= str;
        }
        for (int j = 0; j < n; ++j) {
            phase += spec.cubic(j) * pos(j) * pos(j) * pos(j);
            for (int k = j + 1; k < n; ++k)
                if (spec.adjacency(j, k)) phase += pos(j) * pos(k);
        }
        psi(idx) *= std::exp(kI * phase);
    }
    for (int j = 0; j < n; ++j) apply_single_mode(rot[j], j, space, psi);

    psi /= psi.norm();
    return QState::pure(std::move(space), std::move(psi));
}

QState thermal_state(double nbar, int cutoff, const StateOptions& opts) {
    if (nbar < 0.0) throw DomainError("thermal_state: nbar must be >= 0");
    if (cutoff < 2) throw DimensionError("thermal_state: cutoff must be >= 2");
    TensorSpace space = TensorSpace::single(cutoff);
    if (nbar == 0.0) {
        Matrix rho = Matrix::Zero(cutoff, cutoff);
        rho(0, 0) = 1.0;
        return QState::mixed(std::move(space), std::move(rho));
    }
    const double x = nbar / (1.0 + nbar);
    const double tail = std::pow(x, cutoff);  // geometric weight beyond the cutoff
    if (tail > opts.norm_loss_tol)
        throw TruncationError("thermal_state: tail weight " + std::to_string(tail) +
                                  " beyond cutoff " + std::to_string(cutoff) +
                                  " exceeds tolerance",
                              tail);
    Matrix rho = Matrix::Zero(cutoff, cutoff);
    double w = 1.0, sum = 0.0;
    for (int k = 0; k < cutoff; ++k, w *= x) {
        rho(k, k) = w;
        sum += w;
    }
    rho /= sum;
    return QState::mixed(std::move(space), std::move(rho));
}

int default_mech_cutoff(double s, double gamma) {
    return std::max(20, static_cast<int>(std::ceil(10.0 * s * s + 200.0 * gamma * gamma)));
}

}  // namespace omcv
