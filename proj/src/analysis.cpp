#include "omcv/analysis.hpp"

#include <cmath>
#include <numbers>

namespace omcv {

double fidelity_pure_target(const QState& target, const QState& rho) {
    if (!target.is_pure())
        throw UnsupportedOperationError(
            "fidelity_pure_target: mixed targets are unsupported; the pure-target formula "
            "would silently misreport");
    if (target.space() != rho.space())
        throw DimensionError("fidelity_pure_target: space mismatch");
    const Vector& psi = target.vector();
    if (rho.is_pure()) return std::abs(psi.dot(rho.vector()));
    return std::sqrt(std::max(0.0, psi.dot(rho.density() * psi).real()));
}

WignerGrid wigner(const QState& state, const WignerOptions& options) {
    if (state.space().modes() != 1)
        throw DimensionError("wigner: single-mode states only; reduce first");
    const int cutoff = state.space().cutoff(0);
    const Matrix rho = state.to_density();

    WignerGrid grid;
    grid.q_axis = RealVector::LinSpaced(options.q_points, -options.q_max, options.q_max);
    grid.p_axis = RealVector::LinSpaced(options.p_points, -options.p_max, options.p_max);
    grid.values = RealMatrix::Zero(options.q_points, options.p_points);

    // The coherence kernel <q+x/2|rho|q-x/2> decays on the scale of the
    // highest populated Hermite function; 8 nodes per oscillation of
    // e^{-ipx} keeps the Fourier quadrature honest at p_max.
    const double x_half = 2.0 * std::sqrt(2.0 * cutoff + 3.0) + 2.0 * options.q_max;
    int nx = options.x_points;
    if (nx <= 0) {
        const double dx_needed = (2.0 * std::numbers::pi / std::max(options.p_max, 1.0)) / 8.0;
        nx = std::max(256, static_cast<int>(std::ceil(2.0 * x_half / dx_needed)) + 1);
    }
    const double dx = 2.0 * x_half / (nx - 1);

#pragma omp parallel for schedule(static)
    for (int iq = 0; iq < options.q_points; ++iq) {
        const double q = grid.q_axis(iq);
        // kernel(x_k) = psi(q+x/2)^T rho psi(q-x/2)
        std::vector<Complex> kernel(nx);
        Vector left(cutoff), right(cutoff);
        for (int k = 0; k < nx; ++k) {
            const double x = -x_half + k * dx;
            const std::vector<double> lp = hermite_functions(q + 0.5 * x, cutoff);
            const std::vector<double> rp = hermite_functions(q - 0.5 * x, cutoff);
            for (int n = 0; n < cutoff; ++n) {
                left(n) = lp[n];
                right(n) = rp[n];
            }
            kernel[k] = left.transpose() * (rho * right);
        }
        for (int ip = 0; ip < options.p_points; ++ip) {
            const double p = grid.p_axis(ip);
            Complex acc = 0.0;
            for (int k = 0; k < nx; ++k) {
                const double x = -x_half + k * dx;
                const double w = (k == 0 || k == nx - 1) ? 0.5 : 1.0;  // trapezoid
                acc += w * std::exp(-kI * (p * x)) * kernel[k];
            }
            grid.values(iq, ip) = (acc * dx).real() / (2.0 * std::numbers::pi);
        }
    }

    const double dq = grid.q_axis(1) - grid.q_axis(0);
    const double dp = grid.p_axis(1) - grid.p_axis(0);
    grid.integral = grid.values.sum() * dq * dp;
    grid.coverage_ok = std::abs(grid.integral - 1.0) < 0.02;
    return grid;
}

double squeezing_db(double s) {
    if (!(s > 0.0)) throw DomainError("squeezing_db: s must be > 0");
    return 10.0 * std::log10(s * s);
}

TruncationReport truncation_report(const QState& state) {
    const TensorSpace& space = state.space();
    TruncationReport report;
    report.per_mode.resize(space.modes());

    // Per-mode level populations from the diagonal only.
    std::vector<RealVector> pops(space.modes());
    for (int m = 0; m < space.modes(); ++m) pops[m] = RealVector::Zero(space.cutoff(m));
    auto accumulate = [&](long long idx, double weight) {
        long long rem = idx;
        for (int m = 0; m < space.modes(); ++m) {
            const long long str = space.stride(m);
            pops[m](rem / str) += weight;
            rem %= str;
        }
    };
    if (state.is_pure()) {
        const Vector& psi = state.vector();
        for (long long i = 0; i < psi.size(); ++i) accumulate(i, std::norm(psi(i)));
    } else {
        const Matrix& rho = state.density();
        for (long long i = 0; i < rho.rows(); ++i) accumulate(i, rho(i, i).real());
    }

    report.converged = true;
    for (int m = 0; m < space.modes(); ++m) {
        const int c = space.cutoff(m);
        report.per_mode[m].top = pops[m](c - 1);
        report.per_mode[m].second = pops[m](c - 2);
        if (report.per_mode[m].top >= 1e-4 || report.per_mode[m].second >= 1e-4)
            report.converged = false;
    }
    return report;
}

}  // namespace omcv
