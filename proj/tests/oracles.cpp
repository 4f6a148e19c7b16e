#include "oracles.hpp"

#include <cmath>
#include <stdexcept>

namespace oracles {

CMat kron(const CMat& a, const CMat& b) {
    CMat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            for (Eigen::Index k = 0; k < b.rows(); ++k)
                for (Eigen::Index l = 0; l < b.cols(); ++l)
                    out(i * b.rows() + k, j * b.cols() + l) = a(i, j) * b(k, l);
    return out;
}

double trapezoid(const std::function<double(double)>& f, double lo, double hi, int n) {
    const double h = (hi - lo) / (n - 1);
    double acc = 0.5 * (f(lo) + f(hi));
    for (int k = 1; k + 1 < n; ++k) acc += f(lo + k * h);
    return acc * h;
}

namespace {

CMat master_rhs(const CMat& h, const std::vector<std::pair<CMat, double>>& collapse,
                const CMat& rho) {
    const Cmplx i1(0.0, 1.0);
    CMat out = -i1 * (h * rho - rho * h);
    for (const auto& [c, rate] : collapse) {
        const CMat cdc = c.adjoint() * c;
        out += rate * (c * rho * c.adjoint() - 0.5 * (cdc * rho + rho * cdc));
    }
    return out;
}

}  // namespace

CMat superoperator_by_basis(const CMat& h,
                            const std::vector<std::pair<CMat, double>>& collapse) {
    const Eigen::Index d = h.rows();
    CMat L(d * d, d * d);
    for (Eigen::Index l = 0; l < d; ++l)
        for (Eigen::Index k = 0; k < d; ++k) {
            CMat basis = CMat::Zero(d, d);
            basis(k, l) = 1.0;
            CMat image = master_rhs(h, collapse, basis);
            L.col(l * d + k) = Eigen::Map<CVec>(image.data(), d * d);
        }
    return L;
}

CMat steady_state_by_eigen(const CMat& h,
                           const std::vector<std::pair<CMat, double>>& collapse) {
    const Eigen::Index d = h.rows();
    CMat L = superoperator_by_basis(h, collapse);
    Eigen::ComplexEigenSolver<CMat> es(L);
    Eigen::Index best = 0;
    double best_mag = std::abs(es.eigenvalues()(0));
    for (Eigen::Index k = 1; k < es.eigenvalues().size(); ++k)
        if (std::abs(es.eigenvalues()(k)) < best_mag) {
            best = k;
            best_mag = std::abs(es.eigenvalues()(k));
        }
    CVec v = es.eigenvectors().col(best);
    CMat rho = Eigen::Map<CMat>(v.data(), d, d);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    rho /= rho.trace();
    return rho;
}

GaussianState gaussian_squeezed_product(const std::vector<double>& s) {
    const int n = static_cast<int>(s.size());
    GaussianState g;
    g.mean = RVec::Zero(2 * n);
    g.cov = RMat::Zero(2 * n, 2 * n);
    for (int j = 0; j < n; ++j) {
        g.cov(2 * j, 2 * j) = 0.5 * s[j] * s[j];
        g.cov(2 * j + 1, 2 * j + 1) = 0.5 / (s[j] * s[j]);
    }
    return g;
}

void gaussian_apply_cz(GaussianState& state, int j, int k) {
    const int n = state.modes();
    RMat s = RMat::Identity(2 * n, 2 * n);
    s(2 * j + 1, 2 * k) += 1.0;  // p_j -> p_j + q_k
    s(2 * k + 1, 2 * j) += 1.0;  // p_k -> p_k + q_j
    state.mean = s * state.mean;
    state.cov = s * state.cov * s.transpose();
}

GaussianState gaussian_measure(const GaussianState& state, int node, double phi, double m) {
    const int n = state.modes();
    const int dim = 2 * n;
    // Projector row of the measured quadrature q cos(phi) + p sin(phi).
    RVec row = RVec::Zero(dim);
    row(2 * node) = std::cos(phi);
    row(2 * node + 1) = std::sin(phi);

    const double var_m = row.dot(state.cov * row);
    const double mean_m = row.dot(state.mean);
    const RVec cross = state.cov * row;  // Cov(u, measured)

    GaussianState cond;
    cond.mean = state.mean + cross * ((m - mean_m) / var_m);
    cond.cov = state.cov - (cross * cross.transpose()) / var_m;

    // Drop the measured mode's rows/columns.
    std::vector<int> keep;
    for (int j = 0; j < n; ++j) {
        if (j == node) continue;
        keep.push_back(2 * j);
        keep.push_back(2 * j + 1);
    }
    GaussianState out;
    out.mean = RVec(keep.size());
    out.cov = RMat(keep.size(), keep.size());
    for (size_t a = 0; a < keep.size(); ++a) {
        out.mean(a) = cond.mean(keep[a]);
        for (size_t b = 0; b < keep.size(); ++b) out.cov(a, b) = cond.cov(keep[a], keep[b]);
    }
    return out;
}

namespace {

double gammp_series(double a, double x) {
    double sum = 1.0 / a, term = sum, ap = a;
    for (int n = 0; n < 500; ++n) {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if (std::abs(term) < std::abs(sum) * 1e-15) break;
    }
    return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

double gammq_cf(double a, double x) {
    const double tiny = 1e-300;
    double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i <= 500; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < 1e-15) break;
    }
    return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

}  // namespace

double gammq(double a, double x) {
    if (x < 0.0 || a <= 0.0) throw std::invalid_argument("gammq: bad arguments");
    if (x == 0.0) return 1.0;
    if (x < a + 1.0) return 1.0 - gammp_series(a, x);
    return gammq_cf(a, x);
}

double chi2_pvalue(double statistic, int dof) { return gammq(0.5 * dof, 0.5 * statistic); }

}  // namespace oracles
