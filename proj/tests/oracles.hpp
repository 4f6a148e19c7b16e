// Test-only reference implementations, kept independent of the library code
// paths they check.
#ifndef OMCV_TESTS_ORACLES_HPP
#define OMCV_TESTS_ORACLES_HPP

#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracles {

using Cmplx = std::complex<double>;
using CMat = Eigen::MatrixXcd;
using CVec = Eigen::VectorXcd;
using RMat = Eigen::MatrixXd;
using RVec = Eigen::VectorXd;

// Plain Kronecker product, loop form.
CMat kron(const CMat& a, const CMat& b);

// Trapezoid quadrature of f over [lo, hi] with n nodes.
double trapezoid(const std::function<double(double)>& f, double lo, double hi, int n);

// Column-stacked superoperator built by applying the master-equation
// right-hand side to every basis matrix E_kl.
CMat superoperator_by_basis(const CMat& h,
                            const std::vector<std::pair<CMat, double>>& collapse);

// Steady state extracted from the eigenvector of the basis-built
// superoperator with eigenvalue closest to zero.
CMat steady_state_by_eigen(const CMat& h,
                           const std::vector<std::pair<CMat, double>>& collapse);

// Gaussian covariance calculus over (q1,p1,q2,p2,...) with vacuum = I/2.
struct GaussianState {
    RVec mean;
    RMat cov;
    int modes() const { return static_cast<int>(mean.size()) / 2; }
};

GaussianState gaussian_squeezed_product(const std::vector<double>& s);
void gaussian_apply_cz(GaussianState& state, int j, int k);
// Condition on measuring the phi-quadrature of `node` with outcome m;
// the measured mode is removed.
GaussianState gaussian_measure(const GaussianState& state, int node, double phi, double m);

// Upper regularized incomplete gamma Q(a, x); chi-squared p-value is
// Q(dof/2, stat/2).
double gammq(double a, double x);
double chi2_pvalue(double statistic, int dof);

}  // namespace oracles

#endif
