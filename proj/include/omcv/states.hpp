#ifndef OMCV_STATES_HPP
#define OMCV_STATES_HPP

#include <vector>

#include "omcv/fock.hpp"

namespace omcv {

/// Target cluster: unweighted adjacency A, per-node squeezing s > 0 and
/// cubic strength gamma. gamma = 0 everywhere gives the standard Gaussian
/// cluster.
struct ClusterSpec {
    Eigen::MatrixXi adjacency;
    RealVector squeezing;
    RealVector cubic;

    int nodes() const { return static_cast<int>(adjacency.rows()); }
    void validate() const;

    static ClusterSpec two_node(double s1, double s2, double gamma1, double gamma2);
};

struct StateOptions {
    double norm_loss_tol = 1e-6;   // allowed weight beyond the cutoff
    long long dim_budget = 1 << 21;  // cluster_state memory guard
};

/// S(s)|0>, Var(q) = s^2/2 and Var(p) = 1/(2 s^2); momentum-squeezed for s > 1.
QState squeezed_vacuum(double s, int cutoff, const StateOptions& opts = {});

/// |gamma, s> = exp(i gamma q^3) S(s)|0>.
QState cubic_phase_state(double gamma, double s, int cutoff, const StateOptions& opts = {});

/// E(A) Gamma(gamma) S(s) |0...0> with CZ_{jk} = exp(i q_j q_k) on every edge.
QState cluster_state(const ClusterSpec& spec, const std::vector<int>& cutoffs,
                     const StateOptions& opts = {});

/// Diagonal thermal state, rho_nn proportional to (nbar/(1+nbar))^n,
/// renormalized over the truncated space.
QState thermal_state(double nbar, int cutoff, const StateOptions& opts = {});

/// Cutoff heuristic for a mechanical mode holding squeezing s and cubic
/// strength gamma: max(20, ceil(10 s^2 + 200 gamma^2)). Truncation loss must
/// still be measured, not assumed.
int default_mech_cutoff(double s, double gamma);

/// Weight a construction loses beyond `cutoff`, measured by rebuilding at a
/// padded cutoff and summing the discarded tail.
double squeezed_vacuum_norm_loss(double s, int cutoff);
double cubic_phase_norm_loss(double gamma, double s, int cutoff);

}  // namespace omcv

#endif
