#ifndef OMCV_ANALYSIS_HPP
#define OMCV_ANALYSIS_HPP

#include <vector>

#include "omcv/fock.hpp"

namespace omcv {

/// Uhlmann fidelity against a pure target: F = sqrt(<psi|rho|psi>), which is
/// |<psi|phi>| when rho is pure. Mixed targets are deliberately unsupported.
double fidelity_pure_target(const QState& target, const QState& rho);

struct WignerGrid {
    RealVector q_axis;
    RealVector p_axis;
    RealMatrix values;
    double integral = 0.0;   // grid quadrature of W
    bool coverage_ok = true;  // false when the state leaks past the grid
};

struct WignerOptions {
    int q_points = 201;
    int p_points = 201;
    double q_max = 6.0;  // grid spans [-q_max, q_max]
    double p_max = 6.0;
    int x_points = 0;  // Fourier quadrature nodes; 0 = automatic
};

/// W(q,p) = (1/2pi) Int dx e^{-ipx} <q+x/2| rho |q-x/2>, evaluated by a
/// Hermite-series expansion of the coherence kernel.
WignerGrid wigner(const QState& state, const WignerOptions& options = {});

/// 10 log10(s^2) dB.
double squeezing_db(double s);

struct TruncationReport {
    struct ModeTail {
        double top = 0.0;     // population of level cutoff-1
        double second = 0.0;  // population of level cutoff-2
    };
    std::vector<ModeTail> per_mode;
    bool converged = false;  // all tail populations < 1e-4
};

/// Population of the two highest Fock levels of every mode.
TruncationReport truncation_report(const QState& state);

}  // namespace omcv

#endif
