#ifndef OMCV_MODEL_HPP
#define OMCV_MODEL_HPP

#include <array>
#include <vector>

#include "omcv/fock.hpp"

namespace omcv {

/// One RWA Hamiltonian configuration: complex couplings g1..g5 per mechanical
/// mode (rad/time, in units of a reference rate).
struct DriveSet {
    struct ModeDrives {
        Complex g1{0.0}, g2{0.0}, g3{0.0}, g4{0.0}, g5{0.0};
    };
    std::vector<ModeDrives> modes;

    int n_modes() const { return static_cast<int>(modes.size()); }
    static DriveSet single(Complex g1, Complex g2 = 0.0, Complex g3 = 0.0, Complex g4 = 0.0,
                           Complex g5 = 0.0);
    void check_finite() const;
};

struct PhysicalParams {
    RealVector Omega;    // mechanical frequencies, > 0
    double kappa = 0.0;  // cavity decay, > 0
    RealVector Gamma_m;  // mechanical damping rates, >= 0
    RealVector nbar;     // bath occupations, >= 0
    RealVector G_L;      // drive-enhanced linear couplings
    RealVector G_Q;      // drive-enhanced quadratic couplings

    void validate() const;
    double R(int mode) const { return G_L(mode) / G_Q(mode); }

    /// Rates-only parameter set for RWA-frame protocol runs, where only
    /// kappa, Gamma_m and nbar enter; Omega and the bare couplings are
    /// placeholders.
    static PhysicalParams rates(double kappa, RealVector Gamma_m, RealVector nbar);
};

struct StabilityReport {
    Eigen::Matrix4d drift;
    Eigen::Vector4d eigen_real_parts;
    double rh_margin = 0.0;  // R1 R2 + I1 I2 = |g1|^2 - |g2|^2
    bool stable_rh = false;
    bool stable_eig = false;
};

struct RwaValidityReport {
    double ratio = 0.0;  // worst coupling scale over Omega
    double margin = 0.0;
    bool pass = false;
};

/// H = a^dag sum_j (g1 b_j + g2 b_j^dag + g3 b_j^2 + g4 b_j^dag^2 + g5 {b_j, b_j^dag}) + H.c.
QOperator rwa_hamiltonian(const DriveSet& drives, const TensorSpace& space);

/// Drive recipe whose steady state is the cubic phase state:
/// g2 = -r g1, g3 = g4 = g5 = -(3i / 2 sqrt(2)) gamma (1+r) g1.
DriveSet cubic_drive_couplings(double g1, double r, double gamma);

/// s(r) = sqrt((1+r)/(1-r)).
double s_of_r(double r);

struct ClassicalSteadyState {
    RealVector Q0;        // per-mode static displacement
    Vector alpha;         // per-tone intracavity amplitude
    double residual = 0.0;
    int iterations = 0;
};

/// Self-consistent (Q0, alpha) fixed point of the drive linearization,
/// solved by damped fixed-point iteration (damping 0.5, residual < 1e-10).
ClassicalSteadyState classical_steady_state(const Vector& eps, const RealVector& Delta,
                                            const PhysicalParams& params);

/// 4x4 drift matrix of the linear fluctuation dynamics (N=1) and both
/// stability verdicts: eigenvalue-based and the Routh-Hurwitz condition
/// |g1| > |g2|.
StabilityReport drift_matrix(const DriveSet& drives, double kappa, double Gamma);

/// General RWA-validity check: worst of {|g_j|, |R g_mu| (mu=3,4,5),
/// |R^-1 g_nu| (nu=1,2)} over Omega, compared against the margin.
RwaValidityReport rwa_validity(const DriveSet& drives, double R, double Omega,
                               double margin = 0.1);

/// Reduced check for the cubic-phase drive recipe, where the conditions
/// collapse to {|g1|, |R g1|, |R^-1 g1|} << Omega.
RwaValidityReport rwa_validity_cubic(double g1, double R, double Omega, double margin = 0.1);

/// The four single-mode counter-rotating blocks H^(1..4) (N=1); the full
/// counter-rotating part is sum_l H^(l) e^{i l Omega t} + H.c.
std::array<QOperator, 4> counter_rotating_blocks(const DriveSet& drives, double R,
                                                 const TensorSpace& space);

/// H_crt evaluated at time t (Hermitian).
QOperator counter_rotating_hamiltonian(const DriveSet& drives, double R, double Omega,
                                       const TensorSpace& space, double t);

/// H(t) = H0 + sum_k (B_k e^{i w_k t} + B_k^dag e^{-i w_k t}), assembled from
/// cached constant blocks; evaluation only applies scalar phases.
class TimeDependentHamiltonian {
  public:
    struct HarmonicBlock {
        QOperator block;
        double frequency;
    };

    TimeDependentHamiltonian(QOperator constant, std::vector<HarmonicBlock> blocks);

    const TensorSpace& space() const { return constant_.space(); }
    const QOperator& constant_part() const { return constant_; }
    const std::vector<HarmonicBlock>& blocks() const { return blocks_; }
    double max_frequency() const;

    QOperator operator()(double t) const;

  private:
    QOperator constant_;
    std::vector<HarmonicBlock> blocks_;
};

/// H_RWA + counter-rotating blocks at frequencies l*Omega (N=1).
TimeDependentHamiltonian full_hamiltonian_with_crt(const DriveSet& drives, double R,
                                                   double Omega, const TensorSpace& space);

/// QND readout coupling 2 beta X Q_phi^(k) between the cavity position
/// quadrature and an arbitrary quadrature of mechanical mode k.
QOperator measurement_hamiltonian(double beta, double phi, int mode_k, const TensorSpace& space);

}  // namespace omcv

#endif
