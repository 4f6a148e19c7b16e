#ifndef OMCV_PROTOCOLS_HPP
#define OMCV_PROTOCOLS_HPP

#include <cstdint>
#include <vector>

#include "omcv/lindblad.hpp"
#include "omcv/states.hpp"

namespace omcv {

/// Bogoliubov coefficients of the collective modes
/// d_l = sum_j U_lj b_j + V_lj b_j^dag + W_lj (b_j + b_j^dag)^2, with
/// U = D+ - (i/2)(D+ + D-)A, V = -D- - (i/2)(D+ + D-)A,
/// W = -(3i / 2 sqrt(2)) D_gamma (D+ + D-), D_pm = diag(s_j +- 1/s_j)/2.
struct SwitchingMatrices {
    Matrix U, V, W;
};

SwitchingMatrices switching_matrices(const ClusterSpec& spec);

struct SwitchingPlan {
    ClusterSpec spec;
    double beta = 1.0;           // drive scale of H_l = beta (a^dag d_l + H.c.)
    double step_duration = 0.0;  // time spent cooling each collective mode
    bool precool = false;
    double precool_duration = 0.0;  // per-mode red-sideband cooling time
};

/// Couplings of step l (1-based): g1 = beta U_lj, g2 = beta V_lj,
/// g3 = g4 = g5 = beta W_lj. W diagonal guarantees the quadratic drive only
/// touches the addressed mode.
DriveSet step_drives(const SwitchingPlan& plan, int step);

/// d_l lifted to the full cavity+mechanics space.
QOperator collective_mode(const ClusterSpec& spec, int step, const TensorSpace& space);

struct SwitchingResult {
    std::vector<double> times;
    std::vector<int> phase_labels;  // -j while pre-cooling mode j, l during step l
    std::vector<double> fidelity;   // mechanical reduced state vs the target cluster
    std::vector<double> collective_occupation;  // <d_l^dag d_l> of the active step
    QState target;                              // mechanics-only cluster state
    QState final_state;                         // full-space state after the protocol
    double final_fidelity = 0.0;
    EvolutionResult::Diagnostics diagnostics;
};

/// N-step Hamiltonian switching (optionally preceded by per-mode cooling),
/// tracking the fidelity of the mechanical reduced state against
/// cluster_state(plan.spec) over time. `initial` lives on the full space
/// (cavity first); only kappa, Gamma_m, nbar of `params` are used.
SwitchingResult run_switching(const SwitchingPlan& plan, const QState& initial,
                              const PhysicalParams& params,
                              const EvolutionOptions& evolution = {},
                              const StateOptions& state_opts = {});

/// Red-sideband cooling H = beta (a^dag b_j + H.c.) with the full dissipators.
QState precool(const PhysicalParams& params, int mech_mode, double beta, double duration,
               const QState& rho, const EvolutionOptions& evolution = {});

struct MeasurementRecord {
    int mode = 0;
    double phi = 0.0;
    double outcome = 0.0;
    double density = 0.0;  // marginal probability density at the outcome
};

struct HomodyneGrid {
    double lo = 0.0;
    double hi = 0.0;
    int points = 1001;
};

/// Projective quadrature measurement: posterior ~ (<m|_phi x I) rho (|m>_phi x I),
/// renormalized; density is the unnormalized trace per unit m. The measured
/// mode is removed from the space.
std::pair<QState, double> homodyne_project(const QState& state, int mode, double phi, double m,
                                           double underflow = 1e-12);

/// Marginal density of Q_phi on `mode`, evaluated on the grid.
RealVector homodyne_marginal(const QState& state, int mode, double phi, const HomodyneGrid& grid);

/// [mean - sigmas*sd, mean + sigmas*sd] around the measured quadrature.
HomodyneGrid default_homodyne_grid(const QState& state, int mode, double phi,
                                   double sigmas = 8.0, int points = 1001);

/// Inverse-CDF draw from the grid marginal; deterministic for a given seed.
MeasurementRecord sample_homodyne(const QState& state, int mode, double phi, std::uint64_t seed,
                                  const HomodyneGrid& grid);
MeasurementRecord sample_homodyne(const QState& state, int mode, double phi, std::uint64_t seed);

/// Sub-stream for sample `index`: mt19937_64 seeded with
/// splitmix64(seed + index * 0x9E3779B97F4A7C15).
std::uint64_t sample_stream_seed(std::uint64_t seed, std::uint64_t index);

struct CubicGateOptions {
    std::vector<int> mech_cutoffs;  // empty = default_mech_cutoff heuristic
    int n_samples = 200;
    std::uint64_t seed = 1;
    double grid_sigmas = 8.0;
    int grid_points = 1001;
    StateOptions state_options;

    enum class Preparation { Direct, Switching };
    Preparation preparation = Preparation::Direct;

    // Switching-preparation knobs (ignored for Direct).
    double beta = 1.0;
    double kappa = 10.0;
    RealVector Gamma_m;  // empty = noiseless
    RealVector nbar;
    int cavity_cutoff = 4;
    double step_duration = 10.0;
    bool precool = false;
    double precool_duration = 10.0;
    EvolutionOptions evolution;
};

struct GateSample {
    double m = 0.0;
    double density = 0.0;
    double fidelity = 0.0;
};

struct CubicGateResult {
    double average_fidelity = 0.0;
    std::vector<GateSample> samples;
};

/// Measurement-based cubic phase gate on a two-node cluster (input squeezed
/// node + cubic node): measure p on node 1, compare the node-2 posterior with
/// X(m) P(3 gamma m) Z(3 gamma m^2) F e^{-i gamma p^3} |input>, averaged over
/// seeded measurement samples. Conventions: X(m) = e^{-imp}, Z(t) = e^{itq},
/// P(t) = e^{itq^2}, F = e^{i pi n/2}.
CubicGateResult cubic_gate_pipeline(double input_s, double gamma,
                                    const CubicGateOptions& options = {});

}  // namespace omcv

#endif
