#ifndef OMCV_LINDBLAD_HPP
#define OMCV_LINDBLAD_HPP

#include <functional>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "omcv/fock.hpp"
#include "omcv/model.hpp"

namespace omcv {

struct CollapseOp {
    QOperator op;
    double rate = 0.0;
};

/// Cavity decay sqrt(kappa) a plus thermal mechanical dissipators
/// sqrt(Gamma (nbar+1)) b_j and sqrt(Gamma nbar) b_j^dag. Zero-rate channels
/// are dropped.
std::vector<CollapseOp> standard_dissipators(const TensorSpace& space, double kappa,
                                             const RealVector& Gamma_m, const RealVector& nbar);

/// Master-equation system: Hamiltonian (constant or harmonic time-dependent)
/// plus Lindblad channels. Sparse forms of every operator are compiled once
/// at construction and immutable afterwards.
class OpenSystem {
  public:
    OpenSystem(QOperator hamiltonian, std::vector<CollapseOp> collapse);
    OpenSystem(TimeDependentHamiltonian hamiltonian, std::vector<CollapseOp> collapse);

    const TensorSpace& space() const { return space_; }
    bool time_dependent() const { return std::holds_alternative<TimeDependentHamiltonian>(h_); }
    const QOperator& constant_hamiltonian() const;
    const TimeDependentHamiltonian& harmonic_hamiltonian() const;
    const std::vector<CollapseOp>& collapse_ops() const { return collapse_; }

    double hamiltonian_frobenius() const { return h_frobenius_; }
    double spectral_scale() const { return spectral_scale_; }
    /// Fastest harmonic frequency (0 for constant Hamiltonians).
    double max_frequency() const;

    struct CompiledChannel {
        SparseCMatrix c;        // sqrt(rate) folded in
        SparseCMatrix c_adj;
        bool cdc_diagonal = false;
        Vector cdc_diag;
        SparseCMatrix cdc;
    };
    struct Compiled {
        SparseCMatrix h0;
        struct Harmonic {
            SparseCMatrix block;
            SparseCMatrix block_adj;
            double frequency;
        };
        std::vector<Harmonic> harmonics;
        std::vector<CompiledChannel> channels;
    };
    const Compiled& compiled() const { return compiled_; }

  private:
    void compile();
    TensorSpace space_;
    std::variant<QOperator, TimeDependentHamiltonian> h_;
    std::vector<CollapseOp> collapse_;
    Compiled compiled_;
    double h_frobenius_ = 0.0;
    double spectral_scale_ = 0.0;
};

/// drho/dt = -i[H(t), rho] + sum_i rate_i D[c_i] rho, with
/// D[f] rho = f rho f^dag - (1/2){f^dag f, rho}.
Matrix liouvillian_apply(const OpenSystem& sys, const QState& rho, double t = 0.0);

struct Observable {
    std::string name;
    QOperator op;
};

struct EvolutionOptions {
    enum class Stepper { Adaptive, Fixed };
    Stepper stepper = Stepper::Adaptive;
    double dt = 0.0;               // fixed-mode step; 0 = 0.01 / spectral-scale default
    double rel_tol = 1e-8;         // adaptive per-step relative error target
    double sample_interval = 0.0;  // 0 = t_final / 200
    double trace_abort = 1e-4;     // abort threshold on |tr(rho) - 1|
    int positivity_checks = 0;     // extra min-eigenvalue checks along the run
    bool final_positivity_check = true;
    /// Called at every sample time with the current (Hermitian) density matrix.
    std::function<void(double, const Matrix&)> sample_hook;
};

struct EvolutionResult {
    QState final_state;
    std::vector<double> times;
    std::vector<std::string> observable_names;
    std::vector<std::vector<Complex>> observable_values;  // [observable][sample]
    std::vector<double> trace_values;
    struct Diagnostics {
        double max_trace_drift = 0.0;
        double min_eigenvalue = 0.0;  // NaN when never checked
        long long steps = 0;
        long long rejected_steps = 0;
    } diagnostics;
};

EvolutionResult evolve(const OpenSystem& sys, const QState& rho0, double t_final,
                       const std::vector<Observable>& observables = {},
                       const EvolutionOptions& options = {});

struct SteadyStateOptions {
    enum class Method { Auto, NullSpace, Integrate };
    Method method = Method::Auto;
    double tol_factor = 1e-8;      // residual threshold = tol_factor * ||H||_F
    double fidelity_tol = 1e-9;    // |1 - F| between successive checkpoints
    double max_time = 0.0;         // integration budget (required for Integrate)
    double checkpoint_interval = 0.0;  // 0 = max_time / 50
    std::optional<QState> initial;     // default: vacuum
    EvolutionOptions evolution;
};

/// Direct null space of the materialized superoperator; total dimension <= 64.
QState steady_state_nullspace(const OpenSystem& sys, double tol_factor = 1e-8);

/// Long-time integration with combined residual-norm and checkpoint-fidelity
/// convergence tests.
QState steady_state_integrate(const OpenSystem& sys, const SteadyStateOptions& options);

/// Auto: null space when the superoperator fits (dim <= 64), else integration.
QState steady_state(const OpenSystem& sys, const SteadyStateOptions& options = {});

/// Column-stacked superoperator matrix; refuses total dimension > 64.
Matrix materialized_liouvillian(const OpenSystem& sys);

QState partial_trace(const QState& state, const std::vector<int>& keep);

/// Dense-matrix form used by sampling hooks that hold a raw density matrix.
Matrix partial_trace_dense(const Matrix& rho, const TensorSpace& space,
                           const std::vector<int>& keep);

Complex expectation(const QOperator& op, const QState& state);

/// Fidelity between arbitrary states: |<a|b>|, sqrt(<psi|rho|psi>), or the
/// Uhlmann fidelity tr sqrt(sqrt(a) b sqrt(a)) for two mixed states. Used by
/// the steady-state convergence test and solver cross-checks.
double state_fidelity(const QState& a, const QState& b);

}  // namespace omcv

#endif
