#include "omcv/protocols.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include "omcv/analysis.hpp"

namespace omcv {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
}

SwitchingMatrices switching_matrices(const ClusterSpec& spec) {
    spec.validate();
    const int n = spec.nodes();
    RealVector d_plus(n), d_minus(n), s(n);
    for (int j = 0; j < n; ++j) {
        const double sj = spec.squeezing(j);
        d_plus(j) = 0.5 * (sj + 1.0 / sj);
        d_minus(j) = 0.5 * (sj - 1.0 / sj);
        s(j) = sj;  // D+ + D-
    }
    SwitchingMatrices m;
    m.U = Matrix::Zero(n, n);
    m.V = Matrix::Zero(n, n);
    m.W = Matrix::Zero(n, n);
    for (int l = 0; l < n; ++l) {
        m.U(l, l) = d_plus(l);
        m.V(l, l) = -d_minus(l);
        m.W(l, l) = -kI * (3.0 / (2.0 * std::numbers::sqrt2)) * spec.cubic(l) * s(l);
        for (int j = 0; j < n; ++j) {
            if (!spec.adjacency(l, j)) continue;
            const Complex edge = -kI * 0.5 * s(l);
            m.U(l, j) += edge;
            m.V(l, j) += edge;
        }
    }
    return m;
}

DriveSet step_drives(const SwitchingPlan& plan, int step) {
    const int n = plan.spec.nodes();
    if (step < 1 || step > n) throw DomainError("step_drives: step must lie in 1..N");
    SwitchingMatrices m = switching_matrices(plan.spec);
    DriveSet drives;
    drives.modes.resize(n);
    for (int j = 0; j < n; ++j) {
        auto& g = drives.modes[j];
        g.g1 = plan.beta * m.U(step - 1, j);
        g.g2 = plan.beta * m.V(step - 1, j);
        g.g3 = g.g4 = g.g5 = plan.beta * m.W(step - 1, j);
    }
    return drives;
}

QOperator collective_mode(const ClusterSpec& spec, int step, const TensorSpace& space) {
    const int n = spec.nodes();
    if (step < 1 || step > n) throw DomainError("collective_mode: step must lie in 1..N");
    if (space.modes() != n + 1)
        throw DimensionError("collective_mode: space must hold cavity + N mechanics");
    SwitchingMatrices m = switching_matrices(spec);
    Matrix out = Matrix::Zero(space.dim(), space.dim());
    for (int j = 0; j < n; ++j) {
        const int cutoff = space.cutoff(j + 1);
        Matrix b = annihilation(cutoff).matrix();
        Matrix bd = b.adjoint();
        Matrix x2 = (b + bd) * (b + bd);
        Matrix local = m.U(step - 1, j) * b + m.V(step - 1, j) * bd + m.W(step - 1, j) * x2;
        out += embed(QOperator(TensorSpace::single(cutoff), std::move(local)), j + 1, space)
                   .matrix();
    }
    return QOperator(space, std::move(out));
}

QState precool(const PhysicalParams& params, int mech_mode, double beta, double duration,
               const QState& rho, const EvolutionOptions& evolution) {
    if (!(duration > 0.0)) throw DomainError("precool: duration must be > 0");
    const TensorSpace& space = rho.space();
    if (mech_mode < 1 || mech_mode >= space.modes())
        throw DimensionError("precool: mech_mode must be a mechanical mode index");
    QOperator half = two_mode_embed(creation(space.cutoff(0)), 0,
                                    annihilation(space.cutoff(mech_mode)), mech_mode, space);
    QOperator h = beta * half + beta * half.dagger();
    OpenSystem sys(std::move(h), standard_dissipators(space, params.kappa, params.Gamma_m,
                                                      params.nbar));
    return evolve(sys, rho, duration, {}, evolution).final_state;
}

SwitchingResult run_switching(const SwitchingPlan& plan, const QState& initial,
                              const PhysicalParams& params, const EvolutionOptions& evolution,
                              const StateOptions& state_opts) {
    plan.spec.validate();
    const int n = plan.spec.nodes();
    const TensorSpace& space = initial.space();
    if (space.modes() != n + 1)
        throw DimensionError("run_switching: initial state must live on cavity + N mechanics");
    if (!(plan.step_duration > 0.0))
        throw DomainError("run_switching: step_duration must be > 0");
    if (plan.precool && !(plan.precool_duration > 0.0))
        throw DomainError("run_switching: precool_duration must be > 0");
    if (params.Gamma_m.size() != n || params.nbar.size() != n)
        throw DimensionError("run_switching: params must carry one Gamma_m/nbar per node");

    std::vector<int> mech_modes;
    std::vector<int> mech_cutoffs;
    for (int j = 1; j <= n; ++j) {
        mech_modes.push_back(j);
        mech_cutoffs.push_back(space.cutoff(j));
    }

    SwitchingResult result;
    result.target = cluster_state(plan.spec, mech_cutoffs, state_opts);
    const Vector& target_psi = result.target.vector();
    result.diagnostics.min_eigenvalue = kNaN;

    auto dissipators = standard_dissipators(space, params.kappa, params.Gamma_m, params.nbar);

    struct Phase {
        int label;
        QOperator hamiltonian;
        double duration;
        Matrix occupation_op;  // d_l^dag d_l for switching phases, empty otherwise
    };
    std::vector<Phase> phases;
    if (plan.precool) {
        for (int j = 1; j <= n; ++j) {
            QOperator half = two_mode_embed(creation(space.cutoff(0)), 0,
                                            annihilation(space.cutoff(j)), j, space);
            phases.push_back({-j, plan.beta * half + plan.beta * half.dagger(),
                              plan.precool_duration, Matrix()});
        }
    }
    for (int l = 1; l <= n; ++l) {
        QOperator h = rwa_hamiltonian(step_drives(plan, l), space);
        // Stability of the step's linear part: sum_j |g1|^2 - |g2|^2 = beta^2 (U U^dag - V V^dag)_ll.
        double margin = 0.0;
        for (const auto& g : step_drives(plan, l).modes)
            margin += std::norm(g.g1) - std::norm(g.g2);
        if (margin <= 0.0)
            throw NumericalError("run_switching: step " + std::to_string(l) +
                                 " linear part is not stable");
        QOperator d = collective_mode(plan.spec, l, space);
        phases.push_back({l, std::move(h), plan.step_duration,
                          (d.dagger() * d).matrix()});
    }

    QState rho = initial;
    double global_t = 0.0;
    bool first_phase = true;
    for (const auto& phase : phases) {
        OpenSystem sys(phase.hamiltonian, dissipators);
        EvolutionOptions opts = evolution;
        opts.final_positivity_check = false;
        const bool skip_t0 = !first_phase;
        opts.sample_hook = [&](double t_local, const Matrix& rho_mat) {
            if (skip_t0 && t_local == 0.0) return;
            Matrix red = partial_trace_dense(rho_mat, space, mech_modes);
            const double f =
                std::sqrt(std::max(0.0, target_psi.dot(red * target_psi).real()));
            result.times.push_back(global_t + t_local);
            result.phase_labels.push_back(phase.label);
            result.fidelity.push_back(f);
            if (phase.occupation_op.size() > 0)
                result.collective_occupation.push_back(
                    phase.occupation_op.cwiseProduct(rho_mat.transpose()).sum().real());
            else
                result.collective_occupation.push_back(kNaN);
        };
        EvolutionResult res = evolve(sys, rho, phase.duration, {}, opts);
        rho = res.final_state;
        global_t += phase.duration;
        first_phase = false;
        result.diagnostics.max_trace_drift =
            std::max(result.diagnostics.max_trace_drift, res.diagnostics.max_trace_drift);
        result.diagnostics.steps += res.diagnostics.steps;
        result.diagnostics.rejected_steps += res.diagnostics.rejected_steps;
    }
    if (evolution.final_positivity_check) {
        Eigen::SelfAdjointEigenSolver<Matrix> es(rho.to_density(), Eigen::EigenvaluesOnly);
        result.diagnostics.min_eigenvalue = es.eigenvalues().minCoeff();
    }
    result.final_fidelity = result.fidelity.empty() ? 0.0 : result.fidelity.back();
    result.final_state = std::move(rho);
    return result;
}

// --- homodyne measurement ---------------------------------------------------

std::pair<QState, double> homodyne_project(const QState& state, int mode, double phi, double m,
                                           double underflow) {
    const TensorSpace& space = state.space();
    if (mode < 0 || mode >= space.modes()) throw DimensionError("homodyne_project: bad mode");
    if (space.modes() < 2)
        throw DimensionError("homodyne_project: measuring the last remaining mode is unsupported");
    const int d = space.cutoff(mode);
    const long long right = space.stride(mode);
    const long long left = space.dim() / (right * d);
    const long long K = left * right;
    const Vector v = quadrature_eigenvector(m, phi, d);
    TensorSpace reduced = space.without({mode});

    if (state.is_pure()) {
        const Vector& psi = state.vector();
        Vector out = Vector::Zero(K);
        for (long long l = 0; l < left; ++l)
            for (int i = 0; i < d; ++i) {
                const Complex w = std::conj(v(i));
                const long long src = (l * d + i) * right;
                out.segment(l * right, right) += w * psi.segment(src, right);
            }
        const double density = out.squaredNorm();
        if (density < underflow)
            throw RareOutcomeError("homodyne_project: outcome density " +
                                   std::to_string(density) + " underflows");
        out /= std::sqrt(density);
        return {QState::pure(std::move(reduced), std::move(out)), density};
    }

    const Matrix& rho = state.density();
    Matrix half = Matrix::Zero(K, space.dim());
    for (long long l = 0; l < left; ++l)
        for (int i = 0; i < d; ++i) {
            const Complex w = std::conj(v(i));
            half.middleRows(l * right, right) += w * rho.middleRows((l * d + i) * right, right);
        }
    Matrix post = Matrix::Zero(K, K);
    for (long long l = 0; l < left; ++l)
        for (int j = 0; j < d; ++j)
            post.middleCols(l * right, right) += v(j) * half.middleCols((l * d + j) * right, right);
    const double density = post.trace().real();
    if (density < underflow)
        throw RareOutcomeError("homodyne_project: outcome density " + std::to_string(density) +
                               " underflows");
    post /= density;
    post = 0.5 * (post + post.adjoint()).eval();
    return {QState::mixed_unchecked(std::move(reduced), std::move(post)), density};
}

namespace {

struct QuadratureMoments {
    double mean;
    double sd;
};

QuadratureMoments quadrature_moments(const Matrix& rho_mode, double phi) {
    const int d = static_cast<int>(rho_mode.rows());
    const Matrix q = rotated_quadrature(d, phi).matrix();
    const double mean = q.cwiseProduct(rho_mode.transpose()).sum().real();
    const Matrix q2 = q * q;
    const double second = q2.cwiseProduct(rho_mode.transpose()).sum().real();
    return {mean, std::sqrt(std::max(0.0, second - mean * mean))};
}

double marginal_at(const Matrix& rho_mode, double phi, double m) {
    const Vector v = quadrature_eigenvector(m, phi, static_cast<int>(rho_mode.rows()));
    return std::max(0.0, v.dot(rho_mode * v).real());
}

std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Uniform in [0,1) from the top 53 bits; bit-identical across platforms.
double uniform01(std::uint64_t& state) {
    state = splitmix64(state);
    return static_cast<double>(state >> 11) * 0x1.0p-53;
}

// Piecewise-linear density inversion: find m with CDF(m) = u.
double invert_cdf(const RealVector& density, const HomodyneGrid& grid, double u) {
    const double dm = (grid.hi - grid.lo) / (grid.points - 1);
    double cum = 0.0;
    for (int k = 0; k + 1 < grid.points; ++k) {
        const double p0 = density(k), p1 = density(k + 1);
        const double bin = 0.5 * (p0 + p1) * dm;
        if (cum + bin >= u && bin > 0.0) {
            const double frac = (u - cum) / dm;  // integral of density over [0, xi]
            const double a = 0.5 * (p1 - p0);
            double xi;
            if (std::abs(a) < 1e-300) {
                xi = frac / p0;
            } else {
                const double disc = p0 * p0 + 4.0 * a * frac;
                xi = (-p0 + std::sqrt(std::max(0.0, disc))) / (2.0 * a);
            }
            xi = std::clamp(xi, 0.0, 1.0);
            return grid.lo + (k + xi) * dm;
        }
        cum += bin;
    }
    return grid.hi;
}

}  // namespace

RealVector homodyne_marginal(const QState& state, int mode, double phi,
                             const HomodyneGrid& grid) {
    if (grid.points < 2 || !(grid.hi > grid.lo))
        throw GridError("homodyne_marginal: degenerate grid");
    const Matrix rho_mode = partial_trace(state, {mode}).to_density();
    RealVector out(grid.points);
    const double dm = (grid.hi - grid.lo) / (grid.points - 1);
    for (int k = 0; k < grid.points; ++k)
        out(k) = marginal_at(rho_mode, phi, grid.lo + k * dm);
    return out;
}

HomodyneGrid default_homodyne_grid(const QState& state, int mode, double phi, double sigmas,
                                   int points) {
    const Matrix rho_mode = partial_trace(state, {mode}).to_density();
    const auto [mean, sd] = quadrature_moments(rho_mode, phi);
    return {mean - sigmas * sd, mean + sigmas * sd, points};
}

MeasurementRecord sample_homodyne(const QState& state, int mode, double phi, std::uint64_t seed,
                                  const HomodyneGrid& grid) {
    const Matrix rho_mode = partial_trace(state, {mode}).to_density();
    const auto [mean, sd] = quadrature_moments(rho_mode, phi);
    if (grid.lo > mean - 6.0 * sd || grid.hi < mean + 6.0 * sd)
        throw GridError("sample_homodyne: grid narrower than 6 standard deviations");

    RealVector density(grid.points);
    const double dm = (grid.hi - grid.lo) / (grid.points - 1);
    for (int k = 0; k < grid.points; ++k)
        density(k) = marginal_at(rho_mode, phi, grid.lo + k * dm);
    double total = 0.0;
    for (int k = 0; k + 1 < grid.points; ++k) total += 0.5 * (density(k) + density(k + 1)) * dm;
    if (1.0 - total > 1e-4)
        throw GridError("sample_homodyne: tail mass " + std::to_string(1.0 - total) +
                        " outside the grid");

    std::uint64_t rng_state = seed;
    const double u = uniform01(rng_state) * total;
    const double m = invert_cdf(density, grid, u);
    return {mode, phi, m, marginal_at(rho_mode, phi, m)};
}

MeasurementRecord sample_homodyne(const QState& state, int mode, double phi,
                                  std::uint64_t seed) {
    return sample_homodyne(state, mode, phi, seed, default_homodyne_grid(state, mode, phi));
}

std::uint64_t sample_stream_seed(std::uint64_t seed, std::uint64_t index) {
    return splitmix64(seed + index * 0x9E3779B97F4A7C15ULL);
}

// --- cubic phase gate ---------------------------------------------------------

CubicGateResult cubic_gate_pipeline(double input_s, double gamma,
                                    const CubicGateOptions& options) {
    if (!(input_s > 0.0)) throw DomainError("cubic_gate_pipeline: input_s must be > 0");
    if (options.n_samples < 1) throw DomainError("cubic_gate_pipeline: n_samples must be >= 1");

    std::vector<int> cutoffs = options.mech_cutoffs;
    if (cutoffs.empty())
        cutoffs = {default_mech_cutoff(input_s, 0.0), default_mech_cutoff(input_s, gamma)};
    if (cutoffs.size() != 2)
        throw DimensionError("cubic_gate_pipeline: two mechanical cutoffs required");

    ClusterSpec spec = ClusterSpec::two_node(input_s, input_s, 0.0, gamma);

    // Cluster preparation: exact constructor, or the dissipative protocol.
    QState mech_state = [&]() -> QState {
        if (options.preparation == CubicGateOptions::Preparation::Direct)
            return cluster_state(spec, cutoffs, options.state_options);
        RealVector Gamma_m = options.Gamma_m.size() ? options.Gamma_m : RealVector::Zero(2);
        RealVector nbar = options.nbar.size() ? options.nbar : RealVector::Zero(2);
        PhysicalParams params = PhysicalParams::rates(options.kappa, Gamma_m, nbar);
        TensorSpace space = TensorSpace::cavity_mechanics(options.cavity_cutoff, cutoffs);
        QState cavity = QState::pure(TensorSpace::single(options.cavity_cutoff, "cavity"),
                                     Vector::Unit(options.cavity_cutoff, 0));
        StateOptions relaxed;
        relaxed.norm_loss_tol = 1.0;  // protocol cutoffs are diagnosed, not enforced
        QState mech1 = nbar(0) > 0.0 ? thermal_state(nbar(0), cutoffs[0], relaxed)
                                     : QState::pure(TensorSpace::single(cutoffs[0]),
                                                    Vector::Unit(cutoffs[0], 0));
        QState mech2 = nbar(1) > 0.0 ? thermal_state(nbar(1), cutoffs[1], relaxed)
                                     : QState::pure(TensorSpace::single(cutoffs[1]),
                                                    Vector::Unit(cutoffs[1], 0));
        QState initial = tensor(tensor(cavity, mech1), mech2);
        SwitchingPlan plan{spec, options.beta, options.step_duration, options.precool,
                           options.precool_duration};
        SwitchingResult run = run_switching(plan, initial, params, options.evolution, relaxed);
        return partial_trace(run.final_state, {1, 2});
    }();

    const int c2 = cutoffs[1];
    const double half_pi = 0.5 * std::numbers::pi;

    // Sample-independent part of the target: F exp(-i gamma p^3) |input>.
    QOperator p_op = momentum_quadrature(c2);
    QOperator q_op = position_quadrature(c2);
    StateOptions base_opts = options.state_options;
    base_opts.norm_loss_tol = std::max(base_opts.norm_loss_tol, 1e-4);
    Vector base = squeezed_vacuum(input_s, c2, base_opts).vector();
    base = matrix_exp(p_op * p_op * p_op, -kI * gamma).matrix() * base;
    base = matrix_exp(number_operator(c2), kI * half_pi).matrix() * base;

    Eigen::SelfAdjointEigenSolver<Matrix> es_q(q_op.matrix());
    Eigen::SelfAdjointEigenSolver<Matrix> es_p(p_op.matrix());

    // Measurement statistics of p on node 1.
    const Matrix rho_node1 = partial_trace(mech_state, {0}).to_density();
    const auto [mean, sd] = quadrature_moments(rho_node1, half_pi);
    HomodyneGrid grid{mean - options.grid_sigmas * sd, mean + options.grid_sigmas * sd,
                      options.grid_points};
    RealVector marg(grid.points);
    const double dm = (grid.hi - grid.lo) / (grid.points - 1);
    for (int k = 0; k < grid.points; ++k)
        marg(k) = marginal_at(rho_node1, half_pi, grid.lo + k * dm);
    double total = 0.0;
    for (int k = 0; k + 1 < grid.points; ++k) total += 0.5 * (marg(k) + marg(k + 1)) * dm;
    if (1.0 - total > 1e-4)
        throw GridError("cubic_gate_pipeline: marginal tail mass outside the grid");

    CubicGateResult result;
    result.samples.reserve(options.n_samples);
    double fidelity_sum = 0.0;
    for (int i = 0; i < options.n_samples; ++i) {
        std::uint64_t stream = sample_stream_seed(options.seed, i);
        const double u = uniform01(stream) * total;
        const double m = invert_cdf(marg, grid, u);

        auto [posterior, density] = homodyne_project(mech_state, 0, half_pi, m);

        // X(m) P(3 gamma m) Z(3 gamma m^2) applied to the cached base.
        Vector target = es_q.eigenvectors().adjoint() * base;
        for (int k = 0; k < c2; ++k) {
            const double lam = es_q.eigenvalues()(k);
            target(k) *= std::exp(kI * (3.0 * gamma * m * lam * lam +
                                        3.0 * gamma * m * m * lam));
        }
        target = es_q.eigenvectors() * target;
        target = es_p.eigenvectors().adjoint() * target;
        for (int k = 0; k < c2; ++k)
            target(k) *= std::exp(-kI * (m * es_p.eigenvalues()(k)));
        target = es_p.eigenvectors() * target;
        target /= target.norm();

        QState target_state = QState::pure(TensorSpace::single(c2), std::move(target));
        const double f = fidelity_pure_target(target_state, posterior);
        fidelity_sum += f;
        result.samples.push_back({m, density, f});
    }
    result.average_fidelity = fidelity_sum / options.n_samples;
    return result;
}

}  // namespace omcv
