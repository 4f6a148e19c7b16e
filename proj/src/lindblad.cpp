#include "omcv/lindblad.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace omcv {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// out = A * B (sparse * dense), column-parallel and bitwise deterministic.
// Raw CSC walks; these two kernels dominate every evolution run.
void spmm_set(const SparseCMatrix& A, const Matrix& B, Matrix& out) {
    const Eigen::Index cols = B.cols();
    const Eigen::Index outer = A.outerSize();
    const auto* offsets = A.outerIndexPtr();
    const auto* rows = A.innerIndexPtr();
    const Complex* vals = A.valuePtr();
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < cols; ++j) {
        Complex* y = out.col(j).data();
        std::fill(y, y + out.rows(), Complex(0.0, 0.0));
        const Complex* x = B.col(j).data();
        for (Eigen::Index k = 0; k < outer; ++k) {
            const Complex xv = x[k];
            if (xv == Complex(0.0, 0.0)) continue;
            const auto end = offsets[k + 1];
            for (auto p = offsets[k]; p < end; ++p) y[rows[p]] += vals[p] * xv;
        }
    }
}

// out += alpha * A * B
void spmm_add(Complex alpha, const SparseCMatrix& A, const Matrix& B, Matrix& out) {
    const Eigen::Index cols = B.cols();
    const Eigen::Index outer = A.outerSize();
    const auto* offsets = A.outerIndexPtr();
    const auto* rows = A.innerIndexPtr();
    const Complex* vals = A.valuePtr();
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < cols; ++j) {
        Complex* y = out.col(j).data();
        const Complex* x = B.col(j).data();
        for (Eigen::Index k = 0; k < outer; ++k) {
            const Complex xv = alpha * x[k];
            if (xv == Complex(0.0, 0.0)) continue;
            const auto end = offsets[k + 1];
            for (auto p = offsets[k]; p < end; ++p) y[rows[p]] += vals[p] * xv;
        }
    }
}

// out += alpha * B * A (dense * sparse)
void dsmm_add(Complex alpha, const Matrix& B, const SparseCMatrix& A, Matrix& out) {
    const Eigen::Index cols = A.outerSize();
    const Eigen::Index d = B.rows();
    const auto* offsets = A.outerIndexPtr();
    const auto* rows = A.innerIndexPtr();
    const Complex* vals = A.valuePtr();
#pragma omp parallel for schedule(static)
    for (Eigen::Index j = 0; j < cols; ++j) {
        Complex* y = out.col(j).data();
        const auto end = offsets[j + 1];
        for (auto p = offsets[j]; p < end; ++p) {
            const Complex w = alpha * vals[p];
            const Complex* b = B.col(rows[p]).data();
            for (Eigen::Index i = 0; i < d; ++i) y[i] += w * b[i];
        }
    }
}

// out = -i (S - S^dag), tiled for the transposed reads.
void commutator_from_product(const Matrix& S, Matrix& out) {
    const Eigen::Index d = S.rows();
    constexpr Eigen::Index tile = 64;
#pragma omp parallel for schedule(static)
    for (Eigen::Index j0 = 0; j0 < d; j0 += tile) {
        const Eigen::Index j1 = std::min(j0 + tile, d);
        for (Eigen::Index i0 = 0; i0 < d; i0 += tile) {
            const Eigen::Index i1 = std::min(i0 + tile, d);
            for (Eigen::Index j = j0; j < j1; ++j) {
                Complex* y = out.col(j).data();
                const Complex* sj = S.col(j).data();
                for (Eigen::Index i = i0; i < i1; ++i) {
                    const Complex diff = sj[i] - std::conj(S(j, i));
                    y[i] = Complex(diff.imag(), -diff.real());  // -i * diff
                }
            }
        }
    }
}

double spectral_norm_estimate(const SparseCMatrix& A) {
    if (A.nonZeros() == 0) return 0.0;
    Vector v = Vector::Ones(A.cols());
    v /= v.norm();
    Vector w(A.rows());
    double est = 0.0;
    for (int it = 0; it < 25; ++it) {
        w.noalias() = A * v;
        v.noalias() = A.adjoint() * w;
        const double n = v.norm();
        if (n == 0.0) return 0.0;
        est = std::sqrt(n);  // ||A^H A v|| -> lambda_max(A^H A) = ||A||_2^2
        v /= n;
    }
    return est;
}

Matrix vacuum_density(const TensorSpace& space) {
    Matrix rho = Matrix::Zero(space.dim(), space.dim());
    rho(0, 0) = 1.0;
    return rho;
}

Matrix kron_dense(const Matrix& A, const Matrix& B) {
    Matrix out(A.rows() * B.rows(), A.cols() * B.cols());
    for (Eigen::Index i = 0; i < A.rows(); ++i)
        for (Eigen::Index j = 0; j < A.cols(); ++j)
            out.block(i * B.rows(), j * B.cols(), B.rows(), B.cols()) = A(i, j) * B;
    return out;
}

double mixed_fidelity(const Matrix& rho, const Matrix& sigma) {
    Eigen::SelfAdjointEigenSolver<Matrix> es_rho(0.5 * (rho + rho.adjoint()));
    Vector sqrt_ev(es_rho.eigenvalues().size());
    for (Eigen::Index k = 0; k < sqrt_ev.size(); ++k)
        sqrt_ev(k) = std::sqrt(std::max(0.0, es_rho.eigenvalues()(k)));
    Matrix sqrt_rho = es_rho.eigenvectors() * sqrt_ev.asDiagonal() * es_rho.eigenvectors().adjoint();
    Matrix m = sqrt_rho * sigma * sqrt_rho;
    Eigen::SelfAdjointEigenSolver<Matrix> es_m(0.5 * (m + m.adjoint()), Eigen::EigenvaluesOnly);
    double f = 0.0;
    for (Eigen::Index k = 0; k < es_m.eigenvalues().size(); ++k)
        f += std::sqrt(std::max(0.0, es_m.eigenvalues()(k)));
    return f;
}

}  // namespace

std::vector<CollapseOp> standard_dissipators(const TensorSpace& space, double kappa,
                                             const RealVector& Gamma_m, const RealVector& nbar) {
    const int n_mech = space.modes() - 1;
    if (Gamma_m.size() != n_mech || nbar.size() != n_mech)
        throw DimensionError("standard_dissipators: need one Gamma_m and nbar per mechanical mode");
    std::vector<CollapseOp> ops;
    if (kappa < 0.0) throw DomainError("standard_dissipators: kappa must be >= 0");
    if (kappa > 0.0)
        ops.push_back({embed(annihilation(space.cutoff(0)), 0, space), kappa});
    for (int j = 0; j < n_mech; ++j) {
        if (Gamma_m(j) < 0.0 || nbar(j) < 0.0)
            throw DomainError("standard_dissipators: rates and occupations must be >= 0");
        if (Gamma_m(j) == 0.0) continue;
        QOperator b = embed(annihilation(space.cutoff(j + 1)), j + 1, space);
        ops.push_back({b, Gamma_m(j) * (nbar(j) + 1.0)});
        if (nbar(j) > 0.0) ops.push_back({b.dagger(), Gamma_m(j) * nbar(j)});
    }
    return ops;
}

OpenSystem::OpenSystem(QOperator hamiltonian, std::vector<CollapseOp> collapse)
    : space_(hamiltonian.space()), h_(std::move(hamiltonian)), collapse_(std::move(collapse)) {
    compile();
}

OpenSystem::OpenSystem(TimeDependentHamiltonian hamiltonian, std::vector<CollapseOp> collapse)
    : space_(hamiltonian.space()), h_(std::move(hamiltonian)), collapse_(std::move(collapse)) {
    compile();
}

const QOperator& OpenSystem::constant_hamiltonian() const {
    if (time_dependent())
        throw UnsupportedOperationError("OpenSystem: Hamiltonian is time-dependent");
    return std::get<QOperator>(h_);
}

const TimeDependentHamiltonian& OpenSystem::harmonic_hamiltonian() const {
    if (!time_dependent())
        throw UnsupportedOperationError("OpenSystem: Hamiltonian is constant");
    return std::get<TimeDependentHamiltonian>(h_);
}

double OpenSystem::max_frequency() const {
    return time_dependent() ? harmonic_hamiltonian().max_frequency() : 0.0;
}

void OpenSystem::compile() {
    const QOperator& h0 = time_dependent() ? harmonic_hamiltonian().constant_part()
                                           : std::get<QOperator>(h_);
    if (!h0.is_hermitian(1e-12))
        throw DomainError("OpenSystem: Hamiltonian must be Hermitian to 1e-12");
    compiled_.h0 = h0.sparse();
    h_frobenius_ = h0.matrix().norm();

    double h2 = spectral_norm_estimate(compiled_.h0);
    if (time_dependent()) {
        for (const auto& blk : harmonic_hamiltonian().blocks()) {
            if (blk.block.space() != space_)
                throw DimensionError("OpenSystem: harmonic block space mismatch");
            Compiled::Harmonic h;
            h.block = blk.block.sparse();
            h.block_adj = blk.block.dagger().sparse();
            h.frequency = blk.frequency;
            h2 += 2.0 * spectral_norm_estimate(h.block);
            compiled_.harmonics.push_back(std::move(h));
        }
    }

    double dissipative_scale = 0.0;
    for (const auto& col : collapse_) {
        if (col.rate < 0.0) throw DomainError("OpenSystem: collapse rate must be >= 0");
        if (col.op.space() != space_)
            throw DimensionError("OpenSystem: collapse operator space mismatch");
        if (col.rate == 0.0) continue;
        CompiledChannel ch;
        ch.c = (std::sqrt(col.rate) * col.op).sparse();
        ch.c_adj = SparseCMatrix(ch.c.adjoint());
        SparseCMatrix cdc = (ch.c_adj * ch.c).pruned(1e-15, 1.0);
        bool diagonal = true;
        for (int k = 0; k < cdc.outerSize() && diagonal; ++k)
            for (SparseCMatrix::InnerIterator it(cdc, k); it; ++it)
                if (it.row() != it.col() && std::abs(it.value()) > 1e-14) {
                    diagonal = false;
                    break;
                }
        ch.cdc_diagonal = diagonal;
        if (diagonal) {
            ch.cdc_diag = Vector::Zero(space_.dim());
            for (int k = 0; k < cdc.outerSize(); ++k)
                for (SparseCMatrix::InnerIterator it(cdc, k); it; ++it)
                    if (it.row() == it.col()) ch.cdc_diag(it.row()) = it.value();
            dissipative_scale += ch.cdc_diag.cwiseAbs().maxCoeff();
        } else {
            ch.cdc = cdc;
            dissipative_scale += spectral_norm_estimate(cdc);
        }
        compiled_.channels.push_back(std::move(ch));
    }
    spectral_scale_ = 2.0 * h2 + dissipative_scale;
}

namespace {

// Right-hand side and RK4 machinery sharing preallocated buffers. Exploits
// rho = rho^dag: rho H = (H rho)^dag and rho c^dag c = (c^dag c rho)^dag.
class Engine {
  public:
    explicit Engine(const OpenSystem& sys)
        : sys_(sys), dim_(sys.space().dim()) {
        s_.resize(dim_, dim_);
        t_.resize(dim_, dim_);
        k_.resize(dim_, dim_);
        acc_.resize(dim_, dim_);
        stage_.resize(dim_, dim_);
    }

    void rhs(double t, const Matrix& rho, Matrix& out) {
        const auto& c = sys_.compiled();
        // s_ = H(t) * rho
        spmm_set(c.h0, rho, s_);
        for (const auto& h : c.harmonics) {
            const Complex phase = std::exp(kI * (h.frequency * t));
            spmm_add(phase, h.block, rho, s_);
            spmm_add(std::conj(phase), h.block_adj, rho, s_);
        }
        commutator_from_product(s_, out);
        for (const auto& ch : c.channels) {
            spmm_set(ch.c, rho, t_);
            dsmm_add(Complex(1.0), t_, ch.c_adj, out);
            if (ch.cdc_diagonal) {
                out.noalias() -= (0.5 * ch.cdc_diag).asDiagonal() * rho;
                out.noalias() -= rho * (0.5 * ch.cdc_diag).asDiagonal();
            } else {
                spmm_add(Complex(-0.5), ch.cdc, rho, out);
                dsmm_add(Complex(-0.5), rho, ch.cdc, out);
            }
        }
    }

    void rk4_step(double t, double h, const Matrix& y, Matrix& out) {
        rhs(t, y, k_);
        rk4_tail(t, h, y, k_, out);
    }

    void rk4_step_from_k1(double t, double h, const Matrix& y, const Matrix& k1, Matrix& out) {
        rk4_tail(t, h, y, k1, out);
    }

    long long dim() const { return dim_; }

  private:
    void rk4_tail(double t, double h, const Matrix& y, const Matrix& k1, Matrix& out) {
        acc_ = y + (h / 6.0) * k1;
        stage_ = y + (0.5 * h) * k1;
        rhs(t + 0.5 * h, stage_, k_);
        acc_ += (h / 3.0) * k_;
        stage_ = y + (0.5 * h) * k_;
        rhs(t + 0.5 * h, stage_, k_);
        acc_ += (h / 3.0) * k_;
        stage_ = y + h * k_;
        rhs(t + h, stage_, k_);
        out = acc_ + (h / 6.0) * k_;
    }

    const OpenSystem& sys_;
    long long dim_;
    Matrix s_, t_, k_, acc_, stage_;
};

double min_eigenvalue(const Matrix& rho) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho + rho.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

}  // namespace

Matrix liouvillian_apply(const OpenSystem& sys, const QState& rho, double t) {
    if (rho.space() != sys.space()) throw DimensionError("liouvillian_apply: space mismatch");
    Engine engine(sys);
    Matrix out(sys.space().dim(), sys.space().dim());
    Matrix dense = rho.to_density();
    engine.rhs(t, dense, out);
    return out;
}

EvolutionResult evolve(const OpenSystem& sys, const QState& rho0, double t_final,
                       const std::vector<Observable>& observables,
                       const EvolutionOptions& options) {
    if (rho0.space() != sys.space()) throw DimensionError("evolve: state space mismatch");
    if (!(t_final > 0.0)) throw DomainError("evolve: t_final must be > 0");

    const long long dim = sys.space().dim();
    Engine engine(sys);

    std::vector<SparseCMatrix> obs_sparse;
    obs_sparse.reserve(observables.size());
    for (const auto& o : observables) {
        if (o.op.space() != sys.space()) throw DimensionError("evolve: observable space mismatch");
        obs_sparse.push_back(o.op.sparse());
    }

    const double sample_dt = options.sample_interval > 0.0 ? options.sample_interval
                                                           : t_final / 200.0;
    const int n_samples = std::max(1, static_cast<int>(std::llround(t_final / sample_dt)));

    // Resolve the fastest harmonic with >= 20 steps per period.
    double h_cap = std::numeric_limits<double>::infinity();
    if (sys.max_frequency() > 0.0)
        h_cap = 2.0 * std::numbers::pi / (20.0 * sys.max_frequency());

    EvolutionResult result;
    result.observable_names.reserve(observables.size());
    for (const auto& o : observables) result.observable_names.push_back(o.name);
    result.observable_values.assign(observables.size(), {});
    result.diagnostics.min_eigenvalue = kNaN;

    Matrix rho = rho0.to_density();
    Matrix full(dim, dim), half_mid(dim, dim), half(dim, dim), k1(dim, dim);

    int positivity_stride = 0;
    if (options.positivity_checks > 0)
        positivity_stride = std::max(1, n_samples / options.positivity_checks);

    auto take_sample = [&](double t, int sample_index) {
        const double tr = rho.trace().real();
        result.diagnostics.max_trace_drift =
            std::max(result.diagnostics.max_trace_drift, std::abs(tr - 1.0));
        if (std::abs(tr - 1.0) > options.trace_abort || !rho.allFinite())
            throw NumericalError("evolve: trace drift " + std::to_string(std::abs(tr - 1.0)) +
                                     " beyond abort threshold at t = " + std::to_string(t),
                                 std::abs(tr - 1.0));
        result.times.push_back(t);
        result.trace_values.push_back(tr);
        for (size_t i = 0; i < obs_sparse.size(); ++i) {
            Complex val = 0.0;
            const SparseCMatrix& o = obs_sparse[i];
            for (int k = 0; k < o.outerSize(); ++k)
                for (SparseCMatrix::InnerIterator it(o, k); it; ++it)
                    val += it.value() * rho(it.col(), it.row());
            result.observable_values[i].push_back(val);
        }
        if (positivity_stride > 0 && sample_index > 0 && sample_index % positivity_stride == 0) {
            const double mineig = min_eigenvalue(rho);
            if (std::isnan(result.diagnostics.min_eigenvalue) ||
                mineig < result.diagnostics.min_eigenvalue)
                result.diagnostics.min_eigenvalue = mineig;
        }
        if (options.sample_hook) options.sample_hook(t, rho);
    };

    take_sample(0.0, 0);

    const bool adaptive = options.stepper == EvolutionOptions::Stepper::Adaptive;
    double h_fixed = options.dt;
    if (!adaptive && h_fixed <= 0.0)
        h_fixed = 0.01 / std::max(sys.spectral_scale(), 1e-300);
    h_fixed = std::min(h_fixed, h_cap);

    double h = adaptive ? std::min({0.2 / std::max(sys.spectral_scale(), 1e-300),
                                    h_cap, sample_dt})
                        : h_fixed;
    const double h_min = t_final * 1e-14;
    double t = 0.0;

    for (int s = 1; s <= n_samples; ++s) {
        const double t_target = (s == n_samples) ? t_final : s * sample_dt;
        if (adaptive) {
            while (t < t_target - 1e-12 * sample_dt) {
                bool clipped = h > t_target - t;
                double hs = clipped ? t_target - t : h;
                engine.rhs(t, rho, k1);
                bool accepted = false;
                while (!accepted) {
                    if (hs < h_min)
                        throw NumericalError("evolve: step-size underflow at t = " +
                                             std::to_string(t));
                    engine.rk4_step_from_k1(t, hs, rho, k1, full);
                    engine.rk4_step_from_k1(t, 0.5 * hs, rho, k1, half_mid);
                    engine.rk4_step(t + 0.5 * hs, 0.5 * hs, half_mid, half);
                    const double err = (full - half).norm() / 15.0;
                    if (err <= options.rel_tol) {
                        rho = half + (half - full) / 15.0;
                        rho = 0.5 * (rho + rho.adjoint()).eval();
                        t += hs;
                        ++result.diagnostics.steps;
                        if (!clipped) {
                            const double grow =
                                err > 0.0 ? 0.9 * std::pow(options.rel_tol / err, 0.2) : 2.0;
                            h = std::min(hs * std::clamp(grow, 0.5, 2.0), h_cap);
                        }
                        accepted = true;
                    } else {
                        ++result.diagnostics.rejected_steps;
                        hs *= std::max(0.2, 0.9 * std::pow(options.rel_tol / err, 0.25));
                        clipped = false;
                    }
                }
            }
        } else {
            const double span = t_target - t;
            const long long steps = std::max(1LL, static_cast<long long>(std::ceil(span / h_fixed)));
            const double hs = span / static_cast<double>(steps);
            for (long long k = 0; k < steps; ++k) {
                engine.rk4_step(t, hs, rho, full);
                rho = 0.5 * (full + full.adjoint()).eval();
                t += hs;
                ++result.diagnostics.steps;
            }
        }
        t = t_target;
        take_sample(t, s);
    }

    if (options.final_positivity_check) {
        const double mineig = min_eigenvalue(rho);
        if (std::isnan(result.diagnostics.min_eigenvalue) ||
            mineig < result.diagnostics.min_eigenvalue)
            result.diagnostics.min_eigenvalue = mineig;
    }
    result.final_state = QState::mixed_unchecked(sys.space(), std::move(rho));
    return result;
}

Matrix materialized_liouvillian(const OpenSystem& sys) {
    if (sys.time_dependent())
        throw UnsupportedOperationError("materialized_liouvillian: constant Hamiltonian required");
    const long long d = sys.space().dim();
    if (d > 64)
        throw ResourceError("materialized_liouvillian: dimension " + std::to_string(d) +
                            " exceeds the 64 materialization limit");
    const Matrix h = sys.constant_hamiltonian().matrix();
    const Matrix id = Matrix::Identity(d, d);
    Matrix L = -kI * (kron_dense(id, h) - kron_dense(h.transpose(), id));
    for (const auto& col : sys.collapse_ops()) {
        if (col.rate == 0.0) continue;
        const Matrix c = std::sqrt(col.rate) * col.op.matrix();
        const Matrix cdc = c.adjoint() * c;
        L += kron_dense(c.conjugate(), c) - 0.5 * kron_dense(id, cdc) -
             0.5 * kron_dense(cdc.transpose(), id);
    }
    return L;
}

namespace {

double steady_state_scale(const OpenSystem& sys) {
    double scale = sys.hamiltonian_frobenius();
    for (const auto& ch : sys.compiled().channels) {
        double cdc_scale = ch.cdc_diagonal ? ch.cdc_diag.cwiseAbs().maxCoeff()
                                           : spectral_norm_estimate(ch.cdc);
        scale = std::max(scale, cdc_scale);
    }
    return std::max(scale, 1e-300);
}

}  // namespace

QState steady_state_nullspace(const OpenSystem& sys, double tol_factor) {
    const long long d = sys.space().dim();
    Matrix L = materialized_liouvillian(sys);
    const double threshold = tol_factor * steady_state_scale(sys);

    // Lx = 0 with tr(rho) = 1: replace one row by the trace functional.
    Matrix M = L;
    M.row(0).setZero();
    for (long long i = 0; i < d; ++i) M(0, i * d + i) = 1.0;
    Vector rhs = Vector::Zero(d * d);
    rhs(0) = 1.0;
    Vector x = Eigen::PartialPivLU<Matrix>(M).solve(rhs);

    if (!x.allFinite() || (L * x).norm() > threshold * std::max(1.0, x.norm())) {
        // Degenerate row replacement; fall back to the smallest singular vector.
        Eigen::BDCSVD<Matrix> svd(L, Eigen::ComputeThinV);
        x = svd.matrixV().col(d * d - 1);
    }

    Matrix rho = Eigen::Map<Matrix>(x.data(), d, d);
    rho = 0.5 * (rho + rho.adjoint()).eval();
    Complex tr = rho.trace();
    if (std::abs(tr) < 1e-14)
        throw NumericalError("steady_state_nullspace: null vector has vanishing trace");
    rho /= tr;

    // Scrub negligible negative eigenvalues from roundoff.
    Eigen::SelfAdjointEigenSolver<Matrix> es(rho);
    if (es.eigenvalues().minCoeff() < -1e-9) {
        RealVector clipped = es.eigenvalues().cwiseMax(0.0);
        clipped /= clipped.sum();
        rho = es.eigenvectors() * clipped.asDiagonal() * es.eigenvectors().adjoint();
    }
    rho /= rho.trace().real();

    Eigen::Map<Vector> flat(rho.data(), d * d);
    const double residual = (L * flat).norm();
    if (residual > threshold)
        throw NumericalError("steady_state_nullspace: residual " + std::to_string(residual) +
                                 " above threshold " + std::to_string(threshold),
                             residual);
    return QState::mixed(sys.space(), std::move(rho));
}

QState steady_state_integrate(const OpenSystem& sys, const SteadyStateOptions& options) {
    if (sys.time_dependent())
        throw UnsupportedOperationError("steady_state_integrate: constant Hamiltonian required");
    if (!(options.max_time > 0.0))
        throw DomainError("steady_state_integrate: max_time must be > 0");
    const double checkpoint = options.checkpoint_interval > 0.0 ? options.checkpoint_interval
                                                                : options.max_time / 50.0;
    const double threshold = options.tol_factor * steady_state_scale(sys);

    Matrix rho = options.initial ? options.initial->to_density() : vacuum_density(sys.space());
    Matrix prev = rho;
    Engine engine(sys);
    Matrix deriv(sys.space().dim(), sys.space().dim());

    EvolutionOptions evo = options.evolution;
    evo.sample_interval = checkpoint;
    evo.final_positivity_check = false;

    double t = 0.0;
    double residual = kNaN;
    while (t < options.max_time) {
        EvolutionResult chunk =
            evolve(sys, QState::mixed_unchecked(sys.space(), std::move(rho)), checkpoint, {}, evo);
        rho = chunk.final_state.to_density();
        t += checkpoint;
        if (!rho.allFinite())
            throw NumericalError("steady_state_integrate: non-finite state (unstable dynamics?)");
        engine.rhs(0.0, rho, deriv);
        residual = deriv.norm();
        const double fid = mixed_fidelity(prev, rho);
        if (residual < threshold && std::abs(1.0 - fid) < options.fidelity_tol) {
            rho = 0.5 * (rho + rho.adjoint()).eval();
            rho /= rho.trace().real();
            return QState::mixed_unchecked(sys.space(), std::move(rho));
        }
        prev = rho;
    }
    throw NumericalError("steady_state_integrate: residual " + std::to_string(residual) +
                             " after max_time; threshold " + std::to_string(threshold),
                         residual);
}

QState steady_state(const OpenSystem& sys, const SteadyStateOptions& options) {
    switch (options.method) {
        case SteadyStateOptions::Method::NullSpace:
            return steady_state_nullspace(sys, options.tol_factor);
        case SteadyStateOptions::Method::Integrate:
            return steady_state_integrate(sys, options);
        case SteadyStateOptions::Method::Auto:
        default:
            if (sys.space().dim() <= 64 && !sys.time_dependent())
                return steady_state_nullspace(sys, options.tol_factor);
            return steady_state_integrate(sys, options);
    }
}

namespace {

void check_keep_set(const TensorSpace& space, const std::vector<int>& keep,
                    std::vector<int>& keep_sorted, std::vector<int>& dropped) {
    if (keep.empty()) throw DimensionError("partial_trace: keep set must be non-empty");
    std::vector<bool> kept(space.modes(), false);
    for (int m : keep) {
        if (m < 0 || m >= space.modes()) throw DimensionError("partial_trace: bad mode index");
        if (kept[m]) throw DimensionError("partial_trace: duplicate mode index");
        kept[m] = true;
    }
    for (int m = 0; m < space.modes(); ++m)
        (kept[m] ? keep_sorted : dropped).push_back(m);
}

// Offsets of all multi-indices over `modes_list` in the flat index.
std::vector<long long> mode_offsets(const TensorSpace& space, const std::vector<int>& modes_list) {
    std::vector<long long> offs{0};
    for (int m : modes_list) {
        const long long str = space.stride(m);
        std::vector<long long> next;
        next.reserve(offs.size() * space.cutoff(m));
        for (long long base : offs)
            for (int i = 0; i < space.cutoff(m); ++i) next.push_back(base + i * str);
        offs = std::move(next);
    }
    return offs;
}

}  // namespace

Matrix partial_trace_dense(const Matrix& rho, const TensorSpace& space,
                           const std::vector<int>& keep) {
    if (rho.rows() != space.dim() || rho.cols() != space.dim())
        throw DimensionError("partial_trace_dense: dimension mismatch");
    std::vector<int> keep_sorted, dropped;
    check_keep_set(space, keep, keep_sorted, dropped);
    if (dropped.empty()) return rho;
    const std::vector<long long> ko = mode_offsets(space, keep_sorted);
    const std::vector<long long> to = mode_offsets(space, dropped);
    const long long K = static_cast<long long>(ko.size());
    const long long T = static_cast<long long>(to.size());
    Matrix out = Matrix::Zero(K, K);
    for (long long k2 = 0; k2 < K; ++k2)
        for (long long k1 = 0; k1 < K; ++k1) {
            Complex acc = 0.0;
            for (long long t = 0; t < T; ++t) acc += rho(ko[k1] + to[t], ko[k2] + to[t]);
            out(k1, k2) = acc;
        }
    return out;
}

QState partial_trace(const QState& state, const std::vector<int>& keep) {
    const TensorSpace& space = state.space();
    std::vector<int> keep_sorted, dropped;
    check_keep_set(space, keep, keep_sorted, dropped);
    if (dropped.empty()) return state;

    TensorSpace reduced = space.without(dropped);
    if (state.is_pure()) {
        const std::vector<long long> ko = mode_offsets(space, keep_sorted);
        const std::vector<long long> to = mode_offsets(space, dropped);
        const long long K = static_cast<long long>(ko.size());
        const long long T = static_cast<long long>(to.size());
        const Vector& psi = state.vector();
        Matrix gathered(K, T);
        for (long long k = 0; k < K; ++k)
            for (long long t = 0; t < T; ++t) gathered(k, t) = psi(ko[k] + to[t]);
        Matrix rho = gathered * gathered.adjoint();
        return QState::mixed_unchecked(std::move(reduced), std::move(rho));
    }
    return QState::mixed_unchecked(std::move(reduced),
                                   partial_trace_dense(state.density(), space, keep));
}

Complex expectation(const QOperator& op, const QState& state) {
    if (op.space() != state.space()) throw DimensionError("expectation: space mismatch");
    if (state.is_pure()) {
        const Vector& psi = state.vector();
        return psi.dot(op.matrix() * psi);  // Eigen dot conjugates the left factor
    }
    return op.matrix().cwiseProduct(state.density().transpose()).sum();
}

double state_fidelity(const QState& a, const QState& b) {
    if (a.space() != b.space()) throw DimensionError("state_fidelity: space mismatch");
    if (a.is_pure() && b.is_pure()) return std::abs(a.vector().dot(b.vector()));
    if (a.is_pure()) {
        const Vector& psi = a.vector();
        return std::sqrt(std::max(0.0, psi.dot(b.density() * psi).real()));
    }
    if (b.is_pure()) return state_fidelity(b, a);
    return mixed_fidelity(a.density(), b.density());
}

}  // namespace omcv
