#include "omcv/fock.hpp"

#include <cmath>
#include <numbers>

#include <unsupported/Eigen/MatrixFunctions>

namespace omcv {

// --- TensorSpace ------------------------------------------------------------

TensorSpace::TensorSpace(std::vector<int> cutoffs, std::vector<std::string> labels)
    : cutoffs_(std::move(cutoffs)), labels_(std::move(labels)) {
    if (cutoffs_.empty()) throw DimensionError("TensorSpace needs at least one mode");
    dim_ = 1;
    for (int c : cutoffs_) {
        if (c < 2) throw DimensionError("mode cutoff must be >= 2, got " + std::to_string(c));
        dim_ *= c;
    }
    if (labels_.empty()) {
        labels_.reserve(cutoffs_.size());
        for (size_t j = 0; j < cutoffs_.size(); ++j) labels_.push_back("mode" + std::to_string(j));
    }
    if (labels_.size() != cutoffs_.size())
        throw DimensionError("mode_labels length must match cutoffs length");
}

TensorSpace TensorSpace::single(int cutoff, std::string label) {
    return TensorSpace({cutoff}, {std::move(label)});
}

TensorSpace TensorSpace::cavity_mechanics(int cavity_cutoff, const std::vector<int>& mech_cutoffs) {
    std::vector<int> cutoffs{cavity_cutoff};
    std::vector<std::string> labels{"cavity"};
    for (size_t j = 0; j < mech_cutoffs.size(); ++j) {
        cutoffs.push_back(mech_cutoffs[j]);
        labels.push_back("mech" + std::to_string(j + 1));
    }
    return TensorSpace(std::move(cutoffs), std::move(labels));
}

long long TensorSpace::stride(int mode) const {
    long long s = 1;
    for (int m = mode + 1; m < modes(); ++m) s *= cutoffs_[m];
    return s;
}

TensorSpace TensorSpace::without(const std::vector<int>& drop) const {
    std::vector<int> keep_cut;
    std::vector<std::string> keep_lab;
    for (int m = 0; m < modes(); ++m) {
        bool dropped = false;
        for (int d : drop) dropped = dropped || (d == m);
        if (!dropped) {
            keep_cut.push_back(cutoffs_[m]);
            keep_lab.push_back(labels_[m]);
        }
    }
    return TensorSpace(std::move(keep_cut), std::move(keep_lab));
}

// --- QOperator ----------------------------------------------------------------

QOperator::QOperator(TensorSpace space, Matrix matrix)
    : space_(std::move(space)), mat_(std::move(matrix)) {
    if (mat_.rows() != mat_.cols())
        throw DimensionError("QOperator matrix must be square");
    if (mat_.rows() != space_.dim())
        throw DimensionError("QOperator dimension " + std::to_string(mat_.rows()) +
                             " does not match space dimension " + std::to_string(space_.dim()));
    if (!mat_.allFinite()) throw DomainError("QOperator entries must be finite");
}

bool QOperator::is_hermitian(double rel_tol) const {
    double scale = mat_.norm();
    if (scale == 0.0) return true;
    return (mat_ - mat_.adjoint()).norm() <= rel_tol * scale;
}

QOperator QOperator::dagger() const { return QOperator(space_, mat_.adjoint()); }

SparseCMatrix QOperator::sparse(double prune_tol) const {
    SparseCMatrix s = mat_.sparseView(1.0, prune_tol);
    s.makeCompressed();
    return s;
}

QOperator& QOperator::operator+=(const QOperator& rhs) {
    if (space_ != rhs.space_) throw DimensionError("operator spaces differ in +");
    mat_ += rhs.mat_;
    return *this;
}

QOperator& QOperator::operator-=(const QOperator& rhs) {
    if (space_ != rhs.space_) throw DimensionError("operator spaces differ in -");
    mat_ -= rhs.mat_;
    return *this;
}

QOperator operator*(const QOperator& a, const QOperator& b) {
    if (a.space_ != b.space_) throw DimensionError("operator spaces differ in *");
    return QOperator(a.space_, a.mat_ * b.mat_);
}

// --- QState -------------------------------------------------------------------

QState QState::pure(TensorSpace space, Vector psi) {
    if (psi.size() != space.dim()) throw DimensionError("state vector dimension mismatch");
    if (!psi.allFinite()) throw DomainError("state vector entries must be finite");
    double n = psi.norm();
    if (std::abs(n - 1.0) > 1e-9)
        throw DomainError("pure state norm deviates from 1 by " + std::to_string(std::abs(n - 1.0)));
    QState s;
    s.space_ = std::move(space);
    s.kind_ = Kind::Pure;
    s.psi_ = std::move(psi);
    return s;
}

QState QState::mixed(TensorSpace space, Matrix rho) {
    if (rho.rows() != space.dim() || rho.cols() != space.dim())
        throw DimensionError("density matrix dimension mismatch");
    if (!rho.allFinite()) throw DomainError("density matrix entries must be finite");
    double scale = rho.norm();
    if (scale > 0 && (rho - rho.adjoint()).norm() > 1e-12 * scale)
        throw DomainError("density matrix is not Hermitian to 1e-12");
    double tr = rho.trace().real();
    if (std::abs(tr - 1.0) > 1e-9)
        throw DomainError("density matrix trace deviates from 1 by " + std::to_string(std::abs(tr - 1.0)));
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (rho + rho.adjoint()),
                                             Eigen::EigenvaluesOnly);
    if (es.eigenvalues().minCoeff() < -1e-9)
        throw DomainError("density matrix has eigenvalue below -1e-9: " +
                          std::to_string(es.eigenvalues().minCoeff()));
    QState s;
    s.space_ = std::move(space);
    s.kind_ = Kind::Mixed;
    s.rho_ = std::move(rho);
    return s;
}

QState QState::mixed_unchecked(TensorSpace space, Matrix rho) {
    if (rho.rows() != space.dim() || rho.cols() != space.dim())
        throw DimensionError("density matrix dimension mismatch");
    QState s;
    s.space_ = std::move(space);
    s.kind_ = Kind::Mixed;
    s.rho_ = std::move(rho);
    return s;
}

const Vector& QState::vector() const {
    if (kind_ != Kind::Pure) throw UnsupportedOperationError("state is not pure");
    return psi_;
}

const Matrix& QState::density() const {
    if (kind_ != Kind::Mixed) throw UnsupportedOperationError("state is not in density form");
    return rho_;
}

Matrix QState::to_density() const {
    if (kind_ == Kind::Pure) return psi_ * psi_.adjoint();
    return rho_;
}

// --- single-mode operators ------------------------------------------------

QOperator annihilation(int cutoff) {
    if (cutoff < 2) throw DimensionError("annihilation: cutoff must be >= 2");
    Matrix b = Matrix::Zero(cutoff, cutoff);
    for (int n = 1; n < cutoff; ++n) b(n - 1, n) = std::sqrt(static_cast<double>(n));
    return QOperator(TensorSpace::single(cutoff), std::move(b));
}

QOperator creation(int cutoff) { return annihilation(cutoff).dagger(); }

QOperator number_operator(int cutoff) {
    if (cutoff < 2) throw DimensionError("number_operator: cutoff must be >= 2");
    Matrix n = Matrix::Zero(cutoff, cutoff);
    for (int k = 0; k < cutoff; ++k) n(k, k) = static_cast<double>(k);
    return QOperator(TensorSpace::single(cutoff), std::move(n));
}

QOperator single_mode_identity(int cutoff) {
    return QOperator(TensorSpace::single(cutoff), Matrix::Identity(cutoff, cutoff));
}

std::pair<QOperator, QOperator> quadratures(int cutoff) {
    QOperator b = annihilation(cutoff);
    QOperator bd = b.dagger();
    const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
    QOperator q(b.space(), inv_sqrt2 * (b.matrix() + bd.matrix()));
    QOperator p(b.space(), -kI * inv_sqrt2 * (b.matrix() - bd.matrix()));
    return {std::move(q), std::move(p)};
}

QOperator position_quadrature(int cutoff) { return quadratures(cutoff).first; }
QOperator momentum_quadrature(int cutoff) { return quadratures(cutoff).second; }

QOperator rotated_quadrature(int cutoff, double phi) {
    auto [q, p] = quadratures(cutoff);
    return QOperator(q.space(), std::cos(phi) * q.matrix() + std::sin(phi) * p.matrix());
}

// --- multimode assembly ---------------------------------------------------

QOperator identity(const TensorSpace& space) {
    return QOperator(space, Matrix::Identity(space.dim(), space.dim()));
}

QOperator embed(const QOperator& op, int mode, const TensorSpace& space) {
    if (mode < 0 || mode >= space.modes()) throw DimensionError("embed: bad mode index");
    const int d = space.cutoff(mode);
    if (op.dim() != d)
        throw DimensionError("embed: operator dimension " + std::to_string(op.dim()) +
                             " does not match cutoff " + std::to_string(d));
    const long long right = space.stride(mode);
    const long long left = space.dim() / (right * d);
    Matrix out = Matrix::Zero(space.dim(), space.dim());
    const Matrix& m = op.matrix();
    for (long long l = 0; l < left; ++l)
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) {
                if (m(i, j) == Complex(0.0, 0.0)) continue;
                const long long row0 = (l * d + i) * right;
                const long long col0 = (l * d + j) * right;
                for (long long r = 0; r < right; ++r) out(row0 + r, col0 + r) = m(i, j);
            }
    return QOperator(space, std::move(out));
}

QOperator two_mode_embed(const QOperator& op_a, int mode_a,
                         const QOperator& op_b, int mode_b, const TensorSpace& space) {
    if (mode_a == mode_b) throw DimensionError("two_mode_embed: modes must differ");
    if (mode_a > mode_b) return two_mode_embed(op_b, mode_b, op_a, mode_a, space);
    const int da = space.cutoff(mode_a), db = space.cutoff(mode_b);
    if (op_a.dim() != da || op_b.dim() != db)
        throw DimensionError("two_mode_embed: operator dimensions do not match cutoffs");

    const long long right_b = space.stride(mode_b);
    const long long right_a = space.stride(mode_a);
    const long long mid = right_a / (static_cast<long long>(db) * right_b);
    const long long left = space.dim() / (right_a * da);

    Matrix out = Matrix::Zero(space.dim(), space.dim());
    const Matrix& A = op_a.matrix();
    const Matrix& B = op_b.matrix();
    for (long long l = 0; l < left; ++l)
        for (int ia = 0; ia < da; ++ia)
            for (int ja = 0; ja < da; ++ja) {
                if (A(ia, ja) == Complex(0.0, 0.0)) continue;
                for (long long m = 0; m < mid; ++m)
                    for (int ib = 0; ib < db; ++ib)
                        for (int jb = 0; jb < db; ++jb) {
                            const Complex v = A(ia, ja) * B(ib, jb);
                            if (v == Complex(0.0, 0.0)) continue;
                            const long long row0 = (((l * da + ia) * mid + m) * db + ib) * right_b;
                            const long long col0 = (((l * da + ja) * mid + m) * db + jb) * right_b;
                            for (long long r = 0; r < right_b; ++r)
                                out(row0 + r, col0 + r) = v;
                        }
            }
    return QOperator(space, std::move(out));
}

QOperator matrix_exp(const QOperator& op, Complex scale) {
    const Matrix& m = op.matrix();
    if (!m.allFinite() || !std::isfinite(scale.real()) || !std::isfinite(scale.imag()))
        throw DomainError("matrix_exp: non-finite input");

    const double norm = m.norm();
    const double tol = 1e-12 * std::max(norm, 1.0);
    const bool hermitian = (m - m.adjoint()).norm() <= tol;
    const bool anti_hermitian = (m + m.adjoint()).norm() <= tol;

    if (hermitian || anti_hermitian) {
        // exp(scale*M) = V exp(scale*lambda) V^dag for M = V diag(lambda) V^dag.
        Matrix herm = hermitian ? m : Matrix(-kI * m);
        Complex eff_scale = hermitian ? scale : scale * kI;
        Eigen::SelfAdjointEigenSolver<Matrix> es(herm);
        Vector phases(es.eigenvalues().size());
        for (Eigen::Index k = 0; k < phases.size(); ++k)
            phases(k) = std::exp(eff_scale * es.eigenvalues()(k));
        Matrix out = es.eigenvectors() * phases.asDiagonal() * es.eigenvectors().adjoint();
        return QOperator(op.space(), std::move(out));
    }
    Matrix scaled = scale * m;
    return QOperator(op.space(), scaled.exp());
}

// --- quadrature eigenfunctions ---------------------------------------------

std::vector<double> hermite_functions(double m, int count) {
    std::vector<double> psi(count, 0.0);
    if (count <= 0) return psi;
    const double pi_quarter = std::pow(std::numbers::pi, -0.25);
    psi[0] = pi_quarter * std::exp(-0.5 * m * m);
    if (count > 1) psi[1] = std::numbers::sqrt2 * m * psi[0];
    for (int n = 1; n + 1 < count; ++n)
        psi[n + 1] = (std::numbers::sqrt2 * m * psi[n] - std::sqrt(static_cast<double>(n)) * psi[n - 1]) /
                     std::sqrt(static_cast<double>(n + 1));
    return psi;
}

Vector quadrature_eigenvector(double m, double phi, int cutoff) {
    if (cutoff < 2) throw DimensionError("quadrature_eigenvector: cutoff must be >= 2");
    std::vector<double> psi = hermite_functions(m, cutoff);
    Vector v(cutoff);
    for (int n = 0; n < cutoff; ++n) v(n) = std::exp(kI * (phi * n)) * psi[n];
    return v;
}

// --- state utilities --------------------------------------------------------

void apply_single_mode(const Matrix& op, int mode, const TensorSpace& space, Vector& psi) {
    const int d = space.cutoff(mode);
    if (op.rows() != d || op.cols() != d)
        throw DimensionError("apply_single_mode: operator dimension mismatch");
    if (psi.size() != space.dim()) throw DimensionError("apply_single_mode: state dimension mismatch");
    const long long right = space.stride(mode);
    const long long left = space.dim() / (right * d);
    using RowMat = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    RowMat scratch(d, right);
    for (long long l = 0; l < left; ++l) {
        Eigen::Map<RowMat> block(psi.data() + l * d * right, d, right);
        scratch.noalias() = op * block;
        block = scratch;
    }
}

QState tensor(const QState& a, const QState& b) {
    std::vector<int> cutoffs = a.space().cutoffs();
    std::vector<std::string> labels;
    for (int m = 0; m < a.space().modes(); ++m) labels.push_back(a.space().label(m));
    for (int m = 0; m < b.space().modes(); ++m) {
        cutoffs.push_back(b.space().cutoff(m));
        labels.push_back(b.space().label(m));
    }
    TensorSpace joint(std::move(cutoffs), std::move(labels));

    if (a.is_pure() && b.is_pure()) {
        Vector psi(joint.dim());
        const Vector& va = a.vector();
        const Vector& vb = b.vector();
        for (Eigen::Index i = 0; i < va.size(); ++i)
            psi.segment(i * vb.size(), vb.size()) = va(i) * vb;
        return QState::pure(std::move(joint), std::move(psi));
    }
    Matrix ra = a.to_density();
    Matrix rb = b.to_density();
    Matrix rho(joint.dim(), joint.dim());
    for (Eigen::Index i = 0; i < ra.rows(); ++i)
        for (Eigen::Index j = 0; j < ra.cols(); ++j)
            rho.block(i * rb.rows(), j * rb.cols(), rb.rows(), rb.cols()) = ra(i, j) * rb;
    return QState::mixed(std::move(joint), std::move(rho));
}

}  // namespace omcv
