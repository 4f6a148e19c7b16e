#ifndef OMCV_FOCK_HPP
#define OMCV_FOCK_HPP

#include <complex>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "omcv/errors.hpp"

namespace omcv {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;
using SparseCMatrix = Eigen::SparseMatrix<Complex>;

inline constexpr Complex kI{0.0, 1.0};

/// Truncated composite Hilbert space: an ordered list of per-mode Fock
/// cutoffs. Mode 0 is the cavity by convention, modes 1..N the mechanics;
/// tensor (Kronecker) ordering is mode 0 outermost.
class TensorSpace {
  public:
    TensorSpace() = default;
    explicit TensorSpace(std::vector<int> cutoffs, std::vector<std::string> labels = {});

    static TensorSpace single(int cutoff, std::string label = "mode");
    static TensorSpace cavity_mechanics(int cavity_cutoff, const std::vector<int>& mech_cutoffs);

    int modes() const { return static_cast<int>(cutoffs_.size()); }
    int cutoff(int mode) const { return cutoffs_.at(mode); }
    const std::vector<int>& cutoffs() const { return cutoffs_; }
    const std::string& label(int mode) const { return labels_.at(mode); }
    long long dim() const { return dim_; }

    /// Linear-index stride of one step in `mode` (product of cutoffs of inner modes).
    long long stride(int mode) const;

    /// Space with the given modes removed (order of the survivors preserved).
    TensorSpace without(const std::vector<int>& drop) const;

    bool operator==(const TensorSpace& other) const { return cutoffs_ == other.cutoffs_; }
    bool operator!=(const TensorSpace& other) const { return !(*this == other); }

  private:
    std::vector<int> cutoffs_;
    std::vector<std::string> labels_;
    long long dim_ = 0;
};

/// Dense complex operator labeled by the space it acts on (hbar = 1 units).
class QOperator {
  public:
    QOperator() = default;
    QOperator(TensorSpace space, Matrix matrix);

    const TensorSpace& space() const { return space_; }
    const Matrix& matrix() const { return mat_; }
    long long dim() const { return mat_.rows(); }

    bool is_hermitian(double rel_tol = 1e-12) const;
    QOperator dagger() const;
    SparseCMatrix sparse(double prune_tol = 1e-15) const;

    QOperator& operator+=(const QOperator& rhs);
    QOperator& operator-=(const QOperator& rhs);
    friend QOperator operator+(QOperator lhs, const QOperator& rhs) { return lhs += rhs; }
    friend QOperator operator-(QOperator lhs, const QOperator& rhs) { return lhs -= rhs; }
    friend QOperator operator*(const QOperator& a, const QOperator& b);
    friend QOperator operator*(Complex c, const QOperator& op) {
        return QOperator(op.space_, c * op.mat_);
    }
    friend QOperator operator*(double c, const QOperator& op) {
        return QOperator(op.space_, c * op.mat_);
    }

  private:
    TensorSpace space_;
    Matrix mat_;
};

/// Pure state vector or density matrix on a TensorSpace.
class QState {
  public:
    enum class Kind { Pure, Mixed };

    /// Empty placeholder; any use before assignment fails the dimension checks.
    QState() = default;

    static QState pure(TensorSpace space, Vector psi);
    static QState mixed(TensorSpace space, Matrix rho);

    /// For pipelines that maintain the invariants by construction (evolution
    /// output, partial traces); skips the O(dim^3) positivity validation.
    static QState mixed_unchecked(TensorSpace space, Matrix rho);

    Kind kind() const { return kind_; }
    bool is_pure() const { return kind_ == Kind::Pure; }
    const TensorSpace& space() const { return space_; }
    const Vector& vector() const;
    const Matrix& density() const;
    Matrix to_density() const;

  private:
    TensorSpace space_;
    Kind kind_ = Kind::Pure;
    Vector psi_;
    Matrix rho_;
};

// --- single-mode operators ------------------------------------------------

QOperator annihilation(int cutoff);
QOperator creation(int cutoff);
QOperator number_operator(int cutoff);
QOperator single_mode_identity(int cutoff);

/// (q, p) with q = (b + b^dag)/sqrt(2), p = (b - b^dag)/(i sqrt(2)).
std::pair<QOperator, QOperator> quadratures(int cutoff);
QOperator position_quadrature(int cutoff);
QOperator momentum_quadrature(int cutoff);

/// Q_phi = q cos(phi) + p sin(phi).
QOperator rotated_quadrature(int cutoff, double phi);

// --- multimode assembly ---------------------------------------------------

QOperator identity(const TensorSpace& space);

/// Lift a single-mode operator to the full space (identity on other modes).
QOperator embed(const QOperator& op, int mode, const TensorSpace& space);

/// kron of two single-mode operators placed at distinct modes, identity elsewhere.
/// Equivalent to embed(a, mode_a) * embed(b, mode_b) but built directly.
QOperator two_mode_embed(const QOperator& op_a, int mode_a,
                         const QOperator& op_b, int mode_b, const TensorSpace& space);

/// exp(scale * M). Hermitian and anti-Hermitian generators go through an
/// eigendecomposition (exact to machine precision); anything else falls back
/// to scaling-and-squaring.
QOperator matrix_exp(const QOperator& op, Complex scale);

// --- quadrature eigenfunctions ---------------------------------------------

/// Hermite functions psi_0(m) .. psi_{count-1}(m) for the q = (b+b^dag)/sqrt(2)
/// convention: psi_0(m) = pi^{-1/4} exp(-m^2/2), vacuum variance 1/2.
std::vector<double> hermite_functions(double m, int count);

/// Components <n|m>_phi = e^{i n phi} psi_n(m) of the (improper, delta-normalized)
/// eigenvector of Q_phi with eigenvalue m.
Vector quadrature_eigenvector(double m, double phi, int cutoff);

// --- state utilities --------------------------------------------------------

/// Apply a single-mode matrix to one mode of a full-space vector.
void apply_single_mode(const Matrix& op, int mode, const TensorSpace& space, Vector& psi);

/// Product state a (x) b; spaces concatenate in order.
QState tensor(const QState& a, const QState& b);

}  // namespace omcv

#endif
