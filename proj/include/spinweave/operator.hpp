#pragma once

#include <complex>
#include <cstddef>
#include <numbers>
#include <stdexcept>

#include <Eigen/Dense>

namespace spinweave {

using cplx = std::complex<double>;

/// Dense operator on the 2^N spin Hilbert space. Hamiltonians are stored in
/// angular frequency (rad/s) with hbar = 1.
using Operator = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kTwoPi = 2.0 * std::numbers::pi;
inline constexpr int kMaxSpins = 10;

inline double hz_to_rad(double hz) { return kTwoPi * hz; }
inline double rad_to_hz(double rad) { return rad / kTwoPi; }

/// Raised when an operator fails a structural precondition (Hermiticity,
/// unitarity, dimension).
class OperatorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename DerivedA, typename DerivedB>
Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic> kron(
    const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Result = Eigen::Matrix<typename DerivedA::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  Result out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

/// Relative Frobenius asymmetry ||h - h^dag|| / ||h|| (0 for the zero matrix).
template <typename Derived>
double hermiticity_residual(const Eigen::MatrixBase<Derived>& h) {
  const double scale = h.norm();
  if (scale == 0.0) return 0.0;
  return (h - h.adjoint()).norm() / scale;
}

/// Relative Frobenius defect ||u^dag u - I|| / sqrt(dim).
template <typename Derived>
double unitarity_residual(const Eigen::MatrixBase<Derived>& u) {
  const auto n = u.rows();
  using Mat = Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, Eigen::Dynamic>;
  return (u.adjoint() * u - Mat::Identity(n, n)).norm() / std::sqrt(static_cast<double>(n));
}

inline bool is_power_of_two(Eigen::Index n) { return n > 0 && (n & (n - 1)) == 0; }

/// Eigendecomposition of a Hermitian generator, reusable for exp(-i h t) at
/// many durations.
class HermitianSpectrum {
 public:
  explicit HermitianSpectrum(const Operator& h);

  Operator propagator(double t) const;
  const RealVector& eigenvalues() const { return values_; }
  const Operator& eigenvectors() const { return vectors_; }
  double spectral_norm() const;
  Eigen::Index dim() const { return values_.size(); }

 private:
  RealVector values_;
  Operator vectors_;
};

/// exp(-i h t) for Hermitian h. Throws OperatorError when h is not Hermitian
/// to 1e-10 relative Frobenius norm.
Operator expm_hermitian(const Operator& h, double t);

/// Eigenphases theta in (-pi, pi] and eigenvectors of a unitary via complex
/// Schur (the triangular factor is diagonal for normal input).
struct UnitarySpectrum {
  RealVector phases;
  Operator vectors;
};
UnitarySpectrum unitary_spectrum(const Operator& u);

struct RootDiagnostics {
  int near_branch_cut = 0;  ///< eigenvalues with |theta - pi| < 1e-9
};

/// Principal m-th root of a unitary: eigenphase theta -> theta / m with
/// theta in (-pi, pi]. Eigenvalues at the branch cut use theta = pi.
Operator unitary_root(const Operator& u, int m, RootDiagnostics* diagnostics = nullptr);

/// sqrt(Tr(h^dag h)).
template <typename Derived>
double frobenius_magnitude(const Eigen::MatrixBase<Derived>& h) {
  return h.norm();
}

/// Spectral norm of a Hermitian matrix (largest |eigenvalue|).
double spectral_norm_hermitian(const Operator& h);

}  // namespace spinweave
