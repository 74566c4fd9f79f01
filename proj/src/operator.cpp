#include "spinweave/operator.hpp"

#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

namespace spinweave {

namespace {

constexpr double kHermitianTolerance = 1e-10;
constexpr double kBranchCutTolerance = 1e-9;

void require_hermitian(const Operator& h) {
  if (h.rows() != h.cols()) throw OperatorError("operator is not square");
  const double r = hermiticity_residual(h);
  if (r > kHermitianTolerance) {
    throw OperatorError("operator is not Hermitian (relative asymmetry " + std::to_string(r) + ")");
  }
}

}  // namespace

HermitianSpectrum::HermitianSpectrum(const Operator& h) {
  require_hermitian(h);
  // Symmetrize so roundoff asymmetry does not leak into the solver.
  const Operator sym = 0.5 * (h + h.adjoint());
  Eigen::SelfAdjointEigenSolver<Operator> solver(sym);
  if (solver.info() != Eigen::Success) throw OperatorError("Hermitian eigensolver failed");
  values_ = solver.eigenvalues();
  vectors_ = solver.eigenvectors();
}

Operator HermitianSpectrum::propagator(double t) const {
  Eigen::VectorXcd phases(values_.size());
  for (Eigen::Index k = 0; k < values_.size(); ++k) {
    phases(k) = std::polar(1.0, -values_(k) * t);
  }
  return vectors_ * phases.asDiagonal() * vectors_.adjoint();
}

double HermitianSpectrum::spectral_norm() const {
  return values_.size() == 0 ? 0.0 : values_.cwiseAbs().maxCoeff();
}

Operator expm_hermitian(const Operator& h, double t) {
  return HermitianSpectrum(h).propagator(t);
}

UnitarySpectrum unitary_spectrum(const Operator& u) {
  if (u.rows() != u.cols()) throw OperatorError("operator is not square");
  Eigen::ComplexSchur<Operator> schur(u);
  if (schur.info() != Eigen::Success) throw OperatorError("Schur decomposition failed");
  const auto& t = schur.matrixT();
  UnitarySpectrum out;
  out.phases.resize(u.rows());
  for (Eigen::Index k = 0; k < u.rows(); ++k) {
    double theta = std::arg(t(k, k));
    if (theta <= -std::numbers::pi) theta = std::numbers::pi;
    out.phases(k) = theta;
  }
  out.vectors = schur.matrixU();
  return out;
}

Operator unitary_root(const Operator& u, int m, RootDiagnostics* diagnostics) {
  if (m < 1) throw std::invalid_argument("root order must be >= 1");
  if (m == 1) return u;
  const UnitarySpectrum spec = unitary_spectrum(u);
  Eigen::VectorXcd root_eigs(spec.phases.size());
  int flagged = 0;
  for (Eigen::Index k = 0; k < spec.phases.size(); ++k) {
    const double theta = spec.phases(k);
    if (std::numbers::pi - std::abs(theta) < kBranchCutTolerance) ++flagged;
    root_eigs(k) = std::polar(1.0, theta / m);
  }
  if (diagnostics) diagnostics->near_branch_cut = flagged;
  return spec.vectors * root_eigs.asDiagonal() * spec.vectors.adjoint();
}

double spectral_norm_hermitian(const Operator& h) { return HermitianSpectrum(h).spectral_norm(); }

}  // namespace spinweave
