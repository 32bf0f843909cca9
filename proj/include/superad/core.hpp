#pragma once

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace superad {

using cplx = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;
using SparseMatrix = Eigen::SparseMatrix<cplx>;

inline constexpr cplx I{0.0, 1.0};

// Error taxonomy. Every numerical failure derives from NumericalError so the
// runner can map it to exit status 1.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct GapClosedError : NumericalError {
  GapClosedError(const std::string& msg, double t, RealVector spectrum)
      : NumericalError(msg), t(t), spectrum(std::move(spectrum)) {}
  double t;
  RealVector spectrum;
};

struct ConvergenceError : NumericalError {
  using NumericalError::NumericalError;
};

struct TwistStepError : NumericalError {
  using NumericalError::NumericalError;
};

struct GridRefinementError : NumericalError {
  using NumericalError::NumericalError;
};

struct ConfigurationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct UnsupportedError : std::logic_error {
  using std::logic_error::logic_error;
};

inline Matrix commutator(const Matrix& a, const Matrix& b) { return a * b - b * a; }

inline bool is_hermitian(const Matrix& a, double tol = 1e-12) {
  if (a.rows() != a.cols()) return false;
  if (a.size() == 0) return true;
  return (a - a.adjoint()).cwiseAbs().maxCoeff() <= tol;
}

// Largest singular value.
inline double op_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(a.adjoint() * a, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

inline double hermitian_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// exp(c * G) for Hermitian G and scalar c, via the eigendecomposition of G.
inline Matrix hermitian_exp(const Matrix& g, cplx c) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(g);
  const Matrix& u = es.eigenvectors();
  Vector phase = (c * es.eigenvalues().cast<cplx>()).array().exp();
  return u * phase.asDiagonal() * u.adjoint();
}

// Unitary polar factor W of a square matrix A = W |A|.
inline Matrix polar_unitary(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a, Eigen::ComputeFullU | Eigen::ComputeFullV);
  return svd.matrixU() * svd.matrixV().adjoint();
}

inline double smallest_singular_value(const Matrix& a) {
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues().size() ? svd.singularValues().minCoeff() : 0.0;
}

}  // namespace superad
