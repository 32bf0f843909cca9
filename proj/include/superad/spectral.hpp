#pragma once

#include "superad/core.hpp"

#include <limits>
#include <optional>
#include <variant>

namespace superad {

struct GroundSelector {
  std::optional<double> eta;  // default 1e-8 * ||H||
};
struct WindowSelector {
  double f_minus, f_plus;
  std::optional<double> eta;
};
struct IndexSelector {
  std::vector<int> indices;
};
using ClusterSelector = std::variant<GroundSelector, WindowSelector, IndexSelector>;

struct SpectralData {
  RealVector evals;  // ascending
  Matrix evecs;      // columns
  int lo = 0, hi = 0;  // cluster = [lo, hi)
  double E_min = 0, E_max = 0;
  double gap = 0, width = 0;
  Matrix P;

  int kappa() const { return hi - lo; }
  bool in_cluster(Eigen::Index n) const { return n >= lo && n < hi; }
  Matrix frame() const { return evecs.middleCols(lo, hi - lo); }
  Eigen::Index dim() const { return evals.size(); }
  Matrix to_eigenbasis(const Matrix& A) const { return evecs.adjoint() * A * evecs; }
  Matrix from_eigenbasis(const Matrix& A) const { return evecs * A * evecs.adjoint(); }
};

inline SpectralData eig_cluster(const Matrix& H, const ClusterSelector& selector, double g_min = 0.0,
                                double t = std::numeric_limits<double>::quiet_NaN()) {
  if (!is_hermitian(H, 1e-10 * std::max(1.0, H.cwiseAbs().maxCoeff())))
    throw std::invalid_argument("eig_cluster: matrix is not hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(H);
  SpectralData sd;
  sd.evals = es.eigenvalues();
  sd.evecs = es.eigenvectors();
  const int n = static_cast<int>(sd.evals.size());
  const double scale = std::max(1.0, sd.evals.cwiseAbs().maxCoeff());
  auto eta_of = [&](std::optional<double> e) { return e.value_or(1e-8 * scale); };

  int lo = 0, hi = 0;
  double eta = 0;
  if (auto* g = std::get_if<GroundSelector>(&selector)) {
    eta = eta_of(g->eta);
    lo = 0;
    hi = n > 0 ? 1 : 0;
  } else if (auto* w = std::get_if<WindowSelector>(&selector)) {
    eta = eta_of(w->eta);
    lo = n;
    hi = 0;
    for (int k = 0; k < n; ++k)
      if (sd.evals(k) >= w->f_minus && sd.evals(k) <= w->f_plus) {
        lo = std::min(lo, k);
        hi = std::max(hi, k + 1);
      }
  } else {
    const auto& idx = std::get<IndexSelector>(selector).indices;
    eta = 0;
    if (!idx.empty()) {
      lo = *std::min_element(idx.begin(), idx.end());
      hi = *std::max_element(idx.begin(), idx.end()) + 1;
      if (hi - lo != static_cast<int>(idx.size()) || lo < 0 || hi > n)
        throw std::invalid_argument("index selector must be a contiguous range of eigenvalues");
    }
  }
  if (hi <= lo) throw std::invalid_argument("invalid selector: empty cluster");
  // never split eta-degenerate neighbours
  while (lo > 0 && sd.evals(lo) - sd.evals(lo - 1) <= eta) --lo;
  while (hi < n && sd.evals(hi) - sd.evals(hi - 1) <= eta) ++hi;

  sd.lo = lo;
  sd.hi = hi;
  sd.E_min = sd.evals(lo);
  sd.E_max = sd.evals(hi - 1);
  sd.width = sd.E_max - sd.E_min;
  sd.gap = std::numeric_limits<double>::infinity();
  if (lo > 0) sd.gap = std::min(sd.gap, sd.E_min - sd.evals(lo - 1));
  if (hi < n) sd.gap = std::min(sd.gap, sd.evals(hi) - sd.E_max);
  if (sd.gap < g_min)
    throw GapClosedError("spectral gap " + std::to_string(sd.gap) + " below threshold " +
                             std::to_string(g_min) + " at t = " + std::to_string(t),
                         t, sd.evals);
  Matrix f = sd.frame();
  sd.P = f * f.adjoint();
  return sd;
}

struct DiagSplit {
  Matrix diag, offdiag;
};

inline DiagSplit split_od(const Matrix& A, const Matrix& P) {
  Matrix Q = Matrix::Identity(P.rows(), P.cols()) - P;
  Matrix d = P * A * P + Q * A * Q;
  return {d, A - d};
}

inline Matrix liouvillian(const Matrix& H, const Matrix& A) { return -I * commutator(H, A); }

inline Matrix reduced_resolvent(const SpectralData& sd, std::optional<double> E_ref = std::nullopt) {
  if (!E_ref && sd.width > 0)
    throw std::invalid_argument("reduced resolvent of a cluster with positive width needs a reference energy");
  double E = E_ref.value_or(sd.E_min);
  RealVector w = RealVector::Zero(sd.dim());
  for (Eigen::Index m = 0; m < sd.dim(); ++m)
    if (!sd.in_cluster(m)) w(m) = 1.0 / (sd.evals(m) - E);
  return sd.evecs * w.cast<cplx>().asDiagonal() * sd.evecs.adjoint();
}

struct ExactInverse {};
struct FilterInverse {
  double delta_tilde;  // smoothstep starts here
  double g;            // weight equals the exact value for |omega| >= g
};
using InverseMode = std::variant<ExactInverse, FilterInverse>;

inline double quintic_smoothstep(double u) {
  u = std::clamp(u, 0.0, 1.0);
  return u * u * u * (10.0 + u * (-15.0 + 6.0 * u));
}

// Weight matrix w(n,m) in the eigenbasis: I(A) = sum w(n,m) P_n A P_m.
inline Matrix inverse_liouvillian_weights(const SpectralData& sd, const InverseMode& mode) {
  const Eigen::Index n = sd.dim();
  Matrix w = Matrix::Zero(n, n);
  if (std::holds_alternative<ExactInverse>(mode)) {
    for (Eigen::Index a = 0; a < n; ++a)
      for (Eigen::Index b = 0; b < n; ++b)
        if (sd.in_cluster(a) != sd.in_cluster(b)) w(a, b) = I / (sd.evals(a) - sd.evals(b));
    return w;
  }
  const auto& f = std::get<FilterInverse>(mode);
  if (!(f.delta_tilde < f.g) || f.delta_tilde < 0)
    throw std::invalid_argument("filter needs 0 <= delta_tilde < g");
  if (sd.gap < f.g) throw std::invalid_argument("spectral gap is smaller than the filter's g");
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      double om = sd.evals(b) - sd.evals(a);
      double c = quintic_smoothstep((std::abs(om) - f.delta_tilde) / (f.g - f.delta_tilde));
      if (c != 0.0) w(a, b) = -I * c / om;
    }
  return w;
}

inline Matrix inverse_liouvillian(const SpectralData& sd, const Matrix& A, const InverseMode& mode = ExactInverse{}) {
  Matrix w = inverse_liouvillian_weights(sd, mode);
  return sd.from_eigenbasis(sd.to_eigenbasis(A).cwiseProduct(w));
}

inline Matrix projection_derivative(const SpectralData& sd, const Matrix& H_dot) {
  Matrix x = sd.to_eigenbasis(H_dot);
  const Eigen::Index n = sd.dim();
  for (Eigen::Index a = 0; a < n; ++a)
    for (Eigen::Index b = 0; b < n; ++b) {
      bool ia = sd.in_cluster(a), ib = sd.in_cluster(b);
      if (ia == ib)
        x(a, b) = 0.0;
      else if (ia)
        x(a, b) /= (sd.evals(a) - sd.evals(b));
      else
        x(a, b) /= (sd.evals(b) - sd.evals(a));
    }
  return sd.from_eigenbasis(x);
}

}  // namespace superad
