#pragma once

#include "superad/spectral.hpp"
#include "superad/tvw.hpp"

namespace superad {

inline Matrix kato_generator(const Matrix& P, const Matrix& P_dot) { return I * commutator(P_dot, P); }

struct FirstOrderBlocks {
  Matrix A1_tilde;  // P Pdot R + R Pdot P
  Matrix K2_tilde;  // P Pdot R Pdot P
};

inline FirstOrderBlocks first_order_blocks(const SpectralData& sd, const Matrix& P_dot) {
  if (sd.width > 0) throw UnsupportedError("first-order blocks need a single-eigenvalue cluster");
  Matrix R = reduced_resolvent(sd);
  const Matrix& P = sd.P;
  return {P * P_dot * R + R * P_dot * P, P * P_dot * R * P_dot * P};
}

// A1 = I(I(Hdot)). This sign makes the off-diagonal part of K1 = -L_H(A1)
// equal to the Kato generator, so the adiabatic evolution intertwines P.
inline Matrix first_coefficient(const SpectralData& sd, const Matrix& H_dot, const InverseMode& mode) {
  Matrix w = inverse_liouvillian_weights(sd, mode);
  return sd.from_eigenbasis(sd.to_eigenbasis(H_dot).cwiseProduct(w).cwiseProduct(w));
}

struct ExpansionOrder2 {
  Matrix A1, A2, K1, K2;
  Matrix S(double eps) const { return A1 + eps * A2; }
  Matrix K(double eps) const { return K1 + eps * K2; }
};

inline ExpansionOrder2 expansion_order2(const Matrix& H, const SpectralData& sd, const Matrix& A1,
                                        const Matrix& A1_dot, const InverseMode& mode) {
  ExpansionOrder2 e;
  e.A1 = A1;
  e.K1 = -liouvillian(H, A1);
  Matrix L2 = -0.5 * commutator(A1, commutator(A1, H));
  Matrix Q2 = -A1_dot;
  e.A2 = inverse_liouvillian(sd, L2 - Q2, mode);
  e.K2 = L2 - Q2 - liouvillian(H, e.A2);
  return e;
}

struct SuperadiabaticFrame {
  Matrix V, P_sa;
};

inline SuperadiabaticFrame superadiabatic_frame(const Matrix& S, double eps, const Matrix& P) {
  Matrix V = hermitian_exp(S, I * eps);
  return {V, V * P * V.adjoint()};
}

struct PointData {
  double t;
  Matrix H, H_dot;
  SpectralData sd;
  Matrix P_dot, K_par;
};

// Spectral data and expansion coefficients of a Hamiltonian family, evaluated
// pointwise in t. The time derivative of A1 uses a centered difference with one
// Richardson step.
class AdiabaticContext {
 public:
  AdiabaticContext(HamiltonianFamily family, ClusterSelector selector, double g_min = 1e-6,
                   InverseMode mode = ExactInverse{}, double fd_step = 1e-3)
      : family_(std::move(family)), selector_(std::move(selector)), g_min_(g_min), mode_(mode), fd_step_(fd_step) {}

  const HamiltonianFamily& family() const { return family_; }
  const InverseMode& mode() const { return mode_; }
  double fd_step() const { return fd_step_; }

  SpectralData spectral(double t) const { return eig_cluster(family_.H(t), selector_, g_min_, t); }

  PointData point(double t) const {
    PointData p{t, family_.H(t), family_.H_dot(t), {}, {}, {}};
    p.sd = eig_cluster(p.H, selector_, g_min_, t);
    p.P_dot = projection_derivative(p.sd, p.H_dot);
    p.K_par = kato_generator(p.sd.P, p.P_dot);
    return p;
  }

  Matrix A1(double t) const { return first_coefficient(spectral(t), family_.H_dot(t), mode_); }

  Matrix A1_dot(double t) const {
    const double h = fd_step_;
    Matrix d1 = (A1(t + h) - A1(t - h)) / (2 * h);
    Matrix d2 = (A1(t + h / 2) - A1(t - h / 2)) / h;
    return (4.0 * d2 - d1) / 3.0;
  }

  ExpansionOrder2 expansion(double t) const {
    Matrix H = family_.H(t);
    SpectralData sd = eig_cluster(H, selector_, g_min_, t);
    Matrix a1 = first_coefficient(sd, family_.H_dot(t), mode_);
    return expansion_order2(H, sd, a1, A1_dot(t), mode_);
  }

  Matrix V(double t, double eps) const { return hermitian_exp(expansion(t).S(eps), I * eps); }

 private:
  HamiltonianFamily family_;
  ClusterSelector selector_;
  double g_min_;
  InverseMode mode_;
  double fd_step_;
};

// ||V (i eps V* Vdot + H - V* H V + eps K) V*|| at each grid time.
inline std::vector<double> defect(const AdiabaticContext& ctx, double eps, const std::vector<double>& t_grid,
                                  double fd_step = 1e-3) {
  std::vector<double> out;
  out.reserve(t_grid.size());
  for (double t : t_grid) {
    ExpansionOrder2 e = ctx.expansion(t);
    Matrix V = hermitian_exp(e.S(eps), I * eps);
    const double h = fd_step;
    Matrix d1 = (ctx.V(t + h, eps) - ctx.V(t - h, eps)) / (2 * h);
    Matrix d2 = (ctx.V(t + h / 2, eps) - ctx.V(t - h / 2, eps)) / h;
    Matrix V_dot = (4.0 * d2 - d1) / 3.0;
    Matrix H = ctx.family().H(t);
    Matrix Rt = V * (I * eps * V.adjoint() * V_dot + H - V.adjoint() * H * V + eps * e.K(eps)) * V.adjoint();
    out.push_back(op_norm(Rt));
  }
  return out;
}

}  // namespace superad
