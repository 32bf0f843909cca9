#pragma once

#include "superad/adiabatic.hpp"
#include "superad/propagate.hpp"

#include <numbers>

namespace superad {

// tr(rho J_k) / (eps |Lambda|) for each component.
inline RealVector current_density(const Matrix& rho, const std::vector<Matrix>& J, double eps, double volume) {
  if (std::abs(rho.trace() - 1.0) > 1e-10) throw std::invalid_argument("density matrix must have unit trace");
  if (!is_hermitian(rho, 1e-10)) throw std::invalid_argument("density matrix must be hermitian");
  Eigen::SelfAdjointEigenSolver<Matrix> es(rho, Eigen::EigenvaluesOnly);
  if (es.eigenvalues().minCoeff() < -1e-10) throw std::invalid_argument("density matrix must be positive");
  RealVector out(J.size());
  for (size_t k = 0; k < J.size(); ++k) {
    if (!is_hermitian(J[k], 1e-10)) throw std::invalid_argument("current operator is not hermitian");
    cplx v = (rho * J[k]).trace();
    if (std::abs(v.imag()) > 1e-10 * std::max(1.0, std::abs(v))) throw NumericalError("current has an imaginary part");
    out(k) = v.real() / (eps * volume);
  }
  return out;
}

struct ResponseFormulas {
  RealVector f1, f2;
};

// f1 = (i/|Lambda|) tr(rho (J R Pdot - Pdot R J)),  f2 = (i/|Lambda|) tr(rho [Pdot, dP/dalpha]).
inline ResponseFormulas response_formulas(const SpectralData& sd, const Matrix& P_dot, const std::vector<Matrix>& J,
                                          const Matrix& rho_par, const std::vector<Matrix>& dP_dalpha,
                                          double volume) {
  if (J.size() != dP_dalpha.size()) throw std::invalid_argument("current and twist derivative counts differ");
  Matrix R = reduced_resolvent(sd);
  ResponseFormulas out{RealVector(J.size()), RealVector(J.size())};
  for (size_t k = 0; k < J.size(); ++k) {
    out.f1(k) = (I * (rho_par * (J[k] * R * P_dot - P_dot * R * J[k])).trace()).real() / volume;
    out.f2(k) = (I * (rho_par * commutator(P_dot, dP_dalpha[k])).trace()).real() / volume;
  }
  return out;
}

// -(2/|Lambda|) Im sum_{n >= kappa} <phi_n, d_t phi_0><phi_0, J phi_n> / (E_n - E_0), with
// <phi_n, d_t phi_0> = <phi_n, Hdot phi_0> / (E_0 - E_n). Ground state must be simple.
inline double eigensum_current(const SpectralData& sd, const Matrix& H_dot, const Matrix& J, double volume) {
  if (sd.lo != 0 || sd.kappa() != 1) throw UnsupportedError("eigensum form needs a simple ground state");
  Matrix hd = sd.to_eigenbasis(H_dot), j = sd.to_eigenbasis(J);
  const double E0 = sd.evals(0);
  cplx s = 0;
  for (Eigen::Index n = 1; n < sd.dim(); ++n) {
    double dE = sd.evals(n) - E0;
    s += (hd(n, 0) / -dE) * j(0, n) / dE;
  }
  return -2.0 * s.imag() / volume;
}

// -(2/|Lambda|) Im <d_t phi_0, d_alpha phi_0> from gauge-aligned derivatives.
inline double berry_form(const Vector& dphi_dt, const Vector& dphi_dalpha, double volume) {
  return -2.0 * dphi_dt.dot(dphi_dalpha).imag() / volume;
}

// Rotates the columns of F inside their span so that ref^dagger F is positive.
inline Matrix align_frame(const Matrix& F, const Matrix& ref, double min_overlap = 1e-6) {
  Matrix ov = F.adjoint() * ref;
  if (smallest_singular_value(ov) < min_overlap)
    throw TwistStepError("frame overlap is singular; the parameter step leaves the smooth neighbourhood");
  return F * polar_unitary(ov);
}

using FrameFamily = std::function<Matrix(double)>;

// Centered difference with one Richardson step: (4 D(h/2) - D(h)) / 3.
template <class F>
Matrix richardson_derivative(const F& f, double x, double h) {
  auto D = [&](double s) { return Matrix((f(x + s) - f(x - s)) / (2 * s)); };
  return (4.0 * D(h / 2) - D(h)) / 3.0;
}

// Derivative of a frame family in the parallel gauge at x.
inline Matrix frame_derivative(const FrameFamily& frame, double x, double h = 1e-4) {
  Matrix ref = frame(x);
  return richardson_derivative([&](double s) { return align_frame(frame(s), ref); }, x, h);
}

inline Matrix projection_fd(const FrameFamily& frame, double x, double h = 1e-4) {
  return richardson_derivative(
      [&](double s) {
        Matrix f = frame(s);
        return Matrix(f * f.adjoint());
      },
      x, h);
}

// ---- twist tori ----

using TwistHamiltonian = std::function<Matrix(double, double)>;

struct TwistGrid {
  int n = 0;
  double offset1 = 0, offset2 = 0;
  std::vector<Matrix> frames;  // node (i, j) at i * n + j
  const Matrix& frame(int i, int j) const { return frames[((i % n + n) % n) * n + (j % n + n) % n]; }
  double angle(int i, double offset) const { return offset + 2.0 * std::numbers::pi * i / n; }
};

inline TwistGrid twist_grid(const TwistHamiltonian& H, const ClusterSelector& sel, int n, double g_min = 1e-6,
                            double offset1 = 0, double offset2 = 0) {
  if (n < 2) throw std::invalid_argument("twist grid needs n >= 2");
  TwistGrid g{n, offset1, offset2, {}};
  g.frames.resize(static_cast<size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      SpectralData sd = eig_cluster(H(g.angle(i, offset1), g.angle(j, offset2)), sel, g_min);
      g.frames[static_cast<size_t>(i) * n + j] = sd.frame();
    }
  const Eigen::Index k = g.frames.front().cols();
  for (const auto& f : g.frames)
    if (f.cols() != k) throw GridRefinementError("cluster dimension changes across the twist grid");
  return g;
}

struct ChernResult {
  double C = 0;
  std::vector<double> fluxes;  // plaquette (i, j) at i * n + j
};

// Lattice field strength: flux = arg det of the link-overlap loop around each plaquette.
inline ChernResult chern_number(const TwistGrid& g, double min_overlap = 1e-8) {
  auto link = [&](const Matrix& a, const Matrix& b) {
    Matrix ov = a.adjoint() * b;
    if (smallest_singular_value(ov) < min_overlap)
      throw GridRefinementError("link overlap is singular; refine the twist grid");
    return ov.determinant();
  };
  ChernResult r;
  r.fluxes.resize(static_cast<size_t>(g.n) * g.n);
  double total = 0;
  for (int i = 0; i < g.n; ++i)
    for (int j = 0; j < g.n; ++j) {
      const Matrix &a = g.frame(i, j), &b = g.frame(i + 1, j), &c = g.frame(i + 1, j + 1), &d = g.frame(i, j + 1);
      cplx loop = link(a, b) * link(b, c) * link(c, d) * link(d, a);
      double f = std::arg(loop);
      r.fluxes[static_cast<size_t>(i) * g.n + j] = f;
      total += f;
    }
  r.C = total / (2.0 * std::numbers::pi);
  return r;
}

// 2 Im <d_1 phi, d_2 phi> at (a1, a2), from gauge-aligned derivatives. Simple
// cluster only; with kappa > 1 the trace of the frame expression is used.
inline double berry_curvature(const TwistHamiltonian& H, const ClusterSelector& sel, double a1, double a2,
                              double h = 1e-4, double g_min = 1e-6) {
  auto frame = [&](double x, double y) { return eig_cluster(H(x, y), sel, g_min).frame(); };
  Matrix d1 = frame_derivative([&](double s) { return frame(s, a2); }, a1, h);
  Matrix d2 = frame_derivative([&](double s) { return frame(a1, s); }, a2, h);
  return 2.0 * (d1.adjoint() * d2).trace().imag();
}

// max_t |tr(G J(t))| over density matrices G on the cluster, i.e. the largest
// modulus eigenvalue of F^dagger J F.
inline double persistent_current(const std::vector<Matrix>& frames, const std::vector<Matrix>& J) {
  double best = 0;
  for (size_t k = 0; k < frames.size(); ++k) {
    Matrix c = frames[k].adjoint() * J[k] * frames[k];
    Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (c + c.adjoint()), Eigen::EigenvaluesOnly);
    best = std::max(best, es.eigenvalues().cwiseAbs().maxCoeff());
  }
  return best;
}

// ---- Hall experiments ----

// Driven twist path: the second twist follows ramp(t) while the response is
// measured in the first direction. `H` gives the twisted Hamiltonian and `J`
// its derivative in the first twist at the same point.
struct HallSetup {
  TwistHamiltonian H;
  TwistHamiltonian J;
  ClusterSelector selector = GroundSelector{};
  double volume = 1.0;  // |Lambda| for conductivity, 1 for conductance
  Schedule ramp = Schedule::parse("soft_ramp", 1.0, 0.5);
  double g_min = 1e-6;
  double fd_step = 1e-4;
};

struct HallRecord {
  double t;
  double twist;        // current value of the driven twist
  double rate;         // its time derivative divided by the drive strength
  double predicted;    // Berry curvature term times rate
  double measured;     // excess current divided by the drive strength
  double persistent;   // ground-state current tr(P J) / volume
};

// The drive strength `strength` (E or Delta V) sets the adiabatic parameter:
// in macroscopic time the twist is ramp(t) and the physical time is t / strength.
inline std::vector<HallRecord> hall_experiment(const HallSetup& s, double strength, const std::vector<double>& t_grid,
                                               EvolveOptions opt = {}) {
  if (!(strength > 0)) throw std::invalid_argument("drive strength must be positive");
  auto H_t = [&](double t) { return s.H(0.0, s.ramp.eval(t).f); };
  std::vector<SpectralData> sds;
  for (double t : t_grid) sds.push_back(eig_cluster(H_t(t), s.selector, s.g_min, t));
  Generator G = H_t;
  if (opt.h0 <= 0) opt.h0 = physical_initial_step(G, t_grid, strength);
  PropagatorResult U = evolve(G, strength, t_grid, opt, "physical");
  const Matrix& P0 = sds.front().P;
  const double kappa = sds.front().kappa();
  std::vector<HallRecord> out;
  for (size_t k = 0; k < t_grid.size(); ++k) {
    double t = t_grid[k];
    ScheduleValue r = s.ramp.eval(t);
    Matrix J = s.J(0.0, r.f);
    Matrix rho = U.U[k] * P0 * U.U[k].adjoint() / kappa;
    const Matrix& P = sds[k].P;
    double excess = ((rho - P / kappa) * J).trace().real();
    double curv = berry_curvature(s.H, s.selector, 0.0, r.f, s.fd_step, s.g_min) / kappa;
    out.push_back({t, r.f, r.df, curv * r.df / s.volume, excess / (strength * s.volume),
                   (P * J).trace().real() / (kappa * s.volume)});
  }
  return out;
}

struct ChernSummary {
  double C;
  double nearest;
  double deviation;
  double mean_conductance;  // C / 2 pi
};

inline ChernSummary chern_summary(const TwistHamiltonian& H, const ClusterSelector& sel, int n, double g_min = 1e-6) {
  ChernResult r = chern_number(twist_grid(H, sel, n, g_min));
  double k = std::round(r.C);
  return {r.C, k, std::abs(r.C - k), r.C / (2.0 * std::numbers::pi)};
}

// Twisted Hamiltonians on a sector: alpha twists act on both lattice
// directions (d >= 2) or on the single direction and a spectator (d = 1).
inline TwistHamiltonian alpha_family(const Interaction& phi, const FockSector& sector) {
  const int d = phi.lattice().dim();
  return [phi, sector, d](double a1, double a2) {
    std::vector<double> a(d, 0.0);
    a[0] = a1;
    if (d > 1) a[1] = a2;
    return assemble_dense(twist(phi, a), sector);
  };
}

inline TwistHamiltonian alpha_current(const Interaction& phi, const FockSector& sector, int k = 0) {
  const int d = phi.lattice().dim();
  return [phi, sector, d, k](double a1, double a2) {
    std::vector<double> a(d, 0.0);
    a[0] = a1;
    if (d > 1) a[1] = a2;
    return assemble_dense(current_interaction(twist(phi, a))[k], sector);
  };
}

inline TwistHamiltonian beta_family(const Interaction& phi, const FockSector& sector, std::optional<int> r = {}) {
  return [phi, sector, r](double b1, double b2) { return assemble_dense(beta_twist(phi, b1, b2, r), sector); };
}

inline TwistHamiltonian beta_current(const Interaction& phi, const FockSector& sector, std::optional<int> r = {},
                                     int j = 0) {
  return [phi, sector, r, j](double b1, double b2) {
    return assemble_dense(beta_twist(phi, b1, b2, r, j), sector);
  };
}

}  // namespace superad
