#pragma once

#include "superad/adiabatic.hpp"
#include "superad/schedule.hpp"

#include <cmath>
#include <functional>
#include <sstream>

namespace superad {

enum class Stepper {
  midpoint,  // exp(-i h G(t + h/2) / sigma)
  cf4,       // fourth-order commutator-free Magnus, two exponentials per step
};

struct EvolveOptions {
  double tol = 1e-8;
  double h0 = 0.0;  // initial step; 0 picks (grid spacing)/4
  int max_halvings = 16;
  Stepper stepper = Stepper::midpoint;
};

struct PropagatorResult {
  std::vector<double> times;
  std::vector<Matrix> U;  // U(times[k], times[0])
  std::string tag;
  double eps = 1.0;
  double error_estimate = 0.0;
  long substeps = 0;  // per unit time at the accepted resolution
};

using Generator = std::function<Matrix(double)>;

namespace detail {

inline std::vector<Matrix> propagate_fixed(const Generator& G, double sigma, const std::vector<double>& grid,
                                           double h_target, Stepper stepper) {
  const Eigen::Index D = G(grid.front()).rows();
  std::vector<Matrix> out;
  out.reserve(grid.size());
  Matrix U = Matrix::Identity(D, D);
  out.push_back(U);
  constexpr long kPolarEvery = 1024;
  long since_polar = 0;
  static const double c1 = 0.5 - std::sqrt(3.0) / 6.0, c2 = 0.5 + std::sqrt(3.0) / 6.0;
  static const double a1 = 0.25 + std::sqrt(3.0) / 6.0, a2 = 0.25 - std::sqrt(3.0) / 6.0;
  for (size_t k = 1; k < grid.size(); ++k) {
    double t0 = grid[k - 1], span = grid[k] - t0;
    long n = std::max(1L, static_cast<long>(std::ceil(std::abs(span) / h_target - 1e-9)));
    double h = span / n;
    for (long s = 0; s < n; ++s) {
      double t = t0 + s * h;
      if (stepper == Stepper::midpoint) {
        U = hermitian_exp(G(t + 0.5 * h), -I * h / sigma) * U;
      } else {
        Matrix g1 = G(t + c1 * h), g2 = G(t + c2 * h);
        U = hermitian_exp(a2 * g1 + a1 * g2, -I * h / sigma) * (hermitian_exp(a1 * g1 + a2 * g2, -I * h / sigma) * U);
      }
      // each exponential is unitary only to rounding; long runs drift without this
      if (++since_polar == kPolarEvery) {
        U = polar_unitary(U);
        since_polar = 0;
      }
    }
    out.push_back(U);
  }
  return out;
}

}  // namespace detail

// Solves i sigma dU/dt = G(t) U on the grid, halving the step until two
// successive resolutions agree to opt.tol in operator norm at every grid time.
inline PropagatorResult evolve(const Generator& G, double sigma, const std::vector<double>& grid,
                               const EvolveOptions& opt, std::string tag = "physical") {
  if (grid.size() < 1) throw std::invalid_argument("evolve: empty time grid");
  PropagatorResult res;
  res.times = grid;
  res.tag = std::move(tag);
  res.eps = sigma;
  if (grid.size() == 1) {
    const Eigen::Index D = G(grid.front()).rows();
    res.U = {Matrix::Identity(D, D)};
    return res;
  }
  double span = std::abs(grid.back() - grid.front());
  double h = opt.h0 > 0 ? opt.h0 : span / (4.0 * (grid.size() - 1));
  auto coarse = detail::propagate_fixed(G, sigma, grid, h, opt.stepper);
  double diff = 0;
  for (int k = 0; k <= opt.max_halvings; ++k) {
    h *= 0.5;
    auto fine = detail::propagate_fixed(G, sigma, grid, h, opt.stepper);
    diff = 0;
    for (size_t j = 0; j < grid.size(); ++j) diff = std::max(diff, op_norm(fine[j] - coarse[j]));
    coarse = std::move(fine);
    if (diff < opt.tol) {
      res.U = std::move(coarse);
      res.error_estimate = diff;
      res.substeps = static_cast<long>(std::ceil(1.0 / h));
      return res;
    }
  }
  std::ostringstream msg;
  msg << "propagator '" << res.tag << "' did not reach tol " << opt.tol << " (last difference " << diff
      << ", step " << h << ", sigma " << sigma << ")";
  throw ConvergenceError(msg.str());
}

inline double max_generator_norm(const Generator& G, const std::vector<double>& grid) {
  double m = 0;
  for (double t : grid) m = std::max(m, hermitian_norm(G(t)));
  return m;
}

inline double physical_initial_step(const Generator& G, const std::vector<double>& grid, double eps) {
  double n = max_generator_norm(G, grid);
  double spacing = grid.size() > 1 ? std::abs(grid[1] - grid[0]) : 1.0;
  return n > 0 ? std::min(spacing, eps / (8.0 * n)) : spacing;
}

inline std::vector<double> uniform_grid(double t0, double t1, int points) {
  if (points < 1) throw std::invalid_argument("grid needs at least one point");
  std::vector<double> g(points);
  for (int k = 0; k < points; ++k) g[k] = points == 1 ? t0 : t0 + (t1 - t0) * k / (points - 1);
  return g;
}

inline PropagatorResult evolve_physical(const AdiabaticContext& ctx, double eps, const std::vector<double>& grid,
                                        EvolveOptions opt) {
  Generator G = ctx.family().H;
  if (opt.h0 <= 0) opt.h0 = physical_initial_step(G, grid, eps);
  return evolve(G, eps, grid, opt, "physical");
}

inline PropagatorResult evolve_parallel(const AdiabaticContext& ctx, const std::vector<double>& grid,
                                        EvolveOptions opt) {
  Generator G = [&ctx](double t) { return ctx.point(t).K_par; };
  return evolve(G, 1.0, grid, opt, "parallel");
}

// Generator K_par + eps Pdot R Pdot.
inline PropagatorResult evolve_parallel1(const AdiabaticContext& ctx, double eps, const std::vector<double>& grid,
                                         EvolveOptions opt) {
  Generator G = [&ctx, eps](double t) {
    PointData p = ctx.point(t);
    Matrix R = reduced_resolvent(p.sd);
    return Matrix(p.K_par + eps * p.P_dot * R * p.P_dot);
  };
  PropagatorResult r = evolve(G, 1.0, grid, opt, "parallel1");
  r.eps = eps;
  return r;
}

// Generator H + eps K(eps) with physical scaling.
inline PropagatorResult evolve_adiabatic(const AdiabaticContext& ctx, double eps, const std::vector<double>& grid,
                                         EvolveOptions opt) {
  Generator G = [&ctx, eps](double t) { return Matrix(ctx.family().H(t) + eps * ctx.expansion(t).K(eps)); };
  if (opt.h0 <= 0) opt.h0 = physical_initial_step(G, grid, eps);
  return evolve(G, eps, grid, opt, "adiabatic");
}

struct CompositeEvolutions {
  PropagatorResult U, U_par, U_par1, U_a, U_sa;
};

inline CompositeEvolutions composite_evolutions(const AdiabaticContext& ctx, double eps, const std::vector<double>& grid,
                                                const EvolveOptions& opt) {
  CompositeEvolutions c;
  c.U = evolve_physical(ctx, eps, grid, opt);
  c.U_par = evolve_parallel(ctx, grid, opt);
  c.U_par1 = evolve_parallel1(ctx, eps, grid, opt);
  c.U_a = evolve_adiabatic(ctx, eps, grid, opt);
  c.U_sa = c.U_a;
  c.U_sa.tag = "superadiabatic";
  Matrix V0 = ctx.V(grid.front(), eps);
  for (size_t k = 0; k < grid.size(); ++k) c.U_sa.U[k] = ctx.V(grid[k], eps) * c.U_a.U[k] * V0.adjoint();
  return c;
}

}  // namespace superad
