#pragma once

#include "superad/bounds.hpp"
#include "superad/response.hpp"

#include <numbers>

// Model families shared by the acceptance checks.
namespace superad::acceptance {

inline Matrix scalar(cplx v) { return Matrix::Constant(1, 1, v); }

// Half-filled chain with a staggered gap, nearest-neighbour repulsion and a
// flat switch that ramps the hopping from -1 to -1.5 and the stagger from 1 to 2.
// Every energy is multiplied by `scale`; a large scale keeps the sweep in the
// asymptotic regime at eps of order 0.1.
inline TvwModel ramped_chain(int M, double scale = 8.0) {
  TvwModel m;
  m.lattice = TorusLattice(1, M);
  Schedule sw = Schedule::parse("flat_switch");
  m.add_hopping_pair({1}, scalar(-1.0 * scale));
  m.add_hopping_pair({1}, scalar(-0.5 * scale), sw);
  TvwModel::Potential p;
  p.preset = TvwModel::Potential::Preset::staggered;
  p.block = scalar(1.0 * scale);
  m.potential.push_back(p);
  p.schedule = sw;
  m.potential.push_back(p);
  m.pair.push_back({1, Eigen::MatrixXd::Constant(1, 1, 0.5 * scale), {}});
  return m;
}

// Bond hopping e^{i pi/4} a*_1 a_0 + h.c. between the sites with coordinates 0 and 1.
inline Matrix bond_observable(const FockSector& sector) {
  const auto& lat = sector.lattice();
  int a = lat.index(Site(lat.dim(), 0)), b = lat.index(Site{1});
  cplx c = std::exp(I * (std::numbers::pi / 4));
  return ladder_map({{b, a, c}, {a, b, std::conj(c)}}, sector).to_dense();
}

// H(theta) = [[cos, sin], [sin, -cos]] with theta = theta1 f(t).
inline HamiltonianFamily two_level(double theta1 = 1.0) {
  Schedule s = Schedule::parse("flat_switch");
  auto H = [](double th) {
    Matrix h(2, 2);
    h << std::cos(th), std::sin(th), std::sin(th), -std::cos(th);
    return h;
  };
  auto dH = [](double th) {
    Matrix h(2, 2);
    h << -std::sin(th), std::cos(th), std::cos(th), std::sin(th);
    return h;
  };
  return {[=](double t) { return H(theta1 * s.eval(t).f); },
          [=](double t) { return Matrix(theta1 * s.eval(t).df * dH(theta1 * s.eval(t).f)); },
          [=](double t) {
            auto v = s.eval(t);
            double th = theta1 * v.f;
            return Matrix(theta1 * v.ddf * dH(th) - theta1 * theta1 * v.df * v.df * H(th));
          }};
}

// Two-orbital chain (cells A, B): intra-cell block [[D, v e^{-i phi}], [v e^{i phi}, -D]],
// inter-cell hopping w e^{-i phi} from B of cell x to A of cell x + 1, and a
// density repulsion between neighbouring cells. D is ramped from 0.6 to 1.2 and
// phi from 0 to `angle` by a flat switch. The two phases cancel around the ring,
// so phi is a pure gauge at fixed t: the ground state carries no persistent
// current, yet its time dependence breaks time reversal and the driven current
// picks up an O(eps) correction.
inline TvwModel pump_chain(int M, double angle = 2.0) {
  TvwModel m;
  m.lattice = TorusLattice(1, M);
  m.internal_dim = 2;
  Schedule sw = Schedule::parse("flat_switch");
  Schedule c = Schedule::parse("flat_cos", angle), s = Schedule::parse("flat_sin", angle);
  Matrix D(2, 2), vc(2, 2), vs(2, 2), inter = Matrix::Zero(2, 2);
  D << 0.6, 0, 0, -0.6;
  vc << 0, -0.8, -0.8, 0;
  vs << 0, cplx(0, 0.8), cplx(0, -0.8), 0;
  TvwModel::Potential p;
  p.preset = TvwModel::Potential::Preset::uniform;
  p.block = D;
  m.potential.push_back(p);
  p.schedule = sw;
  m.potential.push_back(p);
  p.block = vc;
  p.schedule = c;
  m.potential.push_back(p);
  p.block = vs;
  p.schedule = s;
  m.potential.push_back(p);
  inter(0, 1) = -1.0;
  m.add_hopping_pair({1}, inter, c);
  m.add_hopping_pair({1}, Matrix(-I * inter), s);
  m.pair.push_back({1, Eigen::MatrixXd::Constant(2, 2, 0.3), {}});
  return m;
}

// 3 x 3 torus with two flux quanta (2/9 per plaquette), nearest-neighbour
// repulsion and one on-site defect. Landau gauge along y; the x bonds across
// the seam carry the compensating phase.
inline Interaction flux_torus(double U = 0.5, double v = 0.3) {
  TorusLattice lat(2, 3);
  Interaction out(lat, 1);
  auto idx = [&](int x, int y) { return lat.index({lat.wrap(x), lat.wrap(y)}); };
  const double tw = 2 * std::numbers::pi * 2.0 / 9.0;
  auto hop = [&](int to, int from, cplx amp) {
    std::vector<int> s = {to, from};
    std::sort(s.begin(), s.end());
    LocalOps lo(s, 1);
    int pt = to == s[0] ? 0 : 1;
    Matrix h = amp * lo.adag(pt, 0) * lo.a(1 - pt, 0);
    out.add(s, Matrix(h + h.adjoint()));
  };
  for (int x = -1; x <= 1; ++x)
    for (int y = -1; y <= 1; ++y) {
      const int ux = x + 1, uy = y + 1;
      hop(idx(x, y + 1), idx(x, y), -std::exp(I * (tw * ux)));
      hop(idx(x + 1, y), idx(x, y), -std::exp(I * (ux == 2 ? -3.0 * tw * uy : 0.0)));
      for (auto [dx, dy] : {std::pair{1, 0}, std::pair{0, 1}}) {
        std::vector<int> s = {idx(x, y), idx(x + dx, y + dy)};
        std::sort(s.begin(), s.end());
        LocalOps lo(s, 1);
        out.add(s, Matrix(U * lo.n(0, 0) * lo.n(1, 0)));
      }
    }
  LocalOps lo({idx(0, 0)}, 1);
  out.add({idx(0, 0)}, Matrix(v * lo.n(0, 0)));
  return out;
}

// Unscaled ramped chain for the light-cone check.
inline TvwModel light_cone_chain(int M) {
  TvwModel m = ramped_chain(M, 1.0);
  m.pair.push_back({2, Eigen::MatrixXd::Constant(1, 1, 0.2), Schedule::parse("flat_switch")});
  return m;
}

}  // namespace superad::acceptance
