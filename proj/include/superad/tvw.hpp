#pragma once

#include "superad/interaction.hpp"
#include "superad/schedule.hpp"

#include <map>
#include <memory>

namespace superad {

// Hopping, potential and density-density model
//   H = sum_{x,y} a*_x T(x-y) a_y + sum_x a*_x V(x) a_x
//     + sum_{{x,y}} sum_ij n_{x,i} W_ij(d(x,y)) n_{y,j} - mu N.
// Every table entry carries a block and a scalar schedule; entries with the same
// key add up, so a ramp between two values is written as two entries.
struct TvwModel {
  struct Hopping {
    Site displacement;
    Matrix block;
    Schedule schedule;
  };
  struct Potential {
    enum class Preset { uniform, staggered, sites, plane };
    Preset preset = Preset::uniform;
    Matrix block;
    Schedule schedule;
    std::map<Site, double> weights;             // preset sites
    std::optional<LocalizationPlane> plane;     // preset plane: weight exp(-decay dist(x,L))
    double decay = 1.0;
  };
  struct Pair {
    int distance;
    Eigen::MatrixXd block;  // real symmetric
    Schedule schedule;
  };

  TorusLattice lattice{1, 2};
  int internal_dim = 1;
  std::vector<Hopping> hopping;
  std::vector<Potential> potential;
  std::vector<Pair> pair;
  double mu = 0.0;

  // Adds T(d) = block and T(-d) = block^dagger with the same schedule.
  void add_hopping_pair(const Site& d, const Matrix& block, Schedule s = {}) {
    hopping.push_back({d, block, s});
    Site nd(d.size());
    for (size_t k = 0; k < d.size(); ++k) nd[k] = -d[k];
    hopping.push_back({nd, block.adjoint(), s});
  }

  double potential_weight(const Potential& p, const Site& x) const {
    switch (p.preset) {
      case Potential::Preset::uniform:
        return 1.0;
      case Potential::Preset::staggered: {
        int s = 0;
        for (int c : x) s += c;
        return (s % 2 == 0) ? 1.0 : -1.0;
      }
      case Potential::Preset::sites: {
        auto it = p.weights.find(x);
        return it == p.weights.end() ? 0.0 : it->second;
      }
      case Potential::Preset::plane:
        return std::exp(-p.decay * p.plane->dist(x, lattice));
    }
    return 0.0;
  }

  void validate() const {
    const int l = internal_dim;
    for (const auto& h : hopping) {
      if (static_cast<int>(h.displacement.size()) != lattice.dim())
        throw std::invalid_argument("hopping displacement has wrong dimension");
      if (h.block.rows() != l || h.block.cols() != l)
        throw std::invalid_argument("hopping block has wrong size");
    }
    // T(t,-d) = T(t,d)^dagger at a few sample times
    for (double t : {0.0, 0.2113, 0.5, 0.7887, 1.0}) {
      std::map<Site, Matrix> T;
      for (const auto& h : hopping) {
        auto it = T.try_emplace(h.displacement, Matrix::Zero(l, l)).first;
        it->second += h.schedule.eval(t).f * h.block;
      }
      for (const auto& [d, b] : T) {
        Site nd(d.size());
        for (size_t k = 0; k < d.size(); ++k) nd[k] = -d[k];
        auto it = T.find(nd);
        Matrix other = it == T.end() ? Matrix::Zero(l, l) : it->second;
        if ((other - b.adjoint()).cwiseAbs().maxCoeff() > 1e-12)
          throw std::invalid_argument("hopping table is not hermitian: T(-x) != T(x)*");
      }
    }
    for (const auto& p : potential) {
      if (p.block.rows() != l || p.block.cols() != l || !is_hermitian(p.block, 1e-12))
        throw std::invalid_argument("potential block must be a hermitian internal_dim square");
      if (p.preset == Potential::Preset::plane && !p.plane)
        throw std::invalid_argument("plane potential without a plane");
    }
    for (const auto& w : pair) {
      if (w.block.rows() != l || w.block.cols() != l ||
          (w.block - w.block.transpose()).cwiseAbs().maxCoeff() > 1e-12)
        throw std::invalid_argument("pair block must be a real symmetric internal_dim square");
      if (w.distance < 1) throw std::invalid_argument("pair distance must be positive");
    }
  }

  // One-particle matrix h(t) on l M^d modes, derivative order k.
  Matrix one_body(double t, int order = 0) const {
    const int S = lattice.site_count(), l = internal_dim;
    Matrix h = Matrix::Zero(S * l, S * l);
    for (int x = 0; x < S; ++x)
      for (int y = 0; y < S; ++y) {
        Site d = lattice.sub(lattice.site(x), lattice.site(y));
        for (const auto& e : hopping)
          if (e.displacement == d) h.block(x * l, y * l, l, l) += e.schedule.eval(t)[order] * e.block;
      }
    for (const auto& p : potential)
      for (int x = 0; x < S; ++x)
        h.block(x * l, x * l, l, l) += p.schedule.eval(t)[order] * potential_weight(p, lattice.site(x)) * p.block;
    if (order == 0) h -= mu * Matrix::Identity(S * l, S * l);
    return h;
  }

  bool quadratic() const { return pair.empty(); }
};

namespace detail {

struct TvwGroup {
  Schedule schedule;
  Interaction phi;
};

// Splits the model into schedule groups: Phi(t) = sum_g s_g(t) Phi_g + constant part.
inline std::vector<TvwGroup> tvw_groups(const TvwModel& m) {
  m.validate();
  const auto& lat = m.lattice;
  const int S = lat.site_count(), l = m.internal_dim;
  std::vector<TvwGroup> groups;
  auto group = [&](const Schedule& s) -> Interaction& {
    for (auto& g : groups)
      if (g.schedule == s) return g.phi;
    groups.push_back({s, Interaction(lat, l)});
    return groups.back().phi;
  };

  // kinetic: ordered pairs (x,y); x == y goes to the singleton term
  for (const auto& e : m.hopping) {
    Interaction& phi = group(e.schedule);
    for (int x = 0; x < S; ++x)
      for (int y = 0; y < S; ++y) {
        if (lat.sub(lat.site(x), lat.site(y)) != e.displacement) continue;
        Interaction::Key key = (x == y) ? Interaction::Key{x} : Interaction::Key{std::min(x, y), std::max(x, y)};
        LocalOps lo(key, l);
        int px = (key[0] == x) ? 0 : 1, py = (key[0] == y) ? 0 : 1;
        Matrix op = Matrix::Zero(lo.dim(), lo.dim());
        for (int i = 0; i < l; ++i)
          for (int j = 0; j < l; ++j)
            if (e.block(i, j) != cplx(0)) op += e.block(i, j) * lo.adag(px, i) * lo.a(py, j);
        phi.add(key, op);
      }
  }
  for (const auto& p : m.potential) {
    Interaction& phi = group(p.schedule);
    for (int x = 0; x < S; ++x) {
      double w = m.potential_weight(p, lat.site(x));
      if (w == 0.0) continue;
      LocalOps lo({x}, l);
      Matrix op = Matrix::Zero(lo.dim(), lo.dim());
      for (int i = 0; i < l; ++i)
        for (int j = 0; j < l; ++j)
          if (p.block(i, j) != cplx(0)) op += w * p.block(i, j) * lo.adag(0, i) * lo.a(0, j);
      phi.add({x}, op);
    }
  }
  for (const auto& w : m.pair) {
    Interaction& phi = group(w.schedule);
    for (int x = 0; x < S; ++x)
      for (int y = x + 1; y < S; ++y) {
        if (lat.dist(x, y) != w.distance) continue;
        LocalOps lo({x, y}, l);
        Matrix op = Matrix::Zero(lo.dim(), lo.dim());
        for (int i = 0; i < l; ++i)
          for (int j = 0; j < l; ++j)
            if (w.block(i, j) != 0.0) op += w.block(i, j) * lo.n(0, i) * lo.n(1, j);
        phi.add({x, y}, op);
      }
  }
  if (m.mu != 0.0) {
    Interaction& phi = group(Schedule{});
    for (int x = 0; x < S; ++x) {
      LocalOps lo({x}, l);
      Matrix op = Matrix::Zero(lo.dim(), lo.dim());
      for (int i = 0; i < l; ++i) op -= m.mu * lo.n(0, i);
      phi.add({x}, op);
    }
  }
  for (auto& g : groups) {
    g.phi.prune();
    for (const auto& [k, op] : g.phi.terms())
      if (!is_hermitian(op, 1e-12))
        throw std::invalid_argument("model term is not hermitian (hopping reaching half the torus must be real)");
  }
  return groups;
}

}  // namespace detail

// Interaction of the model at time t (derivative order 0, 1, 2).
inline Interaction build_tvw(const TvwModel& m, double t, int order = 0) {
  Interaction out(m.lattice, m.internal_dim);
  for (const auto& g : detail::tvw_groups(m)) {
    double c = g.schedule.eval(t)[order];
    if (c != 0.0) out += g.phi.scaled(c);
  }
  out.prune();
  return out;
}

inline TimeDependentInteraction tvw_interaction(const TvwModel& m) {
  auto groups = std::make_shared<std::vector<detail::TvwGroup>>(detail::tvw_groups(m));
  TorusLattice lat = m.lattice;
  int l = m.internal_dim;
  return {[groups, lat, l](double t, int order) {
    Interaction out(lat, l);
    for (const auto& g : *groups) {
      double c = g.schedule.eval(t)[order];
      if (c != 0.0) out += g.phi.scaled(c);
    }
    out.prune();
    return out;
  }};
}

// Time-dependent Hamiltonian as callables for H and its first two derivatives.
struct HamiltonianFamily {
  std::function<Matrix(double)> H, H_dot, H_ddot;
};

// Assembles each schedule group once on the sector; an optional map transforms
// every group interaction (twists) before assembly.
inline HamiltonianFamily tvw_family(const TvwModel& m, const FockSector& sector,
                                    const std::function<Interaction(const Interaction&)>& map = {}) {
  struct Piece {
    Schedule s;
    Matrix h;
  };
  auto pieces = std::make_shared<std::vector<Piece>>();
  for (const auto& g : detail::tvw_groups(m))
    pieces->push_back({g.schedule, assemble_dense(map ? map(g.phi) : g.phi, sector)});
  const Eigen::Index D = sector.dim();
  auto eval = [pieces, D](int order) {
    return [pieces, D, order](double t) {
      Matrix h = Matrix::Zero(D, D);
      for (const auto& p : *pieces) {
        double c = p.s.eval(t)[order];
        if (c != 0.0) h += c * p.h;
      }
      return h;
    };
  };
  return {eval(0), eval(1), eval(2)};
}

}  // namespace superad
