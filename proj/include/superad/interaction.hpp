#pragma once

#include "superad/core.hpp"
#include "superad/fock.hpp"
#include "superad/lattice.hpp"

#include <functional>
#include <map>
#include <set>

namespace superad {

// Map X -> Phi(X). Each term is stored on the full local Fock space of X's
// modes, local bit i <-> i-th mode of X in global mode order.
class Interaction {
 public:
  using Key = std::vector<int>;

  Interaction(TorusLattice lattice, int internal_dim)
      : lattice_(std::move(lattice)), ell_(internal_dim) {}

  const TorusLattice& lattice() const { return lattice_; }
  int internal_dim() const { return ell_; }
  const std::map<Key, Matrix>& terms() const { return terms_; }
  bool empty() const { return terms_.empty(); }

  std::vector<int> modes_of(const Key& sites) const {
    std::vector<int> m;
    for (int x : sites)
      for (int i = 0; i < ell_; ++i) m.push_back(x * ell_ + i);
    return m;
  }

  Eigen::Index local_dim(const Key& sites) const {
    return Eigen::Index{1} << (sites.size() * ell_);
  }

  void add(Key sites, const Matrix& op) {
    std::sort(sites.begin(), sites.end());
    if (std::adjacent_find(sites.begin(), sites.end()) != sites.end())
      throw std::invalid_argument("repeated site in term support");
    for (int x : sites)
      if (x < 0 || x >= lattice_.site_count())
        throw std::invalid_argument("term support outside the lattice");
    if (op.rows() != local_dim(sites) || op.cols() != local_dim(sites))
      throw std::invalid_argument("local block has the wrong size");
    auto it = terms_.find(sites);
    if (it == terms_.end())
      terms_.emplace(std::move(sites), op);
    else
      it->second += op;
  }

  Interaction scaled(cplx c) const {
    Interaction out(lattice_, ell_);
    for (const auto& [k, v] : terms_) out.terms_.emplace(k, c * v);
    return out;
  }

  Interaction& operator+=(const Interaction& o) {
    for (const auto& [k, v] : o.terms_) add(k, v);
    return *this;
  }

  // Drops terms whose local block vanishes.
  void prune(double tol = 1e-15) {
    for (auto it = terms_.begin(); it != terms_.end();)
      if (it->second.cwiseAbs().maxCoeff() <= tol)
        it = terms_.erase(it);
      else
        ++it;
  }

  int max_cardinality() const {
    int r = 0;
    for (const auto& [k, v] : terms_) r = std::max<int>(r, static_cast<int>(k.size()));
    return r;
  }

  int max_diameter() const {
    int r = 0;
    for (const auto& [k, v] : terms_)
      for (int a : k)
        for (int b : k) r = std::max(r, lattice_.dist(a, b));
    return r;
  }

  // Sites x in X that belong to some nonzero term also reaching outside X.
  std::vector<int> boundary(const std::vector<int>& X) const {
    std::set<int> xs(X.begin(), X.end()), out;
    for (const auto& [k, v] : terms_) {
      if (v.cwiseAbs().maxCoeff() == 0.0) continue;
      bool leaves = false;
      for (int z : k) leaves |= !xs.count(z);
      if (!leaves) continue;
      for (int z : k)
        if (xs.count(z)) out.insert(z);
    }
    return {out.begin(), out.end()};
  }

 private:
  TorusLattice lattice_;
  int ell_;
  std::map<Key, Matrix> terms_;
};

struct TimeDependentInteraction {
  // order 0, 1, 2 -> Phi(t), d/dt Phi(t), d^2/dt^2 Phi(t)
  std::function<Interaction(double t, int order)> eval;
};

// Creation / annihilation operators on a term's local Fock space.
class LocalOps {
 public:
  LocalOps(const Interaction::Key& sites, int ell)
      : sites_(sites), ell_(ell), space_(static_cast<int>(sites.size()) * ell) {}

  Eigen::Index dim() const { return space_.dim(); }
  int local_mode(int site_pos, int internal) const { return site_pos * ell_ + internal; }
  Matrix a(int site_pos, int internal) const {
    return space_.annihilation(local_mode(site_pos, internal));
  }
  Matrix adag(int site_pos, int internal) const { return a(site_pos, internal).adjoint(); }
  Matrix n(int site_pos, int internal) const {
    Matrix c = a(site_pos, internal);
    return c.adjoint() * c;
  }
  // diagonal: sum over local modes of weight(site_pos) * occupation
  RealVector weighted_number(const std::function<double(int site_pos)>& w) const {
    RealVector v = RealVector::Zero(dim());
    for (Pattern s = 0; s < static_cast<Pattern>(dim()); ++s)
      for (int m = 0; m < space_.modes(); ++m)
        if (s >> m & 1) v(s) += w(m / ell_);
    return v;
  }

 private:
  Interaction::Key sites_;
  int ell_;
  FockSpace space_;
};

inline Operator assemble(const Interaction& phi, const FockSector& sector) {
  if (phi.lattice().site_count() != sector.lattice().site_count() ||
      phi.internal_dim() != sector.internal_dim())
    throw std::invalid_argument("interaction and sector disagree on the lattice");
  std::vector<Eigen::Triplet<cplx>> trip;
  for (const auto& [sites, op] : phi.terms()) embed_local(op, phi.modes_of(sites), sector, 1.0, trip);
  Operator out = make_operator(sector.dim(), trip, false);
  bool herm = true;
  for (const auto& [k, v] : phi.terms()) herm &= is_hermitian(v, 1e-12);
  if (herm && out.is_dense()) return Operator(out.dense(), true);
  return out;
}

inline Matrix assemble_dense(const Interaction& phi, const FockSector& sector) {
  return assemble(phi, sector).to_dense();
}

inline double term_norm(const Matrix& op) {
  return is_hermitian(op, 1e-13) ? hermitian_norm(op) : op_norm(op);
}

// Conjugates term X by exp(-i alpha . Q_y) with y the `y_pos`-th site of X
// (clamped to |X|-1).
inline Interaction twist(const Interaction& phi, const std::vector<double>& alpha, int y_pos = 0) {
  const auto& lat = phi.lattice();
  if (static_cast<int>(alpha.size()) != lat.dim()) throw std::invalid_argument("alpha has wrong length");
  Interaction out(lat, phi.internal_dim());
  for (const auto& [sites, op] : phi.terms()) {
    Site y = lat.site(sites[std::min<int>(y_pos, static_cast<int>(sites.size()) - 1)]);
    LocalOps lo(sites, phi.internal_dim());
    RealVector q = lo.weighted_number([&](int p) {
      Site r = lat.sub(lat.site(sites[p]), y);
      double s = 0;
      for (int k = 0; k < lat.dim(); ++k) s += alpha[k] * r[k];
      return s;
    });
    Vector ph = (-I * q.cast<cplx>()).array().exp();
    out.add(sites, ph.asDiagonal() * op * ph.conjugate().asDiagonal());
  }
  return out;
}

// True when X's coordinates along k, unwrapped relative to its first site,
// stay consistent (no term wraps around the torus).
inline bool term_wraps(const Interaction::Key& sites, const TorusLattice& lat, int k) {
  Site y = lat.site(sites[0]);
  std::vector<int> u;
  for (int x : sites) u.push_back(lat.sub(lat.site(x), y)[k]);
  for (size_t a = 0; a < sites.size(); ++a)
    for (size_t b = 0; b < sites.size(); ++b)
      if (u[a] - u[b] != lat.sub(lat.site(sites[a]), lat.site(sites[b]))[k]) return true;
  return false;
}

// True when X, unwrapped relative to its first site, leaves the centered box
// along direction j (i.e. it crosses the seam between hi and lo).
inline bool crosses_far_seam(const Interaction::Key& sites, const TorusLattice& lat, int j) {
  Site y = lat.site(sites[0]);
  for (int x : sites) {
    int u = y[j] + lat.sub(lat.site(x), y)[j];
    if (u < lat.lo() || u > lat.hi()) return true;
  }
  return false;
}

namespace detail {

struct CutInfo {
  bool twisted;
  RealVector left_count;  // local diag of N_j restricted to X
};

// X straddles the cut between x_j = 0 and x_j = 1 when its coordinates, unwrapped
// around its first site, lie on both sides. Terms across the far seam only are
// left alone; a term reaching both seams is ambiguous and rejected.
inline CutInfo cut_info(const Interaction::Key& sites, const Interaction& phi, int j, int r) {
  const auto& lat = phi.lattice();
  Site y = lat.site(sites[0]);
  int umin = std::numeric_limits<int>::max(), umax = std::numeric_limits<int>::min();
  int dmin = lat.side();
  for (int x : sites) {
    int u = y[j] + lat.sub(lat.site(x), y)[j];
    umin = std::min(umin, u);
    umax = std::max(umax, u);
    dmin = std::min(dmin, lat.coord_dist(lat.site(x)[j], 0));
  }
  CutInfo ci{umin <= 0 && umax >= 1 && dmin <= r, {}};
  if (ci.twisted) {
    if (crosses_far_seam(sites, lat, j))
      throw ConfigurationError("interaction term straddles both seams of the torus along a beta direction");
    LocalOps lo(sites, phi.internal_dim());
    ci.left_count = lo.weighted_number([&](int p) { return lat.site(sites[p])[j] <= 0 ? 1.0 : 0.0; });
  }
  return ci;
}

}  // namespace detail

// Two-step half-space twist: terms straddling {x_j = 0} within distance r are
// conjugated by exp(-i beta_j N_j), first j = 1 then j = 2. With `derivative`
// set to j, returns d/d beta_j of the twisted interaction instead.
inline Interaction beta_twist(const Interaction& phi, double beta1, double beta2,
                              std::optional<int> r = std::nullopt,
                              std::optional<int> derivative = std::nullopt) {
  const auto& lat = phi.lattice();
  const int range = r.value_or(phi.max_cardinality());
  const double beta[2] = {beta1, beta2};
  const int ndir = std::min(lat.dim(), 2);
  Interaction out(lat, phi.internal_dim());
  for (const auto& [sites, op] : phi.terms()) {
    Matrix t = op;
    bool touched_derivative = false;
    for (int j = 0; j < ndir; ++j) {
      auto ci = detail::cut_info(sites, phi, j, range);
      if (!ci.twisted) continue;
      Vector ph = (-I * beta[j] * ci.left_count.cast<cplx>()).array().exp();
      t = ph.asDiagonal() * t * ph.conjugate().asDiagonal();
      if (derivative && *derivative == j) {
        // d/dbeta of e^{-i b N} T e^{i b N} = i [T, N]
        Matrix n = ci.left_count.cast<cplx>().asDiagonal();
        t = I * (t * n - n * t);
        touched_derivative = true;
      }
    }
    if (derivative && !touched_derivative) continue;
    out.add(sites, t);
  }
  return out;
}

// Phi_J,k(X) = i [Phi(X), Q_y,k] for k = 0..d-1.
inline std::vector<Interaction> current_interaction(const Interaction& phi) {
  const auto& lat = phi.lattice();
  std::vector<Interaction> out(lat.dim(), Interaction(lat, phi.internal_dim()));
  for (const auto& [sites, op] : phi.terms()) {
    for (int k = 0; k < lat.dim(); ++k) {
      if (term_wraps(sites, lat, k))
        throw ConfigurationError("interaction term wraps around the torus; increase M");
      Site y = lat.site(sites[0]);
      LocalOps lo(sites, phi.internal_dim());
      RealVector q = lo.weighted_number([&](int p) { return double(lat.sub(lat.site(sites[p]), y)[k]); });
      Matrix Q = q.cast<cplx>().asDiagonal();
      Matrix j = I * (op * Q - Q * op);
      if (j.cwiseAbs().maxCoeff() > 0.0) out[k].add(sites, j);
    }
  }
  return out;
}

// sup_{x,y} sum_{X containing x,y} |X|^n ||Phi(X)|| / F_zeta(d_L(x,y)).
inline double interaction_norm(const Interaction& phi, const DecayFunction& zeta, int n,
                               const std::optional<LocalizationPlane>& plane = std::nullopt) {
  const auto& lat = phi.lattice();
  const int S = lat.site_count();
  std::vector<double> acc(static_cast<size_t>(S) * S, 0.0);
  for (const auto& [sites, op] : phi.terms()) {
    double w = std::pow(static_cast<double>(sites.size()), n) * term_norm(op);
    if (w == 0.0) continue;
    for (int x : sites)
      for (int y : sites) acc[static_cast<size_t>(x) * S + y] += w;
  }
  double best = 0.0;
  for (int x = 0; x < S; ++x)
    for (int y = 0; y < S; ++y) {
      double v = acc[static_cast<size_t>(x) * S + y];
      if (v == 0.0) continue;
      int dl = torus_metric(lat.site(x), lat.site(y), lat, plane).dist_L;
      best = std::max(best, v / decay_weights(dl, lat.dim(), zeta).F_zeta);
    }
  return best;
}

inline double interaction_norm(const TimeDependentInteraction& phi, const std::vector<double>& times,
                               const DecayFunction& zeta, int n,
                               const std::optional<LocalizationPlane>& plane = std::nullopt) {
  double best = 0.0;
  for (double t : times) best = std::max(best, interaction_norm(phi.eval(t, 0), zeta, n, plane));
  return best;
}

}  // namespace superad
