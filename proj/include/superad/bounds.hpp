#pragma once

#include "superad/interaction.hpp"
#include "superad/propagate.hpp"

#include <set>

namespace superad {

inline constexpr int kLatticeSumCutoff = 1 << 20;

inline double F_Gamma(int d) { return norm_F_Gamma(d, kLatticeSumCutoff).value; }

// v = 2^{2d+2} ||F||_Gamma ||Phi||_{a,0} / a.
inline double lr_velocity(const Interaction& phi, double a) {
  if (!(a > 0)) throw std::invalid_argument("decay rate must be positive");
  const int d = phi.lattice().dim();
  double n = interaction_norm(phi, DecayFunction::exponential(a), 0);
  return std::ldexp(1.0, 2 * d + 2) * F_Gamma(d) * n / a;
}

// Sites of X lying in a term Z that meets both X and its complement, with Z
// scanned over the interaction at the given times.
inline std::vector<int> phi_boundary(const TimeDependentInteraction& phi, const std::vector<double>& times,
                                     const std::vector<int>& X) {
  std::set<int> inX(X.begin(), X.end()), out;
  for (double t : times) {
    Interaction at = phi.eval(t, 0);
    for (const auto& [Z, op] : at.terms()) {
      if (op.cwiseAbs().maxCoeff() == 0.0) continue;
      bool meets = false, leaves = false;
      for (int z : Z) (inX.count(z) ? meets : leaves) = true;
      if (meets && leaves)
        for (int z : Z)
          if (inX.count(z)) out.insert(z);
    }
  }
  return {out.begin(), out.end()};
}

// Local operator A on the sites X (sorted), as a block on the local Fock space.
struct LocalObservable {
  std::vector<int> sites;
  Matrix op;
};

struct LRSample {
  double t;
  int pair;  // index into the observable pairs
  double lhs, rhs_min, rhs_sum, margin;
};

struct LRReport {
  double velocity;   // for exponential decay
  double phi_norm;   // ||Phi||_{zeta,0}, sup over the time grid
  double F_Gamma;
  std::vector<LRSample> samples;
  double min_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& s : samples) m = std::min(m, s.margin);
    return m;
  }
};

namespace detail {

inline bool conserves_number(const Matrix& op) {
  RealVector n(op.rows());
  for (Eigen::Index s = 0; s < op.rows(); ++s) n(s) = std::popcount(static_cast<Pattern>(s));
  for (Eigen::Index i = 0; i < op.rows(); ++i)
    for (Eigen::Index j = 0; j < op.cols(); ++j)
      if (n(i) != n(j) && std::abs(op(i, j)) > 0.0) return false;
  return true;
}

inline Matrix embed_observable(const LocalObservable& o, const TorusLattice& lat, int ell,
                               const FockSector& sector) {
  Interaction phi(lat, ell);
  phi.add(o.sites, o.op);
  return assemble_dense(phi, sector);
}

}  // namespace detail

// Commutator light cone ||[U(t,s) A U(t,s)^*, B]|| against the bound with
// zeta(r) = exp(-a r). The dynamics is the unscaled one (eps = 1) starting at
// times[0]; the norm is the maximum over all particle-number sectors. A and B
// must conserve particle number.
inline LRReport lr_check(const TimeDependentInteraction& phi, const TorusLattice& lat, int ell, double a,
                         const std::vector<std::pair<LocalObservable, LocalObservable>>& pairs,
                         const std::vector<double>& times, EvolveOptions opt = {}) {
  if (times.empty()) throw std::invalid_argument("lr_check needs at least one time");
  const int d = lat.dim();
  const int modes = lat.site_count() * ell;
  if (modes > 16) throw UnsupportedError("lr_check works on the full Fock space; at most 16 modes");
  DecayFunction zeta = DecayFunction::exponential(a);
  LRReport rep;
  rep.F_Gamma = F_Gamma(d);
  rep.phi_norm = interaction_norm(phi, times, zeta, 0);
  rep.velocity = std::ldexp(1.0, 2 * d + 2) * rep.F_Gamma * rep.phi_norm / a;

  struct Prepared {
    std::vector<int> dX;
    double normA, normB;
    int dist;
  };
  std::vector<Prepared> prep;
  for (const auto& [A, B] : pairs) {
    for (int x : A.sites)
      if (std::find(B.sites.begin(), B.sites.end(), x) != B.sites.end())
        throw std::invalid_argument("lr_check: supports of A and B overlap");
    if (!detail::conserves_number(A.op) || !detail::conserves_number(B.op))
      throw std::invalid_argument("lr_check: observables must conserve particle number");
    int dist = std::numeric_limits<int>::max();
    for (int x : A.sites)
      for (int y : B.sites) dist = std::min(dist, lat.dist(x, y));
    prep.push_back({phi_boundary(phi, times, A.sites), op_norm(A.op), op_norm(B.op), dist});
  }

  // LHS: maximum over particle-number sectors
  std::vector<std::vector<double>> lhs(times.size(), std::vector<double>(pairs.size(), 0.0));
  for (int N = 0; N <= modes; ++N) {
    FockSector sector(lat, ell, N);
    Generator G = [&](double t) { return assemble_dense(phi.eval(t, 0), sector); };
    PropagatorResult U = evolve(G, 1.0, times, opt, "physical");
    for (size_t p = 0; p < pairs.size(); ++p) {
      Matrix A = detail::embed_observable(pairs[p].first, lat, ell, sector);
      Matrix B = detail::embed_observable(pairs[p].second, lat, ell, sector);
      for (size_t k = 0; k < times.size(); ++k) {
        Matrix At = U.U[k] * A * U.U[k].adjoint();
        lhs[k][p] = std::max(lhs[k][p], op_norm(commutator(At, B)));
      }
    }
  }

  const double pre = 1.0 / (std::ldexp(1.0, 2 * d) * rep.F_Gamma);
  for (size_t k = 0; k < times.size(); ++k)
    for (size_t p = 0; p < pairs.size(); ++p) {
      const auto& pr = prep[p];
      double growth = std::expm1(std::ldexp(1.0, 2 * d + 2) * rep.F_Gamma * rep.phi_norm *
                                 std::abs(times[k] - times[0]));
      double s = 0;
      for (int x : pr.dX)
        for (int y : pairs[p].second.sites) s += decay_weights(lat.dist(x, y), d, zeta).F_zeta;
      double cmin = rep.F_Gamma *
                    static_cast<double>(std::min(pairs[p].first.sites.size(), pairs[p].second.sites.size())) *
                    zeta(pr.dist);
      double base = pre * pr.normA * pr.normB * growth;
      LRSample smp{times[k], static_cast<int>(p), lhs[k][p], base * cmin, base * s, 0.0};
      smp.margin = smp.rhs_min - smp.lhs;
      rep.samples.push_back(smp);
    }
  return rep;
}

// ---- norm growth ----

// One-particle matrix of an interaction whose terms are all quadratic
// (a^dagger a bilinears); nullopt otherwise.
inline std::optional<Matrix> one_body_matrix(const Interaction& phi, double tol = 1e-12) {
  const int l = phi.internal_dim(), S = phi.lattice().site_count();
  Matrix h = Matrix::Zero(S * l, S * l);
  for (const auto& [sites, op] : phi.terms()) {
    LocalOps lo(sites, l);
    const int k = static_cast<int>(sites.size()) * l;
    Matrix hl(k, k), rebuilt = Matrix::Zero(op.rows(), op.cols());
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) hl(i, j) = op(Eigen::Index{1} << i, Eigen::Index{1} << j);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j)
        if (hl(i, j) != cplx(0)) rebuilt += hl(i, j) * lo.adag(i / l, i % l) * lo.a(j / l, j % l);
    if ((rebuilt - op).cwiseAbs().maxCoeff() > tol) return std::nullopt;
    auto modes = phi.modes_of(sites);
    for (int i = 0; i < k; ++i)
      for (int j = 0; j < k; ++j) h(modes[i], modes[j]) += hl(i, j);
  }
  return h;
}

// Operator norm of the Hamiltonian of phi on the full Fock space. Quadratic
// interactions use max(sum of positive, sum of |negative|) one-particle
// eigenvalues; others are diagonalized sector by sector.
inline double fock_norm(const Interaction& phi) {
  if (auto h = one_body_matrix(phi)) {
    Eigen::SelfAdjointEigenSolver<Matrix> es(*h, Eigen::EigenvaluesOnly);
    double pos = 0, neg = 0;
    for (double e : es.eigenvalues()) (e > 0 ? pos : neg) += std::abs(e);
    return std::max(pos, neg);
  }
  const int modes = phi.lattice().site_count() * phi.internal_dim();
  if (modes > 20) throw UnsupportedError("norm of a non-quadratic interaction needs at most 20 modes");
  double best = 0;
  for (int N = 0; N <= modes; ++N) {
    FockSector sector(phi.lattice(), phi.internal_dim(), N);
    best = std::max(best, hermitian_norm(assemble_dense(phi, sector)));
  }
  return best;
}

struct NormVolumeRow {
  int M;
  double norm;       // ||A^Lambda||
  double phi_norm;   // ||Phi||_{zeta,0,L}
  double volume;     // M^{d - |l|}
  double ratio;
};

struct NormVolumeReport {
  std::vector<NormVolumeRow> rows;
  double max_ratio() const {
    double m = 0;
    for (const auto& r : rows) m = std::max(m, r.ratio);
    return m;
  }
};

// Table of ||A^Lambda|| / (||Phi||_{zeta,0,L} M^{d-|l|}) over a list of sizes.
inline NormVolumeReport norm_volume_check(const std::function<Interaction(int M)>& family,
                                          const std::vector<int>& Ms, const DecayFunction& zeta,
                                          const std::function<std::optional<LocalizationPlane>(int M)>& plane = {}) {
  NormVolumeReport rep;
  for (int M : Ms) {
    Interaction phi = family(M);
    std::optional<LocalizationPlane> L = plane ? plane(M) : std::nullopt;
    const int d = phi.lattice().dim();
    const int c = L ? L->constrained() : 0;
    double n = fock_norm(phi);
    double pn = interaction_norm(phi, zeta, 0, L);
    double vol = std::pow(static_cast<double>(M), d - c);
    rep.rows.push_back({M, n, pn, vol, pn > 0 ? n / (pn * vol) : 0.0});
  }
  return rep;
}

}  // namespace superad
