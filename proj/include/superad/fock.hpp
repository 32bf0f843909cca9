#pragma once

#include "superad/core.hpp"
#include "superad/lattice.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <optional>
#include <variant>

namespace superad {

using Pattern = std::uint64_t;

inline int parity_below(Pattern s, int m) {
  Pattern mask = (m == 0) ? 0 : ((Pattern{1} << m) - 1);
  return std::popcount(s & mask) & 1;
}

inline double binomial(int n, int k) {
  if (k < 0 || k > n) return 0.0;
  double r = 1.0;
  for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
  return std::round(r);
}

inline constexpr Eigen::Index kDenseLimit = 4096;

// Matrix on a Fock sector; dense up to kDenseLimit, sparse above.
class Operator {
 public:
  Operator() = default;
  explicit Operator(Matrix m, bool hermitian = false, std::optional<std::vector<int>> support = {})
      : data_(std::move(m)), hermitian_(hermitian), support_(std::move(support)) {
    if (hermitian_ && !is_hermitian(std::get<Matrix>(data_), 1e-12))
      throw std::invalid_argument("operator flagged hermitian is not");
  }
  explicit Operator(SparseMatrix m, bool hermitian = false,
                    std::optional<std::vector<int>> support = {})
      : data_(std::move(m)), hermitian_(hermitian), support_(std::move(support)) {}

  Eigen::Index dim() const {
    return std::visit([](const auto& m) { return m.rows(); }, data_);
  }
  bool is_dense() const { return std::holds_alternative<Matrix>(data_); }
  bool hermitian() const { return hermitian_; }
  const std::optional<std::vector<int>>& support() const { return support_; }

  const Matrix& dense() const { return std::get<Matrix>(data_); }
  const SparseMatrix& sparse() const { return std::get<SparseMatrix>(data_); }

  Matrix to_dense() const {
    if (is_dense()) return dense();
    return Matrix(sparse());
  }

 private:
  std::variant<Matrix, SparseMatrix> data_;
  bool hermitian_ = false;
  std::optional<std::vector<int>> support_;
};

inline Operator make_operator(Eigen::Index dim, const std::vector<Eigen::Triplet<cplx>>& trip,
                              bool hermitian, std::optional<std::vector<int>> support = {}) {
  SparseMatrix sp(dim, dim);
  sp.setFromTriplets(trip.begin(), trip.end());
  if (dim <= kDenseLimit) return Operator(Matrix(sp), hermitian, std::move(support));
  return Operator(std::move(sp), hermitian, std::move(support));
}

// N-particle sector. Mode m = site_index * internal_dim + internal index; bit m
// of a pattern is the occupation of mode m.
class FockSector {
 public:
  FockSector(TorusLattice lattice, int internal_dim, int N)
      : lattice_(std::move(lattice)), ell_(internal_dim), N_(N) {
    if (internal_dim < 1) throw std::invalid_argument("internal dimension must be positive");
    modes_ = lattice_.site_count() * ell_;
    if (modes_ > 63) throw std::invalid_argument("more than 63 modes is not supported");
    if (N < 0 || N > modes_) throw std::invalid_argument("particle number out of range");
    if (binomial(modes_, N) > 5e7) throw std::invalid_argument("sector too large");
    if (N == 0) {
      states_.push_back(0);
    } else {
      Pattern s = (Pattern{1} << N) - 1;
      Pattern limit = Pattern{1} << modes_;
      while (s < limit) {
        states_.push_back(s);
        Pattern c = s & (~s + 1);
        Pattern r = s + c;
        s = (((r ^ s) >> 2) / c) | r;
      }
    }
  }

  const TorusLattice& lattice() const { return lattice_; }
  int internal_dim() const { return ell_; }
  int particles() const { return N_; }
  int modes() const { return modes_; }
  Eigen::Index dim() const { return static_cast<Eigen::Index>(states_.size()); }
  const std::vector<Pattern>& states() const { return states_; }
  Pattern state(Eigen::Index i) const { return states_[i]; }

  int mode(int site_index, int internal) const { return site_index * ell_ + internal; }
  int site_of_mode(int m) const { return m / ell_; }

  // Basis position of a pattern, or -1.
  Eigen::Index find(Pattern s) const {
    auto it = std::lower_bound(states_.begin(), states_.end(), s);
    if (it == states_.end() || *it != s) return -1;
    return it - states_.begin();
  }

  void require_mode(int m) const {
    if (m < 0 || m >= modes_) throw std::invalid_argument("mode out of range");
  }

 private:
  TorusLattice lattice_;
  int ell_;
  int N_;
  int modes_;
  std::vector<Pattern> states_;
};

// Full Fock space of k modes, 2^k dimensional, basis index = occupation pattern.
class FockSpace {
 public:
  explicit FockSpace(int k) : k_(k) {
    if (k < 0 || k > 20) throw std::invalid_argument("full Fock space limited to 20 modes");
  }
  int modes() const { return k_; }
  Eigen::Index dim() const { return Eigen::Index{1} << k_; }

  Matrix annihilation(int m) const {
    if (m < 0 || m >= k_) throw std::invalid_argument("mode out of range");
    Matrix a = Matrix::Zero(dim(), dim());
    for (Pattern s = 0; s < static_cast<Pattern>(dim()); ++s)
      if (s >> m & 1) a(s ^ (Pattern{1} << m), s) = parity_below(s, m) ? -1.0 : 1.0;
    return a;
  }
  Matrix creation(int m) const { return annihilation(m).adjoint(); }

  // Diagonal of the number operator restricted to a set of modes.
  RealVector number(const std::vector<int>& modes) const {
    RealVector v(dim());
    for (Pattern s = 0; s < static_cast<Pattern>(dim()); ++s) {
      int c = 0;
      for (int m : modes) c += (s >> m) & 1;
      v(s) = c;
    }
    return v;
  }

  // Block of the particle-number-n subspace (indices into the full basis).
  std::vector<Eigen::Index> sector_indices(int n) const {
    std::vector<Eigen::Index> idx;
    for (Pattern s = 0; s < static_cast<Pattern>(dim()); ++s)
      if (std::popcount(s) == n) idx.push_back(static_cast<Eigen::Index>(s));
    return idx;
  }

 private:
  int k_;
};

struct BilinearTerm {
  int m;   // created mode
  int mp;  // annihilated mode
  cplx c;
};

// Matrix element of a*_m a_mp on pattern s: returns (target, sign) or target = ~0.
inline std::pair<Pattern, int> apply_bilinear(Pattern s, int m, int mp) {
  constexpr Pattern none = ~Pattern{0};
  if (!(s >> mp & 1)) return {none, 0};
  Pattern s1 = s ^ (Pattern{1} << mp);
  if (s1 >> m & 1) return {none, 0};
  int sign = parity_below(s, mp) ^ parity_below(s1, m);
  return {s1 | (Pattern{1} << m), sign ? -1 : 1};
}

inline Operator ladder_map(const std::vector<BilinearTerm>& table, const FockSector& sector) {
  for (const auto& t : table) {
    sector.require_mode(t.m);
    sector.require_mode(t.mp);
  }
  std::vector<Eigen::Triplet<cplx>> trip;
  for (Eigen::Index j = 0; j < sector.dim(); ++j) {
    Pattern s = sector.state(j);
    for (const auto& t : table) {
      auto [target, sign] = apply_bilinear(s, t.m, t.mp);
      if (sign == 0) continue;
      trip.emplace_back(sector.find(target), j, t.c * static_cast<double>(sign));
    }
  }
  return make_operator(sector.dim(), trip, false);
}

// Product of bilinear maps (a*a)(a*a)..., applied right to left.
inline Operator ladder_product(const std::vector<std::vector<BilinearTerm>>& factors,
                               const FockSector& sector) {
  Matrix acc = Matrix::Identity(sector.dim(), sector.dim());
  for (const auto& f : factors) acc = acc * ladder_map(f, sector).to_dense();
  return Operator(acc);
}

inline RealVector number_diagonal(const std::vector<int>& site_indices, const FockSector& sector) {
  Pattern mask = 0;
  for (int x : site_indices) {
    if (x < 0 || x >= sector.lattice().site_count())
      throw std::invalid_argument("region site out of range");
    for (int i = 0; i < sector.internal_dim(); ++i) mask |= Pattern{1} << sector.mode(x, i);
  }
  RealVector v(sector.dim());
  for (Eigen::Index j = 0; j < sector.dim(); ++j) v(j) = std::popcount(sector.state(j) & mask);
  return v;
}

inline Operator number_operator(const std::vector<int>& site_indices, const FockSector& sector) {
  RealVector v = number_diagonal(site_indices, sector);
  std::vector<Eigen::Triplet<cplx>> trip;
  for (Eigen::Index j = 0; j < v.size(); ++j)
    if (v(j) != 0.0) trip.emplace_back(j, j, v(j));
  return make_operator(sector.dim(), trip, true, site_indices);
}

// Sites with x_j <= 0.
inline std::vector<int> half_space(const TorusLattice& lat, int j) {
  std::vector<int> out;
  for (int i = 0; i < lat.site_count(); ++i)
    if (lat.site(i)[j] <= 0) out.push_back(i);
  return out;
}

struct PositionTwist {
  std::vector<RealVector> Q;  // diagonals of Q_y,k
  Vector twist;               // diagonal of exp(-i alpha . Q_y)
};

inline PositionTwist position_twist(const Site& y, const std::vector<double>& alpha,
                                    const FockSector& sector) {
  const auto& lat = sector.lattice();
  lat.require(y);
  const int d = lat.dim();
  if (static_cast<int>(alpha.size()) != d) throw std::invalid_argument("alpha has wrong length");
  std::vector<Site> rel(lat.site_count());
  for (int x = 0; x < lat.site_count(); ++x) rel[x] = lat.sub(lat.site(x), y);
  PositionTwist out;
  out.Q.assign(d, RealVector::Zero(sector.dim()));
  out.twist.resize(sector.dim());
  for (Eigen::Index j = 0; j < sector.dim(); ++j) {
    Pattern s = sector.state(j);
    while (s) {
      int m = std::countr_zero(s);
      s &= s - 1;
      const Site& r = rel[sector.site_of_mode(m)];
      for (int k = 0; k < d; ++k) out.Q[k](j) += r[k];
    }
    double phase = 0;
    for (int k = 0; k < d; ++k) phase += alpha[k] * out.Q[k](j);
    out.twist(j) = std::exp(-I * phase);
  }
  return out;
}

// Embeds an operator given on the full local Fock space of `modes` (sorted
// global mode indices, local bit i <-> modes[i]) into a sector. The operator
// must conserve particle number. Signs follow from writing each global basis
// state as (local string)(remaining string)|0>.
inline void embed_local(const Matrix& local, const std::vector<int>& modes,
                        const FockSector& sector, cplx scale,
                        std::vector<Eigen::Triplet<cplx>>& trip) {
  const int k = static_cast<int>(modes.size());
  if (local.rows() != (Eigen::Index{1} << k)) throw std::invalid_argument("local block size mismatch");
  Pattern mask = 0;
  for (int m : modes) mask |= Pattern{1} << m;

  // nonzero entries per column
  std::vector<std::vector<std::pair<Pattern, cplx>>> cols(local.cols());
  for (Eigen::Index c = 0; c < local.cols(); ++c)
    for (Eigen::Index r = 0; r < local.rows(); ++r)
      if (std::abs(local(r, c)) > 1e-15) {
        if (std::popcount(static_cast<Pattern>(r)) != std::popcount(static_cast<Pattern>(c)))
          throw std::invalid_argument("local operator does not conserve particle number");
        cols[c].emplace_back(static_cast<Pattern>(r), local(r, c));
      }

  auto sign_of = [&](Pattern other, Pattern loc) {
    int p = 0;
    for (int i = 0; i < k; ++i)
      if (loc >> i & 1) p ^= parity_below(other, modes[i]);
    return p ? -1.0 : 1.0;
  };
  auto deposit = [&](Pattern loc) {
    Pattern s = 0;
    for (int i = 0; i < k; ++i)
      if (loc >> i & 1) s |= Pattern{1} << modes[i];
    return s;
  };

  for (Eigen::Index j = 0; j < sector.dim(); ++j) {
    Pattern s = sector.state(j);
    Pattern other = s & ~mask;
    Pattern loc = 0;
    for (int i = 0; i < k; ++i)
      if (s >> modes[i] & 1) loc |= Pattern{1} << i;
    const auto& col = cols[loc];
    if (col.empty()) continue;
    double sj = sign_of(other, loc);
    for (const auto& [lp, v] : col) {
      Eigen::Index i = sector.find(other | deposit(lp));
      if (i < 0) throw std::invalid_argument("embedded state outside the sector");
      trip.emplace_back(i, j, scale * v * sj * sign_of(other, lp));
    }
  }
}

}  // namespace superad
