#pragma once

#include "superad/core.hpp"

#include <cmath>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

namespace superad {

using Site = std::vector<int>;

// Centered box {lo, ..., lo + M - 1}^d with mod-M arithmetic. For even M the
// box is {-M/2+1, ..., M/2}; odd M uses the symmetric box {-(M-1)/2, ..., (M-1)/2}.
class TorusLattice {
 public:
  TorusLattice(int d, int M) : d_(d), M_(M) {
    if (d < 1) throw std::invalid_argument("lattice dimension must be positive");
    if (M < 2) throw std::invalid_argument("lattice side must be at least 2");
    lo_ = -((M - 1) / 2);
    count_ = 1;
    for (int k = 0; k < d; ++k) count_ *= M;
  }

  int dim() const { return d_; }
  int side() const { return M_; }
  int lo() const { return lo_; }
  int hi() const { return lo_ + M_ - 1; }
  int site_count() const { return count_; }

  bool contains(const Site& x) const {
    if (static_cast<int>(x.size()) != d_) return false;
    for (int c : x)
      if (c < lo() || c > hi()) return false;
    return true;
  }

  void require(const Site& x) const {
    if (!contains(x)) throw std::invalid_argument("site outside the centered box");
  }

  int wrap(int c) const {
    int r = ((c - lo_) % M_ + M_) % M_;
    return r + lo_;
  }

  Site wrap(Site x) const {
    for (int& c : x) c = wrap(c);
    return x;
  }

  int index(const Site& x) const {
    require(x);
    int idx = 0;
    for (int k = 0; k < d_; ++k) idx = idx * M_ + (x[k] - lo_);
    return idx;
  }

  Site site(int idx) const {
    Site x(d_);
    for (int k = d_ - 1; k >= 0; --k) {
      x[k] = idx % M_ + lo_;
      idx /= M_;
    }
    return x;
  }

  Site add(const Site& x, const Site& y) const {
    Site s(d_);
    for (int k = 0; k < d_; ++k) s[k] = wrap(x[k] + y[k]);
    return s;
  }

  Site sub(const Site& x, const Site& y) const {
    Site s(d_);
    for (int k = 0; k < d_; ++k) s[k] = wrap(x[k] - y[k]);
    return s;
  }

  Site neg(const Site& x) const {
    Site s(d_);
    for (int k = 0; k < d_; ++k) s[k] = wrap(-x[k]);
    return s;
  }

  // Shortest wrap-around distance of a single coordinate difference.
  int coord_dist(int a, int b) const {
    int r = ((a - b) % M_ + M_) % M_;
    return std::min(r, M_ - r);
  }

  int dist(const Site& x, const Site& y) const {
    int s = 0;
    for (int k = 0; k < d_; ++k) s += coord_dist(x[k], y[k]);
    return s;
  }

  int dist(int i, int j) const { return dist(site(i), site(j)); }

 private:
  int d_;
  int M_;
  int lo_;
  int count_;
};

struct LocalizationPlane {
  std::vector<bool> ell;  // constrained directions
  Site anchor;

  static LocalizationPlane trivial(int d) { return {std::vector<bool>(d, false), Site(d, 0)}; }

  int constrained() const {
    int n = 0;
    for (bool b : ell) n += b ? 1 : 0;
    return n;
  }

  int dist(const Site& x, const TorusLattice& lat) const {
    int s = 0;
    for (int k = 0; k < lat.dim(); ++k)
      if (ell[k]) s += lat.coord_dist(x[k], anchor[k]);
    return s;
  }
};

struct MetricResult {
  Site sum;
  int dist = 0;
  int dist_L = 0;
};

inline MetricResult torus_metric(const Site& x, const Site& y, const TorusLattice& lat,
                                 const std::optional<LocalizationPlane>& plane = std::nullopt) {
  lat.require(x);
  lat.require(y);
  MetricResult r;
  r.sum = lat.add(x, y);
  r.dist = lat.dist(x, y);
  r.dist_L = r.dist;
  if (plane) {
    if (static_cast<int>(plane->ell.size()) != lat.dim())
      throw std::invalid_argument("plane dimension does not match lattice");
    r.dist_L += plane->dist(x, lat) + plane->dist(y, lat);
  }
  return r;
}

class DecayFunction {
 public:
  static DecayFunction exponential(double a) {
    if (!(a >= 0.0)) throw std::invalid_argument("decay rate must be nonnegative");
    DecayFunction z;
    z.rate_ = a;
    return z;
  }

  // Values at r = 0, 1, ..., n-1; evaluation beyond the table is 0.
  static DecayFunction tabulated(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("empty decay table");
    DecayFunction z;
    z.table_ = std::move(values);
    return z;
  }

  double operator()(int r) const {
    if (table_.empty()) return std::exp(-rate_ * r);
    return r < static_cast<int>(table_.size()) ? table_[r] : 0.0;
  }

  double rate() const { return rate_; }
  bool is_exponential() const { return table_.empty(); }

  // Checks the class conditions on r = 0..rmax: bounded by one, non-increasing,
  // supermultiplicative and r^n zeta(r) decaying for n <= 6 (tail value smaller
  // than the running maximum).
  bool satisfies_class_conditions(int rmax) const {
    for (int r = 0; r <= rmax; ++r) {
      double z = (*this)(r);
      if (z > 1.0 + 1e-15 || z < 0.0) return false;
      if (r > 0 && z > (*this)(r - 1) + 1e-15) return false;
      for (int s = 0; r + s <= rmax; ++s)
        if ((*this)(r + s) < (*this)(r) * (*this)(s) * (1 - 1e-12)) return false;
    }
    for (int n = 0; n <= 6; ++n) {
      double peak = 0;
      for (int r = 0; r <= rmax; ++r) peak = std::max(peak, std::pow(r, n) * (*this)(r));
      if (std::pow(rmax, n) * (*this)(rmax) >= peak && rmax > 0 && peak > 0) return false;
    }
    return true;
  }

 private:
  double rate_ = 0.0;
  std::vector<double> table_;
};

struct DecayWeights {
  double F;
  double F_zeta;
};

inline double decay_F(int r, int d) { return std::pow(1.0 + r, -(d + 1)); }

inline DecayWeights decay_weights(int r, int d, const DecayFunction& zeta) {
  double f = decay_F(r, d);
  return {f, zeta(r) * f};
}

struct LatticeSum {
  double value;
  double tail;  // upper bound on the omitted remainder
};

// Number of points of Z^d with l1 norm exactly r.
inline double l1_shell_count(int r, int d) {
  if (r == 0) return 1.0;
  // sum_k 2^k C(d,k) C(r-1,k-1)
  double total = 0.0;
  for (int k = 1; k <= std::min(d, r); ++k) {
    double cdk = 1.0, crk = 1.0;
    for (int i = 0; i < k; ++i) cdk = cdk * (d - i) / (i + 1);
    for (int i = 0; i < k - 1; ++i) crk = crk * (r - 1 - i) / (i + 1);
    total += std::ldexp(1.0, k) * cdk * crk;
  }
  return total;
}

// Truncated sum_{y in Z^d} F(|y|_1) over |y|_1 <= cutoff. The shell count is
// at most 2^d (1+r)^{d-1}, so the remainder is bounded by 2^d/(1+cutoff).
inline LatticeSum norm_F_Gamma(int d, int cutoff) {
  double s = 0.0;
  // sum from the tail inward for accuracy
  for (int r = cutoff; r >= 0; --r) s += l1_shell_count(r, d) * decay_F(r, d);
  return {s, std::ldexp(1.0, d) / (1.0 + cutoff)};
}

}  // namespace superad
