#include <gtest/gtest.h>

#include "superad/bounds.hpp"
#include "unit/helpers.hpp"

using namespace superad;
using superad::testing::max_abs;

namespace {

Matrix scalar(cplx v) { return Matrix::Constant(1, 1, v); }

TvwModel chain(int M, double U = 0.0) {
  TvwModel m;
  m.lattice = TorusLattice(1, M);
  m.add_hopping_pair({1}, scalar(-1.0));
  TvwModel::Potential p;
  p.preset = TvwModel::Potential::Preset::staggered;
  p.block = scalar(0.5);
  m.potential.push_back(p);
  if (U != 0.0) m.pair.push_back({1, Eigen::MatrixXd::Constant(1, 1, U), {}});
  return m;
}

LocalObservable number_at(int x) {
  LocalOps lo({x}, 1);
  return {{x}, lo.n(0, 0)};
}

LocalObservable bond(int x, int y) {
  LocalOps lo({x, y}, 1);
  Matrix h = lo.adag(0, 0) * lo.a(1, 0);
  return {{x, y}, h + h.adjoint()};
}

}  // namespace

TEST(LiebRobinson, VelocityOfHoppingChain) {
  Interaction phi = build_tvw(chain(8), 0.0);
  double n = interaction_norm(phi, DecayFunction::exponential(1.0), 0);
  EXPECT_NEAR(lr_velocity(phi, 1.0), 16.0 * 2.289868 * n, 16.0 * n * 1e-5);
  EXPECT_NEAR(lr_velocity(phi, 2.0) * 2.0 * interaction_norm(phi, DecayFunction::exponential(1.0), 0),
              lr_velocity(phi, 1.0) * interaction_norm(phi, DecayFunction::exponential(2.0), 0), 1e-9);
  EXPECT_THROW(lr_velocity(phi, 0.0), std::invalid_argument);
}

TEST(LiebRobinson, BoundaryOfInterval) {
  TvwModel m = chain(8);
  auto phi = tvw_interaction(m);
  auto b = phi_boundary(phi, {0.0}, {2, 3, 4});
  EXPECT_EQ(b, (std::vector<int>{2, 4}));
  // on-site terms never contribute
  EXPECT_TRUE(phi_boundary(phi, {0.0}, {0, 1, 2, 3, 4, 5, 6, 7}).empty());
}

TEST(LiebRobinson, CommutatorStaysInsideBound) {
  TvwModel m = chain(6, 0.6);
  auto phi = tvw_interaction(m);
  std::vector<std::pair<LocalObservable, LocalObservable>> pairs = {{number_at(0), number_at(3)},
                                                                   {bond(0, 1), number_at(3)}};
  auto times = uniform_grid(0.0, 1.0, 6);
  LRReport rep = lr_check(phi, m.lattice, 1, 1.0, pairs, times, {1e-9, 0.0, 16, Stepper::cf4});
  ASSERT_EQ(rep.samples.size(), times.size() * pairs.size());
  EXPECT_GE(rep.min_margin(), 0.0);
  for (const auto& s : rep.samples) {
    if (s.t == 0.0) {
      EXPECT_LT(s.lhs, 1e-12);
      EXPECT_EQ(s.rhs_min, 0.0);
    }
    EXPECT_LE(s.lhs, 2.0 * 1.0 * 1.0 + 1e-9);  // ||[A, B]|| <= 2 ||A|| ||B||
    EXPECT_GE(s.rhs_sum, 0.0);
  }
  // the signal reaches distance 3 within unit time
  double last = 0;
  for (const auto& s : rep.samples)
    if (s.t == 1.0 && s.pair == 0) last = s.lhs;
  EXPECT_GT(last, 1e-4);
}

TEST(LiebRobinson, RejectsBadObservables) {
  TvwModel m = chain(4);
  auto phi = tvw_interaction(m);
  LocalOps lo({1}, 1);
  std::vector<std::pair<LocalObservable, LocalObservable>> overlap = {{number_at(1), number_at(1)}};
  EXPECT_THROW(lr_check(phi, m.lattice, 1, 1.0, overlap, {0.0}), std::invalid_argument);
  std::vector<std::pair<LocalObservable, LocalObservable>> odd = {{{{1}, lo.a(0, 0)}, number_at(3)}};
  EXPECT_THROW(lr_check(phi, m.lattice, 1, 1.0, odd, {0.0}), std::invalid_argument);
  TvwModel big = chain(18);
  EXPECT_THROW(lr_check(tvw_interaction(big), big.lattice, 1, 1.0, {}, {0.0}), UnsupportedError);
}

TEST(FockNorm, QuadraticFormulaMatchesDiagonalization) {
  TvwModel m = chain(6);
  m.mu = 0.3;
  Interaction phi = build_tvw(m, 0.0);
  auto h = one_body_matrix(phi);
  ASSERT_TRUE(h.has_value());
  EXPECT_LT(max_abs(*h - m.one_body(0.0)), 1e-14);
  double ed = 0;
  for (int N = 0; N <= 6; ++N)
    ed = std::max(ed, hermitian_norm(assemble_dense(phi, FockSector(m.lattice, 1, N))));
  EXPECT_NEAR(fock_norm(phi), ed, 1e-12);
}

TEST(FockNorm, InteractingModelUsesDiagonalization) {
  Interaction phi = build_tvw(chain(6, 0.8), 0.0);
  EXPECT_FALSE(one_body_matrix(phi).has_value());
  double ed = 0;
  for (int N = 0; N <= 6; ++N)
    ed = std::max(ed, hermitian_norm(assemble_dense(phi, FockSector(phi.lattice(), 1, N))));
  EXPECT_NEAR(fock_norm(phi), ed, 1e-12);
}

TEST(NormVolume, RatioBoundedByOne) {
  auto rep = norm_volume_check([](int M) { return build_tvw(chain(M, 0.5), 0.0); }, {4, 6, 8},
                               DecayFunction::exponential(1.0));
  ASSERT_EQ(rep.rows.size(), 3u);
  for (const auto& r : rep.rows) {
    EXPECT_EQ(r.volume, r.M);
    EXPECT_NEAR(r.ratio, r.norm / (r.phi_norm * r.volume), 1e-15);
  }
  EXPECT_LE(rep.max_ratio(), 1.0);
}

TEST(NormVolume, PlaneLocalizedInteractionScalesWithReducedVolume) {
  // potential concentrated near the plane x_2 = 0 of a 2D torus
  auto family = [](int M) {
    TvwModel m;
    m.lattice = TorusLattice(2, M);
    TvwModel::Potential p;
    p.preset = TvwModel::Potential::Preset::plane;
    p.block = scalar(1.0);
    p.plane = LocalizationPlane{{false, true}, {0, 0}};
    p.decay = 4.0;  // beats zeta(d_L(x, x)) = exp(-2 dist(x, L)), so the plane norm is M independent
    m.potential.push_back(p);
    return build_tvw(m, 0.0);
  };
  auto plane = [](int) { return std::optional<LocalizationPlane>(LocalizationPlane{{false, true}, {0, 0}}); };
  auto rep = norm_volume_check(family, {4, 6, 8, 10}, DecayFunction::exponential(1.0), plane);
  for (const auto& r : rep.rows) EXPECT_EQ(r.volume, r.M);
  double lo = rep.rows.front().ratio, hi = lo;
  for (const auto& r : rep.rows) {
    lo = std::min(lo, r.ratio);
    hi = std::max(hi, r.ratio);
  }
  EXPECT_LT(hi / lo, 1.5);
  EXPECT_LE(hi, 1.0);
}
