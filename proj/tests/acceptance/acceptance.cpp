// Acceptance gate: one pass/fail line per criterion.
#include "acceptance/models.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>

using namespace superad;
using namespace superad::acceptance;

namespace {

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3e", v);
  return buf;
}

bool within(double v, double lo, double hi) { return v >= lo && v <= hi; }

EvolveOptions ode(double tol) { return {tol, 0.0, 16, Stepper::cf4}; }

// ---- 1. inverse Liouvillian ----

Outcome liouvillian_inversion() {
  std::mt19937 rng(2024);
  std::uniform_int_distribution<int> dim(16, 64), csize(1, 3);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  double worst_inv = 0, worst_diag = 0;
  for (int trial = 0; trial < 20; ++trial) {
    const int n = dim(rng), k = csize(rng);
    // cluster of width <= 0.05 at 0, the rest split below and above with gap >= 0.5
    RealVector e(n);
    for (int i = 0; i < k; ++i) e(i) = 0.05 * u(rng);
    const bool interior = trial % 2 == 1;
    for (int i = k; i < n; ++i) {
      double s = 0.5 + 4.0 * u(rng);
      e(i) = (interior && i % 2 == 0) ? -s : 0.05 + s;
    }
    Matrix g(n, n);
    std::normal_distribution<double> nd;
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) g(i, j) = cplx(nd(rng), nd(rng));
    Matrix Q = Eigen::HouseholderQR<Matrix>(g).householderQ();
    Matrix H = Q * e.cast<cplx>().asDiagonal() * Q.adjoint();
    H = 0.5 * (H + H.adjoint()).eval();
    SpectralData sd = eig_cluster(H, WindowSelector{-0.01, 0.06});
    if (sd.kappa() != k || sd.gap < 0.5) return {false, "random spectrum generator broke its own contract"};
    Matrix B(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) B(i, j) = cplx(nd(rng), nd(rng));
    Matrix Bod = split_od(B, sd.P).offdiag;
    for (const InverseMode& mode : {InverseMode{ExactInverse{}}, InverseMode{FilterInverse{0.1, sd.gap}}}) {
      Matrix X = inverse_liouvillian(sd, Bod, mode);
      worst_inv = std::max(worst_inv, op_norm(liouvillian(H, X) - Bod) / op_norm(Bod));
      worst_diag = std::max(worst_diag, op_norm(sd.P * inverse_liouvillian(sd, B, mode) * sd.P));
    }
  }
  bool ok = worst_inv <= 1e-10 && worst_diag <= 1e-10;
  return {ok, "max rel residual " + fmt(worst_inv) + ", max |P I(A) P| " + fmt(worst_diag) + " (<= 1e-10)"};
}

// ---- 2. intertwining ----

double intertwining_defect(const AdiabaticContext& ctx, const std::vector<double>& grid, double eps, double tol,
                           std::string& note) {
  PropagatorResult Upar = evolve_parallel(ctx, grid, ode(tol));
  PropagatorResult Ua = evolve_adiabatic(ctx, eps, grid, ode(tol));
  Matrix P0 = ctx.spectral(grid.front()).P;
  Matrix V0 = ctx.V(grid.front(), eps);
  Matrix Psa0 = V0 * P0 * V0.adjoint();
  double dpar = 0, da = 0, dsa = 0;
  for (size_t k = 0; k < grid.size(); ++k) {
    Matrix P = ctx.spectral(grid[k]).P;
    Matrix V = ctx.V(grid[k], eps);
    Matrix Psa = V * P * V.adjoint();
    Matrix Usa = V * Ua.U[k] * V0.adjoint();
    dpar = std::max(dpar, op_norm(Upar.U[k] * P0 - P * Upar.U[k]));
    da = std::max(da, op_norm(Ua.U[k] * P0 - P * Ua.U[k]));
    dsa = std::max(dsa, op_norm(Usa * Psa0 - Psa * Usa));
  }
  note += "par " + fmt(dpar) + " a " + fmt(da) + " sa " + fmt(dsa);
  return std::max({dpar, da, dsa});
}

Outcome intertwining() {
  const double tol = 1e-8;
  auto grid = uniform_grid(0.0, 1.0, 11);
  std::string note = "2-level: ";
  double w = intertwining_defect(AdiabaticContext(two_level(), GroundSelector{}), grid, 0.1, tol, note);
  TvwModel m = ramped_chain(6);
  FockSector sec(m.lattice, 1, 3);
  note += "; M=6 chain: ";
  w = std::max(w, intertwining_defect(AdiabaticContext(tvw_family(m, sec), GroundSelector{}), grid, 0.1, tol, note));
  return {w <= 10 * tol, note + " (<= 1e-7)"};
}

// ---- 3-5. eps scaling ----

struct ScalingRow {
  double eps, err0, err1;
};

// err0 = sup_t ||P0 (U* B U - Upar* B Upar) P0||; with `first_order`, also
// err1 against B_par(1) = U1* B U1 + i eps Upar* (B R Pdot - Pdot R B) Upar.
std::vector<ScalingRow> scaling_sweep(int M, const std::vector<double>& eps_list, bool first_order) {
  TvwModel m = ramped_chain(M);
  FockSector sec(m.lattice, 1, M / 2);
  AdiabaticContext ctx(tvw_family(m, sec), GroundSelector{});
  auto grid = uniform_grid(0.0, 1.0, 21);
  const Matrix B = bond_observable(sec);
  const EvolveOptions opt = ode(1e-9);
  PropagatorResult Upar = evolve_parallel(ctx, grid, opt);
  std::vector<PointData> pts;
  for (double t : grid) pts.push_back(ctx.point(t));
  const Matrix& P0 = pts.front().sd.P;
  std::vector<ScalingRow> rows;
  for (double eps : eps_list) {
    PropagatorResult U = evolve_physical(ctx, eps, grid, opt);
    std::optional<PropagatorResult> U1;
    if (first_order) U1 = evolve_parallel1(ctx, eps, grid, opt);
    double e0 = 0, e1 = 0;
    for (size_t k = 0; k < grid.size(); ++k) {
      Matrix Bt = U.U[k].adjoint() * B * U.U[k];
      Matrix Bp = Upar.U[k].adjoint() * B * Upar.U[k];
      e0 = std::max(e0, op_norm(P0 * (Bt - Bp) * P0));
      if (first_order) {
        Matrix R = reduced_resolvent(pts[k].sd);
        const Matrix& Pd = pts[k].P_dot;
        Matrix B1 = U1->U[k].adjoint() * B * U1->U[k] +
                    I * eps * Upar.U[k].adjoint() * (B * R * Pd - Pd * R * B) * Upar.U[k];
        e1 = std::max(e1, op_norm(P0 * (Bt - B1) * P0));
      }
    }
    rows.push_back({eps, e0, e1});
  }
  return rows;
}

std::vector<ScalingRow>& chain6_rows() {
  static std::vector<ScalingRow> rows = scaling_sweep(6, {0.2, 0.1, 0.05}, true);
  return rows;
}

Outcome eps_scaling_zero() {
  const auto& r = chain6_rows();
  double q1 = r[0].err0 / r[1].err0, q2 = r[1].err0 / r[2].err0;
  std::string d = "err0 " + fmt(r[0].err0) + " " + fmt(r[1].err0) + " " + fmt(r[2].err0) + ", ratios " + fmt(q1) +
                  " " + fmt(q2) + " (in [1.6, 2.4])";
  return {within(q1, 1.6, 2.4) && within(q2, 1.6, 2.4), d};
}

Outcome eps_scaling_one() {
  const auto& r = chain6_rows();
  double q1 = r[0].err1 / r[1].err1, q2 = r[1].err1 / r[2].err1;
  std::string d = "err1 " + fmt(r[0].err1) + " " + fmt(r[1].err1) + " " + fmt(r[2].err1) + ", ratios " + fmt(q1) +
                  " " + fmt(q2) + " (in [3.2, 4.8])";
  return {within(q1, 3.2, 4.8) && within(q2, 3.2, 4.8), d};
}

Outcome volume_uniformity() {
  double e6 = chain6_rows()[1].err0;
  double e8 = scaling_sweep(8, {0.1}, false).front().err0;
  return {e8 <= 1.5 * e6, "err0(0.1): M=6 " + fmt(e6) + ", M=8 " + fmt(e8) + ", ratio " + fmt(e8 / e6) + " (<= 1.5)"};
}

// ---- 6. superadiabatic defect ----

Outcome defect_scaling() {
  const std::vector<double> eps_list = {0.1, 0.05, 0.025};
  auto grid = uniform_grid(0.1, 0.9, 9);
  auto sup = [&](const AdiabaticContext& ctx, double eps) {
    auto d = defect(ctx, eps, grid);
    return *std::max_element(d.begin(), d.end());
  };
  TvwModel m = ramped_chain(4, 1.0);
  FockSector sec(m.lattice, 1, 2);
  std::vector<std::pair<std::string, AdiabaticContext>> cases = {
      {"2-level", AdiabaticContext(two_level(), GroundSelector{})},
      {"M=4 chain", AdiabaticContext(tvw_family(m, sec), GroundSelector{})}};
  bool ok = true;
  std::string note;
  for (const auto& [name, ctx] : cases) {
    std::vector<double> s;
    for (double e : eps_list) s.push_back(sup(ctx, e));
    double q1 = s[0] / s[1], q2 = s[1] / s[2];
    ok = ok && within(q1, 5.5, 11) && within(q2, 5.5, 11);
    note += (note.empty() ? "" : "; ") + name + " ratios " + fmt(q1) + " " + fmt(q2);
  }
  return {ok, note + " (in [5.5, 11])"};
}

// ---- 7. response identities ----

Outcome response_identities() {
  const int M = 4;
  TvwModel m = pump_chain(M);
  FockSector sec(m.lattice, 2, M);
  AdiabaticContext ctx(tvw_family(m, sec), GroundSelector{});
  const double V = M;
  const std::vector<double> probe = {0.3, 0.5, 0.7};
  std::vector<double> grid = {0.0};
  grid.insert(grid.end(), probe.begin(), probe.end());
  double worst12 = 0, worst_eig = 0, persistent = 0;
  std::vector<double> f1s;
  std::vector<Matrix> Js;
  for (double t : probe) {
    Interaction phi = build_tvw(m, t);
    Matrix J = assemble_dense(current_interaction(phi)[0], sec);
    PointData p = ctx.point(t);
    ResponseFormulas r = response_formulas(p.sd, p.P_dot, {J}, p.sd.P, {projection_derivative(p.sd, J)}, V);
    worst12 = std::max(worst12, std::abs(r.f1(0) - r.f2(0)));
    worst_eig = std::max(worst_eig, std::abs(eigensum_current(p.sd, p.H_dot, J, V) - r.f1(0)));
    persistent = std::max(persistent, std::abs((p.sd.P * J).trace().real()) / V);
    f1s.push_back(r.f1(0));
    Js.push_back(J);
  }
  auto discrepancy = [&](double eps) {
    PropagatorResult U = evolve_physical(ctx, eps, grid, ode(1e-10));
    const Matrix& P0 = ctx.spectral(0.0).P;
    double worst = 0;
    for (size_t k = 0; k < probe.size(); ++k) {
      Matrix rho = U.U[k + 1] * P0 * U.U[k + 1].adjoint();
      worst = std::max(worst, std::abs(current_density(rho, {Js[k]}, eps, V)(0) - f1s[k]));
    }
    return worst;
  };
  double d1 = discrepancy(0.02), d2 = discrepancy(0.01), d3 = discrepancy(0.005);
  double q1 = d1 / d2, q2 = d2 / d3;
  double fmax = 0;
  for (double f : f1s) fmax = std::max(fmax, std::abs(f));
  bool ok = worst12 <= 1e-9 && worst_eig <= 1e-9 && within(q1, 1.5, 2.5) && within(q2, 1.5, 2.5);
  return {ok, "|f1-f2| " + fmt(worst12) + ", |eigensum-f1| " + fmt(worst_eig) + " (<= 1e-9); max|f1| " + fmt(fmax) +
                  ", |J-f1| at eps .02/.01/.005: " + fmt(d1) + " " + fmt(d2) + " " + fmt(d3) + ", ratios " + fmt(q1) +
                  " " + fmt(q2) + " (in [1.5, 2.5]); persistent " + fmt(persistent)};
}

// ---- 8. Chern integrality ----

Outcome chern_integrality() {
  Interaction phi = flux_torus();
  FockSector sec(phi.lattice(), 1, 2);
  TwistHamiltonian H = beta_family(phi, sec, 0);
  ChernSummary c24 = chern_summary(H, GroundSelector{}, 24, 0.1);
  ChernSummary c48 = chern_summary(H, GroundSelector{}, 48, 0.1);
  bool ok = c24.deviation <= 1e-6 && c48.deviation <= 1e-6 && c24.nearest == c48.nearest;
  char buf[160];
  std::snprintf(buf, sizeof buf, "C(24) = %.12f, C(48) = %.12f, |C - round C| %s (<= 1e-6)", c24.C, c48.C,
                fmt(std::max(c24.deviation, c48.deviation)).c_str());
  return {ok, buf};
}

// ---- 9. Lieb-Robinson ----

LocalObservable number_at(const TorusLattice& lat, int x) {
  int i = lat.index({x});
  LocalOps lo({i}, 1);
  return {{i}, lo.n(0, 0)};
}

LocalObservable bond_at(const TorusLattice& lat, int x) {
  std::vector<int> s = {lat.index({x}), lat.index({lat.wrap(x + 1)})};
  std::sort(s.begin(), s.end());
  LocalOps lo(s, 1);
  Matrix h = lo.adag(0, 0) * lo.a(1, 0);
  return {s, h + h.adjoint()};
}

Outcome lieb_robinson() {
  TvwModel m = light_cone_chain(8);
  const auto& lat = m.lattice;
  std::vector<std::pair<LocalObservable, LocalObservable>> pairs = {
      {number_at(lat, 0), number_at(lat, 2)},  {number_at(lat, 0), number_at(lat, 4)},
      {bond_at(lat, 0), number_at(lat, 3)},    {bond_at(lat, -3), bond_at(lat, 1)},
      {number_at(lat, -1), bond_at(lat, 2)}};
  auto times = uniform_grid(0.0, 2.0, 21);
  LRReport rep = lr_check(tvw_interaction(m), lat, 1, 1.0, pairs, times, ode(1e-9));
  double max_lhs = 0;
  for (const auto& s : rep.samples) max_lhs = std::max(max_lhs, s.lhs);
  bool ok = rep.samples.size() >= 100 && rep.min_margin() >= -1e-9;
  return {ok, std::to_string(rep.samples.size()) + " samples, min margin " + fmt(rep.min_margin()) +
                  " (>= -1e-9), max commutator " + fmt(max_lhs) + ", v = " + fmt(rep.velocity)};
}

// ---- 10. expansion consistency ----

Outcome expansion_consistency() {
  TvwModel m = ramped_chain(6);
  FockSector sec(m.lattice, 1, 3);
  AdiabaticContext ctx(tvw_family(m, sec), GroundSelector{});
  double k1 = 0, k2 = 0, remark = 0, remark_flipped = 0, a1 = 0;
  for (double t : {0.3, 0.5, 0.7}) {
    PointData p = ctx.point(t);
    ExpansionOrder2 e = ctx.expansion(t);
    FirstOrderBlocks b = first_order_blocks(p.sd, p.P_dot);
    const Matrix& P = p.sd.P;
    Matrix He = p.H - p.sd.E_min * Matrix::Identity(p.H.rows(), p.H.cols());
    Matrix R = reduced_resolvent(p.sd);
    Matrix Hod = split_od(p.H_dot, P).offdiag;
    Matrix alt = R * R * Hod + Hod * R * R;
    k1 = std::max(k1, op_norm(commutator(e.K1, P) - commutator(p.K_par, P)));
    k2 = std::max(k2, op_norm(b.K2_tilde + 0.5 * P * commutator(b.A1_tilde, commutator(b.A1_tilde, He)) * P));
    remark = std::max(remark, op_norm(b.A1_tilde - alt));
    remark_flipped = std::max(remark_flipped, op_norm(b.A1_tilde + alt));
    a1 = std::max(a1, op_norm(b.A1_tilde));
  }
  bool ok = k1 <= 1e-10 && k2 <= 1e-9 && remark <= 1e-10;
  return {ok, "[K1-Kpar, P] " + fmt(k1) + " (<= 1e-10), K2 identity " + fmt(k2) + " (<= 1e-9), A1 vs R^2 form " +
                  fmt(remark) + " (<= 1e-10); with the R^2 form negated " + fmt(remark_flipped) + ", |A1| " + fmt(a1)};
}

// ---- 11. norm-volume bound ----

// Sum over one transverse line of zeta(2r) F(2r), the constant in
// ||H|| <= const ||Phi||_{zeta,0,L} M^{d - |l|} for a codimension-one plane.
double plane_constant(int d, const DecayFunction& z) {
  double s = 1.0;
  for (int r = 1; r < 200; ++r) s += 2.0 * decay_weights(2 * r, d, z).F_zeta;
  return s;
}

Outcome norm_volume() {
  const std::vector<int> Ms = {4, 6, 8, 10};
  const DecayFunction z = DecayFunction::exponential(1.0);
  struct Case {
    std::string name;
    std::function<Interaction(int)> family;
    std::function<std::optional<LocalizationPlane>(int)> plane;
    double bound;
  };
  auto chain = [](int M) { return build_tvw(ramped_chain(M, 1.0), 0.5); };
  auto square = [](int M) {
    TvwModel t;
    t.lattice = TorusLattice(2, M);
    t.add_hopping_pair({1, 0}, scalar(-1.0));
    t.add_hopping_pair({0, 1}, scalar(cplx(-0.7, 0.2)));
    t.add_hopping_pair({1, 1}, scalar(0.15));
    TvwModel::Potential p;
    p.preset = TvwModel::Potential::Preset::staggered;
    p.block = scalar(0.8);
    t.potential.push_back(p);
    return build_tvw(t, 0.0);
  };
  const LocalizationPlane L{{false, true}, {0, 0}};
  auto edge = [L](int M) {
    TvwModel t;
    t.lattice = TorusLattice(2, M);
    TvwModel::Potential p;
    p.preset = TvwModel::Potential::Preset::plane;
    p.block = scalar(1.0);
    p.plane = L;
    p.decay = 4.0;
    t.potential.push_back(p);
    return build_tvw(t, 0.0);
  };
  std::vector<Case> cases = {{"interacting chain", chain, {}, 1.0},
                             {"2D hopping", square, {}, 1.0},
                             {"2D edge potential", edge, [L](int) { return std::optional(L); }, plane_constant(2, z)}};
  bool ok = true;
  std::string note;
  for (const auto& c : cases) {
    NormVolumeReport rep = norm_volume_check(c.family, Ms, z, c.plane);
    note += (note.empty() ? "" : "; ") + c.name + " ratios";
    for (const auto& r : rep.rows) note += " " + fmt(r.ratio);
    note += " (<= " + fmt(c.bound) + ")";
    ok = ok && rep.max_ratio() <= c.bound;
  }
  return {ok, note};
}

struct Criterion {
  int id;
  std::string name;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Acceptance checks"};
  std::vector<int> only;
  app.add_option("--only", only, "run only these criteria (1-11)");
  CLI11_PARSE(app, argc, argv);

  const std::vector<Criterion> all = {
      {1, "Liouvillian inversion", 5, liouvillian_inversion},
      {2, "intertwining", 60, intertwining},
      {3, "eps scaling, zeroth order", 600, eps_scaling_zero},
      {4, "eps^2 scaling, first order", 600, eps_scaling_one},
      {5, "volume uniformity", 1200, volume_uniformity},
      {6, "superadiabatic defect", 300, defect_scaling},
      {7, "response identities", 600, response_identities},
      {8, "Chern integrality", 900, chern_integrality},
      {9, "Lieb-Robinson", 600, lieb_robinson},
      {10, "expansion consistency", 60, expansion_consistency},
      {11, "norm-volume bound", 120, norm_volume},
  };
  int failed = 0;
  for (const auto& c : all) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    bool in_time = secs <= c.budget_s;
    bool pass = o.pass && in_time;
    failed += pass ? 0 : 1;
    char head[96];
    std::snprintf(head, sizeof head, "[%s] %2d %-28s %7.1fs/%4.0fs  ", pass ? "PASS" : "FAIL", c.id, c.name.c_str(), secs,
                  c.budget_s);
    std::cout << head << o.detail << (in_time ? "" : "  (over time budget)") << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
