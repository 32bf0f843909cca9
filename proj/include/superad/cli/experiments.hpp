#pragma once

#include "superad/cli/config.hpp"
#include "superad/cli/records.hpp"

#include <atomic>
#include <condition_variable>
#include <iostream>
#include <mutex>
#include <thread>

namespace superad::cli {

// A numerical failure annotated with the sweep point it occurred at.
struct RunFailure : std::runtime_error {
  RunFailure(const std::string& msg, bool usage) : std::runtime_error(msg), usage(usage) {}
  bool usage;  // caused by the configuration rather than the numerics
};

struct Job {
  std::string context;  // e.g. "M=6 eps=0.1"
  std::function<std::vector<RecordRow>()> run;
};

// Runs jobs on `workers` threads and writes their records in job order, each
// job as soon as it and all earlier jobs are done. On the first failure (in
// job order) the earlier records are written, the pool drains and the failure
// is rethrown with its context.
inline void run_jobs(const std::vector<Job>& jobs, int workers, RecordSink& sink, bool verbose) {
  const size_t n = jobs.size();
  std::vector<std::vector<RecordRow>> results(n);
  std::vector<std::exception_ptr> errors(n);
  std::vector<char> done(n, 0);
  std::atomic<size_t> next{0};
  std::atomic<bool> stop{false};
  std::mutex mu;
  std::condition_variable cv;

  auto work = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= n || stop) return;
      try {
        results[i] = jobs[i].run();
      } catch (...) {
        errors[i] = std::current_exception();
      }
      {
        std::lock_guard lk(mu);
        done[i] = 1;
      }
      cv.notify_all();
    }
  };
  std::vector<std::jthread> pool;
  for (int w = 0; w < std::max(1, std::min<int>(workers, static_cast<int>(n))); ++w) pool.emplace_back(work);

  for (size_t i = 0; i < n; ++i) {
    {
      std::unique_lock lk(mu);
      cv.wait(lk, [&] { return done[i] != 0; });
    }
    if (errors[i]) {
      stop = true;
      pool.clear();
      try {
        std::rethrow_exception(errors[i]);
      } catch (const GapClosedError& e) {
        throw RunFailure(jobs[i].context + " t=" + format_number(e.t) + ": " + e.what(), false);
      } catch (const NumericalError& e) {
        throw RunFailure(jobs[i].context + ": " + e.what(), false);
      } catch (const std::invalid_argument& e) {
        throw RunFailure(jobs[i].context + ": " + e.what(), true);
      } catch (const std::logic_error& e) {
        throw RunFailure(jobs[i].context + ": " + e.what(), true);
      } catch (const std::exception& e) {
        throw RunFailure(jobs[i].context + ": " + e.what(), false);
      }
    }
    for (const auto& r : results[i]) sink.write(r);
    results[i].clear();
    if (verbose) std::cerr << "done " << jobs[i].context << " (" << i + 1 << "/" << n << ")\n";
  }
}

namespace detail {

inline int wrap_index(const TorusLattice& lat, Site x) {
  for (int& c : x) c = lat.wrap(c);
  return lat.index(x);
}

// Local operator of an observable on its (sorted) support.
inline LocalObservable local_observable(const ObservableSpec& o, const TorusLattice& lat, int ell) {
  std::vector<int> sites;
  for (const auto& t : o.terms)
    for (const Site& x : {t.from, t.to}) sites.push_back(wrap_index(lat, x));
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  LocalOps lo(sites, ell);
  auto pos = [&](const Site& x) {
    return static_cast<int>(std::lower_bound(sites.begin(), sites.end(), wrap_index(lat, x)) - sites.begin());
  };
  Matrix op = Matrix::Zero(lo.dim(), lo.dim());
  for (const auto& t : o.terms) {
    Matrix h = t.amp * lo.adag(pos(t.to), t.orbital_to) * lo.a(pos(t.from), t.orbital_from);
    const bool diagonal = pos(t.to) == pos(t.from) && t.orbital_to == t.orbital_from;
    op += diagonal ? h : Matrix(h + h.adjoint());
  }
  return {sites, op};
}

inline Matrix sector_observable(const ObservableSpec& o, const FockSector& sector) {
  const auto& lat = sector.lattice();
  LocalObservable lo = local_observable(o, lat, sector.internal_dim());
  Interaction phi(lat, sector.internal_dim());
  phi.add(lo.sites, lo.op);
  return assemble_dense(phi, sector);
}

struct Point {
  const ExperimentConfig& cfg;
  int M;
  std::optional<double> eps;
  RecordRow row(std::optional<double> t, const std::string& metric, double value, const std::string& label = "") const {
    return {kind_name(cfg.kind), M, eps, t, label, metric, value, {}, {}};
  }
};

inline std::string context(int M, std::optional<double> eps) {
  return "M=" + std::to_string(M) + (eps ? " eps=" + format_number(*eps) : "");
}

inline FockSector sector_of(const ExperimentConfig& c, const TvwModel& m, int M) {
  return FockSector(m.lattice, m.internal_dim, c.model.particles(M));
}

inline AdiabaticContext adiabatic_context(const ExperimentConfig& c, const TvwModel& m, const FockSector& sec) {
  return AdiabaticContext(tvw_family(m, sec), c.selector(), c.tol.g_min, ExactInverse{}, c.tol.fd_step);
}

// err0 and err1 of the observable along the grid (adiabatic and first-order
// superadiabatic approximation of the Heisenberg evolution).
inline std::vector<RecordRow> adiabatic_error(const ExperimentConfig& c, int M, double eps) {
  Point pt{c, M, eps};
  TvwModel m = c.model.build(M);
  FockSector sec = sector_of(c, m, M);
  AdiabaticContext ctx = adiabatic_context(c, m, sec);
  const auto& grid = c.t_grid;
  const Matrix B = sector_observable(*c.observable, sec);
  const EvolveOptions opt = c.evolve_options();
  PropagatorResult U = evolve_physical(ctx, eps, grid, opt);
  PropagatorResult Upar = evolve_parallel(ctx, grid, opt);
  PropagatorResult U1 = evolve_parallel1(ctx, eps, grid, opt);
  const Matrix P0 = ctx.spectral(grid.front()).P;
  std::vector<RecordRow> out;
  for (size_t k = 0; k < grid.size(); ++k) {
    PointData p = ctx.point(grid[k]);
    Matrix R = reduced_resolvent(p.sd);
    Matrix Bt = U.U[k].adjoint() * B * U.U[k];
    Matrix Bp = Upar.U[k].adjoint() * B * Upar.U[k];
    Matrix B1 = U1.U[k].adjoint() * B * U1.U[k] +
                I * eps * Upar.U[k].adjoint() * (B * R * p.P_dot - p.P_dot * R * B) * Upar.U[k];
    out.push_back(pt.row(grid[k], "err0", op_norm(P0 * (Bt - Bp) * P0)));
    out.push_back(pt.row(grid[k], "err1", op_norm(P0 * (Bt - B1) * P0)));
  }
  return out;
}

inline std::vector<RecordRow> superadiabatic_defect(const ExperimentConfig& c, int M, double eps) {
  Point pt{c, M, eps};
  TvwModel m = c.model.build(M);
  FockSector sec = sector_of(c, m, M);
  AdiabaticContext ctx = adiabatic_context(c, m, sec);
  auto d = defect(ctx, eps, c.t_grid, c.tol.fd_step);
  std::vector<RecordRow> out;
  for (size_t k = 0; k < d.size(); ++k) out.push_back(pt.row(c.t_grid[k], "defect", d[k]));
  return out;
}

// Driven current tr(rho J) / (eps |Lambda|) against the response formulas.
inline std::vector<RecordRow> current_response(const ExperimentConfig& c, int M, double eps) {
  Point pt{c, M, eps};
  TvwModel m = c.model.build(M);
  FockSector sec = sector_of(c, m, M);
  AdiabaticContext ctx = adiabatic_context(c, m, sec);
  const double V = m.lattice.site_count();
  const auto& grid = c.t_grid;
  PropagatorResult U = evolve_physical(ctx, eps, grid, c.evolve_options());
  const Matrix P0 = ctx.spectral(grid.front()).P;
  const double kappa0 = P0.trace().real();
  std::vector<RecordRow> out;
  for (size_t k = 0; k < grid.size(); ++k) {
    const double t = grid[k];
    Matrix J = assemble_dense(current_interaction(build_tvw(m, t))[c.current_direction], sec);
    PointData p = ctx.point(t);
    ResponseFormulas r = response_formulas(p.sd, p.P_dot, {J}, p.sd.P / p.sd.kappa(),
                                           {projection_derivative(p.sd, J)}, V);
    Matrix rho = U.U[k] * P0 * U.U[k].adjoint() / kappa0;
    double cur = current_density(rho, {J}, eps, V)(0);
    double persistent = (p.sd.P * J).trace().real() / (p.sd.kappa() * V);
    out.push_back(pt.row(t, "current", cur));
    out.push_back(pt.row(t, "f1", r.f1(0)));
    out.push_back(pt.row(t, "f2", r.f2(0)));
    if (p.sd.lo == 0 && p.sd.kappa() == 1) out.push_back(pt.row(t, "eigensum", eigensum_current(p.sd, p.H_dot, J, V)));
    out.push_back(pt.row(t, "persistent", persistent));
    out.push_back(pt.row(t, "discrepancy", std::abs(cur - persistent / eps - r.f1(0))));
  }
  return out;
}

inline Interaction twist_model(const ExperimentConfig& c, int M) { return build_tvw(c.model.build(M), c.model_time); }

inline HallSetup hall_setup(const ExperimentConfig& c, int M) {
  Interaction phi = twist_model(c, M);
  FockSector sec(phi.lattice(), phi.internal_dim(), c.model.particles(M));
  HallSetup s{};
  if (c.kind == ExperimentKind::conductance) {
    s.H = beta_family(phi, sec, c.beta_range);
    s.J = beta_current(phi, sec, c.beta_range, c.current_direction);
  } else {
    s.H = alpha_family(phi, sec);
    s.J = alpha_current(phi, sec, c.current_direction);
  }
  s.selector = c.selector();
  s.g_min = c.tol.g_min;
  return s;
}

inline std::vector<RecordRow> hall(const ExperimentConfig& c, int M, double strength) {
  Point pt{c, M, strength};
  auto rec = hall_experiment(hall_setup(c, M), strength, c.t_grid, c.evolve_options());
  std::vector<RecordRow> out;
  for (const auto& r : rec) {
    out.push_back(pt.row(r.t, "twist", r.twist));
    out.push_back(pt.row(r.t, "rate", r.rate));
    out.push_back(pt.row(r.t, "predicted", r.predicted));
    out.push_back(pt.row(r.t, "measured", r.measured));
    out.push_back(pt.row(r.t, "persistent", r.persistent));
  }
  return out;
}

inline std::vector<RecordRow> chern(const ExperimentConfig& c, int M) {
  Point pt{c, M, std::nullopt};
  ChernSummary s = chern_summary(hall_setup(c, M).H, c.selector(), c.chern_grid, c.tol.g_min);
  RecordRow dev = pt.row(std::nullopt, "chern_deviation", s.deviation);
  dev.tolerance = 1e-6;
  dev.pass = s.deviation <= 1e-6;
  return {pt.row(std::nullopt, "chern", s.C), dev};
}

inline std::vector<RecordRow> lr(const ExperimentConfig& c, int M) {
  Point pt{c, M, std::nullopt};
  TvwModel m = c.model.build(M);
  std::vector<std::pair<LocalObservable, LocalObservable>> pairs;
  for (const auto& [A, B] : c.lr_pairs)
    pairs.emplace_back(local_observable(A, m.lattice, m.internal_dim), local_observable(B, m.lattice, m.internal_dim));
  LRReport rep = lr_check(tvw_interaction(m), m.lattice, m.internal_dim, c.lr_decay, pairs, c.t_grid,
                          c.evolve_options());
  std::vector<RecordRow> out = {pt.row(std::nullopt, "velocity", rep.velocity)};
  for (const auto& s : rep.samples) {
    const std::string label = std::to_string(s.pair);
    out.push_back(pt.row(s.t, "lhs", s.lhs, label));
    out.push_back(pt.row(s.t, "rhs", s.rhs_min, label));
    RecordRow margin = pt.row(s.t, "margin", s.margin, label);
    margin.tolerance = -1e-9;
    margin.pass = s.margin >= -1e-9;
    out.push_back(margin);
  }
  return out;
}

inline std::vector<RecordRow> norm(const ExperimentConfig& c, int M) {
  Point pt{c, M, std::nullopt};
  auto plane = [&](int) { return c.norm_plane; };
  NormVolumeReport rep = norm_volume_check([&](int) { return twist_model(c, M); }, {M},
                                           DecayFunction::exponential(c.norm_decay), plane);
  const auto& r = rep.rows.front();
  return {pt.row(std::nullopt, "norm", r.norm), pt.row(std::nullopt, "phi_norm", r.phi_norm),
          pt.row(std::nullopt, "volume", r.volume), pt.row(std::nullopt, "ratio", r.ratio)};
}

}  // namespace detail

// Sweep points of an experiment, in output order: M outermost, then eps.
inline std::vector<Job> plan_jobs(const ExperimentConfig& c) {
  using namespace detail;
  std::vector<Job> jobs;
  for (int M : c.model.M) {
    auto per_eps = [&](std::vector<RecordRow> (*f)(const ExperimentConfig&, int, double)) {
      for (double e : c.eps) jobs.push_back({context(M, e), [&c, f, M, e] { return f(c, M, e); }});
    };
    switch (c.kind) {
      case ExperimentKind::adiabatic_error: per_eps(adiabatic_error); break;
      case ExperimentKind::superadiabatic_defect: per_eps(superadiabatic_defect); break;
      case ExperimentKind::current_response: per_eps(current_response); break;
      case ExperimentKind::hall_conductivity:
      case ExperimentKind::conductance:
        per_eps(hall);
        if (c.chern_grid > 0) jobs.push_back({context(M, {}) + " chern", [&c, M] { return chern(c, M); }});
        break;
      case ExperimentKind::lr_check: jobs.push_back({context(M, {}), [&c, M] { return lr(c, M); }}); break;
      case ExperimentKind::norm_check: jobs.push_back({context(M, {}), [&c, M] { return norm(c, M); }}); break;
    }
  }
  return jobs;
}

inline void run(const ExperimentConfig& c, RecordSink& sink, int workers, bool verbose = false) {
  run_jobs(plan_jobs(c), workers, sink, verbose);
}

}  // namespace superad::cli
