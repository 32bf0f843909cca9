#pragma once

#include "superad/bounds.hpp"
#include "superad/response.hpp"

#include <json.hpp>

#include <fstream>

// Experiment configuration: a JSON document, validated into ExperimentConfig.
// Every validation failure names the offending field path, e.g. "model.M[1]".
namespace superad::cli {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class ExperimentKind {
  adiabatic_error,
  superadiabatic_defect,
  current_response,
  hall_conductivity,
  conductance,
  lr_check,
  norm_check
};

inline const char* kind_name(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::adiabatic_error: return "adiabatic_error";
    case ExperimentKind::superadiabatic_defect: return "superadiabatic_defect";
    case ExperimentKind::current_response: return "current_response";
    case ExperimentKind::hall_conductivity: return "hall_conductivity";
    case ExperimentKind::conductance: return "conductance";
    case ExperimentKind::lr_check: return "lr_check";
    case ExperimentKind::norm_check: return "norm_check";
  }
  return "";
}

// One term a*_to a_from amp + h.c.; from == to (same orbital) gives amp n.
struct ObservableTerm {
  Site from, to;
  int orbital_from = 0, orbital_to = 0;
  cplx amp = 1.0;
};

struct ObservableSpec {
  std::string name;
  std::vector<ObservableTerm> terms;
};

struct ModelSpec {
  int d = 1;
  std::vector<int> M;
  int internal_dim = 1;
  std::optional<int> N;
  std::optional<double> filling;
  std::vector<TvwModel::Hopping> hopping;  // one direction; the adjoint is added
  std::vector<TvwModel::Potential> potential;
  std::vector<TvwModel::Pair> pair;
  double mu = 0.0;

  TvwModel build(int m) const {
    TvwModel t;
    t.lattice = TorusLattice(d, m);
    t.internal_dim = internal_dim;
    for (const auto& h : hopping) t.add_hopping_pair(h.displacement, h.block, h.schedule);
    t.potential = potential;
    t.pair = pair;
    t.mu = mu;
    t.validate();
    return t;
  }

  int particles(int m) const {
    if (N) return *N;
    double modes = std::pow(static_cast<double>(m), d) * internal_dim;
    return static_cast<int>(std::lround(*filling * modes));
  }
};

struct Tolerances {
  double ode = 1e-9;
  std::optional<double> eta_cluster;
  double g_min = 1e-6;
  double fd_step = 1e-3;
  Stepper stepper = Stepper::cf4;
};

enum class OutputFormat { long_rows, wide };

struct OutputSpec {
  std::string path = "records.csv";
  OutputFormat format = OutputFormat::long_rows;
  std::optional<std::string> summary;
};

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::adiabatic_error;
  ModelSpec model;
  std::vector<double> eps;
  std::vector<double> t_grid;
  std::optional<ObservableSpec> observable;
  std::vector<std::pair<ObservableSpec, ObservableSpec>> lr_pairs;
  double lr_decay = 1.0;
  int current_direction = 0;
  double model_time = 0.0;  // Hamiltonian time for the twist experiments
  int chern_grid = 0;       // 0 skips the Chern summary
  std::optional<int> beta_range;
  double norm_decay = 1.0;
  std::optional<LocalizationPlane> norm_plane;
  Tolerances tol;
  OutputSpec output;

  ClusterSelector selector() const { return GroundSelector{tol.eta_cluster}; }
  EvolveOptions evolve_options() const { return {tol.ode, 0.0, 16, tol.stepper}; }
};

namespace detail {

using nlohmann::json;

// A JSON value together with its path from the document root.
class Node {
 public:
  Node(const json& j, std::string path) : j_(j), path_(std::move(path)) {}

  const json& value() const { return j_; }
  const std::string& path() const { return path_; }

  [[noreturn]] void fail(const std::string& what) const {
    throw UsageError((path_.empty() ? std::string("config") : path_) + ": " + what);
  }

  bool has(const char* key) const { return j_.is_object() && j_.contains(key) && !j_.at(key).is_null(); }

  Node at(const char* key) const {
    if (!j_.is_object()) fail("expected an object");
    if (!j_.contains(key)) Node(j_, child(key)).fail("missing required field");
    return {j_.at(key), child(key)};
  }

  std::optional<Node> opt(const char* key) const {
    if (!has(key)) return std::nullopt;
    return Node(j_.at(key), child(key));
  }

  std::vector<Node> items() const {
    if (!j_.is_array()) fail("expected an array");
    std::vector<Node> out;
    for (size_t i = 0; i < j_.size(); ++i) out.emplace_back(j_[i], path_ + "[" + std::to_string(i) + "]");
    return out;
  }

  double number() const {
    if (!j_.is_number()) fail("expected a number");
    return j_.get<double>();
  }

  int integer() const {
    if (!j_.is_number_integer()) fail("expected an integer");
    return j_.get<int>();
  }

  bool boolean() const {
    if (!j_.is_boolean()) fail("expected true or false");
    return j_.get<bool>();
  }

  std::string string() const {
    if (!j_.is_string()) fail("expected a string");
    return j_.get<std::string>();
  }

  // A number or a [re, im] pair.
  cplx complex() const {
    if (j_.is_number()) return j_.get<double>();
    if (j_.is_array() && j_.size() == 2 && j_[0].is_number() && j_[1].is_number())
      return {j_[0].get<double>(), j_[1].get<double>()};
    fail("expected a number or a [re, im] pair");
  }

  std::vector<int> ints() const {
    std::vector<int> out;
    for (const auto& n : items()) out.push_back(n.integer());
    return out;
  }

  std::vector<double> numbers() const {
    std::vector<double> out;
    for (const auto& n : items()) out.push_back(n.number());
    return out;
  }

  // A scalar (times the identity of size n) or an n x n nested array.
  Matrix block(int n) const {
    if (!j_.is_array() || (j_.size() == 2 && j_[0].is_number())) return complex() * Matrix::Identity(n, n);
    auto rows = items();
    if (static_cast<int>(rows.size()) != n) fail("expected " + std::to_string(n) + " rows");
    Matrix out(n, n);
    for (int i = 0; i < n; ++i) {
      auto cols = rows[i].items();
      if (static_cast<int>(cols.size()) != n) rows[i].fail("expected " + std::to_string(n) + " entries");
      for (int j = 0; j < n; ++j) out(i, j) = cols[j].complex();
    }
    return out;
  }

 private:
  std::string child(const char* key) const { return path_.empty() ? key : path_ + "." + key; }

  const json& j_;
  std::string path_;
};

inline Schedule parse_schedule(const std::optional<Node>& n) {
  if (!n) return {};
  try {
    if (n->value().is_string()) return Schedule::parse(n->string());
    double angle = n->opt("angle") ? n->at("angle").number() : 1.0;
    double duration = n->opt("duration") ? n->at("duration").number() : 1.0;
    if (!(duration > 0)) n->at("duration").fail("must be positive");
    return Schedule::parse(n->at("name").string(), angle, duration);
  } catch (const std::invalid_argument& e) {
    n->fail(e.what());
  }
}

inline Site parse_site(const Node& n, int d) {
  Site s = n.ints();
  if (static_cast<int>(s.size()) != d) n.fail("expected " + std::to_string(d) + " coordinates");
  return s;
}

inline LocalizationPlane parse_plane(const Node& n, int d) {
  LocalizationPlane L;
  for (const auto& b : n.at("constrained").items()) L.ell.push_back(b.boolean());
  if (static_cast<int>(L.ell.size()) != d) n.at("constrained").fail("expected " + std::to_string(d) + " entries");
  L.anchor = n.opt("anchor") ? parse_site(n.at("anchor"), d) : Site(d, 0);
  return L;
}

inline ModelSpec parse_model(const Node& n) {
  ModelSpec m;
  m.d = n.at("d").integer();
  if (m.d < 1 || m.d > 3) n.at("d").fail("must be 1, 2 or 3");
  auto Ms = n.at("M");
  m.M = Ms.ints();
  if (m.M.empty()) Ms.fail("must not be empty");
  auto items = Ms.items();
  for (size_t i = 0; i < m.M.size(); ++i)
    if (m.M[i] < 2 || m.M[i] % 2 != 0) items[i].fail("every M must be even and at least 2");
  if (auto l = n.opt("internal_dim")) {
    m.internal_dim = l->integer();
    if (m.internal_dim < 1) l->fail("must be at least 1");
  }
  const int l = m.internal_dim;
  if (auto N = n.opt("N")) {
    m.N = N->integer();
    if (*m.N < 0) N->fail("must be non-negative");
  } else if (auto f = n.opt("filling")) {
    m.filling = f->number();
    if (*m.filling < 0 || *m.filling > 1) f->fail("must lie in [0, 1]");
  } else {
    n.fail("one of N or filling is required");
  }
  if (auto hs = n.opt("hopping"))
    for (const auto& h : hs->items())
      m.hopping.push_back({parse_site(h.at("displacement"), m.d), h.at("block").block(l), parse_schedule(h.opt("schedule"))});
  if (auto ps = n.opt("potential"))
    for (const auto& p : ps->items()) {
      TvwModel::Potential v;
      const std::string preset = p.at("preset").string();
      if (preset == "uniform") v.preset = TvwModel::Potential::Preset::uniform;
      else if (preset == "staggered") v.preset = TvwModel::Potential::Preset::staggered;
      else if (preset == "sites") v.preset = TvwModel::Potential::Preset::sites;
      else if (preset == "plane") v.preset = TvwModel::Potential::Preset::plane;
      else p.at("preset").fail("unknown preset '" + preset + "' (uniform, staggered, sites, plane)");
      v.block = p.at("block").block(l);
      v.schedule = parse_schedule(p.opt("schedule"));
      if (v.preset == TvwModel::Potential::Preset::sites)
        for (const auto& w : p.at("sites").items()) v.weights[parse_site(w.at("site"), m.d)] = w.at("weight").number();
      if (v.preset == TvwModel::Potential::Preset::plane) {
        v.plane = parse_plane(p.at("plane"), m.d);
        if (auto dec = p.opt("decay")) v.decay = dec->number();
      }
      m.potential.push_back(v);
    }
  if (auto ws = n.opt("W"))
    for (const auto& w : ws->items()) {
      Matrix b = w.at("block").block(l);
      if (b.imag().cwiseAbs().maxCoeff() > 0) w.at("block").fail("must be real");
      m.pair.push_back({w.at("distance").integer(), b.real(), parse_schedule(w.opt("schedule"))});
    }
  if (auto mu = n.opt("mu")) m.mu = mu->number();
  for (int M : m.M) {
    try {
      m.build(M);
    } catch (const std::invalid_argument& e) {
      n.fail(std::string("model invalid at M=") + std::to_string(M) + ": " + e.what());
    }
    int N = m.particles(M);
    if (N > static_cast<int>(std::pow(M, m.d)) * l) n.fail("more particles than modes at M=" + std::to_string(M));
  }
  return m;
}

inline ObservableSpec parse_observable(const Node& n, int d, int l) {
  ObservableSpec o;
  if (auto name = n.opt("name")) o.name = name->string();
  auto terms = n.at("terms");
  for (const auto& t : terms.items()) {
    ObservableTerm term;
    term.from = parse_site(t.at("from"), d);
    term.to = t.opt("to") ? parse_site(t.at("to"), d) : term.from;
    if (auto a = t.opt("orbital_from")) term.orbital_from = a->integer();
    if (auto a = t.opt("orbital_to")) term.orbital_to = a->integer();
    for (int orb : {term.orbital_from, term.orbital_to})
      if (orb < 0 || orb >= l) t.fail("orbital index out of range");
    if (auto a = t.opt("amp")) term.amp = a->complex();
    if (term.from == term.to && term.orbital_from == term.orbital_to && term.amp.imag() != 0)
      t.at("amp").fail("a density term needs a real amplitude");
    o.terms.push_back(term);
  }
  if (o.terms.empty()) terms.fail("must not be empty");
  return o;
}

inline ExperimentKind parse_kind(const Node& n) {
  const std::string s = n.string();
  for (auto k : {ExperimentKind::adiabatic_error, ExperimentKind::superadiabatic_defect,
                 ExperimentKind::current_response, ExperimentKind::hall_conductivity, ExperimentKind::conductance,
                 ExperimentKind::lr_check, ExperimentKind::norm_check})
    if (s == kind_name(k)) return k;
  n.fail("unknown experiment '" + s + "'");
}

}  // namespace detail

inline ExperimentConfig parse_config(const nlohmann::json& doc) {
  using detail::Node;
  Node root(doc, "");
  ExperimentConfig c;
  c.kind = detail::parse_kind(root.at("experiment"));
  c.model = detail::parse_model(root.at("model"));
  const int d = c.model.d, l = c.model.internal_dim;
  const bool needs_eps = c.kind != ExperimentKind::lr_check && c.kind != ExperimentKind::norm_check;
  if (needs_eps || root.has("eps")) {
    auto e = root.at("eps");
    c.eps = e.numbers();
    if (c.eps.empty()) e.fail("must not be empty");
    auto items = e.items();
    for (size_t i = 0; i < c.eps.size(); ++i)
      if (!(c.eps[i] > 0 && c.eps[i] <= 1)) items[i].fail("eps must lie in (0, 1]");
  }
  if (c.kind != ExperimentKind::norm_check) {
    auto t = root.at("t");
    double t0 = t.at("start").number(), t1 = t.at("stop").number();
    int pts = t.at("points").integer();
    if (pts < 1) t.at("points").fail("grid must be non-empty");
    if (pts > 1 && !(t1 > t0)) t.at("stop").fail("must exceed start");
    c.t_grid = pts == 1 ? std::vector<double>{t0} : uniform_grid(t0, t1, pts);
  }
  if (c.kind == ExperimentKind::adiabatic_error) c.observable = detail::parse_observable(root.at("observable"), d, l);
  if (c.kind == ExperimentKind::lr_check) {
    auto lr = root.at("lr");
    if (auto a = lr.opt("decay")) c.lr_decay = a->number();
    if (!(c.lr_decay > 0)) lr.at("decay").fail("must be positive");
    auto pairs = lr.at("pairs");
    for (const auto& p : pairs.items())
      c.lr_pairs.emplace_back(detail::parse_observable(p.at("A"), d, l), detail::parse_observable(p.at("B"), d, l));
    if (c.lr_pairs.empty()) pairs.fail("must not be empty");
  }
  if (auto r = root.opt("response")) {
    if (auto k = r->opt("direction")) {
      c.current_direction = k->integer();
      if (c.current_direction < 0 || c.current_direction >= d) k->fail("out of range");
    }
    if (auto t = r->opt("model_time")) c.model_time = t->number();
    if (auto g = r->opt("chern_grid")) {
      c.chern_grid = g->integer();
      if (c.chern_grid == 1 || c.chern_grid < 0) g->fail("must be 0 (skip) or at least 2");
    }
    if (auto b = r->opt("beta_range")) c.beta_range = b->integer();
  }
  if (auto nm = root.opt("norm")) {
    if (auto a = nm->opt("decay")) c.norm_decay = a->number();
    if (auto p = nm->opt("plane")) c.norm_plane = detail::parse_plane(*p, d);
  }
  if (auto t = root.opt("tolerances")) {
    if (auto v = t->opt("ode")) c.tol.ode = v->number();
    if (auto v = t->opt("eta_cluster")) c.tol.eta_cluster = v->number();
    if (auto v = t->opt("g_min")) c.tol.g_min = v->number();
    if (auto v = t->opt("fd_step")) c.tol.fd_step = v->number();
    if (auto v = t->opt("stepper")) {
      std::string s = v->string();
      if (s == "cf4") c.tol.stepper = Stepper::cf4;
      else if (s == "midpoint") c.tol.stepper = Stepper::midpoint;
      else v->fail("unknown stepper '" + s + "' (cf4, midpoint)");
    }
    if (!(c.tol.ode > 0)) t->at("ode").fail("must be positive");
    if (!(c.tol.fd_step > 0)) t->at("fd_step").fail("must be positive");
  }
  if (auto o = root.opt("output")) {
    if (auto p = o->opt("path")) c.output.path = p->string();
    if (auto f = o->opt("format")) {
      std::string s = f->string();
      if (s == "long") c.output.format = OutputFormat::long_rows;
      else if (s == "wide") c.output.format = OutputFormat::wide;
      else f->fail("unknown format '" + s + "' (long, wide)");
    }
    if (auto s = o->opt("summary")) c.output.summary = s->string();
  }
  return c;
}

inline ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config '" + path + "'");
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in, nullptr, true, true);
  } catch (const nlohmann::json::parse_error& e) {
    throw UsageError("config '" + path + "' is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

}  // namespace superad::cli
