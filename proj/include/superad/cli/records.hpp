#pragma once

#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

// Flat result records and their CSV / JSON writers.
namespace superad::cli {

// Metric names used by the experiments; every record carries one of them.
inline const std::vector<std::string>& metric_vocabulary() {
  static const std::vector<std::string> v = {
      "err0",      "err1",       "defect",      "current",   "f1",           "f2",     "eigensum",
      "persistent", "discrepancy", "twist",      "rate",      "predicted",    "measured", "chern",
      "chern_deviation", "lhs",  "rhs",         "margin",    "velocity",     "norm",   "phi_norm",
      "volume",    "ratio"};
  return v;
}

struct RecordRow {
  std::string experiment;
  int M = 0;
  std::optional<double> eps, t;
  std::string label;  // observable pair index or other sub-key; empty if unused
  std::string metric;
  double value = 0;
  std::optional<double> tolerance;
  std::optional<bool> pass;
};

// Shortest decimal that round-trips: 17 significant digits.
inline std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string format_optional(const std::optional<double>& v) { return v ? format_number(*v) : ""; }

class RecordSink {
 public:
  virtual ~RecordSink() = default;
  virtual void write(const RecordRow& r) = 0;
  virtual void finish() {}
};

// One metric per line:
// experiment,M,eps,t,label,metric,value,tolerance,pass
class LongCsvSink : public RecordSink {
 public:
  explicit LongCsvSink(std::ostream& out) : out_(out) {
    out_ << "experiment,M,eps,t,label,metric,value,tolerance,pass\n";
  }
  void write(const RecordRow& r) override {
    out_ << r.experiment << ',' << r.M << ',' << format_optional(r.eps) << ',' << format_optional(r.t) << ','
         << r.label << ',' << r.metric << ',' << format_number(r.value) << ',' << format_optional(r.tolerance) << ','
         << (r.pass ? (*r.pass ? "true" : "false") : "") << '\n';
    out_.flush();
  }

 private:
  std::ostream& out_;
};

// One line per (M, eps, t, label) with a column per metric, in order of first
// appearance. Buffered: written by finish().
class WideCsvSink : public RecordSink {
 public:
  explicit WideCsvSink(std::ostream& out) : out_(out) {}
  void write(const RecordRow& r) override {
    Key k{r.M, format_optional(r.eps), format_optional(r.t), r.label};
    auto it = index_.find(k);
    if (it == index_.end()) {
      it = index_.emplace(k, rows_.size()).first;
      rows_.push_back({k, {}});
    }
    if (std::find(metrics_.begin(), metrics_.end(), r.metric) == metrics_.end()) metrics_.push_back(r.metric);
    rows_[it->second].second[r.metric] = format_number(r.value);
  }
  void finish() override {
    out_ << "M,eps,t,label";
    for (const auto& m : metrics_) out_ << ',' << m;
    out_ << '\n';
    for (const auto& [k, vals] : rows_) {
      out_ << k.M << ',' << k.eps << ',' << k.t << ',' << k.label;
      for (const auto& m : metrics_) {
        auto v = vals.find(m);
        out_ << ',' << (v == vals.end() ? "" : v->second);
      }
      out_ << '\n';
    }
    out_.flush();
  }

 private:
  struct Key {
    int M;
    std::string eps, t, label;
    auto operator<=>(const Key&) const = default;
  };
  std::ostream& out_;
  std::map<Key, size_t> index_;
  std::vector<std::pair<Key, std::map<std::string, std::string>>> rows_;
  std::vector<std::string> metrics_;
};

// Per (metric, M, eps): count, max |value| and pass tally.
class SummarySink : public RecordSink {
 public:
  void write(const RecordRow& r) override {
    auto& e = entries_[{r.metric, r.M, format_optional(r.eps)}];
    e.count += 1;
    e.max_abs = std::max(e.max_abs, std::abs(r.value));
    if (r.pass) (*r.pass ? e.passed : e.failed) += 1;
  }

  nlohmann::json to_json(const std::string& experiment, const std::string& status) const {
    nlohmann::json j;
    j["experiment"] = experiment;
    j["status"] = status;
    j["metrics"] = nlohmann::json::array();
    for (const auto& [k, e] : entries_) {
      nlohmann::json m = {{"metric", std::get<0>(k)}, {"M", std::get<1>(k)}, {"count", e.count},
                          {"max_abs", e.max_abs}};
      if (!std::get<2>(k).empty()) m["eps"] = std::stod(std::get<2>(k));
      if (e.passed + e.failed > 0) {
        m["passed"] = e.passed;
        m["failed"] = e.failed;
      }
      j["metrics"].push_back(m);
    }
    return j;
  }

 private:
  struct Entry {
    long count = 0, passed = 0, failed = 0;
    double max_abs = 0;
  };
  std::map<std::tuple<std::string, int, std::string>, Entry> entries_;
};

// Forwards every record to several sinks.
class TeeSink : public RecordSink {
 public:
  explicit TeeSink(std::vector<RecordSink*> sinks) : sinks_(std::move(sinks)) {}
  void write(const RecordRow& r) override {
    for (auto* s : sinks_) s->write(r);
  }
  void finish() override {
    for (auto* s : sinks_) s->finish();
  }

 private:
  std::vector<RecordSink*> sinks_;
};

}  // namespace superad::cli
