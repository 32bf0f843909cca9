// superad: experiment runner.
//   superad run <config.json> [--output PATH] [--jobs N] [--verbose]
// Exit status: 0 success, 1 numerical failure, 2 usage or configuration error.
#include "superad/cli/experiments.hpp"

#include <CLI11.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>

using namespace superad::cli;

namespace {

int default_jobs() {
  if (const char* env = std::getenv("SUPERAD_JOBS")) {
    try {
      int n = std::stoi(env);
      if (n >= 1) return n;
    } catch (const std::exception&) {
    }
    throw UsageError(std::string("SUPERAD_JOBS must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void write_summary(const ExperimentConfig& cfg, const SummarySink& summary, const std::string& status) {
  if (!cfg.output.summary) return;
  std::ofstream js(*cfg.output.summary);
  js << summary.to_json(kind_name(cfg.kind), status).dump(2) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Superadiabatic lattice-fermion experiments"};
  app.require_subcommand(1);
  auto* run_cmd = app.add_subcommand("run", "run the experiment described by a JSON config");
  std::string config_path, output;
  int jobs = 0;
  bool verbose = false;
  run_cmd->add_option("config", config_path, "experiment config (JSON)")->required();
  run_cmd->add_option("--output,-o", output, "CSV output path (overrides output.path)");
  run_cmd->add_option("--jobs,-j", jobs, "worker threads (default: $SUPERAD_JOBS or the core count)")
      ->check(CLI::PositiveNumber);
  run_cmd->add_flag("--verbose,-v", verbose, "progress on stderr");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  ExperimentConfig cfg;
  try {
    cfg = load_config(config_path);
    if (!output.empty()) cfg.output.path = output;
    if (jobs == 0) jobs = default_jobs();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  }

  std::ofstream csv(cfg.output.path);
  if (!csv) {
    std::cerr << "usage error: cannot write '" << cfg.output.path << "'\n";
    return 2;
  }
  std::unique_ptr<RecordSink> table;
  if (cfg.output.format == OutputFormat::wide)
    table = std::make_unique<WideCsvSink>(csv);
  else
    table = std::make_unique<LongCsvSink>(csv);
  SummarySink summary;
  TeeSink sink({table.get(), &summary});

  try {
    run(cfg, sink, jobs, verbose);
  } catch (const RunFailure& e) {
    sink.finish();
    write_summary(cfg, summary, "failed");
    std::cerr << (e.usage ? "configuration error: " : "numerical failure: ") << e.what() << '\n';
    return e.usage ? 2 : 1;
  }
  sink.finish();
  write_summary(cfg, summary, "ok");
  if (verbose) std::cerr << "wrote " << cfg.output.path << '\n';
  return 0;
}
