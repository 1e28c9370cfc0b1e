#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "fklab/error.hpp"
#include "fklab_cli/cli.hpp"

using fklab::cli::json;

int main(int argc, char** argv) {
  CLI::App app{"Feynman-Kac semigroup experiments"};
  std::string config, out, experiment, export_matrix, dump_paths, from_report;
  std::uint64_t seed = 0;
  int threads = 0;
  std::vector<std::string> plots;
  app.add_option("--config", config, "experiment config (JSON)");
  app.add_option("--out", out, "output directory (overrides output_dir)");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed (overrides scheme.seed)");
  auto* exp_opt = app.add_option("--experiment", experiment, "pipeline name (overrides experiment)");
  auto* thr_opt = app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--export-matrix", export_matrix, "write the generator matrix (binary)");
  app.add_option("--dump-paths", dump_paths, "write recorded sample paths (binary)");
  app.add_option("--plot", plots, "emit plot data: phi1_trace envelope_overlay iuc_ratio_vs_R rate_functions mc_scaling");
  app.add_option("--from-report", from_report, "emit plot data from an existing report.json and exit");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return e.get_exit_code() == 0 ? app.exit(e) : (app.exit(e), 3);
  }

  if (!from_report.empty()) {
    try {
      std::ifstream is(from_report);
      if (!is) fklab::fail(fklab::ErrorKind::Usage, "cannot read " + from_report);
      const json rep = json::parse(is);
      const std::string dir = out.empty() ? std::filesystem::path(from_report).parent_path().string() : out;
      if (plots.empty()) fklab::fail(fklab::ErrorKind::Usage, "--from-report needs at least one --plot");
      if (!dir.empty()) std::filesystem::create_directories(dir);
      for (const auto& k : plots) std::cout << fklab::cli::emit_plot_data(rep, k, dir.empty() ? "." : dir) << "\n";
      return 0;
    } catch (const std::exception& e) {
      std::cerr << "usage error: " << e.what() << "\n";
      return 3;
    }
  }

  fklab::cli::RunRequest req;
  if (config.empty()) {
    std::cerr << "configuration error: --config is required\n";
    return 3;
  }
  try {
    std::ifstream is(config);
    if (!is) throw std::runtime_error("cannot read " + config);
    req.config = json::parse(is);
  } catch (const std::exception& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 3;
  }
  if (!out.empty()) req.overrides.out = out;
  if (*seed_opt) req.overrides.seed = seed;
  if (*exp_opt) req.overrides.experiment = experiment;
  if (*thr_opt) req.overrides.threads = threads;
  req.export_matrix = export_matrix;
  req.dump_paths = dump_paths;
  req.plots = plots;
  return fklab::cli::run_experiment(req, std::cerr);
}
