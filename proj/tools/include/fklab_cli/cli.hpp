#pragma once
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "fklab/model.hpp"

namespace fklab::cli {

using json = nlohmann::ordered_json;

inline const std::vector<std::string> kExperiments{"spectrum",  "iuc_dichotomy", "ground_state_fit", "rates_table",
                                                   "mc_lemmas", "chain_bound",   "valley",           "inequality_suite"};
inline const std::vector<std::string> kPlotKinds{"phi1_trace", "envelope_overlay", "iuc_ratio_vs_R", "rate_functions",
                                                 "mc_scaling"};

// command-line overrides; unset fields leave the config alone
struct Overrides {
  std::optional<std::string> out;
  std::optional<std::string> experiment;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
};

// complete default document for one experiment
json default_config(const std::string& experiment);
// defaults merged with the user document; throws Error(Config) on unknown keys or bad values
json resolve_config(const json& user, const Overrides& ov = {});

KernelSpec kernel_from_json(const json& j);
PotentialSpec potential_from_json(const json& j);
// number, or the strings "inf" / "-inf"
double get_number(const json& j, const std::string& key);

struct Check {
  std::string name;
  double value = 0;
  double threshold = 0;
  bool passed = false;
};

struct PipelineOptions {
  std::string out_dir;        // empty: write no CSV side files
  std::string export_matrix;  // spectrum / ground_state_fit
  std::string dump_paths;     // mc_lemmas
};

struct PipelineResult {
  std::vector<Check> checks;
  json results = json::object();
  json data = json::object();
  bool passed() const;
  std::vector<std::string> failed() const;
};

// runs the named pipeline of a resolved config; checks made before an exception stay in out
void run_pipeline(const json& resolved, const PipelineOptions& opt, PipelineResult& out);
PipelineResult run_pipeline(const json& resolved, const PipelineOptions& opt = {});

// report.json body; the timestamp is the only run-dependent field
json make_report(const json& resolved, const PipelineResult& r, const std::string& timestamp);

// whitespace-separated columns with a one-line header, written to dir/<kind>.dat
std::string emit_plot_data(const json& report, const std::string& kind, const std::string& dir);

struct RunRequest {
  json config;  // user document
  Overrides overrides;
  std::string export_matrix, dump_paths;
  std::vector<std::string> plots;
};

// exit code 0 ok, 2 failed checks or pipeline error, 3 configuration error (nothing written)
int run_experiment(const RunRequest& req, std::ostream& log);

}  // namespace fklab::cli
