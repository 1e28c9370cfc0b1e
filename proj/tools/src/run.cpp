#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "fklab/error.hpp"
#include "fklab_cli/cli.hpp"

namespace fs = std::filesystem;

namespace fklab::cli {

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream os(p);
  if (!os) fail(ErrorKind::Usage, "cannot write " + p.string());
  os << s;
}

// numbers that JSON cannot carry are written as strings
json sanitize(const json& j) {
  if (j.is_number_float()) {
    const double v = j.get<double>();
    if (std::isnan(v)) return nullptr;
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    return j;
  }
  if (j.is_array() || j.is_object()) {
    json out = j;
    for (auto it = out.begin(); it != out.end(); ++it) *it = sanitize(*it);
    return out;
  }
  return j;
}

const json& report_array(const json& report, const std::string& kind) {
  if (!report.contains("data") || !report["data"].contains(kind))
    fail(ErrorKind::Usage, "report carries no data for plot kind '" + kind + "'");
  return report["data"][kind];
}

std::string cell(const json& v) {
  if (v.is_null()) return "nan";
  if (v.is_string()) return v.get<std::string>();
  std::ostringstream os;
  os << std::setprecision(17) << v.get<double>();
  return os.str();
}

}  // namespace

json make_report(const json& cfg, const PipelineResult& r, const std::string& timestamp) {
  json rep;
  rep["experiment"] = cfg["experiment"];
  rep["timestamp"] = timestamp;
  rep["status"] = r.passed() ? "ok" : "assertion_failed";
  rep["failed_checks"] = r.failed();
  json checks = json::array();
  for (const auto& c : r.checks)
    checks.push_back({{"name", c.name}, {"value", c.value}, {"threshold", c.threshold}, {"passed", c.passed}});
  rep["checks"] = checks;
  rep["results"] = r.results;
  rep["data"] = r.data;
  return sanitize(rep);
}

std::string emit_plot_data(const json& report, const std::string& kind, const std::string& dir) {
  std::vector<std::string> cols;
  std::vector<std::vector<std::string>> rows;
  if (kind == "phi1_trace") {
    const json& d = report_array(report, kind);
    cols = {"x", "phi1", "log_phi1", "V"};
    for (size_t i = 0; i < d["x"].size(); ++i) {
      const double p = d["phi1"][i].is_number() ? d["phi1"][i].get<double>() : std::nan("");
      rows.push_back({cell(d["x"][i]), cell(d["phi1"][i]), cell(p > 0 ? json(std::log(p)) : json(nullptr)),
                      cell(d["V"][i])});
    }
  } else if (kind == "envelope_overlay") {
    const json& d = report_array(report, kind);
    cols = {"x", "neg_log_phi1", "lower_exp", "upper_exp"};
    for (size_t i = 0; i < d["x"].size(); ++i)
      rows.push_back({cell(d["x"][i]), cell(d["neg_log_phi1"][i]), cell(d["lower_exp"][i]), cell(d["upper_exp"][i])});
  } else if (kind == "iuc_ratio_vs_R") {
    cols = {"R", "t", "Lambda", "theta"};
    for (const auto& r : report_array(report, kind))
      rows.push_back({cell(r["R"]), cell(r["t"]), cell(r["Lambda"]), cell(r["theta"])});
  } else if (kind == "rate_functions") {
    cols = {"s", "beta", "gamma", "beta_hat", "beta_tilde"};
    for (const auto& r : report_array(report, kind))
      rows.push_back({cell(r["s"]), cell(r["beta"]), cell(r["gamma"]), cell(r["beta_hat"]), cell(r["beta_tilde"])});
  } else if (kind == "mc_scaling") {
    cols = {"r", "median_exit", "r_pow_alpha"};
    for (const auto& r : report_array(report, kind))
      rows.push_back({cell(r["r"]), cell(r["median_exit"]), cell(r["r_pow_alpha"])});
  } else {
    fail(ErrorKind::Usage, "unknown plot kind '" + kind + "'");
  }
  std::ostringstream os;
  os << "#";
  for (const auto& c : cols) os << " " << c;
  os << "\n";
  for (const auto& r : rows) {
    for (size_t i = 0; i < r.size(); ++i) os << (i ? " " : "") << r[i];
    os << "\n";
  }
  const fs::path p = fs::path(dir) / (kind + ".dat");
  write_text(p, os.str());
  return p.string();
}

int run_experiment(const RunRequest& req, std::ostream& log) {
  json cfg;
  try {
    cfg = resolve_config(req.config, req.overrides);
    for (const auto& k : req.plots)
      if (std::find(kPlotKinds.begin(), kPlotKinds.end(), k) == kPlotKinds.end())
        fail(ErrorKind::Config, "unknown plot kind '" + k + "'");
    const std::string e = cfg["experiment"].get<std::string>();
    if (!req.export_matrix.empty() && e != "spectrum" && e != "ground_state_fit")
      fail(ErrorKind::Config, "--export-matrix applies to spectrum and ground_state_fit");
    if (!req.dump_paths.empty() && e != "mc_lemmas") fail(ErrorKind::Config, "--dump-paths applies to mc_lemmas");
  } catch (const Error& e) {
    log << "configuration error: " << e.what() << "\n";
    return 3;
  }

  const fs::path dir = cfg["output_dir"].get<std::string>();
  try {
    fs::create_directories(dir);
    fs::remove(dir / "FAILED");
    write_text(dir / "resolved-config.json", cfg.dump(2) + "\n");
  } catch (const std::exception& e) {
    log << "configuration error: cannot use output directory: " << e.what() << "\n";
    return 3;
  }

  PipelineOptions opt;
  opt.out_dir = dir.string();
  opt.export_matrix = req.export_matrix;
  opt.dump_paths = req.dump_paths;
  PipelineResult res;
  std::string error;
  try {
    run_pipeline(cfg, opt, res);
  } catch (const std::exception& e) {
    error = e.what();
    res.checks.push_back({"pipeline_error", 1, 0, false});
    res.results["error"] = error;
  }
  json rep = make_report(cfg, res, utc_now());
  write_text(dir / "report.json", rep.dump(2) + "\n");
  for (const auto& k : req.plots) {
    try {
      emit_plot_data(rep, k, dir.string());
    } catch (const Error& e) {
      log << "plot " << k << ": " << e.what() << "\n";
    }
  }
  if (res.passed()) return 0;
  std::string names;
  for (const auto& n : res.failed()) names += n + "\n";
  write_text(dir / "FAILED", names);
  log << "failed checks:";
  for (const auto& n : res.failed()) log << " " << n;
  log << "\n";
  if (!error.empty()) log << "pipeline error: " << error << "\n";
  return 2;
}

}  // namespace fklab::cli
