// One line per acceptance criterion: "criterion N: PASS|FAIL ...".
// Each criterion runs its pipeline config(s) through the same path as the CLI.
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "fklab_cli/cli.hpp"

namespace fs = std::filesystem;
using fklab::cli::json;

namespace {

const std::map<int, std::vector<std::string>> kConfigs{
    {1, {"c01_inequality_suite.json"}},
    {2, {"c02_iuc_dichotomy.json"}},
    {3, {"c03a_ground_state_gamma_inf.json", "c03b_ground_state_tempered.json"}},
    {4, {"c04_fk_spectral.json"}},
    {5, {"c05_exit_scaling.json"}},
    {6, {"c06_window_linearity.json"}},
    {7, {"c07_chain_bound.json"}},
    {8, {"c08_rates_table.json"}},
    {9, {"c09_valley.json"}},
    {10, {"c10_structural.json"}},
};

std::string summary(const json& report) {
  std::ostringstream os;
  bool first = true;
  for (const auto& c : report["checks"]) {
    os << (first ? "" : "; ") << c["name"].get<std::string>() << "=" << c["value"].dump()
       << (c["passed"].get<bool>() ? "" : " (FAILED)");
    first = false;
  }
  return os.str();
}

bool run_criterion(int n, const fs::path& cfg_dir, const fs::path& out_root) {
  bool ok = true;
  std::ostringstream detail;
  const auto t0 = std::chrono::steady_clock::now();
  for (const auto& name : kConfigs.at(n)) {
    fklab::cli::RunRequest req;
    std::ifstream is(cfg_dir / name);
    if (!is) {
      std::cout << "criterion " << n << ": FAIL missing config " << name << std::endl;
      return false;
    }
    req.config = json::parse(is);
    const fs::path out = out_root / fs::path(name).stem();
    req.overrides.out = out.string();
    std::ostringstream log;
    const int code = fklab::cli::run_experiment(req, log);
    ok = ok && code == 0;
    detail << " [" << fs::path(name).stem().string() << " exit=" << code;
    if (fs::exists(out / "report.json")) {
      std::ifstream rs(out / "report.json");
      detail << " " << summary(json::parse(rs));
    } else {
      detail << " " << log.str();
    }
    detail << "]";
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::cout << "criterion " << n << ": " << (ok ? "PASS" : "FAIL") << " (" << secs << " s)" << detail.str()
            << std::endl;
  return ok;
}

}  // namespace

int main(int argc, char** argv) {
  fs::path cfg_dir = FKLAB_ACCEPTANCE_DIR;
  fs::path out_root = "acceptance_out";
  std::vector<int> which;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--configs" && i + 1 < argc) cfg_dir = argv[++i];
    else if (a == "--out" && i + 1 < argc) out_root = argv[++i];
    else which.push_back(std::atoi(a.c_str()));
  }
  if (which.empty())
    for (const auto& kv : kConfigs) which.push_back(kv.first);
  bool all = true;
  for (int n : which) {
    if (!kConfigs.count(n)) {
      std::cout << "criterion " << n << ": FAIL unknown criterion" << std::endl;
      all = false;
      continue;
    }
    all = run_criterion(n, cfg_dir, out_root) && all;
  }
  return all ? 0 : 1;
}
