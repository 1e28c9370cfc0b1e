#include <algorithm>
#include <cmath>

#include "fklab/error.hpp"
#include "fklab_cli/cli.hpp"

namespace fklab::cli {

namespace {

json radial_potential_defaults() {
  return {{"family", "power"}, {"c", 1.0}, {"theta", 2.0}, {"theta1", 1.0}, {"theta2", 0.0}, {"K", -1.0}};
}

json potential_defaults() {
  json p = radial_potential_defaults();
  p["k0"] = 3.0;
  p["alpha"] = 0.5;
  p["dim"] = 1;
  p["radius_law"] = "power";
  p["c6"] = 1.0;
  p["eta1"] = 1.0;
  p["eta2"] = 2.0;
  p["max_balls"] = 0;
  p["off_valley"] = radial_potential_defaults();
  return p;
}

json kernel_defaults() {
  return {{"family", "truncated"}, {"d", 1},  {"alpha1", 1.0}, {"alpha2", 1.0}, {"kappa", 1.0},
          {"gamma", "inf"},        {"c1", 1.0}, {"c2", 1.0},     {"c_tail", 1.0}};
}

json params_defaults(const std::string& e) {
  if (e == "spectrum")
    return {{"modes", 4}, {"ck_t", 0.5}, {"ck_s", 0.5}, {"mc_determinism_paths", 200}, {"mc_horizon", 0.5}};
  if (e == "iuc_dichotomy")
    return {{"thetas", {0.5, 2.0}}, {"R_list", {5.0, 10.0, 20.0}}, {"h", 0.05},           {"t", 1.0},
            {"window", 0.9},        {"iuc_max_growth", 2.0},        {"non_iuc_min_growth", 10.0}};
  if (e == "ground_state_fit")
    return {{"t", 1.0},
            {"fit_model", "b_fixed"},
            {"b_fixed", 1.0},
            {"a_range", {1.0, 3.0}},
            {"b_range", {0.25, 0.75}},
            {"sandwich",
             {{"kind", "ex12_gamma_inf"}, {"eps", 0.1}, {"theta", 2.0}, {"band", 0.2}, {"max_violation_fraction", 0.05}}}};
  if (e == "rates_table")
    return {{"grid_points", {{0.5, 0.0}, {1.0, 1.0}, {1.0, 2.0}, {1.0, 3.0}, {1.5, 0.0}, {2.0, -1.0}}},
            {"t0", 10.0},
            {"min_numeric_agreement", 5},
            {"eps", 0.05},
            {"s_grid", {1e-3, 1e-2, 0.1, 1.0}},
            {"calibrate", true},
            {"calibration_functions", 200}};
  if (e == "mc_lemmas")
    return {{"fk",
             {{"enabled", true},
              {"eps_cut", 0.01},
              {"dt", 1e-3},
              {"paths", 100000},
              {"times", {2.0, 4.0, 8.0}},
              {"x0", 0.0},
              {"kill_box", 10.0},
              {"max_rel_gap", 0.1},
              {"spectral_h", 0.05}}},
            {"exit",
             {{"enabled", true},
              {"eps_cut", 0.01},
              {"dt", 1e-4},
              {"paths", 10000},
              {"r_list", {0.1, 0.2, 0.4}},
              {"slope_tol", 0.2},
              {"max_collapse", 2.0}}},
            {"window",
             {{"enabled", true},
              {"eps_cut", 1e-3},
              {"dt", 1e-5},
              {"paths", 100000},
              {"eps", 0.09},
              {"B", {0.0, 0.09}},
              {"D", {0.5, 0.09}},
              {"t1", 0.0005},
              {"widths", {0.004, 0.008}},
              {"T", 0.009},
              {"ratio_range", {1.5, 2.5}}}},
            {"poisson", {{"enabled", true}, {"eps_cut", 0.01}, {"dt", 1e-2}, {"paths", 2000}, {"t", 1.0}, {"min_pvalue", 0.01}}},
            {"dump_count", 50}};
  if (e == "chain_bound")
    return {{"x_list", {6.0, 9.0, 12.0}}, {"eps", 0.09}, {"R", 15.0}, {"h", 0.025}, {"c0", 0.1}, {"max_slope_ratio", 1.3}};
  if (e == "valley")
    return {{"theta_R", {2.0, 5.0, 10.0, 27.0, 100.0}},
            {"theta_tol", 1e-10},
            {"tail_R", {2.0, 10.0, 100.0, 1000.0}},
            {"tail_eps", 0.7},
            {"eps", 0.05},
            {"slicing_s", {1e-3, 1e-2, 0.1}},
            {"cond13", {{"enabled", true}, {"k0", 1.5}, {"R", 8.0}, {"h", 0.05}, {"t", 1.0}}}};
  if (e == "inequality_suite")
    return {{"functions", 200}, {"r_list", {1.0, 2.0, 4.0}}, {"s_list", {0.25, 0.5, 1.0}},
            {"R", 6.0},         {"h", 0.01},                 {"support", 5.0},
            {"seed", 11},       {"rrr1_r", {0.0, 1.0, 10.0, 100.0, 1000.0}}, {"rrr1_terms", 1000000}};
  fail(ErrorKind::Config, "unknown experiment '" + e + "'");
}

void merge_strict(json& base, const json& user, const std::string& path) {
  if (!user.is_object()) fail(ErrorKind::Config, "'" + path + "' must be an object");
  for (auto it = user.begin(); it != user.end(); ++it) {
    const std::string key = path.empty() ? it.key() : path + "." + it.key();
    if (!base.contains(it.key())) fail(ErrorKind::Config, "unknown key '" + key + "'");
    json& b = base[it.key()];
    if (b.is_object()) {
      merge_strict(b, it.value(), key);
      continue;
    }
    const json& v = it.value();
    const bool numeric_slot = b.is_number() || b == "inf";
    const bool ok = (numeric_slot && (v.is_number() || v.is_string())) || (b.is_string() && v.is_string()) ||
                    (b.is_boolean() && v.is_boolean()) || (b.is_array() && v.is_array());
    if (!ok) fail(ErrorKind::Config, "key '" + key + "' has the wrong type");
    if (numeric_slot && v.is_string() && v != "inf" && v != "-inf")
      fail(ErrorKind::Config, "key '" + key + "' must be a number");
    if (b.is_number_integer() && !v.is_number_integer())
      fail(ErrorKind::Config, "key '" + key + "' must be an integer");
    if (b.is_array() && !b.empty()) {
      // element shape follows the default's first element
      for (const auto& e : v) {
        const json& ref = b.front();
        const bool same = (ref.is_number() && (e.is_number() || e == "inf" || e == "-inf")) ||
                          (ref.is_array() && e.is_array() && e.size() == ref.size()) ||
                          (ref.is_boolean() && e.is_boolean());
        if (!same) fail(ErrorKind::Config, "key '" + key + "' has a malformed element");
      }
    }
    b = v;
  }
}

}  // namespace

double get_number(const json& j, const std::string& key) {
  if (!j.contains(key)) fail(ErrorKind::Config, "missing key '" + key + "'");
  const json& v = j.at(key);
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
  }
  fail(ErrorKind::Config, "key '" + key + "' must be a number or \"inf\"");
}

json default_config(const std::string& experiment) {
  json c;
  c["experiment"] = experiment;
  c["output_dir"] = "out";
  json pot = potential_defaults();
  json ker = kernel_defaults();
  if (experiment == "valley") {
    pot["family"] = "valley";
    pot["radius_law"] = "exp_log";
    ker["alpha1"] = 0.5;
    ker["alpha2"] = 0.5;
  }
  c["model"] = {{"kernel", ker}, {"potential", pot}};
  c["grid"] = {{"R", 10.0}, {"N", 401}};
  c["scheme"] = {{"eps_cut", 0.01}, {"dt", 1e-3}, {"seed", 20240601}, {"paths", 10000}, {"workers", 1}};
  c["tolerances"] = {{"symmetry", 1e-12},
                     {"residual", 1e-8},
                     {"orthonormality", 1e-8},
                     {"chapman_kolmogorov", 1e-8},
                     {"variational", 1e-6}};
  c["params"] = params_defaults(experiment);
  return c;
}

KernelSpec kernel_from_json(const json& j) {
  KernelSpec k;
  k.family = kernel_family_from_string(j.at("family").get<std::string>());
  k.d = j.at("d").get<int>();
  k.alpha1 = get_number(j, "alpha1");
  k.alpha2 = get_number(j, "alpha2");
  k.kappa = get_number(j, "kappa");
  k.gamma = get_number(j, "gamma");
  k.c1 = get_number(j, "c1");
  k.c2 = get_number(j, "c2");
  k.c_tail = get_number(j, "c_tail");
  return k;
}

PotentialSpec potential_from_json(const json& j) {
  PotentialSpec p;
  p.family = potential_family_from_string(j.at("family").get<std::string>());
  p.c = get_number(j, "c");
  p.theta = get_number(j, "theta");
  p.theta1 = get_number(j, "theta1");
  p.theta2 = get_number(j, "theta2");
  p.K = get_number(j, "K");
  if (j.contains("off_valley")) {
    p.k0 = get_number(j, "k0");
    p.alpha = get_number(j, "alpha");
    p.dim = j.at("dim").get<int>();
    const auto law = j.at("radius_law").get<std::string>();
    if (law == "power") p.radius_law = ValleyRadiusLaw::power;
    else if (law == "exp_log") p.radius_law = ValleyRadiusLaw::exp_log;
    else fail(ErrorKind::Config, "radius_law must be power or exp_log");
    p.c6 = get_number(j, "c6");
    p.eta1 = get_number(j, "eta1");
    p.eta2 = get_number(j, "eta2");
    p.max_balls = j.at("max_balls").get<long>();
    if (p.family == PotentialFamily::valley) {
      const PotentialSpec off = potential_from_json(j.at("off_valley"));
      if (off.family == PotentialFamily::valley) fail(ErrorKind::Config, "off_valley must be radial");
      p.off_valley = std::make_shared<const PotentialSpec>(off);
    }
  }
  return p;
}

json resolve_config(const json& user, const Overrides& ov) {
  try {
    if (!user.is_object()) fail(ErrorKind::Config, "config must be a JSON object");
    std::string exp = "spectrum";
    if (user.contains("experiment")) {
      if (!user["experiment"].is_string()) fail(ErrorKind::Config, "experiment must be a string");
      exp = user["experiment"].get<std::string>();
    }
    if (ov.experiment) exp = *ov.experiment;
    if (std::find(kExperiments.begin(), kExperiments.end(), exp) == kExperiments.end())
      fail(ErrorKind::Config, "unknown experiment '" + exp + "'");
    json c = default_config(exp);
    merge_strict(c, user, "");
    c["experiment"] = exp;
    if (ov.out) c["output_dir"] = *ov.out;
    if (ov.seed) c["scheme"]["seed"] = *ov.seed;
    if (ov.threads) c["scheme"]["workers"] = *ov.threads;

    // value checks, so a bad config never reaches a pipeline
    const KernelSpec k = kernel_from_json(c["model"]["kernel"]);
    k.validate();
    const PotentialSpec p = potential_from_json(c["model"]["potential"]);
    p.validate();
    const double R = get_number(c["grid"], "R");
    if (!c["grid"]["N"].is_number_integer()) fail(ErrorKind::Config, "grid.N must be an integer");
    const long N = c["grid"]["N"].get<long>();
    if (!(R > 0) || !std::isfinite(R)) fail(ErrorKind::Config, "grid.R must be positive");
    if (N < 16 || N % 2 == 0) fail(ErrorKind::Config, "grid.N must be odd and at least 16");
    const json& s = c["scheme"];
    if (!(get_number(s, "eps_cut") > 0) || !(get_number(s, "dt") > 0))
      fail(ErrorKind::Config, "scheme.eps_cut and scheme.dt must be positive");
    if (!s["seed"].is_number_unsigned() && !(s["seed"].is_number_integer() && s["seed"].get<long long>() >= 0))
      fail(ErrorKind::Config, "scheme.seed must be a non-negative integer");
    if (!s["paths"].is_number_integer() || s["paths"].get<long>() < 1)
      fail(ErrorKind::Config, "scheme.paths must be a positive integer");
    if (!s["workers"].is_number_integer() || s["workers"].get<int>() < 1)
      fail(ErrorKind::Config, "scheme.workers must be a positive integer");
    for (auto it = c["tolerances"].begin(); it != c["tolerances"].end(); ++it)
      if (!(get_number(c["tolerances"], it.key()) > 0)) fail(ErrorKind::Config, "tolerances must be positive");
    if (!c["output_dir"].is_string() || c["output_dir"].get<std::string>().empty())
      fail(ErrorKind::Config, "output_dir must be a non-empty string");
    if (exp == "iuc_dichotomy" && p.family != PotentialFamily::power)
      fail(ErrorKind::Config, "iuc_dichotomy sweeps theta of a power potential");
    if (exp == "valley" && p.family != PotentialFamily::valley)
      fail(ErrorKind::Config, "valley needs a valley potential");
    return c;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    fail(ErrorKind::Config, e.what());
  } catch (const json::exception& e) {
    fail(ErrorKind::Config, std::string("malformed config: ") + e.what());
  }
}

}  // namespace fklab::cli
