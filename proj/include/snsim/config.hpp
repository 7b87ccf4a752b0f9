#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "snsim/device.hpp"
#include "snsim/units.hpp"

// Run configuration: JSON file with the schema documented in the README.
// Every field has a default (the measured device values and the standard
// grids), so an empty file is a valid full-default configuration. Unknown
// keys are rejected by name.

namespace snsim {

inline constexpr const char* snsim_version = "0.1.0";
inline const double default_theta0 = deg_to_rad(23.0);

struct RunConfig {
  DeviceParams device;
  std::string experiment = "correlator";  // loci | tomography | correlator |
                                          // theta_sweep | power_sweep | spectrum |
                                          // oracle_check
  std::uint64_t seed = 20240901;
  int threads = 0;
  std::string out_dir = ".";

  // laser and analyzer
  double omega_laser = 0.0;  // ueV relative to the mean QD energy
  double power_pW = 4.0;
  double theta = 0.0;
  double theta0 = default_theta0;

  // grids
  double omega_half_span = 20.0;  // ueV
  int omega_points = 161;
  double tau_min = 0.02;  // ns, first nonzero point of the log grid
  double tau_max = 500.0;
  int tau_points = 1000;
  bool tau_auto_extend = true;  // grow tau_max until the correlator has decayed
  int theta_points = 13;
  std::vector<double> powers_pW = {1.0, 2.0, 4.0, 8.0, 16.0};

  // environment sampling
  int n_overhauser = 500;
  int n_wandering = 15;

  // trajectory oracle
  double oracle_duration_ns = 2e6;
  int oracle_chunks = 8;
  double oracle_bin_ns = 8.0;
  double oracle_tau_max_ns = 64.0;
  int oracle_n_overhauser = 6;
  int oracle_n_wandering = 3;
};

namespace detail {

inline void check_known_keys(const nlohmann::json& j,
                             const std::vector<std::string>& known,
                             const std::string& scope) {
  std::string unknown;
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      unknown += (unknown.empty() ? "" : ", ") + it.key();
  }
  if (!unknown.empty())
    throw std::invalid_argument("config: unknown key(s) in " + scope + ": " + unknown);
}

}  // namespace detail

inline void device_from_json(const nlohmann::json& j, DeviceParams& p) {
  detail::check_known_keys(
      j,
      {"omega_qd_mean", "delta_z", "omega_cav_h", "omega_cav_v", "kappa_h", "kappa_v",
       "eta_top", "g", "gamma_sp", "gamma_star", "sigma_sw", "gamma_e", "tau_e",
       "p_charged", "zeeman_split_ratio", "hole_hyperfine_ratio", "tau_h",
       "omega_qd_abs_eV"},
      "device");
  p.omega_qd_mean = j.value("omega_qd_mean", p.omega_qd_mean);
  p.delta_z = j.value("delta_z", p.delta_z);
  p.omega_cav_h = j.value("omega_cav_h", p.omega_cav_h);
  p.omega_cav_v = j.value("omega_cav_v", p.omega_cav_v);
  p.kappa_h = j.value("kappa_h", p.kappa_h);
  p.kappa_v = j.value("kappa_v", p.kappa_v);
  p.eta_top = j.value("eta_top", p.eta_top);
  p.g = j.value("g", p.g);
  p.gamma_sp = j.value("gamma_sp", p.gamma_sp);
  p.gamma_star = j.value("gamma_star", p.gamma_star);
  p.sigma_sw = j.value("sigma_sw", p.sigma_sw);
  p.gamma_e = j.value("gamma_e", p.gamma_e);
  p.tau_e = j.value("tau_e", p.tau_e);
  p.p_charged = j.value("p_charged", p.p_charged);
  p.zeeman_split_ratio = j.value("zeeman_split_ratio", p.zeeman_split_ratio);
  p.hole_hyperfine_ratio = j.value("hole_hyperfine_ratio", p.hole_hyperfine_ratio);
  p.tau_h = j.value("tau_h", p.tau_h);
  p.omega_qd_abs_eV = j.value("omega_qd_abs_eV", p.omega_qd_abs_eV);
}

inline nlohmann::json device_to_json(const DeviceParams& p) {
  return nlohmann::json{{"omega_qd_mean", p.omega_qd_mean},
                        {"delta_z", p.delta_z},
                        {"omega_cav_h", p.omega_cav_h},
                        {"omega_cav_v", p.omega_cav_v},
                        {"kappa_h", p.kappa_h},
                        {"kappa_v", p.kappa_v},
                        {"eta_top", p.eta_top},
                        {"g", p.g},
                        {"gamma_sp", p.gamma_sp},
                        {"gamma_star", p.gamma_star},
                        {"sigma_sw", p.sigma_sw},
                        {"gamma_e", p.gamma_e},
                        {"tau_e", p.tau_e},
                        {"p_charged", p.p_charged},
                        {"zeeman_split_ratio", p.zeeman_split_ratio},
                        {"hole_hyperfine_ratio", p.hole_hyperfine_ratio},
                        {"tau_h", p.tau_h},
                        {"omega_qd_abs_eV", p.omega_qd_abs_eV}};
}

inline RunConfig config_from_json(const nlohmann::json& j) {
  detail::check_known_keys(
      j, {"device",      "experiment",   "seed",          "threads",
          "out_dir",     "omega_laser",  "power_pW",      "theta",
          "theta0",      "omega_half_span", "omega_points", "tau_min",
          "tau_max",     "tau_points",   "tau_auto_extend", "theta_points",
          "powers_pW",   "n_overhauser", "n_wandering",   "oracle"},
      "config");
  RunConfig c;
  if (j.contains("device")) device_from_json(j.at("device"), c.device);
  c.experiment = j.value("experiment", c.experiment);
  c.seed = j.value("seed", c.seed);
  c.threads = j.value("threads", c.threads);
  c.out_dir = j.value("out_dir", c.out_dir);
  c.omega_laser = j.value("omega_laser", c.omega_laser);
  c.power_pW = j.value("power_pW", c.power_pW);
  c.theta = j.value("theta", c.theta);
  c.theta0 = j.value("theta0", c.theta0);
  c.omega_half_span = j.value("omega_half_span", c.omega_half_span);
  c.omega_points = j.value("omega_points", c.omega_points);
  c.tau_min = j.value("tau_min", c.tau_min);
  c.tau_max = j.value("tau_max", c.tau_max);
  c.tau_points = j.value("tau_points", c.tau_points);
  c.tau_auto_extend = j.value("tau_auto_extend", c.tau_auto_extend);
  c.theta_points = j.value("theta_points", c.theta_points);
  if (j.contains("powers_pW")) c.powers_pW = j.at("powers_pW").get<std::vector<double>>();
  c.n_overhauser = j.value("n_overhauser", c.n_overhauser);
  c.n_wandering = j.value("n_wandering", c.n_wandering);
  if (j.contains("oracle")) {
    const auto& o = j.at("oracle");
    detail::check_known_keys(o,
                             {"duration_ns", "chunks", "bin_ns", "tau_max_ns",
                              "n_overhauser", "n_wandering"},
                             "oracle");
    c.oracle_duration_ns = o.value("duration_ns", c.oracle_duration_ns);
    c.oracle_chunks = o.value("chunks", c.oracle_chunks);
    c.oracle_bin_ns = o.value("bin_ns", c.oracle_bin_ns);
    c.oracle_tau_max_ns = o.value("tau_max_ns", c.oracle_tau_max_ns);
    c.oracle_n_overhauser = o.value("n_overhauser", c.oracle_n_overhauser);
    c.oracle_n_wandering = o.value("n_wandering", c.oracle_n_wandering);
  }

  c.device.validate();
  const std::vector<std::string> experiments = {"loci",        "tomography",
                                                "correlator",  "theta_sweep",
                                                "power_sweep", "spectrum",
                                                "oracle_check"};
  if (std::find(experiments.begin(), experiments.end(), c.experiment) == experiments.end())
    throw std::invalid_argument("config: unknown experiment '" + c.experiment + "'");
  if (c.omega_points < 2 || c.tau_points < 2 || c.theta_points < 2)
    throw std::invalid_argument("config: grids need at least 2 points");
  if (c.n_overhauser < 1 || c.n_wandering < 1)
    throw std::invalid_argument("config: sample counts must be >= 1");
  return c;
}

inline nlohmann::json config_to_json(const RunConfig& c) {
  nlohmann::json j;
  j["device"] = device_to_json(c.device);
  j["experiment"] = c.experiment;
  j["seed"] = c.seed;
  j["threads"] = c.threads;
  j["out_dir"] = c.out_dir;
  j["omega_laser"] = c.omega_laser;
  j["power_pW"] = c.power_pW;
  j["theta"] = c.theta;
  j["theta0"] = c.theta0;
  j["omega_half_span"] = c.omega_half_span;
  j["omega_points"] = c.omega_points;
  j["tau_min"] = c.tau_min;
  j["tau_max"] = c.tau_max;
  j["tau_points"] = c.tau_points;
  j["tau_auto_extend"] = c.tau_auto_extend;
  j["theta_points"] = c.theta_points;
  j["powers_pW"] = c.powers_pW;
  j["n_overhauser"] = c.n_overhauser;
  j["n_wandering"] = c.n_wandering;
  j["oracle"] = {{"duration_ns", c.oracle_duration_ns},
                 {"chunks", c.oracle_chunks},
                 {"bin_ns", c.oracle_bin_ns},
                 {"tau_max_ns", c.oracle_tau_max_ns},
                 {"n_overhauser", c.oracle_n_overhauser},
                 {"n_wandering", c.oracle_n_wandering}};
  return j;
}

// Empty or whitespace-only file: full defaults.
inline RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("config: cannot open " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) return RunConfig{};
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(std::string("config: parse error: ") + e.what());
  }
  return config_from_json(j);
}

// FNV-1a over the canonical (sorted-key) serialization; embedded in every
// output artifact so a run can be reproduced from its header.
inline std::uint64_t config_hash(const RunConfig& c) {
  const std::string canonical = config_to_json(c).dump();
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace snsim
