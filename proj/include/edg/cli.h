#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "edg/diagnostics.h"
#include "edg/dynamics.h"
#include "edg/error.h"
#include "edg/kernel.h"

namespace edg::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kAuditFailed = 2,
  kSupercritical = 3,
  kIntegratorFailure = 4,
  kConfigError = 64,
};

int exit_code_for(const Error& e);

struct AuditSettings {
  Index k_max = 100;
  Index l_max = 100;
  double bda_tolerance = 1e-10;
};

struct SweepSettings {
  std::vector<double> densities;
  unsigned parallel = 1;
  Index min_cluster = 1;  // monodisperse start size is max(min_cluster, ceil(rho))
};

struct ExperimentConfig {
  nlohmann::json kernel_spec;
  Index n_trunc = 256;
  nlohmann::json initial = {{"type", "vacuum"}};
  IntegratorConfig integrator;
  LongtimeConfig analysis;
  double checkpoint_every = 0.0;  // simulated time between checkpoints; 0 = only at exit
  bool thermo = true;             // record F and D along trajectories
  AuditSettings audit;
  std::optional<double> eq_rho, eq_phi;
  Index series_cap = kDefaultSeriesCap;
  SweepSettings sweep;
  Index weights_k_max = 10000;
  std::uint64_t seed = 0;

  /// Every field, defaults included, so outputs are self-describing.
  nlohmann::json resolved() const;
};

/// Throws Error(config) on missing or malformed fields.
ExperimentConfig parse_config(const nlohmann::json& doc);
ExperimentConfig load_config(const std::filesystem::path& path);

/// Builds the initial state described by `initial` on 0..n.
ConcentrationProfile initial_profile(const nlohmann::json& initial, Index n, const Kernel& kernel,
                                     Index series_cap);

int cmd_check_kernel(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log);
int cmd_equilibrium(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log);
int cmd_simulate(const ExperimentConfig& cfg, const std::filesystem::path& out,
                 const std::optional<std::filesystem::path>& resume, std::ostream& log);
int cmd_sweep(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log);
int cmd_weights(const ExperimentConfig& cfg, const std::filesystem::path& out, std::ostream& log);

/// Full command-line entry point (argument parsing included).
int run(int argc, const char* const* argv, std::ostream& log, std::ostream& err);

}  // namespace edg::cli
