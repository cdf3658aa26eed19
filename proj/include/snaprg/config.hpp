#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <utility>

#include <json.hpp>

#include "snaprg/lattice.hpp"
#include "snaprg/mcmc.hpp"
#include "snaprg/wfn.hpp"

namespace snaprg {

/// Validated run configuration (JSON file with sections lattice, model,
/// sampler, rg, wfn, fit, io). Unknown keys are rejected; every value is
/// checked against the consuming module's preconditions before any work
/// starts. Temperature may be given as beta, T, or T/T_c (built-in models).
struct RunConfig {
  LatticeSpec lattice;
  double coupling = 1.0;
  Perturbation perturbation = Perturbation::None;
  std::optional<double> perturbation_strength;

  SamplerConfig sampler;
  int rg_steps = 0;

  WfnOptions wfn;
  double bin_ratio = 1.3;

  std::optional<std::pair<double, double>> fit_window;  // nullopt = auto

  std::filesystem::path output_dir = "out";
  std::string basename = "run";

  IsingModel make_model() const {
    return IsingModel(lattice, coupling, perturbation, perturbation_strength);
  }
};

/// Parses and validates; throws std::invalid_argument with the offending
/// field path (e.g. "sampler.mix") on any violation.
RunConfig parse_config(const nlohmann::json& j);
RunConfig load_config(const std::filesystem::path& path);

}  // namespace snaprg
