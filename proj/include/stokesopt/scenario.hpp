#pragma once

// Simulation scenarios: a JSON description of fiber, receiver, launch set and
// Monte-Carlo settings, and the runner behind `stokesopt simulate`.
//
// {
//   "mode": "md" | "mdl" | "joint",
//   "n": 3, "seed": 1, "trials": 10000, "measurement": "analytic" | "waveform",
//   "fiber": {"seed": 5, "tau0": 2e-12, "md_vector": [...] | "md_norm": 1e-12,
//             "pa_coeffs": [...], "pa_slopes": [...], "length": 1000},
//   "receiver": {"responsivity": 1, "n0": 1e-22, "window": 5.04e-8,
//                "pulse_halfwidth": 1e-8, "sample_rate": 5e9,
//                "pulse_energy": 1e-10, "window_center": 0, "spectral_samples": 101},
//   "launch_set": "set.json" | {"family": "yang-nolan", "seed": 1, "starts": 4},
//   "rel_sigma": 1e-4,
//   "dw": 0   (joint mode frequency step; 0 selects a default)
// }

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "json.hpp"
#include "stokesopt/fiber_sim.hpp"

namespace stokesopt {

enum class ScenarioMode { kMd, kMdl, kJoint };

struct Scenario {
  ScenarioMode mode = ScenarioMode::kMd;
  int n = 2;
  std::uint64_t seed = 1;
  int trials = 1000;
  MeasureMode measurement = MeasureMode::kAnalytic;
  FiberModel fiber;
  ReceiverModel receiver;
  std::string launch_family = "yang-nolan";
  std::uint64_t launch_seed = 1;
  int launch_starts = 4;
  std::optional<std::filesystem::path> launch_path;
  double rel_sigma = 0.0;
  double dw = 0.0;
};

/// Throws ParseError naming the offending field; relative launch-set paths
/// resolve against `base_dir`.
Scenario parse_scenario(const nlohmann::json& doc, const std::filesystem::path& base_dir = {});

/// Launch set described by the scenario (file, family or optimized).
LaunchSet scenario_launch_set(const Scenario& s);

struct ScenarioResult {
  nlohmann::json summary;
  std::string per_trial_csv;  // md mode only
};

ScenarioResult run_scenario(const Scenario& s);

}  // namespace stokesopt
