#pragma once

// Experiment and world configuration files (JSON). The experiment config
// names a world file relative to its own location:
//
//   {
//     "world": "world.json",
//     "seed": 7,
//     "ticks": 720, "ticks_per_day": 24, "arrivals_per_tick": 200,
//     "training_period": 4,
//     "model": {"overlap": 12, "own": 12, "eta": 0.001, "lambda_reg": 0,
//               "step_size": 0.05, "adagrad_epsilon": 1e-8},
//     "p2d": {"r_ds": 100, "beta": 13.86, "lambda_mix": 0.1, "uniform_mass": "total"},
//     "ctr_baseline": {"beta": 13.86, "lambda_mix": 0.1},
//     "ranking": {"prior_ctr": 0.02, "prior_cvr": 0.008, "prior_strength": 100,
//                 "eligibility": 0.5},
//     "buckets": [{"name": "conversion-dco", "share": 0.9, "policy": "conversion-dco"}, ...],
//     "report_window": {"begin": 480, "end": 672},
//     "output": {"events": true}
//   }
//
// Unknown keys are rejected. Every error is a ConfigError naming the field.

#include <filesystem>
#include <optional>
#include <string>

#include "dco/metrics.hpp"
#include "dco/simulator.hpp"
#include "dco/world.hpp"

namespace dco {

struct ExperimentConfig {
  std::filesystem::path world_path;
  WorldParams world;
  SimulationSettings simulation;
  Window report_window;
  bool write_events = true;
};

WorldParams parse_world_params(const std::string& text);
WorldParams load_world_params(const std::filesystem::path& path);

// Relative world paths resolve against `base_dir`.
ExperimentConfig parse_experiment_config(const std::string& text,
                                         const std::filesystem::path& base_dir);
ExperimentConfig load_experiment_config(const std::filesystem::path& path);

}  // namespace dco
