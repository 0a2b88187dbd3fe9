// SPDX-License-Identifier: Apache-2.0

#ifndef D2DSIM_TEST_HELPERS_HPP
#define D2DSIM_TEST_HELPERS_HPP

#include <filesystem>
#include <string>

#include "d2dsim/sweep.hpp"

namespace d2dsim::test {

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(D2DSIM_FIXTURES) / name; }

/// Small but busy scenario: 60 users in 8 regions over 60 slots.
inline ExperimentConfig small_experiment() {
  ExperimentConfig cfg;
  cfg.synth.n_users = 60;
  cfg.synth.n_regions = 8;
  cfg.synth.target_crowdedness = 3.0;
  cfg.synth.avg_degree = 10.0;
  cfg.synth.lambda_p_min = 0.02;
  cfg.synth.lambda_p_max = 0.05;
  cfg.synth.reshare_mean_latency_s = 3600.0;
  cfg.synth.horizon_slots = 60;
  cfg.sim.horizon_slots = 60;
  return cfg;
}

/// Fresh scratch directory under the system temp dir.
inline std::filesystem::path scratch_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("d2dsim_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace d2dsim::test

#endif  // D2DSIM_TEST_HELPERS_HPP
