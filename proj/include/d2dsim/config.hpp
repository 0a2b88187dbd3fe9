// SPDX-License-Identifier: Apache-2.0

#ifndef D2DSIM_CONFIG_HPP
#define D2DSIM_CONFIG_HPP

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "d2dsim/sweep.hpp"

namespace d2dsim {

/// Settings for one CLI invocation: the experiment plus optional trace inputs.
struct RunConfig {
  ExperimentConfig experiment;
  std::optional<std::filesystem::path> social_trace;
  std::optional<std::filesystem::path> mobility_trace;

  std::uint64_t seed() const { return experiment.seeds.front(); }
};

using Settings = std::vector<std::pair<std::string, std::string>>;

/// `key = value` lines; '#' starts a comment. Throws ParseError with the line.
Settings read_settings(std::istream& in);
Settings load_settings(const std::filesystem::path& path);

/// Applies settings in order, except that `scenario` is applied first since
/// it resets the generator defaults. Unknown keys and bad values throw
/// std::invalid_argument.
void apply_settings(RunConfig& cfg, const Settings& settings);

/// Every parameter that affects output, one sorted `key=value` per line.
std::string canonical_config(const RunConfig& cfg);

}  // namespace d2dsim

#endif  // D2DSIM_CONFIG_HPP
