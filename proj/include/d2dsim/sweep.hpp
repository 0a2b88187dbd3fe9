// SPDX-License-Identifier: Apache-2.0

#ifndef D2DSIM_SWEEP_HPP
#define D2DSIM_SWEEP_HPP

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "d2dsim/metrics.hpp"
#include "d2dsim/simulator.hpp"
#include "d2dsim/synth.hpp"

namespace d2dsim {

/// Everything one experiment needs: generator, mapping and engine settings.
/// The per-run seed overrides the seeds inside `synth` and `sim`.
struct ExperimentConfig {
  SynthConfig synth;
  SimConfig sim;
  MappingScheme mapping = MappingScheme::independent;
  std::vector<std::uint64_t> seeds{1};
  std::vector<StrategyKind> strategies{StrategyKind::proposed, StrategyKind::movement, StrategyKind::popularity};
  std::size_t jobs = 1;
};

/// Home-distance interval [min_m, max_m) for friend pairs.
struct DistanceBin {
  double min_m = 0.0;
  double max_m = std::numeric_limits<double>::infinity();
};

/// Friend pairs restricted to one distance bin; the graph is drawn over the
/// users' home regions instead of uniformly.
Scenario make_scenario(const ExperimentConfig& cfg, std::uint64_t seed,
                       std::optional<DistanceBin> friend_distance = std::nullopt);

/// Mean home distance over graph edges whose endpoints both have a home;
/// NaN when there are none.
double mean_friend_distance(const Scenario& scenario);

/// Requests per content over the whole trace: every reshare counts,
/// whether or not the requester is associated.
std::vector<std::size_t> content_request_counts(const Scenario& scenario);

/// Mask of the top ceil(fraction · n) of all n contents, ranked by request
/// count then id. A fraction of 1 yields an empty mask (no restriction).
std::vector<std::uint8_t> top_content_mask(std::span<const std::size_t> counts, double fraction);

struct ExperimentRun {
  SimConfig sim;
  SimResult result;
  MetricsReport metrics;
};

/// One simulation on a prepared scenario.
ExperimentRun run_experiment(const Scenario& scenario, const ExperimentConfig& cfg, std::uint64_t seed,
                             StrategyKind strategy);

enum class SweepAxis {
  propagation_intensity,
  crowdedness,
  friend_distance,
  mapping_scheme,
  content_popularity_bin,
  top_content_fraction,
};

SweepAxis parse_sweep_axis(std::string_view name);
std::string_view to_string(SweepAxis axis);

/// Distance bins with edges 0, 500, 1500, 2500, 5000 m and an open last bin.
std::vector<std::string> default_friend_distance_bins();

/// "lo-hi" in metres or requests; "inf" for an open upper end.
DistanceBin parse_range(std::string_view text);

struct SweepSeedRow {
  std::string value;
  StrategyKind strategy = StrategyKind::proposed;
  std::uint64_t seed = 0;
  std::size_t requests = 0;
  std::size_t d2d = 0;
  double d2d_fraction = 0.0;
  double friend_distance_m = std::numeric_limits<double>::quiet_NaN();
};

struct SweepRow {
  std::string value;
  StrategyKind strategy = StrategyKind::proposed;
  std::size_t seeds = 0;
  double mean_fraction = 0.0;  // mean of per-seed fractions
  double stdev_fraction = 0.0;
  std::size_t requests = 0;  // summed over seeds
  std::size_t d2d = 0;
  double friend_distance_m = std::numeric_limits<double>::quiet_NaN();
};

struct SweepResult {
  SweepAxis axis = SweepAxis::crowdedness;
  std::vector<SweepRow> rows;           // value-major, then strategy
  std::vector<SweepSeedRow> seed_rows;  // long format
};

/// Runs every (value, seed, strategy) combination. Points run on up to
/// `cfg.jobs` threads; output order and content do not depend on it.
SweepResult run_sweep(SweepAxis axis, std::span<const std::string> values, const ExperimentConfig& cfg);

/// `axis,value,strategy,seeds,mean_d2d_fraction,stdev_d2d_fraction,requests,d2d,friend_distance_m`
void write_sweep(std::ostream& out, const SweepResult& result);
/// `axis,value,strategy,seed,requests,d2d,d2d_fraction,friend_distance_m`
void write_sweep_long(std::ostream& out, const SweepResult& result);

}  // namespace d2dsim

#endif  // D2DSIM_SWEEP_HPP
