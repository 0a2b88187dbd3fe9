// SPDX-License-Identifier: Apache-2.0

#ifndef D2DSIM_SYNTH_HPP
#define D2DSIM_SYNTH_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "d2dsim/random.hpp"
#include "d2dsim/trace.hpp"

namespace d2dsim {

enum class Area { indoor, outdoor };

std::string_view to_string(Area area);
Area parse_area(std::string_view name);

struct SynthConfig {
  std::size_t n_users = 1000;
  std::size_t n_regions = 40;
  Area area = Area::indoor;

  // Social side.
  double avg_degree = 40.0;
  double lambda_p_min = 0.001;  // posts per user per slot
  double lambda_p_max = 0.02;
  double reshare_mean_latency_s = 36000.0;
  double powerlaw_exponent_edges = 2.0;
  double reshare_prob_min = 0.004;  // lower bound of the edge power law

  // Mobility side.
  double zipf_exponent_regions = 1.0;
  double powerlaw_exponent_migration = 2.0;
  double crowdedness_min = 0.0;  // users per region
  double crowdedness_max = 15.0;
  std::optional<double> target_crowdedness;  // midpoint of the range when unset
  double mean_association_s = 240.0;
  double mean_session_s = 3600.0;  // length of one stay in the area
  std::size_t favored_regions_min = 3;
  std::size_t favored_regions_max = 8;
  double favored_share = 0.9;  // stationary mass on a user's favored regions

  std::int64_t horizon_slots = 500;
  Seconds slot_length_s = 300;
  std::uint64_t seed = 1;

  static SynthConfig indoor();
  static SynthConfig outdoor();

  /// Throws ValidationError on an inconsistent configuration.
  void validate() const;

  double crowdedness() const;
  /// Fraction of time a user spends inside the area to hit the target crowdedness.
  double presence_fraction() const;
  Seconds horizon_s() const { return horizon_slots * slot_length_s; }
};

struct PropagationTrace {
  std::vector<ShareEvent> events;       // sorted by (time, content, sharer)
  std::vector<double> post_rate;        // per-user lambda_P actually drawn
  std::size_t content_count = 0;
};

/// Uniform random graph with round(n * avg_degree / 2) distinct edges; edge
/// reshare probabilities follow a power law bounded to [reshare_prob_min, 1].
SocialGraph gen_social_graph(const SynthConfig& cfg);

/// Edges drawn uniformly from the user pairs whose home distance lies in
/// [min_distance_m, max_distance_m). Up to round(n * avg_degree / 2) edges;
/// fewer when the interval holds fewer pairs.
SocialGraph gen_distance_graph(const SynthConfig& cfg, std::span<const Region> homes,
                               double min_distance_m, double max_distance_m);

/// Sample from the bounded power law p(x) ~ x^-exponent on [lo, hi].
double bounded_powerlaw(double exponent, double lo, double hi, Rng& rng);

/// Poisson posting per user and slot, then independent reshare cascades.
PropagationTrace gen_propagation(const SynthConfig& cfg, const SocialGraph& graph);

/// Reshares caused by one post. Each friend of a sharer reshares with the
/// edge probability after an exponential delay; a user reshares a content at
/// most once (the earliest trigger wins). Events at or after `end` are cut.
std::vector<ShareEvent> simulate_cascade(const SocialGraph& graph, const ShareEvent& post,
                                         double mean_latency_s, Seconds end, Rng& rng);

/// Region layout plus preference-biased walks with on/off presence sessions.
MobilityTrace gen_mobility(const SynthConfig& cfg);

/// Region centers for the configured area.
std::vector<Region> region_layout(const SynthConfig& cfg);

/// Convenience bundle: graph, propagation and mobility for one seed.
struct SyntheticTraces {
  SocialTrace social;
  MobilityTrace mobility;
  std::vector<double> post_rate;
};

SyntheticTraces gen_traces(const SynthConfig& cfg);

// Diagnostics used to check the generator against its targets.

/// Association records per region.
std::vector<std::size_t> region_visit_counts(const MobilityTrace& trace);

/// Least-squares slope of log(count) against log(rank) over the nonzero
/// counts sorted descending, returned as a positive exponent.
double fit_zipf_exponent(std::vector<std::size_t> counts);

/// Fraction of users active in [0, window_s) who make at least two separate
/// visits to one region inside that window. A visit is a maximal run of
/// back-to-back associations with the same region.
double revisit_fraction(const MobilityTrace& trace, Seconds window_s);

/// Time-averaged number of associated users per region over [0, horizon_s).
double mean_crowdedness(const MobilityTrace& trace, Seconds horizon_s);

}  // namespace d2dsim

#endif  // D2DSIM_SYNTH_HPP
