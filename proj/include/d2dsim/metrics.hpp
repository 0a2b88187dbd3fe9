// SPDX-License-Identifier: Apache-2.0

#ifndef D2DSIM_METRICS_HPP
#define D2DSIM_METRICS_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "d2dsim/simulator.hpp"

namespace d2dsim {

struct MetricsReport {
  std::string strategy;
  bool empty = true;  // no requests: fractions are reported as 0
  std::size_t requests = 0;
  std::size_t d2d = 0;
  std::size_t self_served = 0;  // requester already held the content
  double d2d_fraction = 0.0;

  std::vector<std::size_t> slot_requests;
  std::vector<std::size_t> slot_d2d;
  std::vector<double> slot_fraction;        // 0 for slots without requests
  std::vector<double> cumulative_fraction;  // running d2d / running requests

  std::vector<std::size_t> contribution;  // uploads per user; sums to d2d

  // Copied from the simulation when available.
  std::size_t off_network_requests = 0;
  std::size_t replica_fetch_d2d = 0;
  std::size_t replica_fetch_server = 0;
  std::size_t popularity_violations = 0;
  std::size_t popularity_cells = 0;

  std::size_t server() const { return requests - d2d; }
};

/// Metrics from an outcome log. `n_users` and `horizon_slots` size the
/// per-user and per-slot vectors; they grow to cover the log if too small.
MetricsReport compute_metrics(std::span<const RequestOutcome> log, std::size_t n_users, Seconds slot_length_s,
                              Slot horizon_slots);

/// compute_metrics plus the simulation-side counters.
MetricsReport compute_metrics(const SimResult& result, std::size_t n_users, const SimConfig& cfg);

/// (uploads, number of users with exactly that many uploads), ascending.
std::vector<std::pair<std::size_t, std::size_t>> contribution_histogram(std::span<const std::size_t> contribution);

/// Requests and D2D-served requests per content id.
struct ContentStats {
  std::size_t requests = 0;
  std::size_t d2d = 0;
};
std::vector<ContentStats> per_content(std::span<const RequestOutcome> log);

/// One header line and one row.
void write_metrics_summary(std::ostream& out, const MetricsReport& m);
/// `slot,requests,d2d,fraction,cumulative`.
void write_metrics_series(std::ostream& out, const MetricsReport& m);
/// `user,uploads`.
void write_contributions(std::ostream& out, const MetricsReport& m);

}  // namespace d2dsim

#endif  // D2DSIM_METRICS_HPP
