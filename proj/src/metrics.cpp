// SPDX-License-Identifier: Apache-2.0

#include "d2dsim/metrics.hpp"

#include <algorithm>
#include <map>
#include <ostream>

namespace d2dsim {

MetricsReport compute_metrics(std::span<const RequestOutcome> log, std::size_t n_users, Seconds slot_length_s,
                              Slot horizon_slots) {
  if (slot_length_s <= 0) throw ValidationError("slot length must be positive");
  MetricsReport m;
  std::size_t slots = static_cast<std::size_t>(std::max<Slot>(0, horizon_slots));
  for (const auto& o : log) {
    slots = std::max(slots, static_cast<std::size_t>(o.time / slot_length_s) + 1);
    n_users = std::max<std::size_t>(n_users, o.user + 1);
    if (o.peer) n_users = std::max<std::size_t>(n_users, *o.peer + 1);
  }
  m.slot_requests.assign(slots, 0);
  m.slot_d2d.assign(slots, 0);
  m.contribution.assign(n_users, 0);
  for (const auto& o : log) {
    const auto t = static_cast<std::size_t>(o.time / slot_length_s);
    ++m.requests;
    ++m.slot_requests[t];
    if (!o.d2d) continue;
    ++m.d2d;
    ++m.slot_d2d[t];
    if (o.peer) {
      ++m.contribution[*o.peer];
      if (*o.peer == o.user) ++m.self_served;
    }
  }
  m.empty = m.requests == 0;
  m.d2d_fraction = m.empty ? 0.0 : static_cast<double>(m.d2d) / static_cast<double>(m.requests);
  m.slot_fraction.assign(slots, 0.0);
  m.cumulative_fraction.assign(slots, 0.0);
  std::size_t run_req = 0;
  std::size_t run_d2d = 0;
  for (std::size_t t = 0; t < slots; ++t) {
    if (m.slot_requests[t] > 0) {
      m.slot_fraction[t] = static_cast<double>(m.slot_d2d[t]) / static_cast<double>(m.slot_requests[t]);
    }
    run_req += m.slot_requests[t];
    run_d2d += m.slot_d2d[t];
    m.cumulative_fraction[t] = run_req == 0 ? 0.0 : static_cast<double>(run_d2d) / static_cast<double>(run_req);
  }
  return m;
}

MetricsReport compute_metrics(const SimResult& result, std::size_t n_users, const SimConfig& cfg) {
  MetricsReport m = compute_metrics(result.outcomes, n_users, cfg.slot_length_s, cfg.horizon_slots);
  m.strategy = std::string(to_string(cfg.strategy));
  m.off_network_requests = result.off_network_requests;
  m.replica_fetch_d2d = result.replica_fetch_d2d;
  m.replica_fetch_server = result.replica_fetch_server;
  m.popularity_violations = result.popularity_violations;
  m.popularity_cells = result.popularity_cells;
  return m;
}

std::vector<std::pair<std::size_t, std::size_t>> contribution_histogram(std::span<const std::size_t> contribution) {
  std::map<std::size_t, std::size_t> bins;
  for (std::size_t c : contribution) ++bins[c];
  return {bins.begin(), bins.end()};
}

std::vector<ContentStats> per_content(std::span<const RequestOutcome> log) {
  std::vector<ContentStats> out;
  for (const auto& o : log) {
    if (o.content >= out.size()) out.resize(o.content + 1);
    ++out[o.content].requests;
    if (o.d2d) ++out[o.content].d2d;
  }
  return out;
}

void write_metrics_summary(std::ostream& out, const MetricsReport& m) {
  out << "strategy,requests,d2d,server,self_served,d2d_fraction,empty,off_network_requests,"
         "replica_fetch_d2d,replica_fetch_server,eq8_violations,eq8_cells\n";
  out << (m.strategy.empty() ? "-" : m.strategy) << ',' << m.requests << ',' << m.d2d << ',' << m.server() << ','
      << m.self_served << ',' << m.d2d_fraction << ',' << (m.empty ? 1 : 0) << ',' << m.off_network_requests << ','
      << m.replica_fetch_d2d << ',' << m.replica_fetch_server << ',' << m.popularity_violations << ','
      << m.popularity_cells << '\n';
}

void write_metrics_series(std::ostream& out, const MetricsReport& m) {
  out << "slot,requests,d2d,fraction,cumulative\n";
  for (std::size_t t = 0; t < m.slot_requests.size(); ++t) {
    out << t << ',' << m.slot_requests[t] << ',' << m.slot_d2d[t] << ',' << m.slot_fraction[t] << ','
        << m.cumulative_fraction[t] << '\n';
  }
}

void write_contributions(std::ostream& out, const MetricsReport& m) {
  out << "user,uploads\n";
  for (std::size_t u = 0; u < m.contribution.size(); ++u) out << u << ',' << m.contribution[u] << '\n';
}

}  // namespace d2dsim
