// SPDX-License-Identifier: Apache-2.0

#include "d2dsim/mobility.hpp"

#include <algorithm>
#include <numeric>
#include <string>

namespace d2dsim {

MigrationNorm parse_migration_norm(std::string_view name) {
  if (name == "paper_column") return MigrationNorm::paper_column;
  if (name == "row") return MigrationNorm::row;
  throw std::invalid_argument("unknown migration normalization '" + std::string(name) + "'");
}

std::string_view to_string(MigrationNorm norm) {
  return norm == MigrationNorm::paper_column ? "paper_column" : "row";
}

std::int64_t MigrationMatrix::total() const { return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}); }

MigrationMatrix migration_index(std::span<const Migration> pairs, std::size_t n_regions,
                                MigrationNorm norm) {
  MigrationMatrix m;
  m.n_regions = n_regions;
  m.norm = norm;
  m.counts.assign(n_regions * n_regions, 0);
  m.normalized.assign(n_regions * n_regions, 0.0);
  for (const auto& p : pairs) {
    if (p.from >= n_regions || p.to >= n_regions) throw ValidationError("migration outside region table");
    ++m.counts[p.from * n_regions + p.to];
  }
  std::vector<std::int64_t> totals(n_regions, 0);
  for (std::size_t r = 0; r < n_regions; ++r) {
    for (std::size_t s = 0; s < n_regions; ++s) {
      totals[norm == MigrationNorm::paper_column ? s : r] += m.counts[r * n_regions + s];
    }
  }
  for (std::size_t r = 0; r < n_regions; ++r) {
    for (std::size_t s = 0; s < n_regions; ++s) {
      const std::int64_t t = totals[norm == MigrationNorm::paper_column ? s : r];
      if (t > 0) m.normalized[r * n_regions + s] = static_cast<double>(m.counts[r * n_regions + s]) / static_cast<double>(t);
    }
  }
  return m;
}

MigrationMatrix migration_index(std::span<const AssociationEvent> events, std::size_t n_regions,
                                MigrationNorm norm) {
  std::vector<AssociationEvent> sorted(events.begin(), events.end());
  std::sort(sorted.begin(), sorted.end(), [](const AssociationEvent& a, const AssociationEvent& b) {
    return std::tie(a.user, a.time) < std::tie(b.user, b.time);
  });
  std::vector<Migration> pairs;
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].user != sorted[i - 1].user) continue;
    pairs.push_back({sorted[i].user, sorted[i - 1].region, sorted[i].region, sorted[i].time});
  }
  return migration_index(pairs, n_regions, norm);
}

std::vector<double> mobility_index(std::span<const double> ebar_row, std::span<const double> preference,
                                   std::span<const RegionId> visited_last_slot, std::size_t n_regions) {
  std::vector<double> q(n_regions, 0.0);
  double total = 0.0;
  if (ebar_row.size() == n_regions && preference.size() == n_regions) {
    for (std::size_t r = 0; r < n_regions; ++r) {
      q[r] = ebar_row[r] * preference[r];
      total += q[r];
    }
  }
  if (!(total > 0.0) && preference.size() == n_regions) {
    q.assign(preference.begin(), preference.end());
    total = std::accumulate(q.begin(), q.end(), 0.0);
  }
  if (!(total > 0.0)) {
    std::fill(q.begin(), q.end(), 0.0);
    for (RegionId r : visited_last_slot) q[r] = 1.0;
    total = std::accumulate(q.begin(), q.end(), 0.0);
  }
  if (!(total > 0.0)) return {};
  for (double& x : q) x /= total;
  return q;
}

}  // namespace d2dsim
