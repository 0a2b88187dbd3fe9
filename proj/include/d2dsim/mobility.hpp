// SPDX-License-Identifier: Apache-2.0

#ifndef D2DSIM_MOBILITY_HPP
#define D2DSIM_MOBILITY_HPP

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "d2dsim/ids.hpp"
#include "d2dsim/trace.hpp"

namespace d2dsim {

/// paper_column divides each count by its destination column total;
/// row divides by its source row total.
enum class MigrationNorm { paper_column, row };

MigrationNorm parse_migration_norm(std::string_view name);
std::string_view to_string(MigrationNorm norm);

struct MigrationMatrix {
  std::size_t n_regions = 0;
  MigrationNorm norm = MigrationNorm::paper_column;
  std::vector<std::int64_t> counts;  // E, row-major n × n
  std::vector<double> normalized;    // Ebar

  std::int64_t count(RegionId r, RegionId s) const { return counts[r * n_regions + s]; }
  double bar(RegionId r, RegionId s) const { return normalized[r * n_regions + s]; }
  std::span<const double> bar_row(RegionId r) const {
    return {normalized.data() + r * n_regions, n_regions};
  }
  std::int64_t total() const;
};

MigrationMatrix migration_index(std::span<const Migration> pairs, std::size_t n_regions,
                                MigrationNorm norm);

/// Consecutive association pairs of each user inside `events` (any order).
MigrationMatrix migration_index(std::span<const AssociationEvent> events, std::size_t n_regions,
                                MigrationNorm norm);

/// Q[u] = Ebar[R_u]·P[u] renormalized. Falls back to the P row when that
/// product vanishes, then to uniform over `visited_last_slot`. Empty when all
/// three are empty.
std::vector<double> mobility_index(std::span<const double> ebar_row, std::span<const double> preference,
                                   std::span<const RegionId> visited_last_slot, std::size_t n_regions);

}  // namespace d2dsim

#endif  // D2DSIM_MOBILITY_HPP
