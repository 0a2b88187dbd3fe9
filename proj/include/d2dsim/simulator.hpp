// SPDX-License-Identifier: Apache-2.0

#ifndef D2DSIM_SIMULATOR_HPP
#define D2DSIM_SIMULATOR_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "d2dsim/ids.hpp"
#include "d2dsim/mobility.hpp"
#include "d2dsim/propagation.hpp"
#include "d2dsim/random.hpp"
#include "d2dsim/strategy.hpp"
#include "d2dsim/trace.hpp"

namespace d2dsim {

/// `none` replicates nothing beyond what users download for themselves.
enum class StrategyKind { proposed, movement, popularity, none };

StrategyKind parse_strategy(std::string_view name);
std::string_view to_string(StrategyKind kind);

struct SimConfig {
  Seconds slot_length_s = 300;
  Slot horizon_slots = 500;
  Seconds request_deadline_s = 300;
  StrategyKind strategy = StrategyKind::proposed;
  PeerParams peers;
  std::optional<double> alpha_fixed;  // learned when unset
  MigrationNorm migration_norm = MigrationNorm::paper_column;
  Slot influence_window_slots = 0;      // 0: whole history
  Slot preference_window_slots = 2016;  // one week of 5-minute slots
  Slot share_window_slots = 120;        // how long a share keeps a content in play; 0: forever
  double ewma_factor = 0.5;
  std::size_t movement_copies = 5;
  /// Contents allowed D2D service, indexed by content id. Empty allows all;
  /// ids past the end are server-only.
  std::vector<std::uint8_t> d2d_contents;
  bool keep_tables = false;
  std::uint64_t seed = 1;

  void validate() const;
  Seconds horizon_s() const { return horizon_slots * slot_length_s; }
};

struct RequestOutcome {
  Seconds time = 0;
  UserId user;
  ContentId content;
  RegionId region;
  bool d2d = false;
  std::optional<UserId> peer;
  Seconds latency_s = 0;

  friend bool operator==(const RequestOutcome&, const RequestOutcome&) = default;
};

/// Coordinator directory: content → users holding a replica. A holder's
/// region is its current association, so replicas move with their carrier.
class Coordinator {
 public:
  void add(ContentId c, UserId u);
  void remove(ContentId c, UserId u);
  std::span<const UserId> holders(ContentId c) const;
  std::size_t replica_count() const { return replicas_; }

 private:
  std::vector<std::vector<UserId>> holders_;
  std::size_t replicas_ = 0;
};

/// Mutable engine state shared by the slot steps.
struct SimState {
  std::vector<UserCache> caches;
  std::vector<std::size_t> uploads_left;
  std::vector<std::optional<RegionId>> region_of;
  std::vector<std::vector<UserId>> occupants;  // per region
  Coordinator directory;

  SimState() = default;
  SimState(std::size_t n_users, std::size_t n_regions, const PeerParams& peers);

  void enter(UserId u, RegionId r);
  void leave(UserId u);
  /// Cache c at u when there is room; keeps the directory in step.
  bool cache(UserId u, ContentId c);
  void uncache(UserId u, ContentId c);
  /// Throws InvariantError naming the slot when directory and caches disagree.
  void audit(Slot T) const;
};

struct Request {
  Seconds time = 0;
  UserId user;
  ContentId content;
};

/// Same-region holders with upload budget left; one is chosen uniformly and
/// charged one upload. A requester already holding the content serves itself.
/// Otherwise the server answers within the deadline.
RequestOutcome handle_request(const Request& req, SimState& state, Seconds deadline_s, Rng& rng);

/// Resets every upload budget to beta.
void advance_slot(SimState& state, Slot T, const PeerParams& peers);

/// Model tables of one slot, kept for diagnostics.
struct SimTables {
  Slot slot = 0;
  std::vector<std::tuple<UserId, UserId, double>> influence;  // nonzero I on edges
  PreferenceTable preference;
  MigrationMatrix migration;
  PopularityTable popularity;
  std::vector<std::pair<UserId, std::vector<double>>> mobility;  // Q rows of active users
};

void write_tables(const std::filesystem::path& dir, const SimTables& tables);

struct SlotCounts {
  std::size_t requests = 0;
  std::size_t d2d = 0;
};

struct SimResult {
  std::vector<RequestOutcome> outcomes;
  std::vector<SlotCounts> per_slot;
  std::size_t off_network_requests = 0;  // requester not associated anywhere
  std::size_t replica_fetch_d2d = 0;
  std::size_t replica_fetch_server = 0;
  std::size_t popularity_violations = 0;  // (slot, content, region) cells over A
  std::size_t popularity_cells = 0;       // loaded cells checked
  std::optional<SimTables> tables;        // final slot, when requested
};

SimResult run_simulation(const Scenario& scenario, const SimConfig& cfg);

/// Outcome log line: `time,user,content,region,d2d|server,peer|-`.
void write_outcome_log(std::ostream& out, std::span<const RequestOutcome> outcomes);
std::vector<RequestOutcome> read_outcome_log(std::istream& in);

}  // namespace d2dsim

#endif  // D2DSIM_SIMULATOR_HPP
