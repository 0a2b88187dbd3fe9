// SPDX-License-Identifier: Apache-2.0

#ifndef D2DSIM_STRATEGY_HPP
#define D2DSIM_STRATEGY_HPP

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "d2dsim/ids.hpp"
#include "d2dsim/propagation.hpp"
#include "d2dsim/random.hpp"

namespace d2dsim {

struct PeerParams {
  std::size_t cache_capacity = 20;  // B_u, items
  std::size_t upload_capacity = 5;  // beta_u, uploads per slot
};

/// Dense Q (users × regions) and A (contents × regions) for one slot.
struct InstanceSnapshot {
  std::size_t n_users = 0;
  std::size_t n_contents = 0;
  std::size_t n_regions = 0;
  std::vector<double> q;
  std::vector<double> a;
  std::vector<PeerParams> peers;

  InstanceSnapshot() = default;
  InstanceSnapshot(std::size_t users, std::size_t contents, std::size_t regions);

  double& q_at(std::size_t u, std::size_t r) { return q[u * n_regions + r]; }
  double& a_at(std::size_t c, std::size_t r) { return a[c * n_regions + r]; }
  std::span<const double> q_row(std::size_t u) const { return {q.data() + u * n_regions, n_regions}; }
  std::span<const double> a_row(std::size_t c) const { return {a.data() + c * n_regions, n_regions}; }
};

/// K[u][c] for one slot.
struct ReplicationAssignment {
  std::size_t n_users = 0;
  std::size_t n_contents = 0;
  Slot slot = 0;
  std::vector<std::uint8_t> k;

  ReplicationAssignment() = default;
  ReplicationAssignment(std::size_t users, std::size_t contents)
      : n_users(users), n_contents(contents), k(users * contents, 0) {}

  bool at(std::size_t u, std::size_t c) const { return k[u * n_contents + c] != 0; }
  void set(std::size_t u, std::size_t c, bool on) { k[u * n_contents + c] = on ? 1 : 0; }
  std::size_t load(std::size_t u) const;
  friend bool operator==(const ReplicationAssignment&, const ReplicationAssignment&) = default;
};

/// Σ_r Q[u][r]·A[c][r].
double replica_gain(std::span<const double> q_row, std::span<const double> a_row);

/// Contents c with A[c][r] > 0 and Q[u][r] > 0 for some r, as snapshot indices.
std::vector<std::size_t> candidate_set(const InstanceSnapshot& snap, std::size_t u);
/// Same over a popularity table; returns table row indices in ascending order.
std::vector<std::size_t> candidate_set(std::span<const double> q_row, const PopularityTable& table);

/// Weighted sampling without replacement of min(capacity, #positive) items;
/// zero-weight items are never drawn. Returns indices into `gains` in draw order.
std::vector<std::size_t> select_replicas(std::span<const double> gains, std::size_t capacity, Rng& rng);

/// Z = w_prev ∪ candidates (first occurrence kept), then select by gain.
std::vector<ContentId> select_replicas(std::span<const ContentId> w_prev, std::span<const ContentId> candidates,
                                       const std::function<double(ContentId)>& gain, std::size_t capacity,
                                       Rng& rng);

/// Bounded item set with insertion order kept for FIFO eviction.
class UserCache {
 public:
  UserCache() = default;
  explicit UserCache(std::size_t capacity) : capacity_(capacity) {}

  std::size_t capacity() const { return capacity_; }
  std::size_t size() const { return items_.size(); }
  bool full() const { return items_.size() >= capacity_; }
  bool contains(ContentId c) const;
  std::span<const ContentId> items() const { return items_; }

  /// Adds c if absent and there is room. Returns true when c was added.
  bool insert(ContentId c);
  /// Adds c, evicting the oldest item when full. Returns the evicted item.
  std::optional<ContentId> insert_fifo(ContentId c);
  bool erase(ContentId c);
  void clear() { items_.clear(); }

 private:
  std::size_t capacity_ = 0;
  std::vector<ContentId> items_;
};

/// Up to `copies` distinct carriers from `eligible`, drawn without
/// replacement with probability proportional to contact index; uniform when
/// every index is zero.
std::vector<UserId> movement_based_select(std::span<const double> contact_index, std::span<const UserId> eligible,
                                          std::size_t copies, Rng& rng);

/// Index of the cached item a holder offers, proportional to its request
/// count (uniform when all counts are zero); nullopt for an empty cache.
std::optional<std::size_t> popularity_offer(std::span<const double> counts, Rng& rng);

struct AcceptDecision {
  bool accepted = false;
  std::optional<ContentId> evicted;
};

/// Receiver side: accept when there is room, or when the incoming count beats
/// the lowest cached count (that item is evicted). Items already cached are
/// refused.
AcceptDecision popularity_accept(std::span<const ContentId> cache, std::span<const double> cache_counts,
                                 ContentId incoming, double incoming_count, std::size_t capacity);

/// Cache plus per-content request counters of one popularity-strategy peer.
struct PopularityPeer {
  UserCache cache;
  std::unordered_map<std::uint32_t, double> counts;

  double count(ContentId c) const;
};

struct Transfer {
  UserId from;
  UserId to;
  ContentId content;
  std::optional<ContentId> evicted;
};

/// One offer per ordered (holder, receiver) encounter, applied in order.
std::vector<Transfer> popularity_based_select(std::vector<PopularityPeer>& peers,
                                              std::span<const std::pair<UserId, UserId>> encounters, Rng& rng);

struct PopularityViolation {
  std::size_t content;
  std::size_t region;
  double load;   // Σ_u Q·K·β
  double limit;  // A
};

struct ObjectiveReport {
  double objective = 0.0;
  std::vector<std::size_t> cap_violations;  // users over B_u
  std::vector<PopularityViolation> popularity_violations;

  bool feasible() const { return cap_violations.empty() && popularity_violations.empty(); }
};

/// Objective Σ_c Σ_u β_u K[u][c] Σ_r Q[u][r] A[c][r] and constraint audit.
ObjectiveReport evaluate_objective(const ReplicationAssignment& k, const InstanceSnapshot& snap);

struct OptimizationResult {
  ReplicationAssignment k;
  double objective = 0.0;
};

/// Largest instance exact_optimize accepts, in users × contents.
inline constexpr std::size_t kExactCellLimit = 24;

/// Exhaustive optimum under the cache and popularity constraints; ties go to
/// the lexicographically smallest K. Throws ValidationError above the limit.
OptimizationResult exact_optimize(const InstanceSnapshot& snap);

/// Every user runs candidate selection and gain-weighted sampling independently.
ReplicationAssignment heuristic_assign(const InstanceSnapshot& snap, Rng& rng);

}  // namespace d2dsim

#endif  // D2DSIM_STRATEGY_HPP
