// SPDX-License-Identifier: Apache-2.0

#ifndef D2DSIM_PROPAGATION_HPP
#define D2DSIM_PROPAGATION_HPP

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "d2dsim/ids.hpp"
#include "d2dsim/trace.hpp"

namespace d2dsim {

/// Slot range [begin, end) covered by a window of `window` slots ending
/// before slot T. A window of 0 means the whole history.
struct SlotWindow {
  Slot begin = 0;
  Slot end = 0;

  static SlotWindow before(Slot T, Slot window);
  bool contains(Slot t) const { return t >= begin && t < end; }
};

/// Per-slot share counts G[u][t] and acceptance counts H[u][v][t].
///
/// H[u][v][t] counts contents shared by u in slot t that v later accepted.
/// Counts may arrive out of slot order; storage is sparse.
class HistoryCounters {
 public:
  HistoryCounters() = default;
  explicit HistoryCounters(std::size_t n_users) : shares_(n_users) {}

  void add_share(UserId u, Slot t, std::int64_t count = 1);
  void add_accept(UserId u, UserId v, Slot t, std::int64_t count = 1);

  std::int64_t shares(UserId u, SlotWindow w) const;
  std::int64_t accepts(UserId u, UserId v, SlotWindow w) const;

  std::size_t user_count() const { return shares_.size(); }

 private:
  using Series = std::vector<std::pair<Slot, std::int64_t>>;  // sorted by slot
  static void bump(Series& s, Slot t, std::int64_t count);
  static std::int64_t sum(const Series& s, SlotWindow w);

  std::vector<Series> shares_;
  std::unordered_map<std::uint64_t, Series> accepts_;
};

/// Σ H / Σ G over aligned per-slot windows; 0 when Σ G is 0.
/// Throws ValidationError on a negative counter or mismatched lengths.
double influence_index(std::span<const std::int64_t> h, std::span<const std::int64_t> g);
double influence_index(const HistoryCounters& counters, UserId u, UserId v, Slot T, Slot window);

/// Influence of u on each friend, aligned with graph.friends(u).
class InfluenceTable {
 public:
  InfluenceTable() = default;
  InfluenceTable(const SocialGraph& graph, const HistoryCounters& counters, Slot T, Slot window);

  std::span<const double> row(UserId u) const { return rows_[u]; }
  /// I[u][v]; 0 when u and v are not friends.
  double at(const SocialGraph& graph, UserId u, UserId v) const;

 private:
  std::vector<std::vector<double>> rows_;
};

/// Durations normalized to sum 1; empty when every duration is 0.
std::vector<double> regional_preference(std::span<const double> durations);

/// Rolling per-user time spent in each region over the last `window` slots.
class PreferenceTracker {
 public:
  PreferenceTracker() = default;
  PreferenceTracker(std::size_t n_users, std::size_t n_regions, Slot window, Seconds slot_length);

  /// Adds presence in `region` over [from, to), split across slots. A user's
  /// intervals must not overlap and must arrive in time order.
  void add(UserId u, RegionId region, Seconds from, Seconds to);
  /// Drops history older than the window ending before slot T.
  void roll(Slot T);

  std::span<const double> durations(UserId u) const { return totals_[u]; }
  bool has_history(UserId u) const { return total_[u] > 0.0; }
  /// Preference row P[u]; empty without history.
  std::vector<double> row(UserId u) const;

  std::size_t user_count() const { return totals_.size(); }
  std::size_t region_count() const { return n_regions_; }

 private:
  struct Entry {
    Slot slot;
    RegionId region;
    double seconds;
  };
  std::size_t n_regions_ = 0;
  Slot window_ = 0;
  Seconds slot_length_ = 1;
  std::vector<std::deque<Entry>> entries_;
  std::vector<std::vector<double>> totals_;
  std::vector<double> total_;
};

/// Preference rows for every user, empty rows for users without history.
using PreferenceTable = std::vector<std::vector<double>>;

PreferenceTable preference_table(const PreferenceTracker& tracker);

/// EWMA of per-slot request counts: p_T = a·x_{T-1} + (1-a)·p_{T-1}, p_0 = 0.
/// `counts[t]` is the request count in slot t; slots ≥ T are ignored.
double inherent_popularity(std::span<const double> counts, Slot T, double factor = 0.5);

/// Sparse incremental form of inherent_popularity over (content, region).
class InherentPopularity {
 public:
  InherentPopularity() = default;
  InherentPopularity(std::size_t n_regions, double factor);

  /// One request for c in region r during slot t. Slots must not go back.
  void observe(ContentId c, RegionId r, Slot t);
  /// p[c][r] for slot T, using requests in slots < T only.
  double value(ContentId c, RegionId r, Slot T) const;
  /// Dense row over regions.
  std::vector<double> row(ContentId c, Slot T) const;
  bool seen(ContentId c) const { return rows_.contains(c.value()); }

 private:
  struct Cell {
    double value = 0.0;  // estimate after folding in slot `last`
    Slot last = -1;
  };
  std::size_t n_regions_ = 0;
  double factor_ = 0.5;
  std::unordered_map<std::uint32_t, std::vector<Cell>> rows_;
};

using InfluenceFn = std::function<double(UserId, UserId)>;
using PreferenceFn = std::function<double(UserId, RegionId)>;

/// A[c][r] = p + alpha · Σ_{u∈S(c)} Σ_{v∈F_u} I[u][v]·P[v][r], computed term by term.
double social_popularity(double p, double alpha, std::span<const UserId> sharers,
                         const SocialGraph& graph, const InfluenceFn& influence,
                         const PreferenceFn& preference, RegionId r);

/// Σ_{v∈F_u} I[u][v]·P[v][·] as a dense row: one sharer's contribution to the
/// social term of any content it shares.
std::vector<double> influence_footprint(const SocialGraph& graph, const InfluenceTable& influence,
                                        const PreferenceTable& preference, UserId u,
                                        std::size_t n_regions);

/// Per-region predicted demand for the contents of one slot.
struct PopularityTable {
  std::size_t n_regions = 0;
  std::vector<ContentId> contents;
  std::vector<double> alpha;  // per content
  std::vector<double> p;      // contents.size() × n_regions
  std::vector<double> a;      // contents.size() × n_regions

  std::size_t size() const { return contents.size(); }
  std::span<const double> a_row(std::size_t i) const { return {a.data() + i * n_regions, n_regions}; }
  std::span<const double> p_row(std::size_t i) const { return {p.data() + i * n_regions, n_regions}; }
};

/// A viewer of c is counted as influenced when a friend reshared c strictly
/// before the viewer's own reshare.
struct CascadeView {
  UserId user;
  Seconds time = 0;
};

/// α for one content from its viewers and earlier resharers; 0 without viewers.
double learn_alpha(std::span<const CascadeView> viewers, std::span<const CascadeView> resharers,
                   const SocialGraph& graph);

/// Incremental α per content as reshares are observed, plus the pooled
/// fraction over all contents.
class AlphaLearner {
 public:
  explicit AlphaLearner(const SocialGraph* graph = nullptr) : graph_(graph) {}

  /// Feed share events in time order.
  void observe(const ShareEvent& e);

  /// Per-content α; nullopt when the content has no viewers yet.
  std::optional<double> alpha(ContentId c) const;
  /// Influenced viewers over all viewers seen so far; 0 when none.
  double pooled() const;

 private:
  struct State {
    std::vector<CascadeView> resharers;
    std::size_t viewers = 0;
    std::size_t influenced = 0;
  };
  const SocialGraph* graph_;
  std::unordered_map<std::uint32_t, State> states_;
  std::size_t viewers_ = 0;
  std::size_t influenced_ = 0;
};

}  // namespace d2dsim

#endif  // D2DSIM_PROPAGATION_HPP
