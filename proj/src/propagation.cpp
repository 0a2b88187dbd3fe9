// SPDX-License-Identifier: Apache-2.0

#include "d2dsim/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace d2dsim {

namespace {

std::uint64_t edge_key(UserId u, UserId v) {
  return (static_cast<std::uint64_t>(u.value()) << 32) | v.value();
}

}  // namespace

SlotWindow SlotWindow::before(Slot T, Slot window) {
  if (window <= 0) return {0, T};
  return {std::max<Slot>(0, T - window), T};
}

// ---------------------------------------------------------------------------
// Influence

void HistoryCounters::bump(Series& s, Slot t, std::int64_t count) {
  if (count < 0) throw ValidationError("negative history count");
  auto it = std::lower_bound(s.begin(), s.end(), t,
                             [](const std::pair<Slot, std::int64_t>& e, Slot x) { return e.first < x; });
  if (it != s.end() && it->first == t) {
    it->second += count;
  } else {
    s.insert(it, {t, count});
  }
}

std::int64_t HistoryCounters::sum(const Series& s, SlotWindow w) {
  std::int64_t total = 0;
  for (const auto& [t, n] : s) {
    if (w.contains(t)) total += n;
  }
  return total;
}

void HistoryCounters::add_share(UserId u, Slot t, std::int64_t count) { bump(shares_[u], t, count); }

void HistoryCounters::add_accept(UserId u, UserId v, Slot t, std::int64_t count) {
  bump(accepts_[edge_key(u, v)], t, count);
}

std::int64_t HistoryCounters::shares(UserId u, SlotWindow w) const { return sum(shares_[u], w); }

std::int64_t HistoryCounters::accepts(UserId u, UserId v, SlotWindow w) const {
  auto it = accepts_.find(edge_key(u, v));
  return it == accepts_.end() ? 0 : sum(it->second, w);
}

double influence_index(std::span<const std::int64_t> h, std::span<const std::int64_t> g) {
  if (h.size() != g.size()) throw ValidationError("influence window lengths differ");
  std::int64_t hs = 0;
  std::int64_t gs = 0;
  for (std::size_t i = 0; i < h.size(); ++i) {
    if (h[i] < 0 || g[i] < 0) throw ValidationError("negative counter in influence window");
    hs += h[i];
    gs += g[i];
  }
  return gs == 0 ? 0.0 : static_cast<double>(hs) / static_cast<double>(gs);
}

double influence_index(const HistoryCounters& counters, UserId u, UserId v, Slot T, Slot window) {
  const SlotWindow w = SlotWindow::before(T, window);
  const std::int64_t g = counters.shares(u, w);
  return g == 0 ? 0.0 : static_cast<double>(counters.accepts(u, v, w)) / static_cast<double>(g);
}

InfluenceTable::InfluenceTable(const SocialGraph& graph, const HistoryCounters& counters, Slot T,
                               Slot window)
    : rows_(graph.user_count()) {
  const SlotWindow w = SlotWindow::before(T, window);
  for (std::size_t u = 0; u < graph.user_count(); ++u) {
    const auto friends = graph.friends(UserId(u));
    rows_[u].assign(friends.size(), 0.0);
    const std::int64_t g = counters.shares(UserId(u), w);
    if (g == 0) continue;
    for (std::size_t i = 0; i < friends.size(); ++i) {
      rows_[u][i] = static_cast<double>(counters.accepts(UserId(u), friends[i].user, w)) /
                    static_cast<double>(g);
    }
  }
}

double InfluenceTable::at(const SocialGraph& graph, UserId u, UserId v) const {
  const auto friends = graph.friends(u);
  auto it = std::lower_bound(friends.begin(), friends.end(), v,
                             [](const Friend& f, UserId x) { return f.user < x; });
  if (it == friends.end() || it->user != v) return 0.0;
  return rows_[u][static_cast<std::size_t>(it - friends.begin())];
}

// ---------------------------------------------------------------------------
// Preference

std::vector<double> regional_preference(std::span<const double> durations) {
  double total = 0.0;
  for (double d : durations) {
    if (d < 0.0) throw ValidationError("negative duration");
    total += d;
  }
  if (!(total > 0.0)) return {};
  std::vector<double> row(durations.begin(), durations.end());
  for (double& x : row) x /= total;
  return row;
}

PreferenceTracker::PreferenceTracker(std::size_t n_users, std::size_t n_regions, Slot window,
                                     Seconds slot_length)
    : n_regions_(n_regions),
      window_(window),
      slot_length_(slot_length),
      entries_(n_users),
      totals_(n_users, std::vector<double>(n_regions, 0.0)),
      total_(n_users, 0.0) {
  if (slot_length <= 0) throw ValidationError("slot length must be positive");
}

void PreferenceTracker::add(UserId u, RegionId region, Seconds from, Seconds to) {
  while (from < to) {
    const Slot slot = from / slot_length_;
    const Seconds stop = std::min(to, (slot + 1) * slot_length_);
    const auto seconds = static_cast<double>(stop - from);
    auto& list = entries_[u];
    if (!list.empty() && list.back().slot == slot && list.back().region == region) {
      list.back().seconds += seconds;
    } else {
      list.push_back({slot, region, seconds});
    }
    totals_[u][region] += seconds;
    total_[u] += seconds;
    from = stop;
  }
}

void PreferenceTracker::roll(Slot T) {
  if (window_ <= 0) return;
  const Slot oldest = T - window_;
  for (std::size_t u = 0; u < entries_.size(); ++u) {
    auto& list = entries_[u];
    bool dropped = false;
    while (!list.empty() && list.front().slot < oldest) {
      totals_[u][list.front().region] -= list.front().seconds;
      list.pop_front();
      dropped = true;
    }
    if (!dropped) continue;
    // Recompute from the remaining entries so subtraction error never builds up.
    std::fill(totals_[u].begin(), totals_[u].end(), 0.0);
    total_[u] = 0.0;
    for (const auto& e : list) {
      totals_[u][e.region] += e.seconds;
      total_[u] += e.seconds;
    }
  }
}

std::vector<double> PreferenceTracker::row(UserId u) const { return regional_preference(totals_[u]); }

PreferenceTable preference_table(const PreferenceTracker& tracker) {
  PreferenceTable table(tracker.user_count());
  for (std::size_t u = 0; u < tracker.user_count(); ++u) table[u] = tracker.row(UserId(u));
  return table;
}

// ---------------------------------------------------------------------------
// Inherent popularity

double inherent_popularity(std::span<const double> counts, Slot T, double factor) {
  double p = 0.0;
  const auto end = std::min<std::size_t>(counts.size(), static_cast<std::size_t>(std::max<Slot>(0, T)));
  for (std::size_t t = 0; t < end; ++t) p = factor * counts[t] + (1.0 - factor) * p;
  // Slots between the last count and T carry no requests.
  for (Slot t = static_cast<Slot>(end); t < T; ++t) p *= (1.0 - factor);
  return p;
}

InherentPopularity::InherentPopularity(std::size_t n_regions, double factor)
    : n_regions_(n_regions), factor_(factor) {
  if (!(factor > 0.0 && factor <= 1.0)) throw ValidationError("EWMA factor must be in (0,1]");
}

void InherentPopularity::observe(ContentId c, RegionId r, Slot t) {
  auto& row = rows_[c.value()];
  if (row.empty()) row.resize(n_regions_);
  Cell& cell = row[r];
  if (t < cell.last) throw InvariantError("request history went back in time");
  if (t > cell.last) {
    cell.value *= cell.last < 0 ? 0.0 : std::pow(1.0 - factor_, static_cast<double>(t - cell.last));
    cell.last = t;
  }
  cell.value += factor_;
}

double InherentPopularity::value(ContentId c, RegionId r, Slot T) const {
  auto it = rows_.find(c.value());
  if (it == rows_.end()) return 0.0;
  const Cell& cell = it->second[r];
  if (cell.last < 0 || cell.last >= T) {
    // Requests of the current slot are not visible yet.
    if (cell.last >= T) throw InvariantError("popularity queried before its requests were folded");
    return 0.0;
  }
  return cell.value * std::pow(1.0 - factor_, static_cast<double>(T - 1 - cell.last));
}

std::vector<double> InherentPopularity::row(ContentId c, Slot T) const {
  std::vector<double> out(n_regions_, 0.0);
  if (!seen(c)) return out;
  for (std::size_t r = 0; r < n_regions_; ++r) out[r] = value(c, RegionId(r), T);
  return out;
}

// ---------------------------------------------------------------------------
// Social popularity

double social_popularity(double p, double alpha, std::span<const UserId> sharers,
                         const SocialGraph& graph, const InfluenceFn& influence,
                         const PreferenceFn& preference, RegionId r) {
  double social = 0.0;
  for (UserId u : sharers) {
    for (const Friend& f : graph.friends(u)) social += influence(u, f.user) * preference(f.user, r);
  }
  return p + alpha * social;
}

std::vector<double> influence_footprint(const SocialGraph& graph, const InfluenceTable& influence,
                                        const PreferenceTable& preference, UserId u,
                                        std::size_t n_regions) {
  std::vector<double> out(n_regions, 0.0);
  const auto friends = graph.friends(u);
  const auto weights = influence.row(u);
  for (std::size_t i = 0; i < friends.size(); ++i) {
    if (weights[i] == 0.0) continue;
    const auto& row = preference[friends[i].user];
    for (std::size_t r = 0; r < row.size(); ++r) out[r] += weights[i] * row[r];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Alpha

double learn_alpha(std::span<const CascadeView> viewers, std::span<const CascadeView> resharers,
                   const SocialGraph& graph) {
  if (viewers.empty()) return 0.0;
  std::size_t influenced = 0;
  for (const auto& v : viewers) {
    const bool hit = std::any_of(resharers.begin(), resharers.end(), [&](const CascadeView& w) {
      return w.time < v.time && w.user != v.user && graph.are_friends(w.user, v.user);
    });
    if (hit) ++influenced;
  }
  return static_cast<double>(influenced) / static_cast<double>(viewers.size());
}

void AlphaLearner::observe(const ShareEvent& e) {
  State& s = states_[e.content.value()];
  if (!e.is_reshare()) return;
  ++s.viewers;
  ++viewers_;
  const bool hit = graph_ && std::any_of(s.resharers.begin(), s.resharers.end(), [&](const CascadeView& w) {
                     return w.time < e.time && w.user != e.sharer && graph_->are_friends(w.user, e.sharer);
                   });
  if (hit) {
    ++s.influenced;
    ++influenced_;
  }
  s.resharers.push_back({e.sharer, e.time});
}

std::optional<double> AlphaLearner::alpha(ContentId c) const {
  auto it = states_.find(c.value());
  if (it == states_.end() || it->second.viewers == 0) return std::nullopt;
  return static_cast<double>(it->second.influenced) / static_cast<double>(it->second.viewers);
}

double AlphaLearner::pooled() const {
  return viewers_ == 0 ? 0.0 : static_cast<double>(influenced_) / static_cast<double>(viewers_);
}

}  // namespace d2dsim
