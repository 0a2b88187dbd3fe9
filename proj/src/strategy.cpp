// SPDX-License-Identifier: Apache-2.0

#include "d2dsim/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <unordered_set>

namespace d2dsim {

namespace {

/// Efraimidis-Spirakis: the k largest keys log(U)/w form a successive
/// weighted draw without replacement.
std::vector<std::size_t> weighted_draw(std::span<const double> weights, std::size_t k, Rng& rng) {
  std::vector<std::pair<double, std::size_t>> keys;
  keys.reserve(weights.size());
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] > 0.0) keys.emplace_back(std::log(uniform01(rng)) / weights[i], i);
  }
  k = std::min(k, keys.size());
  auto by_key = [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); };
  std::partial_sort(keys.begin(), keys.begin() + static_cast<std::ptrdiff_t>(k), keys.end(), by_key);
  std::vector<std::size_t> out(k);
  for (std::size_t i = 0; i < k; ++i) out[i] = keys[i].second;
  return out;
}

bool over_limit(double load, double limit) { return load > limit + 1e-9 * std::max(1.0, std::abs(limit)); }

}  // namespace

InstanceSnapshot::InstanceSnapshot(std::size_t users, std::size_t contents, std::size_t regions)
    : n_users(users),
      n_contents(contents),
      n_regions(regions),
      q(users * regions, 0.0),
      a(contents * regions, 0.0),
      peers(users) {}

std::size_t ReplicationAssignment::load(std::size_t u) const {
  return static_cast<std::size_t>(std::count(k.begin() + static_cast<std::ptrdiff_t>(u * n_contents),
                                             k.begin() + static_cast<std::ptrdiff_t>((u + 1) * n_contents), 1));
}

double replica_gain(std::span<const double> q_row, std::span<const double> a_row) {
  double g = 0.0;
  const std::size_t n = std::min(q_row.size(), a_row.size());
  for (std::size_t r = 0; r < n; ++r) g += q_row[r] * a_row[r];
  return g;
}

std::vector<std::size_t> candidate_set(const InstanceSnapshot& snap, std::size_t u) {
  std::vector<std::size_t> out;
  const auto q = snap.q_row(u);
  for (std::size_t c = 0; c < snap.n_contents; ++c) {
    const auto a = snap.a_row(c);
    for (std::size_t r = 0; r < snap.n_regions; ++r) {
      if (a[r] > 0.0 && q[r] > 0.0) {
        out.push_back(c);
        break;
      }
    }
  }
  return out;
}

std::vector<std::size_t> candidate_set(std::span<const double> q_row, const PopularityTable& table) {
  std::vector<std::size_t> support;
  for (std::size_t r = 0; r < q_row.size(); ++r) {
    if (q_row[r] > 0.0) support.push_back(r);
  }
  std::vector<std::size_t> out;
  if (support.empty()) return out;
  for (std::size_t i = 0; i < table.size(); ++i) {
    const auto a = table.a_row(i);
    if (std::any_of(support.begin(), support.end(), [&](std::size_t r) { return a[r] > 0.0; })) out.push_back(i);
  }
  return out;
}

std::vector<std::size_t> select_replicas(std::span<const double> gains, std::size_t capacity, Rng& rng) {
  for (double g : gains) {
    if (g < 0.0 || std::isnan(g)) throw ValidationError("replica gains must be nonnegative");
  }
  return weighted_draw(gains, capacity, rng);
}

std::vector<ContentId> select_replicas(std::span<const ContentId> w_prev, std::span<const ContentId> candidates,
                                       const std::function<double(ContentId)>& gain, std::size_t capacity,
                                       Rng& rng) {
  std::vector<ContentId> z;
  std::unordered_set<std::uint32_t> seen;
  for (auto list : {w_prev, candidates}) {
    for (ContentId c : list) {
      if (seen.insert(c.value()).second) z.push_back(c);
    }
  }
  std::vector<double> gains(z.size());
  for (std::size_t i = 0; i < z.size(); ++i) gains[i] = gain(z[i]);
  std::vector<ContentId> out;
  for (std::size_t i : select_replicas(gains, capacity, rng)) out.push_back(z[i]);
  return out;
}

// ---------------------------------------------------------------------------
// Cache

bool UserCache::contains(ContentId c) const { return std::find(items_.begin(), items_.end(), c) != items_.end(); }

bool UserCache::insert(ContentId c) {
  if (full() || contains(c)) return false;
  items_.push_back(c);
  return true;
}

std::optional<ContentId> UserCache::insert_fifo(ContentId c) {
  if (capacity_ == 0 || contains(c)) return std::nullopt;
  std::optional<ContentId> evicted;
  if (full()) {
    evicted = items_.front();
    items_.erase(items_.begin());
  }
  items_.push_back(c);
  return evicted;
}

bool UserCache::erase(ContentId c) {
  auto it = std::find(items_.begin(), items_.end(), c);
  if (it == items_.end()) return false;
  items_.erase(it);
  return true;
}

// ---------------------------------------------------------------------------
// Baselines

std::vector<UserId> movement_based_select(std::span<const double> contact_index, std::span<const UserId> eligible,
                                          std::size_t copies, Rng& rng) {
  std::vector<double> w(eligible.size());
  for (std::size_t i = 0; i < eligible.size(); ++i) w[i] = std::max(0.0, contact_index[eligible[i]]);
  std::vector<UserId> out;
  for (std::size_t i : weighted_draw(w, copies, rng)) out.push_back(eligible[i]);
  if (out.size() < copies) {
    // Remaining carriers come uniformly from users without contacts.
    std::vector<UserId> rest;
    for (std::size_t i = 0; i < eligible.size(); ++i) {
      if (!(w[i] > 0.0)) rest.push_back(eligible[i]);
    }
    std::shuffle(rest.begin(), rest.end(), rng);
    for (std::size_t i = 0; i < rest.size() && out.size() < copies; ++i) out.push_back(rest[i]);
  }
  return out;
}

std::optional<std::size_t> popularity_offer(std::span<const double> counts, Rng& rng) {
  if (counts.empty()) return std::nullopt;
  return weighted_index(counts, rng);
}

AcceptDecision popularity_accept(std::span<const ContentId> cache, std::span<const double> cache_counts,
                                 ContentId incoming, double incoming_count, std::size_t capacity) {
  if (capacity == 0 || std::find(cache.begin(), cache.end(), incoming) != cache.end()) return {};
  if (cache.size() < capacity) return {true, std::nullopt};
  std::size_t lowest = 0;
  for (std::size_t i = 1; i < cache.size(); ++i) {
    if (cache_counts[i] < cache_counts[lowest] ||
        (cache_counts[i] == cache_counts[lowest] && cache[i] < cache[lowest])) {
      lowest = i;
    }
  }
  if (incoming_count > cache_counts[lowest]) return {true, cache[lowest]};
  return {};
}

double PopularityPeer::count(ContentId c) const {
  auto it = counts.find(c.value());
  return it == counts.end() ? 0.0 : it->second;
}

std::vector<Transfer> popularity_based_select(std::vector<PopularityPeer>& peers,
                                              std::span<const std::pair<UserId, UserId>> encounters, Rng& rng) {
  std::vector<Transfer> out;
  std::vector<double> counts;
  for (const auto& [holder_id, receiver_id] : encounters) {
    PopularityPeer& holder = peers[holder_id];
    PopularityPeer& receiver = peers[receiver_id];
    const auto items = holder.cache.items();
    counts.resize(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) counts[i] = holder.count(items[i]);
    const auto pick = popularity_offer(counts, rng);
    if (!pick) continue;
    const ContentId offered = items[*pick];
    const double offered_count = counts[*pick];

    const auto held = receiver.cache.items();
    std::vector<double> held_counts(held.size());
    for (std::size_t i = 0; i < held.size(); ++i) held_counts[i] = receiver.count(held[i]);
    const AcceptDecision d =
        popularity_accept(held, held_counts, offered, offered_count, receiver.cache.capacity());
    if (!d.accepted) continue;
    if (d.evicted) receiver.cache.erase(*d.evicted);
    receiver.cache.insert(offered);
    double& mine = receiver.counts[offered.value()];
    mine = std::max(mine, offered_count);
    out.push_back({holder_id, receiver_id, offered, d.evicted});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Objective and exact solver

ObjectiveReport evaluate_objective(const ReplicationAssignment& k, const InstanceSnapshot& snap) {
  if (k.n_users != snap.n_users || k.n_contents != snap.n_contents) {
    throw ValidationError("assignment shape does not match the instance");
  }
  ObjectiveReport rep;
  std::vector<double> load(snap.n_contents * snap.n_regions, 0.0);
  for (std::size_t u = 0; u < snap.n_users; ++u) {
    const double beta = static_cast<double>(snap.peers[u].upload_capacity);
    const auto q = snap.q_row(u);
    for (std::size_t c = 0; c < snap.n_contents; ++c) {
      if (!k.at(u, c)) continue;
      rep.objective += beta * replica_gain(q, snap.a_row(c));
      for (std::size_t r = 0; r < snap.n_regions; ++r) load[c * snap.n_regions + r] += q[r] * beta;
    }
    if (k.load(u) > snap.peers[u].cache_capacity) rep.cap_violations.push_back(u);
  }
  for (std::size_t c = 0; c < snap.n_contents; ++c) {
    for (std::size_t r = 0; r < snap.n_regions; ++r) {
      const double l = load[c * snap.n_regions + r];
      const double limit = snap.a[c * snap.n_regions + r];
      if (over_limit(l, limit)) rep.popularity_violations.push_back({c, r, l, limit});
    }
  }
  return rep;
}

OptimizationResult exact_optimize(const InstanceSnapshot& snap) {
  const std::size_t cells = snap.n_users * snap.n_contents;
  if (cells > kExactCellLimit) {
    throw ValidationError("instance has " + std::to_string(cells) + " cells; exact_optimize handles at most " +
                          std::to_string(kExactCellLimit) + ", use heuristic_assign");
  }
  const std::size_t R = snap.n_regions;
  std::vector<double> value(cells);
  for (std::size_t u = 0; u < snap.n_users; ++u) {
    for (std::size_t c = 0; c < snap.n_contents; ++c) {
      value[u * snap.n_contents + c] =
          static_cast<double>(snap.peers[u].upload_capacity) * replica_gain(snap.q_row(u), snap.a_row(c));
    }
  }
  std::vector<double> suffix(cells + 1, 0.0);
  for (std::size_t i = cells; i-- > 0;) suffix[i] = suffix[i + 1] + value[i];

  ReplicationAssignment current(snap.n_users, snap.n_contents);
  OptimizationResult best{current, -1.0};
  std::vector<std::size_t> user_load(snap.n_users, 0);
  std::vector<double> pop_load(snap.n_contents * R, 0.0);

  // Depth-first over cells, 0 before 1, so the first optimum found is the
  // lexicographically smallest.
  std::function<void(std::size_t, double)> dfs = [&](std::size_t i, double acc) {
    if (acc + suffix[i] <= best.objective + 1e-12) return;
    if (i == cells) {
      best.k = current;
      best.objective = acc;
      return;
    }
    dfs(i + 1, acc);
    const std::size_t u = i / snap.n_contents;
    const std::size_t c = i % snap.n_contents;
    if (user_load[u] + 1 > snap.peers[u].cache_capacity) return;
    const double beta = static_cast<double>(snap.peers[u].upload_capacity);
    const auto q = snap.q_row(u);
    for (std::size_t r = 0; r < R; ++r) {
      if (over_limit(pop_load[c * R + r] + q[r] * beta, snap.a[c * R + r])) return;
    }
    for (std::size_t r = 0; r < R; ++r) pop_load[c * R + r] += q[r] * beta;
    ++user_load[u];
    current.set(u, c, true);
    dfs(i + 1, acc + value[i]);
    current.set(u, c, false);
    --user_load[u];
    for (std::size_t r = 0; r < R; ++r) pop_load[c * R + r] -= q[r] * beta;
  };
  dfs(0, 0.0);
  best.objective = std::max(0.0, best.objective);
  return best;
}

ReplicationAssignment heuristic_assign(const InstanceSnapshot& snap, Rng& rng) {
  ReplicationAssignment k(snap.n_users, snap.n_contents);
  for (std::size_t u = 0; u < snap.n_users; ++u) {
    const auto cands = candidate_set(snap, u);
    std::vector<double> gains(cands.size());
    for (std::size_t i = 0; i < cands.size(); ++i) gains[i] = replica_gain(snap.q_row(u), snap.a_row(cands[i]));
    for (std::size_t i : select_replicas(gains, snap.peers[u].cache_capacity, rng)) k.set(u, cands[i], true);
  }
  return k;
}

}  // namespace d2dsim
