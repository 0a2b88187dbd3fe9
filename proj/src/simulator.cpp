// SPDX-License-Identifier: Apache-2.0

#include "d2dsim/simulator.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <unordered_map>

namespace d2dsim {

namespace {

constexpr std::uint64_t kRequestStream = 11;
constexpr std::uint64_t kSelectStream = 12;
constexpr std::uint64_t kMovementStream = 13;
constexpr std::uint64_t kPopularityStream = 14;

bool over_limit(double load, double limit) { return load > limit + 1e-9 * std::max(1.0, std::abs(limit)); }

std::uint64_t user_content_key(UserId u, ContentId c) {
  return (static_cast<std::uint64_t>(u.value()) << 32) | c.value();
}

}  // namespace

StrategyKind parse_strategy(std::string_view name) {
  if (name == "proposed") return StrategyKind::proposed;
  if (name == "movement") return StrategyKind::movement;
  if (name == "popularity") return StrategyKind::popularity;
  if (name == "none") return StrategyKind::none;
  throw std::invalid_argument("unknown strategy '" + std::string(name) + "'");
}

std::string_view to_string(StrategyKind kind) {
  switch (kind) {
    case StrategyKind::proposed: return "proposed";
    case StrategyKind::movement: return "movement";
    case StrategyKind::popularity: return "popularity";
    case StrategyKind::none: return "none";
  }
  return "?";
}

void SimConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ValidationError("sim config: " + msg); };
  if (slot_length_s <= 0) fail("slot_length_s must be positive");
  if (horizon_slots < 1) fail("horizon_slots must be at least 1");
  if (request_deadline_s <= 0) fail("request_deadline_s must be positive");
  if (alpha_fixed && !(*alpha_fixed >= 0.0 && *alpha_fixed <= 1.0)) fail("alpha must be in [0,1]");
  if (influence_window_slots < 0 || preference_window_slots < 0 || share_window_slots < 0) {
    fail("windows must be nonnegative");
  }
  if (!(ewma_factor > 0.0 && ewma_factor <= 1.0)) fail("ewma_factor must be in (0,1]");
}

// ---------------------------------------------------------------------------
// Coordinator and state

void Coordinator::add(ContentId c, UserId u) {
  if (c >= holders_.size()) holders_.resize(c + 1);
  auto& list = holders_[c];
  if (std::find(list.begin(), list.end(), u) != list.end()) return;
  list.push_back(u);
  ++replicas_;
}

void Coordinator::remove(ContentId c, UserId u) {
  if (c >= holders_.size()) return;
  auto& list = holders_[c];
  auto it = std::find(list.begin(), list.end(), u);
  if (it == list.end()) return;
  list.erase(it);
  --replicas_;
}

std::span<const UserId> Coordinator::holders(ContentId c) const {
  if (c >= holders_.size()) return {};
  return holders_[c];
}

SimState::SimState(std::size_t n_users, std::size_t n_regions, const PeerParams& peers)
    : caches(n_users, UserCache(peers.cache_capacity)),
      uploads_left(n_users, peers.upload_capacity),
      region_of(n_users),
      occupants(n_regions) {}

void SimState::enter(UserId u, RegionId r) {
  if (region_of[u]) leave(u);
  region_of[u] = r;
  occupants[r].push_back(u);
}

void SimState::leave(UserId u) {
  if (!region_of[u]) return;
  auto& list = occupants[*region_of[u]];
  list.erase(std::find(list.begin(), list.end(), u));
  region_of[u].reset();
}

bool SimState::cache(UserId u, ContentId c) {
  if (!caches[u].insert(c)) return false;
  directory.add(c, u);
  return true;
}

void SimState::uncache(UserId u, ContentId c) {
  if (caches[u].erase(c)) directory.remove(c, u);
}

void SimState::audit(Slot T) const {
  std::size_t cached = 0;
  for (std::size_t u = 0; u < caches.size(); ++u) {
    if (caches[u].size() > caches[u].capacity()) {
      throw InvariantError("slot " + std::to_string(T) + ": user " + std::to_string(u) + " over cache capacity");
    }
    for (ContentId c : caches[u].items()) {
      const auto h = directory.holders(c);
      if (std::find(h.begin(), h.end(), UserId(u)) == h.end()) {
        throw InvariantError("slot " + std::to_string(T) + ": directory misses replica of content " +
                             std::to_string(c.value()) + " at user " + std::to_string(u));
      }
    }
    cached += caches[u].size();
  }
  if (cached != directory.replica_count()) {
    throw InvariantError("slot " + std::to_string(T) + ": directory lists " +
                         std::to_string(directory.replica_count()) + " replicas, caches hold " +
                         std::to_string(cached));
  }
}

RequestOutcome handle_request(const Request& req, SimState& state, Seconds deadline_s, Rng& rng) {
  const auto region = state.region_of[req.user];
  if (!region) throw InvariantError("request from user " + std::to_string(req.user.value()) + " outside every region");
  RequestOutcome out{req.time, req.user, req.content, *region, false, std::nullopt, deadline_s};
  if (state.caches[req.user].contains(req.content)) {
    out.d2d = true;
    out.peer = req.user;
    out.latency_s = 0;
    return out;
  }
  std::vector<UserId> eligible;
  for (UserId h : state.directory.holders(req.content)) {
    if (h != req.user && state.region_of[h] == region && state.uploads_left[h] > 0) eligible.push_back(h);
  }
  if (eligible.empty()) return out;
  const UserId peer = eligible[std::uniform_int_distribution<std::size_t>(0, eligible.size() - 1)(rng)];
  --state.uploads_left[peer];
  out.d2d = true;
  out.peer = peer;
  out.latency_s = 0;
  return out;
}

void advance_slot(SimState& state, Slot /*T*/, const PeerParams& peers) {
  std::fill(state.uploads_left.begin(), state.uploads_left.end(), peers.upload_capacity);
}

// ---------------------------------------------------------------------------
// Engine

namespace {

struct Share {
  Slot slot;
  UserId user;
};

class Engine {
 public:
  Engine(const Scenario& sc, const SimConfig& cfg)
      : sc_(sc),
        cfg_(cfg),
        n_users_(sc.n_users),
        n_regions_(sc.region_count()),
        state_(sc.n_users, sc.region_count(), cfg.peers),
        counters_(sc.n_users),
        tracker_(sc.n_users, sc.region_count(), cfg.preference_window_slots, cfg.slot_length_s),
        inherent_(sc.region_count(), cfg.ewma_factor),
        alpha_(&sc.graph),
        request_rng_(derive_seed(cfg.seed, kRequestStream)) {
    std::size_t n_contents = 0;
    for (const auto& e : sc.shares) n_contents = std::max<std::size_t>(n_contents, e.content + 1);
    sharers_.resize(n_contents);
    last_share_.assign(n_contents, -1);
    live_flag_.assign(n_contents, 0);
    table_index_.assign(n_contents, -1);
    in_cache_.assign(n_contents, 0);
    last_region_.resize(n_users_);
    seen_from_.assign(n_users_, 0);
    current_assoc_.assign(n_users_, kNone);
    visited_prev_.resize(n_users_);
    visited_cur_.resize(n_users_);
    contacts_.assign(n_users_, std::vector<std::uint64_t>((n_users_ + 63) / 64, 0));
    contact_count_.assign(n_users_, 0.0);
    pop_counts_.resize(n_users_);
    result_.per_slot.resize(static_cast<std::size_t>(cfg.horizon_slots));
    build_events();
  }

  SimResult run() {
    std::size_t next = 0;
    for (Slot T = 0; T < cfg_.horizon_slots; ++T) {
      const Seconds begin = T * cfg_.slot_length_s;
      const Seconds end = begin + cfg_.slot_length_s;
      region_before_slot_ = last_region_;
      advance_slot(state_, T, cfg_.peers);
      for (auto& v : visited_cur_) v.clear();
      // Mobility events on the boundary belong to the new slot and decide who
      // is present when replication runs.
      while (next < events_.size() && events_[next].time == begin && events_[next].kind != kShare) {
        process(events_[next++], T);
      }
      for (std::size_t u = 0; u < n_users_; ++u) {
        if (state_.region_of[u]) note_visit(UserId(u), *state_.region_of[u]);
      }
      replicate(T);
      while (next < events_.size() && events_[next].time < end) process(events_[next++], T);
      close_slot(T, end);
    }
    return std::move(result_);
  }

 private:
  static constexpr std::size_t kNone = static_cast<std::size_t>(-1);
  enum Kind : int { kEnd = 0, kStart = 1, kShare = 2 };
  struct Event {
    Seconds time;
    int kind;
    std::size_t index;
  };

  void build_events() {
    const Seconds horizon = cfg_.horizon_s();
    for (std::size_t i = 0; i < sc_.associations.size(); ++i) {
      const auto& a = sc_.associations[i];
      if (a.time >= horizon) continue;
      events_.push_back({a.time, kStart, i});
      if (a.end() < horizon) events_.push_back({a.end(), kEnd, i});
    }
    for (std::size_t i = 0; i < sc_.shares.size(); ++i) {
      if (sc_.shares[i].time < horizon && sc_.shares[i].time >= 0) events_.push_back({sc_.shares[i].time, kShare, i});
    }
    std::sort(events_.begin(), events_.end(), [](const Event& a, const Event& b) {
      return std::tie(a.time, a.kind, a.index) < std::tie(b.time, b.kind, b.index);
    });
  }

  void note_visit(UserId u, RegionId r) {
    auto& v = visited_cur_[u];
    if (std::find(v.begin(), v.end(), r) == v.end()) v.push_back(r);
  }

  void process(const Event& ev, Slot T) {
    switch (ev.kind) {
      case kEnd: on_end(ev.index); break;
      case kStart: on_start(ev.index, T); break;
      default: on_share(sc_.shares[ev.index], T); break;
    }
  }

  void on_end(std::size_t i) {
    const auto& a = sc_.associations[i];
    if (current_assoc_[a.user] != i) return;
    tracker_.add(a.user, a.region, seen_from_[a.user], a.end());
    state_.leave(a.user);
    current_assoc_[a.user] = kNone;
  }

  void on_start(std::size_t i, Slot T) {
    const auto& a = sc_.associations[i];
    const UserId u = a.user;
    if (current_assoc_[u] != kNone) on_end(current_assoc_[u]);
    if (last_region_[u]) migrations_cur_.push_back({u, *last_region_[u], a.region, a.time});
    last_region_[u] = a.region;
    seen_from_[u] = a.time;
    current_assoc_[u] = i;
    for (UserId w : state_.occupants[a.region]) meet(u, w);
    state_.enter(u, a.region);
    note_visit(u, a.region);
    (void)T;
  }

  void meet(UserId u, UserId w) {
    if (u == w) return;
    auto& bits = contacts_[u][w / 64];
    const std::uint64_t mask = std::uint64_t{1} << (w % 64);
    if (bits & mask) return;
    bits |= mask;
    contacts_[w][u / 64] |= std::uint64_t{1} << (u % 64);
    contact_count_[u] += 1.0;
    contact_count_[w] += 1.0;
  }

  bool d2d_allowed(ContentId c) const {
    if (cfg_.d2d_contents.empty()) return true;
    return c < cfg_.d2d_contents.size() && cfg_.d2d_contents[c] != 0;
  }

  void on_share(const ShareEvent& e, Slot T) {
    const ContentId c = e.content;
    const UserId u = e.sharer;
    if (e.is_reshare()) {
      serve(e, T);
      auto it = share_slot_.find(user_content_key(*e.parent, c));
      if (it != share_slot_.end()) counters_.add_accept(*e.parent, u, it->second);
    } else {
      state_.cache(u, c);
      if (cfg_.strategy == StrategyKind::movement && d2d_allowed(c)) posted_cur_.push_back(c);
    }
    counters_.add_share(u, T);
    share_slot_.try_emplace(user_content_key(u, c), T);
    sharers_[c].push_back({T, u});
    last_share_[c] = T;
    if (!live_flag_[c]) {
      live_flag_[c] = 1;
      live_.push_back(c);
    }
    alpha_.observe(e);
  }

  void serve(const ShareEvent& e, Slot T) {
    const UserId v = e.sharer;
    const ContentId c = e.content;
    if (!state_.region_of[v]) {
      ++result_.off_network_requests;
      state_.cache(v, c);
      pop_counts_[v][c.value()] += 1.0;
      return;
    }
    const RegionId r = *state_.region_of[v];
    RequestOutcome out;
    if (d2d_allowed(c)) {
      out = handle_request({e.time, v, c}, state_, cfg_.request_deadline_s, request_rng_);
    } else {
      out = {e.time, v, c, r, false, std::nullopt, cfg_.request_deadline_s};
    }
    result_.outcomes.push_back(out);
    auto& counts = result_.per_slot[static_cast<std::size_t>(T)];
    ++counts.requests;
    if (out.d2d) ++counts.d2d;
    inherent_.observe(c, r, T);
    if (cfg_.strategy == StrategyKind::popularity) {
      for (UserId w : state_.occupants[r]) pop_counts_[w][c.value()] += 1.0;
    }
    state_.cache(v, c);
  }

  void close_slot(Slot T, Seconds end) {
    for (std::size_t u = 0; u < n_users_; ++u) {
      if (!state_.region_of[u]) continue;
      tracker_.add(UserId(u), *state_.region_of[u], seen_from_[u], end);
      seen_from_[u] = end;
    }
    migrations_prev_ = std::move(migrations_cur_);
    migrations_cur_.clear();
    std::swap(visited_prev_, visited_cur_);
    posted_prev_ = std::move(posted_cur_);
    posted_cur_.clear();
    state_.audit(T);
  }

  std::vector<UserId> active_users() const {
    std::vector<UserId> out;
    for (std::size_t u = 0; u < n_users_; ++u) {
      if (state_.region_of[u]) out.push_back(UserId(u));
    }
    return out;
  }

  /// Replica fetch source: a co-located holder when there is one.
  void log_fetch(UserId u, ContentId c) {
    const auto region = state_.region_of[u];
    for (UserId h : state_.directory.holders(c)) {
      if (h != u && region && state_.region_of[h] == region) {
        ++result_.replica_fetch_d2d;
        return;
      }
    }
    ++result_.replica_fetch_server;
  }

  void replicate(Slot T) {
    const bool need_tables = cfg_.strategy == StrategyKind::proposed ||
                             (cfg_.keep_tables && T == cfg_.horizon_slots - 1);
    if (need_tables) build_tables(T);
    switch (cfg_.strategy) {
      case StrategyKind::proposed: replicate_proposed(T); break;
      case StrategyKind::movement: replicate_movement(T); break;
      case StrategyKind::popularity: replicate_popularity(T); break;
      case StrategyKind::none: break;
    }
    if (cfg_.keep_tables && T == cfg_.horizon_slots - 1) result_.tables = snapshot_tables(T);
  }

  // -- model tables ---------------------------------------------------------

  const std::vector<double>& preference_row(UserId u) {
    if (!pref_ready_[u]) {
      pref_rows_[u] = tracker_.row(u);
      pref_ready_[u] = 1;
    }
    return pref_rows_[u];
  }

  const std::vector<double>& footprint(UserId u, SlotWindow w) {
    auto& row = footprints_[u];
    if (footprint_ready_[u]) return row;
    footprint_ready_[u] = 1;
    row.assign(n_regions_, 0.0);
    const std::int64_t g = counters_.shares(u, w);
    if (g == 0) return row;
    for (const Friend& f : sc_.graph.friends(u)) {
      const std::int64_t h = counters_.accepts(u, f.user, w);
      if (h == 0) continue;
      const double influence = static_cast<double>(h) / static_cast<double>(g);
      const auto& p = preference_row(f.user);
      for (std::size_t r = 0; r < p.size(); ++r) row[r] += influence * p[r];
    }
    return row;
  }

  double alpha_of(ContentId c) const {
    if (cfg_.alpha_fixed) return *cfg_.alpha_fixed;
    // Contents nobody has reshared yet borrow the pooled estimate.
    return alpha_.alpha(c).value_or(alpha_.pooled());
  }

  void build_tables(Slot T) {
    tracker_.roll(T);
    pref_rows_.assign(n_users_, {});
    pref_ready_.assign(n_users_, 0);
    footprints_.resize(n_users_);
    footprint_ready_.assign(n_users_, 0);
    const SlotWindow influence_window = SlotWindow::before(T, cfg_.influence_window_slots);
    const Slot oldest = cfg_.share_window_slots > 0 ? T - cfg_.share_window_slots : std::numeric_limits<Slot>::min();

    // C(T): contents shared inside the share window.
    std::erase_if(live_, [&](ContentId c) {
      if (last_share_[c] >= oldest) return false;
      live_flag_[c] = 0;
      return true;
    });
    std::sort(live_.begin(), live_.end());

    table_ = PopularityTable{};
    table_.n_regions = n_regions_;
    table_.contents = live_;
    table_.alpha.resize(live_.size());
    table_.p.assign(live_.size() * n_regions_, 0.0);
    table_.a.assign(live_.size() * n_regions_, 0.0);
    std::vector<UserId> sharers;
    for (std::size_t i = 0; i < live_.size(); ++i) {
      const ContentId c = live_[i];
      table_index_[c] = static_cast<std::int64_t>(i);
      table_.alpha[i] = alpha_of(c);
      const auto p = inherent_.row(c, T);
      std::copy(p.begin(), p.end(), table_.p.begin() + static_cast<std::ptrdiff_t>(i * n_regions_));
      sharers.clear();
      for (const Share& s : sharers_[c]) {
        if (s.slot >= oldest && std::find(sharers.begin(), sharers.end(), s.user) == sharers.end()) {
          sharers.push_back(s.user);
        }
      }
      double* a = table_.a.data() + i * n_regions_;
      for (UserId u : sharers) {
        const auto& f = footprint(u, influence_window);
        for (std::size_t r = 0; r < n_regions_; ++r) a[r] += f[r];
      }
      for (std::size_t r = 0; r < n_regions_; ++r) a[r] = p[r] + table_.alpha[i] * a[r];
    }

    migration_ = migration_index(std::span<const Migration>(migrations_prev_), n_regions_, cfg_.migration_norm);

    mobility_.clear();
    for (UserId u : active_users()) {
      const auto& prev = region_before_slot_[u];
      const std::span<const double> ebar = prev ? migration_.bar_row(*prev) : std::span<const double>{};
      auto q = mobility_index(ebar, preference_row(u), visited_prev_[u], n_regions_);
      if (!q.empty()) mobility_.emplace_back(u, std::move(q));
    }
  }

  SimTables snapshot_tables(Slot T) {
    SimTables t;
    t.slot = T;
    const InfluenceTable influence(sc_.graph, counters_, T, cfg_.influence_window_slots);
    for (std::size_t u = 0; u < n_users_; ++u) {
      const auto friends = sc_.graph.friends(UserId(u));
      const auto row = influence.row(UserId(u));
      for (std::size_t i = 0; i < friends.size(); ++i) {
        if (row[i] > 0.0) t.influence.emplace_back(UserId(u), friends[i].user, row[i]);
      }
    }
    t.preference = preference_table(tracker_);
    t.migration = migration_;
    t.popularity = table_;
    t.mobility = mobility_;
    return t;
  }

  // -- strategies -----------------------------------------------------------

  void replicate_proposed(Slot T) {
    const std::size_t C = table_.size();
    const std::size_t R = n_regions_;
    // Per-region lists of contents with positive A.
    std::vector<std::vector<std::pair<std::size_t, double>>> by_region(R);
    for (std::size_t i = 0; i < C; ++i) {
      if (!d2d_allowed(table_.contents[i])) continue;
      const auto a = table_.a_row(i);
      for (std::size_t r = 0; r < R; ++r) {
        if (a[r] > 0.0) by_region[r].emplace_back(i, a[r]);
      }
    }
    std::vector<double> gain(C, 0.0);
    std::vector<std::uint8_t> touched(C, 0);
    std::vector<std::size_t> touched_list;
    std::vector<double> load(C * R, 0.0);
    const double beta = static_cast<double>(cfg_.peers.upload_capacity);
    // One stream per slot; users draw from it in id order.
    Rng rng(derive_seed(cfg_.seed, kSelectStream, static_cast<std::uint64_t>(T)));

    for (const auto& [u, q] : mobility_) {
      touched_list.clear();
      for (std::size_t r = 0; r < R; ++r) {
        if (!(q[r] > 0.0)) continue;
        for (const auto& [i, a] : by_region[r]) {
          touched[i] = 1;
          gain[i] += q[r] * a;
        }
      }
      for (std::size_t i = 0; i < C; ++i) {
        if (touched[i]) touched_list.push_back(i);
      }

      // Z = previous replicas ∪ candidates.
      const std::vector<ContentId> previous(state_.caches[u].items().begin(), state_.caches[u].items().end());
      std::vector<ContentId> z;
      std::vector<double> zg;
      for (ContentId c : previous) {
        const std::int64_t i = live_flag_[c] ? table_index_[c] : -1;
        in_cache_[c] = 1;
        z.push_back(c);
        zg.push_back(i >= 0 ? gain[static_cast<std::size_t>(i)] : 0.0);
      }
      for (std::size_t i : touched_list) {
        const ContentId c = table_.contents[i];
        if (!in_cache_[c]) {
          z.push_back(c);
          zg.push_back(gain[i]);
        }
      }
      for (ContentId c : previous) in_cache_[c] = 0;
      const auto picked = select_replicas(zg, cfg_.peers.cache_capacity, rng);

      std::vector<std::uint8_t> keep(z.size(), 0);
      for (std::size_t k : picked) keep[k] = 1;
      std::size_t room = cfg_.peers.cache_capacity - picked.size();
      // Zero-gain replicas from the last slot stay on as filler.
      for (std::size_t k = 0; k < previous.size() && room > 0; ++k) {
        if (!keep[k] && !(zg[k] > 0.0)) {
          keep[k] = 1;
          --room;
        }
      }
      for (std::size_t k = 0; k < previous.size(); ++k) {
        if (!keep[k]) state_.uncache(u, z[k]);
      }
      for (std::size_t k : picked) {
        if (k < previous.size()) continue;
        log_fetch(u, z[k]);
        state_.cache(u, z[k]);
      }

      for (ContentId c : state_.caches[u].items()) {
        const std::int64_t i = live_flag_[c] ? table_index_[c] : -1;
        if (i < 0) continue;
        for (std::size_t r = 0; r < R; ++r) load[static_cast<std::size_t>(i) * R + r] += q[r] * beta;
      }
      for (std::size_t i : touched_list) {
        gain[i] = 0.0;
        touched[i] = 0;
      }
    }
    for (std::size_t cell = 0; cell < load.size(); ++cell) {
      if (!(load[cell] > 0.0)) continue;
      ++result_.popularity_cells;
      if (over_limit(load[cell], table_.a[cell])) ++result_.popularity_violations;
    }
  }

  void replicate_movement(Slot T) {
    if (posted_prev_.empty()) return;
    Rng rng(derive_seed(cfg_.seed, kMovementStream, static_cast<std::uint64_t>(T)));
    const auto active = active_users();
    std::vector<UserId> eligible;
    for (ContentId c : posted_prev_) {
      eligible.clear();
      for (UserId u : active) {
        if (!state_.caches[u].contains(c)) eligible.push_back(u);
      }
      for (UserId w : movement_based_select(contact_count_, eligible, cfg_.movement_copies, rng)) {
        log_fetch(w, c);
        if (const auto evicted = state_.caches[w].insert_fifo(c)) state_.directory.remove(*evicted, w);
        if (state_.caches[w].contains(c)) state_.directory.add(c, w);
      }
    }
  }

  void replicate_popularity(Slot T) {
    Rng rng(derive_seed(cfg_.seed, kPopularityStream, static_cast<std::uint64_t>(T)));
    std::vector<ContentId> items;
    std::vector<double> offer_counts;
    std::vector<double> held_counts;
    for (std::size_t r = 0; r < n_regions_; ++r) {
      std::vector<UserId> occ = state_.occupants[r];
      std::sort(occ.begin(), occ.end());
      for (UserId h : occ) {
        for (UserId w : occ) {
          if (h == w) continue;
          items.clear();
          for (ContentId c : state_.caches[h].items()) {
            if (d2d_allowed(c)) items.push_back(c);
          }
          offer_counts.resize(items.size());
          for (std::size_t i = 0; i < items.size(); ++i) offer_counts[i] = count_of(h, items[i]);
          const auto pick = popularity_offer(offer_counts, rng);
          if (!pick) continue;
          const ContentId c = items[*pick];
          const double incoming = offer_counts[*pick];
          const auto held = state_.caches[w].items();
          held_counts.resize(held.size());
          for (std::size_t i = 0; i < held.size(); ++i) held_counts[i] = count_of(w, held[i]);
          const auto d = popularity_accept(held, held_counts, c, incoming, state_.caches[w].capacity());
          if (!d.accepted) continue;
          if (d.evicted) state_.uncache(w, *d.evicted);
          state_.cache(w, c);
          ++result_.replica_fetch_d2d;
          double& mine = pop_counts_[w][c.value()];
          mine = std::max(mine, incoming);
        }
      }
    }
  }

  double count_of(UserId u, ContentId c) const {
    auto it = pop_counts_[u].find(c.value());
    return it == pop_counts_[u].end() ? 0.0 : it->second;
  }

  const Scenario& sc_;
  const SimConfig& cfg_;
  std::size_t n_users_;
  std::size_t n_regions_;
  SimState state_;
  HistoryCounters counters_;
  PreferenceTracker tracker_;
  InherentPopularity inherent_;
  AlphaLearner alpha_;
  Rng request_rng_;
  SimResult result_;

  std::vector<Event> events_;
  std::vector<std::vector<Share>> sharers_;
  std::vector<Slot> last_share_;
  std::vector<std::uint8_t> live_flag_;
  std::vector<ContentId> live_;
  std::vector<std::int64_t> table_index_;
  std::unordered_map<std::uint64_t, Slot> share_slot_;

  std::vector<std::optional<RegionId>> last_region_;
  std::vector<std::optional<RegionId>> region_before_slot_;
  std::vector<Seconds> seen_from_;
  std::vector<std::size_t> current_assoc_;
  std::vector<Migration> migrations_cur_;
  std::vector<Migration> migrations_prev_;
  std::vector<std::vector<RegionId>> visited_cur_;
  std::vector<std::vector<RegionId>> visited_prev_;

  std::vector<std::vector<std::uint64_t>> contacts_;
  std::vector<double> contact_count_;
  std::vector<ContentId> posted_cur_;
  std::vector<ContentId> posted_prev_;
  std::vector<std::unordered_map<std::uint32_t, double>> pop_counts_;

  std::vector<std::vector<double>> pref_rows_;
  std::vector<std::uint8_t> pref_ready_;
  std::vector<std::vector<double>> footprints_;
  std::vector<std::uint8_t> footprint_ready_;
  std::vector<std::uint8_t> in_cache_;
  PopularityTable table_;
  MigrationMatrix migration_;
  std::vector<std::pair<UserId, std::vector<double>>> mobility_;
};

}  // namespace

SimResult run_simulation(const Scenario& scenario, const SimConfig& cfg) {
  cfg.validate();
  validate_associations(scenario.associations);
  for (const auto& a : scenario.associations) {
    if (a.user >= scenario.n_users || a.region >= scenario.region_count()) {
      throw ValidationError("association references an unknown user or region");
    }
  }
  for (const auto& e : scenario.shares) {
    if (e.sharer >= scenario.n_users || (e.parent && *e.parent >= scenario.n_users)) {
      throw ValidationError("share references an unknown user");
    }
  }
  Engine engine(scenario, cfg);
  return engine.run();
}

// ---------------------------------------------------------------------------
// Outcome log

void write_outcome_log(std::ostream& out, std::span<const RequestOutcome> outcomes) {
  for (const auto& o : outcomes) {
    out << o.time << ',' << o.user.value() << ',' << o.content.value() << ',' << o.region.value() << ','
        << (o.d2d ? "d2d" : "server") << ',';
    if (o.peer) {
      out << o.peer->value();
    } else {
      out << '-';
    }
    out << '\n';
  }
}

std::vector<RequestOutcome> read_outcome_log(std::istream& in) {
  std::vector<RequestOutcome> out;
  std::string line;
  std::size_t line_no = 0;
  auto number = [&](std::string_view f) {
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
    if (ec != std::errc{} || ptr != f.data() + f.size() || f.empty() || v < 0) {
      throw ParseError(line_no, "bad number '" + std::string(f) + "'");
    }
    return v;
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    std::vector<std::string_view> f;
    std::string_view rest(line);
    while (true) {
      const auto comma = rest.find(',');
      f.push_back(rest.substr(0, comma));
      if (comma == std::string_view::npos) break;
      rest.remove_prefix(comma + 1);
    }
    if (f.size() != 6) throw ParseError(line_no, "expected 6 fields, got " + std::to_string(f.size()));
    RequestOutcome o;
    o.time = number(f[0]);
    o.user = UserId(number(f[1]));
    o.content = ContentId(number(f[2]));
    o.region = RegionId(number(f[3]));
    if (f[4] == "d2d") {
      o.d2d = true;
    } else if (f[4] != "server") {
      throw ParseError(line_no, "outcome must be d2d or server");
    }
    if (f[5] != "-") o.peer = UserId(number(f[5]));
    if (o.d2d != o.peer.has_value()) throw ParseError(line_no, "peer present iff outcome is d2d");
    out.push_back(o);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Table dumps

void write_tables(const std::filesystem::path& dir, const SimTables& t) {
  std::filesystem::create_directories(dir);
  auto open = [&](const char* name) {
    std::ofstream f(dir / name);
    if (!f) throw std::runtime_error("cannot write " + (dir / name).string());
    f.precision(17);
    return f;
  };
  {
    auto f = open("influence.csv");
    f << "u,v,I\n";
    for (const auto& [u, v, i] : t.influence) f << u.value() << ',' << v.value() << ',' << i << '\n';
  }
  {
    auto f = open("preference.csv");
    f << "u,r,P\n";
    for (std::size_t u = 0; u < t.preference.size(); ++u) {
      for (std::size_t r = 0; r < t.preference[u].size(); ++r) {
        if (t.preference[u][r] > 0.0) f << u << ',' << r << ',' << t.preference[u][r] << '\n';
      }
    }
  }
  {
    auto f = open("migration.csv");
    f << "# normalization " << to_string(t.migration.norm) << "\nr,s,E,Ebar\n";
    for (std::size_t r = 0; r < t.migration.n_regions; ++r) {
      for (std::size_t s = 0; s < t.migration.n_regions; ++s) {
        const auto e = t.migration.count(RegionId(r), RegionId(s));
        if (e > 0) f << r << ',' << s << ',' << e << ',' << t.migration.bar(RegionId(r), RegionId(s)) << '\n';
      }
    }
  }
  {
    auto f = open("popularity.csv");
    f << "c,r,p,A,alpha\n";
    for (std::size_t i = 0; i < t.popularity.size(); ++i) {
      for (std::size_t r = 0; r < t.popularity.n_regions; ++r) {
        const double a = t.popularity.a_row(i)[r];
        if (a > 0.0) {
          f << t.popularity.contents[i].value() << ',' << r << ',' << t.popularity.p_row(i)[r] << ',' << a << ','
            << t.popularity.alpha[i] << '\n';
        }
      }
    }
  }
  {
    auto f = open("mobility.csv");
    f << "u,r,Q\n";
    for (const auto& [u, q] : t.mobility) {
      for (std::size_t r = 0; r < q.size(); ++r) {
        if (q[r] > 0.0) f << u.value() << ',' << r << ',' << q[r] << '\n';
      }
    }
  }
}

}  // namespace d2dsim
