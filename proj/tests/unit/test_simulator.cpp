// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <tuple>

#include "d2dsim/simulator.hpp"
#include "d2dsim/sweep.hpp"
#include "doctest.h"
#include "helpers.hpp"

using namespace d2dsim;

namespace {

SimState three_users_one_region() {
  SimState s(4, 2, PeerParams{2, 1});
  s.enter(UserId(0), RegionId(0));
  s.enter(UserId(1), RegionId(0));
  s.enter(UserId(2), RegionId(0));
  s.enter(UserId(3), RegionId(1));
  return s;
}

Scenario handsim_scenario() {
  const auto social = load_social_trace(test::fixture("handsim_social.txt"));
  const auto mobility = load_mobility_trace(test::fixture("handsim_mobility.txt"));
  UserMapping identity;
  for (std::size_t u = 0; u < 20; ++u) {
    identity.social.emplace_back(u);
    identity.mobility.emplace_back(u);
  }
  return build_scenario(social, mobility, identity);
}

}  // namespace

TEST_SUITE("simulator") {
  TEST_CASE("a requester holding the content serves itself") {
    auto s = three_users_one_region();
    s.cache(UserId(0), ContentId(5));
    Rng rng(1);
    const auto out = handle_request({10, UserId(0), ContentId(5)}, s, 300, rng);
    CHECK(out.d2d);
    CHECK(out.peer.value() == UserId(0));
    CHECK(out.latency_s == 0);
    CHECK(s.uploads_left[0] == 1);
  }

  TEST_CASE("no co-located holder means the server answers") {
    auto s = three_users_one_region();
    s.cache(UserId(3), ContentId(5));  // holder in another region
    Rng rng(1);
    const auto out = handle_request({10, UserId(0), ContentId(5)}, s, 300, rng);
    CHECK_FALSE(out.d2d);
    CHECK_FALSE(out.peer.has_value());
    CHECK(out.latency_s == 300);
    CHECK(out.region == RegionId(0));
  }

  TEST_CASE("upload budget limits a holder per slot") {
    auto s = three_users_one_region();
    s.cache(UserId(1), ContentId(5));
    Rng rng(1);
    CHECK(handle_request({10, UserId(0), ContentId(5)}, s, 300, rng).d2d);
    CHECK(s.uploads_left[1] == 0);
    CHECK_FALSE(handle_request({11, UserId(2), ContentId(5)}, s, 300, rng).d2d);
    advance_slot(s, 1, PeerParams{2, 1});
    CHECK(handle_request({12, UserId(2), ContentId(5)}, s, 300, rng).d2d);
  }

  TEST_CASE("peer choice is uniform over eligible holders") {
    Rng rng(2);
    std::map<UserId, int> hits;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      SimState s(4, 1, PeerParams{2, 5});
      for (std::size_t u = 0; u < 4; ++u) s.enter(UserId(u), RegionId(0));
      for (std::size_t u = 1; u < 4; ++u) s.cache(UserId(u), ContentId(0));
      ++hits[handle_request({0, UserId(0), ContentId(0)}, s, 300, rng).peer.value()];
    }
    for (std::size_t u = 1; u < 4; ++u) CHECK(std::abs(hits[UserId(u)] / double(n) - 1.0 / 3.0) < 0.02);
  }

  TEST_CASE("audit catches a cache the directory does not know") {
    auto s = three_users_one_region();
    s.cache(UserId(0), ContentId(1));
    CHECK_NOTHROW(s.audit(0));
    s.caches[1].insert(ContentId(1));
    CHECK_THROWS_AS(s.audit(7), InvariantError);
    try {
      s.audit(7);
    } catch (const InvariantError& e) {
      CHECK(std::string(e.what()).find("slot 7") != std::string::npos);
    }
  }

  TEST_CASE("coordinator keeps holders unique") {
    Coordinator c;
    c.add(ContentId(2), UserId(1));
    c.add(ContentId(2), UserId(1));
    c.add(ContentId(2), UserId(3));
    CHECK(c.replica_count() == 2);
    c.remove(ContentId(2), UserId(1));
    CHECK(c.holders(ContentId(2)).size() == 1);
    CHECK(c.holders(ContentId(9)).empty());
  }

  TEST_CASE("strategy none matches an independent replay of the fixture") {
    const Scenario sc = handsim_scenario();
    SimConfig cfg;
    cfg.strategy = StrategyKind::none;
    cfg.horizon_slots = 50;
    cfg.peers = {4, 2};
    cfg.seed = 3;
    const auto result = run_simulation(sc, cfg);

    // Replay: associations and shares in time order, ends before starts before shares.
    struct Ev {
      Seconds t;
      int kind;  // 0 end, 1 start, 2 share
      std::size_t idx;
    };
    std::vector<Ev> evs;
    for (std::size_t i = 0; i < sc.associations.size(); ++i) {
      evs.push_back({sc.associations[i].time, 1, i});
      evs.push_back({sc.associations[i].end(), 0, i});
    }
    for (std::size_t i = 0; i < sc.shares.size(); ++i) evs.push_back({sc.shares[i].time, 2, i});
    std::sort(evs.begin(), evs.end(),
              [](const Ev& a, const Ev& b) { return std::tie(a.t, a.kind, a.idx) < std::tie(b.t, b.kind, b.idx); });

    std::vector<int> region(sc.n_users, -1);
    std::vector<std::set<std::uint32_t>> cache(sc.n_users);
    std::vector<std::size_t> budget(sc.n_users, 2);
    Slot current = 0;
    std::size_t next = 0, off = 0, d2d = 0;
    for (const auto& e : evs) {
      if (e.t >= cfg.horizon_s()) break;
      const Slot slot = e.t / cfg.slot_length_s;
      if (slot != current) {
        std::fill(budget.begin(), budget.end(), 2);
        current = slot;
      }
      if (e.kind == 0) {
        region[sc.associations[e.idx].user] = -1;
        continue;
      }
      if (e.kind == 1) {
        region[sc.associations[e.idx].user] = static_cast<int>(sc.associations[e.idx].region.value());
        continue;
      }
      const auto& s = sc.shares[e.idx];
      const UserId v = s.sharer;
      const auto c = s.content.value();
      auto keep = [&] {
        if (cache[v].size() < 4) cache[v].insert(c);
      };
      if (!s.is_reshare()) {
        keep();
        continue;
      }
      if (region[v] < 0) {
        ++off;
        keep();
        continue;
      }
      REQUIRE(next < result.outcomes.size());
      const auto& got = result.outcomes[next++];
      CHECK(got.time == s.time);
      CHECK(got.user == v);
      CHECK(got.content == s.content);
      CHECK(static_cast<int>(got.region.value()) == region[v]);
      std::set<UserId> eligible;
      if (cache[v].contains(c)) {
        eligible.insert(v);
      } else {
        for (std::size_t w = 0; w < sc.n_users; ++w) {
          if (w != v && region[w] == region[v] && cache[w].contains(c) && budget[w] > 0) eligible.insert(UserId(w));
        }
      }
      CHECK(got.d2d == !eligible.empty());
      if (got.d2d) {
        ++d2d;
        REQUIRE(got.peer.has_value());
        CHECK(eligible.contains(*got.peer));
        if (*got.peer != v) --budget[*got.peer];
      }
      keep();
    }
    CHECK(next == result.outcomes.size());
    CHECK(result.off_network_requests == off);
    CHECK(d2d > 0);
    CHECK(d2d < result.outcomes.size());
    CHECK(result.replica_fetch_d2d + result.replica_fetch_server == 0);
  }

  TEST_CASE("every strategy keeps the engine invariants on the fixture") {
    const Scenario sc = handsim_scenario();
    for (auto kind : {StrategyKind::proposed, StrategyKind::movement, StrategyKind::popularity}) {
      SimConfig cfg;
      cfg.strategy = kind;
      cfg.horizon_slots = 50;
      cfg.peers = {3, 1};
      cfg.movement_copies = 2;
      SimResult r;
      CHECK_NOTHROW(r = run_simulation(sc, cfg));  // audits every slot
      std::size_t total = 0;
      for (const auto& s : r.per_slot) total += s.requests;
      CHECK(total == r.outcomes.size());
      for (const auto& o : r.outcomes) {
        CHECK(o.d2d == o.peer.has_value());
        CHECK(o.latency_s == (o.d2d ? 0 : cfg.request_deadline_s));
      }
      CHECK(r.popularity_violations <= r.popularity_cells);
    }
  }

  TEST_CASE("identical config and seed give byte-identical logs") {
    const auto exp = test::small_experiment();
    const auto sc = make_scenario(exp, 4);
    for (auto kind : {StrategyKind::proposed, StrategyKind::movement, StrategyKind::popularity}) {
      SimConfig cfg = exp.sim;
      cfg.strategy = kind;
      cfg.seed = 4;
      std::ostringstream a, b;
      write_outcome_log(a, run_simulation(sc, cfg).outcomes);
      write_outcome_log(b, run_simulation(sc, cfg).outcomes);
      CHECK(a.str() == b.str());
      CHECK_FALSE(a.str().empty());
    }
  }

  TEST_CASE("outcome log round-trips") {
    const std::vector<RequestOutcome> log{
        {5, UserId(1), ContentId(2), RegionId(3), true, UserId(4), 0},
        {9, UserId(2), ContentId(2), RegionId(0), false, std::nullopt, 300},
    };
    std::ostringstream out;
    write_outcome_log(out, log);
    std::istringstream in(out.str());
    const auto back = read_outcome_log(in);
    REQUIRE(back.size() == 2);
    CHECK(back[0].peer.value() == UserId(4));
    CHECK_FALSE(back[1].d2d);
    CHECK(back[0].time == 5);
  }

  TEST_CASE("server-only contents never go D2D") {
    const auto exp = test::small_experiment();
    const auto sc = make_scenario(exp, 2);
    SimConfig cfg = exp.sim;
    cfg.d2d_contents = {0};  // nonempty mask allowing nothing
    const auto r = run_simulation(sc, cfg);
    REQUIRE_FALSE(r.outcomes.empty());
    for (const auto& o : r.outcomes) CHECK_FALSE(o.d2d);
  }

  TEST_CASE("tables are kept for the final slot on request") {
    const auto exp = test::small_experiment();
    const auto sc = make_scenario(exp, 2);
    SimConfig cfg = exp.sim;
    cfg.keep_tables = true;
    const auto r = run_simulation(sc, cfg);
    REQUIRE(r.tables.has_value());
    CHECK(r.tables->slot == cfg.horizon_slots - 1);
    for (std::size_t i = 0; i < r.tables->popularity.size(); ++i) {
      const auto a = r.tables->popularity.a_row(i);
      const auto p = r.tables->popularity.p_row(i);
      for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k] >= p[k]);
    }
    for (const auto& [u, q] : r.tables->mobility) {
      CHECK(std::abs(std::accumulate(q.begin(), q.end(), 0.0) - 1.0) <= 1e-9);
    }
    const auto dir = test::scratch_dir("tables");
    write_tables(dir, *r.tables);
    for (const char* f : {"influence.csv", "preference.csv", "migration.csv", "popularity.csv", "mobility.csv"}) {
      CHECK(std::filesystem::exists(dir / f));
    }
  }

  TEST_CASE("config validation") {
    SimConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.alpha_fixed = 1.5;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    cfg = SimConfig{};
    cfg.ewma_factor = 0;
    CHECK_THROWS_AS(cfg.validate(), ValidationError);
    CHECK(parse_strategy("movement") == StrategyKind::movement);
    CHECK_THROWS_AS(parse_strategy("greedy"), std::invalid_argument);
  }
}
