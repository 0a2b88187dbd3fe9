// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <map>
#include <numeric>
#include <set>
#include <sstream>

#include "d2dsim/synth.hpp"
#include "doctest.h"

using namespace d2dsim;

namespace {

SynthConfig tiny(std::uint64_t seed = 1) {
  SynthConfig cfg;
  cfg.n_users = 100;
  cfg.n_regions = 10;
  cfg.avg_degree = 8;
  cfg.target_crowdedness = 3;
  cfg.horizon_slots = 100;
  cfg.seed = seed;
  return cfg;
}

}  // namespace

TEST_SUITE("synth") {
  TEST_CASE("two users and degree one give a single edge") {
    SynthConfig cfg;
    cfg.n_users = 2;
    cfg.avg_degree = 1;
    const auto g = gen_social_graph(cfg);
    CHECK(g.edge_count() == 1);
    CHECK(g.are_friends(UserId(0), UserId(1)));
  }

  TEST_CASE("mean degree stays near the target") {
    for (std::uint64_t seed = 1; seed <= 20; ++seed) {
      SynthConfig cfg;
      cfg.seed = seed;
      const auto g = gen_social_graph(cfg);
      CHECK(g.average_degree() >= 38.0);
      CHECK(g.average_degree() <= 42.0);
    }
  }

  TEST_CASE("degree at or above the population is rejected") {
    SynthConfig cfg;
    cfg.n_users = 10;
    cfg.avg_degree = 10;
    CHECK_THROWS_AS(gen_social_graph(cfg), ValidationError);
    cfg.n_users = 1;
    cfg.avg_degree = 0;
    CHECK_THROWS_AS(gen_social_graph(cfg), ValidationError);
  }

  TEST_CASE("steep edge power law gives near-constant probabilities") {
    SynthConfig cfg;
    cfg.powerlaw_exponent_edges = 50;
    const auto g = gen_social_graph(cfg);
    double sum = 0, sq = 0;
    std::size_t n = 0;
    for (std::size_t u = 0; u < cfg.n_users; ++u) {
      for (const auto& f : g.friends(UserId(u))) {
        sum += f.reshare_prob;
        sq += f.reshare_prob * f.reshare_prob;
        ++n;
      }
    }
    const double mean = sum / static_cast<double>(n);
    const double sd = std::sqrt(sq / static_cast<double>(n) - mean * mean);
    CHECK(sd / mean < 0.1);
  }

  TEST_CASE("bounded power law matches its analytic mean") {
    // Oracle: E[x] for p(x) ~ x^-a on [lo, hi] by closed form.
    const double a = 2.5, lo = 0.01, hi = 1.0;
    const double norm = (std::pow(hi, 1 - a) - std::pow(lo, 1 - a)) / (1 - a);
    const double first = (std::pow(hi, 2 - a) - std::pow(lo, 2 - a)) / (2 - a);
    const double expected = first / norm;
    Rng rng(3);
    double sum = 0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
      const double x = bounded_powerlaw(a, lo, hi, rng);
      REQUIRE(x >= lo);
      REQUIRE(x <= hi);
      sum += x;
    }
    CHECK(sum / n == doctest::Approx(expected).epsilon(0.02));
  }

  TEST_CASE("zero posting rate gives no events") {
    auto cfg = tiny();
    cfg.lambda_p_min = cfg.lambda_p_max = 0.0;
    const auto g = gen_social_graph(cfg);
    CHECK(gen_propagation(cfg, g).events.empty());
  }

  TEST_CASE("one certain edge gives one reshare with the configured mean latency") {
    SocialGraph g(2);
    g.add_edge(UserId(0), UserId(1), 1.0);
    const ShareEvent post{0, UserId(0), ContentId(0), {}, {}};
    const double mean = 36000.0;
    double sum = 0;
    const int n = 10000;
    for (int seed = 0; seed < n; ++seed) {
      Rng rng(static_cast<std::uint64_t>(seed));
      const auto events = simulate_cascade(g, post, mean, std::numeric_limits<Seconds>::max(), rng);
      REQUIRE(events.size() == 1);
      CHECK(events[0].sharer == UserId(1));
      CHECK(events[0].parent.value() == UserId(0));
      CHECK(events[0].root.value() == UserId(0));
      sum += static_cast<double>(events[0].time);
    }
    CHECK(std::abs(sum / n - mean) / mean < 0.03);
  }

  TEST_CASE("per-user post counts have the Poisson mean") {
    SynthConfig cfg;
    cfg.n_users = 50;
    cfg.avg_degree = 0;
    cfg.lambda_p_min = cfg.lambda_p_max = 0.01;
    cfg.horizon_slots = 10000;
    const auto g = gen_social_graph(cfg);
    const auto prop = gen_propagation(cfg, g);
    std::size_t posts = 0;
    for (const auto& e : prop.events) posts += e.is_reshare() ? 0 : 1;
    const double per_slot = static_cast<double>(posts) / (50.0 * 10000.0);
    CHECK(std::abs(per_slot - 0.01) / 0.01 < 0.05);
    for (double r : prop.post_rate) CHECK(r == 0.01);
  }

  TEST_CASE("cascades form a valid reshare DAG") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) {
      const auto cfg = tiny(seed);
      const auto g = gen_social_graph(cfg);
      const auto prop = gen_propagation(cfg, g);
      std::map<std::uint32_t, std::map<UserId, Seconds>> shared;  // content → sharer → time
      std::map<std::uint32_t, UserId> poster;
      for (const auto& e : prop.events) {
        auto& users = shared[e.content.value()];
        CHECK_FALSE(users.contains(e.sharer));
        if (e.is_reshare()) {
          REQUIRE(users.contains(*e.parent));
          CHECK(users.at(*e.parent) < e.time);
          CHECK(g.are_friends(*e.parent, e.sharer));
          CHECK(e.root.value() == poster.at(e.content.value()));
        } else {
          poster[e.content.value()] = e.sharer;
        }
        users[e.sharer] = e.time;
        CHECK(e.time < cfg.horizon_s());
      }
      CHECK(std::is_sorted(prop.events.begin(), prop.events.end(), [](const auto& a, const auto& b) {
        return std::tie(a.time, a.content, a.sharer) < std::tie(b.time, b.content, b.sharer);
      }));
    }
  }

  TEST_CASE("generated associations pass the validators") {
    const auto trace = gen_mobility(tiny());
    CHECK_NOTHROW(validate_associations(trace.events));
    const Seconds slot = tiny().slot_length_s;
    for (const auto& e : trace.events) {
      CHECK(e.region < trace.region_count());
      // Split at slot boundaries.
      CHECK(e.time / slot == (e.end() - 1) / slot);
    }
  }

  TEST_CASE("two symmetric regions share visits evenly") {
    double share = 0;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
      SynthConfig cfg;
      cfg.n_users = 60;
      cfg.n_regions = 2;
      cfg.avg_degree = 4;
      cfg.zipf_exponent_regions = 1e-9;
      cfg.favored_regions_min = cfg.favored_regions_max = 2;
      cfg.target_crowdedness = 5;
      cfg.horizon_slots = 200;
      cfg.seed = seed;
      const auto counts = region_visit_counts(gen_mobility(cfg));
      share += static_cast<double>(counts[0]) / static_cast<double>(counts[0] + counts[1]);
    }
    CHECK(std::abs(share / 10 - 0.5) < 0.05);
  }

  TEST_CASE("time-averaged crowdedness is near the target") {
    SynthConfig cfg;
    const auto trace = gen_mobility(cfg);
    CHECK(mean_crowdedness(trace, cfg.horizon_s()) == doctest::Approx(cfg.crowdedness()).epsilon(0.1));
  }

  TEST_CASE("infeasible crowdedness is rejected") {
    SynthConfig cfg;
    cfg.n_users = 100;
    cfg.target_crowdedness = 10;  // needs 400 concurrent users
    CHECK_THROWS_AS(gen_mobility(cfg), ValidationError);
    cfg.n_regions = 1;
    cfg.target_crowdedness = 1;
    CHECK_THROWS_AS(gen_mobility(cfg), ValidationError);
  }

  TEST_CASE("config validation") {
    SynthConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    auto bad = cfg;
    bad.zipf_exponent_regions = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = cfg;
    bad.lambda_p_min = 0.5;
    bad.lambda_p_max = 0.1;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = cfg;
    bad.slot_length_s = 0;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    bad = cfg;
    bad.target_crowdedness = 20;
    CHECK_THROWS_AS(bad.validate(), ValidationError);
    CHECK(SynthConfig::outdoor().n_regions == 100);
    CHECK(SynthConfig::outdoor().crowdedness() == 2.5);
    CHECK(SynthConfig::indoor().crowdedness() == 7.5);
  }

  TEST_CASE("outdoor layout is a 5 km grid") {
    const auto regions = region_layout(SynthConfig::outdoor());
    REQUIRE(regions.size() == 100);
    double max_x = 0, max_y = 0;
    for (const auto& r : regions) {
      CHECK(r.has_position);
      max_x = std::max(max_x, r.x_m);
      max_y = std::max(max_y, r.y_m);
    }
    CHECK(max_x <= 5000.0);
    CHECK(max_y <= 5000.0);
  }

  TEST_CASE("zipf fit recovers a known exponent") {
    std::vector<std::size_t> counts;
    for (int r = 1; r <= 50; ++r) counts.push_back(static_cast<std::size_t>(std::llround(1e6 / std::pow(r, 1.3))));
    CHECK(fit_zipf_exponent(counts) == doctest::Approx(1.3).epsilon(0.01));
  }

  TEST_CASE("default indoor visits fit the configured zipf exponent") {
    SynthConfig cfg;
    const double fit = fit_zipf_exponent(region_visit_counts(gen_mobility(cfg)));
    CHECK(std::abs(fit - cfg.zipf_exponent_regions) <= 0.3);
  }

  TEST_CASE("revisit fraction counts separate visits only") {
    MobilityTrace t;
    t.n_users = 2;
    t.regions.resize(2);
    // User 0: region 0, region 1, region 0 again → revisits.
    t.events = {{0, UserId(0), RegionId(0), 10}, {10, UserId(0), RegionId(1), 10}, {20, UserId(0), RegionId(0), 10},
                // User 1: two back-to-back records in region 0 are one visit.
                {0, UserId(1), RegionId(0), 10}, {10, UserId(1), RegionId(0), 10}};
    CHECK(revisit_fraction(t, 100) == doctest::Approx(0.5));
    SynthConfig cfg;
    CHECK(revisit_fraction(gen_mobility(cfg), 24 * 3600) > 0.3);
  }

  TEST_CASE("generation is deterministic per seed") {
    auto render = [](const SynthConfig& cfg) {
      const auto t = gen_traces(cfg);
      std::ostringstream out;
      write_social_trace(out, t.social);
      write_mobility_trace(out, t.mobility);
      return out.str();
    };
    CHECK(render(tiny(5)) == render(tiny(5)));
    CHECK(render(tiny(5)) != render(tiny(6)));
  }

  TEST_CASE("distance graph keeps every edge inside the interval") {
    SynthConfig cfg = SynthConfig::outdoor();
    cfg.n_users = 200;
    cfg.avg_degree = 10;
    const auto layout = region_layout(cfg);
    Rng rng(1);
    std::vector<Region> homes;
    for (std::size_t u = 0; u < cfg.n_users; ++u) homes.push_back(layout[rng() % layout.size()]);
    const auto g = gen_distance_graph(cfg, homes, 1500, 2500);
    CHECK(g.edge_count() == 1000);
    for (std::size_t u = 0; u < cfg.n_users; ++u) {
      for (const auto& f : g.friends(UserId(u))) {
        const double d = region_distance(homes[u], homes[f.user]);
        CHECK(d >= 1500);
        CHECK(d < 2500);
      }
    }
    // An interval with no pairs gives an empty graph, not a fallback.
    CHECK(gen_distance_graph(cfg, homes, 1e6, 2e6).edge_count() == 0);
    CHECK_THROWS_AS(gen_distance_graph(cfg, homes, 10, 10), ValidationError);
  }
}
