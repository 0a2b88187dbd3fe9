// SPDX-License-Identifier: Apache-2.0

// Acceptance checks. Prints one PASS/FAIL line per criterion and exits
// nonzero when any criterion fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "d2dsim/metrics.hpp"
#include "d2dsim/mobility.hpp"
#include "d2dsim/propagation.hpp"
#include "d2dsim/simulator.hpp"
#include "d2dsim/strategy.hpp"
#include "d2dsim/sweep.hpp"
#include "d2dsim/synth.hpp"

using namespace d2dsim;

namespace {

// Tolerances and targets.
constexpr std::size_t kOrderingSeeds = 10;
constexpr double kMinRatioPopularity = 1.5;
constexpr double kMinRatioMovement = 2.5;
constexpr double kMaxSecondsPerSeed = 300.0;
constexpr std::size_t kSweepSeeds = 3;
constexpr std::size_t kCrowdSeeds = 5;  // the sparsest level has few requests per seed
constexpr double kMinSpearman = 0.8;
constexpr double kTopCoverage = 0.2;
constexpr double kTopShare = 0.8;
constexpr std::size_t kOracleInstances = 100;
constexpr std::size_t kOracleSamples = 10000;
constexpr double kOracleSeconds = 60.0;
constexpr double kRowSumTol = 1e-9;
constexpr std::size_t kMonotoneTrials = 1000;
constexpr std::size_t kSelectDraws = 100000;
constexpr double kSelectTol = 0.01;
constexpr std::size_t kPeerDraws = 10000;
constexpr double kPeerTol = 0.02;
constexpr double kZipfTol = 0.3;
constexpr double kPoissonTol = 0.05;
constexpr double kMinRevisit = 0.3;

int failures = 0;

void report(int n, bool ok, const std::string& detail) {
  std::cout << (ok ? "PASS" : "FAIL") << " criterion " << n << ": " << detail << std::endl;
  if (!ok) ++failures;
}

std::string fmt(double x, int digits = 4) {
  std::ostringstream s;
  s.precision(digits);
  s << x;
  return s.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::vector<double> average_ranks(const std::vector<double>& x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return x[a] < x[b]; });
  std::vector<double> rank(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && x[order[j + 1]] == x[order[i]]) ++j;
    for (std::size_t k = i; k <= j; ++k) rank[order[k]] = (static_cast<double>(i + j) / 2.0) + 1.0;
    i = j + 1;
  }
  return rank;
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return (sxx == 0 || syy == 0) ? 0.0 : sxy / std::sqrt(sxx * syy);
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  return pearson(average_ranks(x), average_ranks(y));
}

double slope(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

std::vector<std::uint64_t> seeds(std::size_t n) {
  std::vector<std::uint64_t> s(n);
  std::iota(s.begin(), s.end(), std::uint64_t{1});
  return s;
}

std::string joined(const std::vector<double>& xs) {
  std::string s;
  for (double x : xs) s += (s.empty() ? "" : " ") + fmt(x, 3);
  return s;
}

/// Mean fractions of one strategy, in value order.
std::vector<double> means_of(const SweepResult& r, StrategyKind k) {
  std::vector<double> out;
  for (const auto& row : r.rows) {
    if (row.strategy == k) out.push_back(row.mean_fraction);
  }
  return out;
}

std::string log_of(const SimResult& r) {
  std::ostringstream s;
  write_outcome_log(s, r.outcomes);
  return s.str();
}

// Criterion 1 keeps these for criteria 6 and 9.
ExperimentRun first_proposed;
std::map<StrategyKind, std::string> seed1_logs;

void strategy_ordering() {
  ExperimentConfig cfg;
  const std::vector<StrategyKind> kinds{StrategyKind::proposed, StrategyKind::movement, StrategyKind::popularity};
  std::map<StrategyKind, double> sum;
  double worst_seconds = 0;
  for (std::uint64_t seed : seeds(kOrderingSeeds)) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto sc = make_scenario(cfg, seed);
    for (auto k : kinds) {
      ExperimentConfig run_cfg = cfg;
      run_cfg.sim.keep_tables = seed == 1 && k == StrategyKind::proposed;
      auto run = run_experiment(sc, run_cfg, seed, k);
      sum[k] += run.metrics.d2d_fraction;
      if (seed == 1) {
        seed1_logs[k] = log_of(run.result);
        if (k == StrategyKind::proposed) first_proposed = std::move(run);
      }
    }
    worst_seconds = std::max(worst_seconds, seconds_since(t0));
  }
  const double n = static_cast<double>(kOrderingSeeds);
  const double p = sum[StrategyKind::proposed] / n;
  const double m = sum[StrategyKind::movement] / n;
  const double q = sum[StrategyKind::popularity] / n;
  const double r_pop = q > 0 ? p / q : INFINITY;
  const double r_mov = m > 0 ? p / m : INFINITY;
  const bool ok = r_pop >= kMinRatioPopularity && r_mov >= kMinRatioMovement && worst_seconds < kMaxSecondsPerSeed;
  report(1, ok,
         "proposed " + fmt(p) + ", popularity " + fmt(q) + ", movement " + fmt(m) + "; ratio vs popularity " +
             fmt(r_pop, 3) + " (>= " + fmt(kMinRatioPopularity) + "), vs movement " + fmt(r_mov, 3) + " (>= " +
             fmt(kMinRatioMovement) + "); slowest seed " + fmt(worst_seconds, 3) + " s (< 300)");
}

void crowdedness_sensitivity() {
  ExperimentConfig cfg;
  cfg.seeds = seeds(kCrowdSeeds);
  const std::vector<std::string> values{"1.5", "4.5", "7.5", "10.5", "13.5"};
  const std::vector<double> x{1.5, 4.5, 7.5, 10.5, 13.5};
  const auto r = run_sweep(SweepAxis::crowdedness, values, cfg);
  const auto p = means_of(r, StrategyKind::proposed);
  const double rho_p = spearman(x, p);
  const double slope_p = slope(x, p);
  bool ok = rho_p >= kMinSpearman;
  std::string detail = "proposed [" + joined(p) + "] rho " + fmt(rho_p, 3) + " slope " + fmt(slope_p, 3);
  for (auto k : {StrategyKind::movement, StrategyKind::popularity}) {
    const auto b = means_of(r, k);
    const double rho_b = spearman(x, b);
    const double slope_b = slope(x, b);
    const bool weaker = std::abs(rho_b) < rho_p || slope_b < slope_p;
    ok = ok && weaker;
    detail += "; " + std::string(to_string(k)) + " [" + joined(b) + "] rho " + fmt(rho_b, 3) + " slope " +
              fmt(slope_b, 3);
  }
  report(2, ok, detail);
}

void friend_distance_trend() {
  ExperimentConfig cfg;
  cfg.synth = SynthConfig::outdoor();
  cfg.seeds = seeds(kSweepSeeds);
  cfg.strategies = {StrategyKind::proposed};
  const auto bins = default_friend_distance_bins();
  const auto r = run_sweep(SweepAxis::friend_distance, bins, cfg);
  const auto p = means_of(r, StrategyKind::proposed);
  bool ok = p.size() == bins.size();
  for (std::size_t i = 1; i < p.size(); ++i) ok = ok && p[i] < p[i - 1];
  std::string dist;
  for (const auto& row : r.rows) dist += (dist.empty() ? "" : " ") + fmt(row.friend_distance_m, 4);
  report(3, ok, "proposed by bin [" + joined(p) + "] (strictly decreasing), mean friend distance m [" + dist + "]");
}

void top_content_fraction() {
  ExperimentConfig cfg;
  cfg.seeds = seeds(kSweepSeeds);
  cfg.strategies = {StrategyKind::proposed};
  const std::vector<double> fractions{0.05, 0.1, kTopCoverage, 0.5, 1.0};
  std::vector<std::string> values;
  for (double f : fractions) values.push_back(fmt(f));
  const auto r = run_sweep(SweepAxis::top_content_fraction, values, cfg);
  const auto p = means_of(r, StrategyKind::proposed);
  bool monotone = true;
  for (std::size_t i = 1; i < p.size(); ++i) monotone = monotone && p[i] >= p[i - 1];
  const auto at = std::find(fractions.begin(), fractions.end(), kTopCoverage) - fractions.begin();
  const double at20 = p[static_cast<std::size_t>(at)], full = p.back();
  const bool share = at20 >= kTopShare * full;
  report(4, monotone && share,
         "proposed at 5/10/20/50/100% [" + joined(p) + "]; nondecreasing " + (monotone ? "yes" : "no") +
             "; 20% reaches " + fmt(full > 0 ? at20 / full : 0.0, 3) + " of full (>= 0.8)");
}

// Independent objective and feasibility for criterion 5.
struct Score {
  double objective = 0;
  bool cache_ok = true;
  bool demand_ok = true;
};

Score score(const InstanceSnapshot& s, const std::vector<std::uint8_t>& k) {
  Score o;
  for (std::size_t u = 0; u < s.n_users; ++u) {
    std::size_t load = 0;
    for (std::size_t c = 0; c < s.n_contents; ++c) load += k[u * s.n_contents + c];
    if (load > s.peers[u].cache_capacity) o.cache_ok = false;
  }
  for (std::size_t c = 0; c < s.n_contents; ++c) {
    for (std::size_t r = 0; r < s.n_regions; ++r) {
      const double a = s.a[c * s.n_regions + r];
      double load = 0;
      for (std::size_t u = 0; u < s.n_users; ++u) {
        if (!k[u * s.n_contents + c]) continue;
        const double qb = s.q[u * s.n_regions + r] * static_cast<double>(s.peers[u].upload_capacity);
        load += qb;
        o.objective += qb * a;
      }
      if (load > a + 1e-9 * std::max(1.0, std::abs(a))) o.demand_ok = false;
    }
  }
  return o;
}

InstanceSnapshot random_instance(Rng& rng) {
  std::size_t users, contents;
  do {
    users = 1 + rng() % 4;
    contents = 1 + rng() % 8;
  } while (users * contents > kExactCellLimit);
  const std::size_t regions = 1 + rng() % 3;
  InstanceSnapshot s(users, contents, regions);
  for (std::size_t u = 0; u < users; ++u) {
    double total = 0;
    for (std::size_t r = 0; r < regions; ++r) total += (s.q_at(u, r) = uniform01(rng));
    for (std::size_t r = 0; r < regions; ++r) s.q_at(u, r) /= total;
    s.peers[u].cache_capacity = 1 + rng() % 3;
    s.peers[u].upload_capacity = 1 + rng() % 2;
  }
  for (std::size_t c = 0; c < contents; ++c) {
    for (std::size_t r = 0; r < regions; ++r) s.a_at(c, r) = rng() % 4 == 0 ? 0.0 : 4.0 * uniform01(rng);
  }
  return s;
}

/// Random feasible assignment: visit cells in random order and switch each
/// on with probability 1/2 when the result stays feasible.
std::vector<std::uint8_t> random_feasible(const InstanceSnapshot& s, Rng& rng) {
  const std::size_t cells = s.n_users * s.n_contents;
  std::vector<std::size_t> order(cells);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::uint8_t> k(cells, 0);
  for (std::size_t i : order) {
    if (rng() % 2 == 0) continue;
    k[i] = 1;
    const auto sc = score(s, k);
    if (!sc.cache_ok || !sc.demand_ok) k[i] = 0;
  }
  return k;
}

void oracle_suite() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(derive_seed(5, 0, 0));
  std::size_t infeasible = 0, dominated = 0, heuristic_cap = 0, ratio_n = 0, heuristic_over = 0;
  double ratio_sum = 0;
  for (std::size_t i = 0; i < kOracleInstances; ++i) {
    const auto s = random_instance(rng);
    const auto opt = exact_optimize(s);
    const auto best = score(s, opt.k.k);
    if (!best.cache_ok || !best.demand_ok) ++infeasible;
    for (std::size_t j = 0; j < kOracleSamples; ++j) {
      const auto k = random_feasible(s, rng);
      if (score(s, k).objective > best.objective + 1e-9 * std::max(1.0, best.objective)) {
        ++dominated;
        break;
      }
    }
    const auto h = heuristic_assign(s, rng);
    const auto hs = score(s, h.k);
    if (!hs.cache_ok) ++heuristic_cap;
    if (!hs.demand_ok) ++heuristic_over;
    if (best.objective > 0) {
      ratio_sum += hs.objective / best.objective;
      ++ratio_n;
    }
  }
  const double secs = seconds_since(t0);
  const double ratio = ratio_n ? ratio_sum / static_cast<double>(ratio_n) : 0.0;
  const bool ok = infeasible == 0 && dominated == 0 && heuristic_cap == 0 && secs < kOracleSeconds;
  report(5, ok,
         std::to_string(kOracleInstances) + " instances: exact infeasible " + std::to_string(infeasible) +
             ", beaten by a random feasible sample " + std::to_string(dominated) +
             "; heuristic mean optimality ratio " + fmt(ratio, 4) + " (cache violations " +
             std::to_string(heuristic_cap) + ", over-demand instances " + std::to_string(heuristic_over) + "); " +
             fmt(secs, 3) + " s (< 60)");
}

void numeric_invariants() {
  Rng rng(derive_seed(6, 0, 0));
  double worst_p = 0, worst_q = 0;
  std::size_t rows = 0;
  bool influence_ok = true;

  // Tables from the default run.
  const auto& tables = first_proposed.result.tables;
  if (tables) {
    for (const auto& row : tables->preference) {
      if (row.empty()) continue;
      worst_p = std::max(worst_p, std::abs(std::accumulate(row.begin(), row.end(), 0.0) - 1.0));
      ++rows;
    }
    for (const auto& [u, q] : tables->mobility) {
      worst_q = std::max(worst_q, std::abs(std::accumulate(q.begin(), q.end(), 0.0) - 1.0));
      ++rows;
    }
    for (const auto& [u, v, i] : tables->influence) influence_ok = influence_ok && i >= 0.0 && i <= 1.0;
  } else {
    influence_ok = false;
  }

  // Randomized rows.
  for (std::size_t t = 0; t < kMonotoneTrials; ++t) {
    const std::size_t R = 1 + rng() % 12;
    std::vector<double> d(R), e(R);
    for (auto& x : d) x = rng() % 3 == 0 ? 0.0 : 1e4 * uniform01(rng);
    for (auto& x : e) x = rng() % 3 == 0 ? 0.0 : uniform01(rng);
    const auto p = regional_preference(d);
    if (!p.empty()) worst_p = std::max(worst_p, std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0));
    std::vector<RegionId> visited{RegionId(rng() % R)};
    const auto q = mobility_index(e, p, visited, R);
    worst_q = std::max(worst_q, std::abs(std::accumulate(q.begin(), q.end(), 0.0) - 1.0));

    std::vector<std::int64_t> g(1 + rng() % 10), h(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      g[k] = static_cast<std::int64_t>(rng() % 6);
      h[k] = g[k] == 0 ? 0 : static_cast<std::int64_t>(rng() % (g[k] + 1));
    }
    const double i = influence_index(h, g);
    influence_ok = influence_ok && i >= 0.0 && i <= 1.0;
  }

  // Social popularity never drops when p, alpha, influence or sharers grow.
  std::size_t monotone_fail = 0;
  const std::size_t n = 8, R = 3;
  for (std::size_t t = 0; t < kMonotoneTrials; ++t) {
    SocialGraph g(n);
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t v = u + 1; v < n; ++v) {
        if (rng() % 3 == 0) g.add_edge(UserId(u), UserId(v), 0.5);
      }
    }
    std::vector<double> I(n * n), P(n * R);
    for (auto& x : I) x = uniform01(rng);
    for (auto& x : P) x = uniform01(rng);
    std::vector<UserId> sharers;
    for (std::size_t u = 0; u < n; ++u) {
      if (rng() % 3 == 0) sharers.emplace_back(u);
    }
    const double p = uniform01(rng), alpha = uniform01(rng);
    const RegionId r(rng() % R);
    auto inf = [&](UserId u, UserId v) { return I[u * n + v]; };
    auto pref = [&](UserId v, RegionId s) { return P[v * R + s]; };
    const double base = social_popularity(p, alpha, sharers, g, inf, pref, r);
    auto bumped = I;
    bumped[rng() % bumped.size()] += uniform01(rng);
    auto inf2 = [&](UserId u, UserId v) { return bumped[u * n + v]; };
    auto more = sharers;
    more.emplace_back(rng() % n);
    const bool ok = base >= p && social_popularity(p + uniform01(rng), alpha, sharers, g, inf, pref, r) >= base &&
                    social_popularity(p, std::min(1.0, alpha + uniform01(rng)), sharers, g, inf, pref, r) >= base &&
                    social_popularity(p, alpha, sharers, g, inf2, pref, r) >= base &&
                    social_popularity(p, alpha, more, g, inf, pref, r) >= base;
    if (!ok) ++monotone_fail;
  }

  const bool ok = worst_p <= kRowSumTol && worst_q <= kRowSumTol && influence_ok && monotone_fail == 0 && rows > 0;
  report(6, ok,
         "preference row sum error " + fmt(worst_p, 3) + ", mobility row sum error " + fmt(worst_q, 3) +
             " (<= 1e-9, " + std::to_string(rows) + " table rows plus " + std::to_string(kMonotoneTrials) +
             " random); influence in [0,1] " + (influence_ok ? "yes" : "no") + "; popularity monotonicity failures " +
             std::to_string(monotone_fail) + "/" + std::to_string(kMonotoneTrials));
}

void sampling_correctness() {
  Rng rng(derive_seed(7, 0, 0));
  const std::vector<double> gains{0.5, 1.0, 2.0, 0.0, 4.0, 2.5};
  const double total = std::accumulate(gains.begin(), gains.end(), 0.0);
  std::vector<std::size_t> hits(gains.size(), 0);
  for (std::size_t i = 0; i < kSelectDraws; ++i) {
    const auto pick = select_replicas(gains, 1, rng);
    if (pick.size() == 1) ++hits[pick[0]];
  }
  double worst_select = 0;
  for (std::size_t i = 0; i < gains.size(); ++i) {
    worst_select = std::max(worst_select, std::abs(static_cast<double>(hits[i]) / kSelectDraws - gains[i] / total));
  }

  const std::size_t holders = 4;
  std::vector<std::size_t> peer_hits(holders + 1, 0);
  for (std::size_t i = 0; i < kPeerDraws; ++i) {
    SimState s(holders + 1, 1, PeerParams{2, 5});
    for (std::size_t u = 0; u <= holders; ++u) s.enter(UserId(u), RegionId(0));
    for (std::size_t u = 1; u <= holders; ++u) s.cache(UserId(u), ContentId(0));
    const auto out = handle_request({0, UserId(0), ContentId(0)}, s, 300, rng);
    if (out.peer) ++peer_hits[*out.peer];
  }
  double worst_peer = 0;
  for (std::size_t u = 1; u <= holders; ++u) {
    worst_peer = std::max(worst_peer, std::abs(static_cast<double>(peer_hits[u]) / kPeerDraws - 1.0 / holders));
  }
  const bool ok = worst_select <= kSelectTol && worst_peer <= kPeerTol && peer_hits[0] == 0;
  report(7, ok,
         "B=1 selection max deviation " + fmt(worst_select, 3) + " (<= 0.01 over 1e5); peer choice max deviation " +
             fmt(worst_peer, 3) + " (<= 0.02 over 1e4)");
}

void generator_fidelity() {
  SynthConfig cfg;
  const auto traces = gen_traces(cfg);
  const double zipf = fit_zipf_exponent(region_visit_counts(traces.mobility));
  std::size_t posts = 0;
  for (const auto& e : traces.social.events) posts += e.is_reshare() ? 0 : 1;
  const double expected = std::accumulate(traces.post_rate.begin(), traces.post_rate.end(), 0.0) *
                          static_cast<double>(cfg.horizon_slots);
  const double poisson_err = std::abs(static_cast<double>(posts) - expected) / expected;

  // Fixed rate over a long horizon, per user.
  SynthConfig fixed;
  fixed.n_users = 50;
  fixed.avg_degree = 0;
  fixed.lambda_p_min = fixed.lambda_p_max = 0.01;
  fixed.horizon_slots = 10000;
  const auto prop = gen_propagation(fixed, gen_social_graph(fixed));
  std::size_t fixed_posts = 0;
  for (const auto& e : prop.events) fixed_posts += e.is_reshare() ? 0 : 1;
  const double fixed_err = std::abs(static_cast<double>(fixed_posts) / (50.0 * 10000.0) - 0.01) / 0.01;

  const double revisit = revisit_fraction(traces.mobility, 24 * 3600);
  const bool ok = std::abs(zipf - cfg.zipf_exponent_regions) <= kZipfTol && poisson_err <= kPoissonTol &&
                  fixed_err <= kPoissonTol && revisit >= kMinRevisit;
  report(8, ok,
         "zipf fit " + fmt(zipf, 3) + " vs " + fmt(cfg.zipf_exponent_regions) + " (+-0.3); post rate error " +
             fmt(poisson_err, 3) + " default, " + fmt(fixed_err, 3) + " fixed rate (<= 0.05); 24 h revisit fraction " +
             fmt(revisit, 3) + " (>= 0.3)");
}

void determinism() {
  ExperimentConfig cfg;
  const auto sc = make_scenario(cfg, 1);
  bool ok = seed1_logs.size() == 3;
  std::size_t bytes = 0;
  for (const auto& [k, first] : seed1_logs) {
    const auto again = log_of(run_experiment(sc, cfg, 1, k).result);
    ok = ok && again == first && !first.empty();
    bytes += first.size();
  }
  report(9, ok, "seed 1 logs of all three strategies byte-identical across two runs (" + std::to_string(bytes) +
                    " bytes)");
}

void guarded(int n, const std::function<void()>& f) {
  try {
    f();
  } catch (const std::exception& e) {
    report(n, false, std::string("exception: ") + e.what());
  }
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  guarded(1, strategy_ordering);
  guarded(2, crowdedness_sensitivity);
  guarded(3, friend_distance_trend);
  guarded(4, top_content_fraction);
  guarded(5, oracle_suite);
  guarded(6, numeric_invariants);
  guarded(7, sampling_correctness);
  guarded(8, generator_fidelity);
  guarded(9, determinism);
  std::cout << (failures == 0 ? "all criteria passed" : std::to_string(failures) + " criteria failed") << " in "
            << fmt(seconds_since(t0), 4) << " s" << std::endl;
  return failures == 0 ? 0 : 1;
}
