// SPDX-License-Identifier: Apache-2.0

#include "d2dsim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <functional>
#include <iomanip>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace d2dsim {
namespace {

constexpr std::uint64_t kHomeFallbackStream = 40;

double parse_double(std::string_view text, std::string_view what) {
  double v = 0.0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw std::invalid_argument("bad " + std::string(what) + " '" + std::string(text) + "'");
  }
  return v;
}

std::vector<std::optional<RegionId>> scenario_homes(const Scenario& sc) {
  MobilityTrace view;
  view.n_users = sc.n_users;
  view.regions = sc.regions;
  view.events = sc.associations;
  return home_regions(view);
}

void run_parallel(std::size_t n_tasks, std::size_t jobs, const std::function<void(std::size_t)>& task) {
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(1, n_tasks));
  std::vector<std::exception_ptr> errors(n_tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < n_tasks; i = next++) {
      try {
        task(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

Scenario make_scenario(const ExperimentConfig& cfg, std::uint64_t seed, std::optional<DistanceBin> friend_distance) {
  SynthConfig s = cfg.synth;
  s.seed = seed;
  if (!friend_distance) {
    const auto traces = gen_traces(s);
    const auto mapping = map_users(traces.social, traces.mobility, cfg.mapping, seed);
    return build_scenario(traces.social, traces.mobility, mapping);
  }

  // Friendships are drawn after mobility so they can follow home positions;
  // social and mobility user i are the same person.
  s.validate();
  const MobilityTrace mobility = gen_mobility(s);
  const auto homes = home_regions(mobility);
  Rng fallback(derive_seed(seed, kHomeFallbackStream));
  std::vector<Region> positions(s.n_users);
  for (std::size_t u = 0; u < s.n_users; ++u) {
    const std::size_t r = homes[u] ? homes[u]->value()
                                   : std::uniform_int_distribution<std::size_t>(0, mobility.region_count() - 1)(fallback);
    positions[u] = mobility.regions[r];
  }
  SocialTrace social;
  social.n_users = s.n_users;
  social.graph = gen_distance_graph(s, positions, friend_distance->min_m, friend_distance->max_m);
  social.events = gen_propagation(s, social.graph).events;
  UserMapping identity;
  identity.scheme = cfg.mapping;
  for (std::size_t u = 0; u < s.n_users; ++u) {
    identity.social.emplace_back(u);
    identity.mobility.emplace_back(u);
  }
  return build_scenario(social, mobility, identity);
}

double mean_friend_distance(const Scenario& scenario) {
  const auto homes = scenario_homes(scenario);
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t u = 0; u < scenario.n_users; ++u) {
    for (const Friend& f : scenario.graph.friends(UserId(u))) {
      if (f.user <= u) continue;
      if (!homes[u] || !homes[f.user]) continue;
      sum += region_distance(scenario.regions[*homes[u]], scenario.regions[*homes[f.user]]);
      ++n;
    }
  }
  return n == 0 ? std::numeric_limits<double>::quiet_NaN() : sum / static_cast<double>(n);
}

std::vector<std::size_t> content_request_counts(const Scenario& scenario) {
  std::vector<std::size_t> counts;
  for (const auto& e : scenario.shares) {
    if (e.content >= counts.size()) counts.resize(e.content + 1, 0);
    if (e.is_reshare()) ++counts[e.content];
  }
  return counts;
}

std::vector<std::uint8_t> top_content_mask(std::span<const std::size_t> counts, double fraction) {
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw ValidationError("top content fraction must lie in [0,1]");
  if (fraction == 1.0) return {};
  std::vector<std::size_t> order(counts.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return counts[a] > counts[b]; });
  const auto keep = static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(order.size()) - 1e-9));
  // A nonempty all-zero mask still restricts; pad so it is never empty.
  std::vector<std::uint8_t> mask(std::max<std::size_t>(counts.size(), 1), 0);
  for (std::size_t i = 0; i < keep; ++i) mask[order[i]] = 1;
  return mask;
}

ExperimentRun run_experiment(const Scenario& scenario, const ExperimentConfig& cfg, std::uint64_t seed,
                             StrategyKind strategy) {
  ExperimentRun run;
  run.sim = cfg.sim;
  run.sim.seed = seed;
  run.sim.strategy = strategy;
  run.result = run_simulation(scenario, run.sim);
  run.metrics = compute_metrics(run.result, scenario.n_users, run.sim);
  return run;
}

SweepAxis parse_sweep_axis(std::string_view name) {
  if (name == "propagation_intensity") return SweepAxis::propagation_intensity;
  if (name == "crowdedness") return SweepAxis::crowdedness;
  if (name == "friend_distance") return SweepAxis::friend_distance;
  if (name == "mapping_scheme") return SweepAxis::mapping_scheme;
  if (name == "content_popularity_bin") return SweepAxis::content_popularity_bin;
  if (name == "top_content_fraction") return SweepAxis::top_content_fraction;
  throw std::invalid_argument("unknown sweep axis '" + std::string(name) + "'");
}

std::string_view to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::propagation_intensity: return "propagation_intensity";
    case SweepAxis::crowdedness: return "crowdedness";
    case SweepAxis::friend_distance: return "friend_distance";
    case SweepAxis::mapping_scheme: return "mapping_scheme";
    case SweepAxis::content_popularity_bin: return "content_popularity_bin";
    case SweepAxis::top_content_fraction: return "top_content_fraction";
  }
  return "?";
}

std::vector<std::string> default_friend_distance_bins() {
  return {"0-500", "500-1500", "1500-2500", "2500-5000", "5000-inf"};
}

DistanceBin parse_range(std::string_view text) {
  const auto dash = text.find('-');
  if (dash == std::string_view::npos || dash == 0) {
    throw std::invalid_argument("range must look like lo-hi: '" + std::string(text) + "'");
  }
  DistanceBin bin;
  bin.min_m = parse_double(text.substr(0, dash), "range bound");
  const auto hi = text.substr(dash + 1);
  bin.max_m = hi == "inf" ? std::numeric_limits<double>::infinity() : parse_double(hi, "range bound");
  if (!(bin.min_m >= 0.0) || !(bin.max_m > bin.min_m)) {
    throw std::invalid_argument("empty range '" + std::string(text) + "'");
  }
  return bin;
}

SweepResult run_sweep(SweepAxis axis, std::span<const std::string> values, const ExperimentConfig& cfg) {
  if (values.empty()) throw ValidationError("sweep needs at least one value");
  if (cfg.seeds.empty()) throw ValidationError("sweep needs at least one seed");
  if (cfg.strategies.empty()) throw ValidationError("sweep needs at least one strategy");

  // Parse every value up front so bad input fails before any work.
  std::vector<ExperimentConfig> point_cfg(values.size(), cfg);
  std::vector<std::optional<DistanceBin>> bins(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    auto& pc = point_cfg[i];
    const std::string& v = values[i];
    switch (axis) {
      case SweepAxis::propagation_intensity: {
        const double scale = parse_double(v, "intensity");
        if (!(scale >= 0.0)) throw ValidationError("intensity scale must be nonnegative");
        pc.synth.lambda_p_min *= scale;
        pc.synth.lambda_p_max *= scale;
        break;
      }
      case SweepAxis::crowdedness: {
        // Users are added or removed at a fixed presence fraction. Friendship
        // density stays fixed too, as in a user sample of one larger trace.
        const double c = parse_double(v, "crowdedness");
        const double presence = cfg.synth.presence_fraction();
        if (!(c > 0.0) || !(presence > 0.0)) throw ValidationError("crowdedness must be positive");
        pc.synth.n_users = static_cast<std::size_t>(
            std::llround(c * static_cast<double>(cfg.synth.n_regions) / presence));
        if (cfg.synth.n_users > 1 && pc.synth.n_users > 0) {
          pc.synth.avg_degree = cfg.synth.avg_degree * static_cast<double>(pc.synth.n_users - 1) /
                                static_cast<double>(cfg.synth.n_users - 1);
        }
        pc.synth.target_crowdedness = c;
        break;
      }
      case SweepAxis::friend_distance: bins[i] = parse_range(v); break;
      case SweepAxis::mapping_scheme: pc.mapping = parse_mapping_scheme(v); break;
      case SweepAxis::content_popularity_bin: bins[i] = parse_range(v); break;
      case SweepAxis::top_content_fraction: {
        const double f = parse_double(v, "fraction");
        if (!(f >= 0.0 && f <= 1.0)) throw ValidationError("top content fraction must lie in [0,1]");
        break;
      }
    }
    pc.synth.validate();
  }

  // Content bins all come from the same runs; other axes need a run per value.
  const bool shared_runs = axis == SweepAxis::content_popularity_bin;
  const std::size_t n_points = shared_runs ? 1 : values.size();
  const std::size_t n_seeds = cfg.seeds.size();
  const std::size_t n_strat = cfg.strategies.size();

  SweepResult out;
  out.axis = axis;
  out.seed_rows.resize(values.size() * n_seeds * n_strat);
  auto slot = [&](std::size_t v, std::size_t s, std::size_t k) -> SweepSeedRow& {
    return out.seed_rows[(v * n_strat + k) * n_seeds + s];
  };

  run_parallel(n_points * n_seeds, cfg.jobs, [&](std::size_t task) {
    const std::size_t p = task / n_seeds;
    const std::size_t s = task % n_seeds;
    const std::uint64_t seed = cfg.seeds[s];
    const ExperimentConfig& pc = point_cfg[p];
    const bool by_distance = axis == SweepAxis::friend_distance;
    const Scenario sc = make_scenario(pc, seed, by_distance ? bins[p] : std::nullopt);
    const double distance = by_distance ? mean_friend_distance(sc) : std::numeric_limits<double>::quiet_NaN();

    ExperimentConfig run_cfg = pc;
    std::vector<std::size_t> counts;
    if (axis == SweepAxis::top_content_fraction || shared_runs) counts = content_request_counts(sc);
    if (axis == SweepAxis::top_content_fraction) {
      run_cfg.sim.d2d_contents = top_content_mask(counts, parse_double(values[p], "fraction"));
    }

    for (std::size_t k = 0; k < n_strat; ++k) {
      const auto run = run_experiment(sc, run_cfg, seed, cfg.strategies[k]);
      if (!shared_runs) {
        auto& row = slot(p, s, k);
        row = {values[p], cfg.strategies[k], seed, run.metrics.requests, run.metrics.d2d,
               run.metrics.d2d_fraction, distance};
        continue;
      }
      for (std::size_t v = 0; v < values.size(); ++v) {
        auto& row = slot(v, s, k);
        row = {values[v], cfg.strategies[k], seed, 0, 0, 0.0, distance};
        for (const auto& o : run.result.outcomes) {
          const auto n = static_cast<double>(counts[o.content]);
          if (n < bins[v]->min_m || n >= bins[v]->max_m) continue;
          ++row.requests;
          if (o.d2d) ++row.d2d;
        }
        row.d2d_fraction = row.requests == 0 ? 0.0 : static_cast<double>(row.d2d) / static_cast<double>(row.requests);
      }
    }
  });

  for (std::size_t v = 0; v < values.size(); ++v) {
    for (std::size_t k = 0; k < n_strat; ++k) {
      SweepRow row;
      row.value = values[v];
      row.strategy = cfg.strategies[k];
      row.seeds = n_seeds;
      double sum = 0.0;
      double dist = 0.0;
      for (std::size_t s = 0; s < n_seeds; ++s) {
        const auto& r = slot(v, s, k);
        sum += r.d2d_fraction;
        dist += r.friend_distance_m;
        row.requests += r.requests;
        row.d2d += r.d2d;
      }
      row.mean_fraction = sum / static_cast<double>(n_seeds);
      row.friend_distance_m = dist / static_cast<double>(n_seeds);
      double ss = 0.0;
      for (std::size_t s = 0; s < n_seeds; ++s) {
        const double d = slot(v, s, k).d2d_fraction - row.mean_fraction;
        ss += d * d;
      }
      row.stdev_fraction = n_seeds > 1 ? std::sqrt(ss / static_cast<double>(n_seeds - 1)) : 0.0;
      out.rows.push_back(row);
    }
  }
  return out;
}

namespace {

void put_distance(std::ostream& out, double d) {
  if (std::isnan(d)) {
    out << '-';
  } else {
    out << d;
  }
}

}  // namespace

void write_sweep(std::ostream& out, const SweepResult& result) {
  out << "axis,value,strategy,seeds,mean_d2d_fraction,stdev_d2d_fraction,requests,d2d,friend_distance_m\n";
  const auto precision = out.precision(9);
  for (const auto& r : result.rows) {
    out << to_string(result.axis) << ',' << r.value << ',' << to_string(r.strategy) << ',' << r.seeds << ','
        << r.mean_fraction << ',' << r.stdev_fraction << ',' << r.requests << ',' << r.d2d << ',';
    put_distance(out, r.friend_distance_m);
    out << '\n';
  }
  out.precision(precision);
}

void write_sweep_long(std::ostream& out, const SweepResult& result) {
  out << "axis,value,strategy,seed,requests,d2d,d2d_fraction,friend_distance_m\n";
  const auto precision = out.precision(9);
  for (const auto& r : result.seed_rows) {
    out << to_string(result.axis) << ',' << r.value << ',' << to_string(r.strategy) << ',' << r.seed << ','
        << r.requests << ',' << r.d2d << ',' << r.d2d_fraction << ',';
    put_distance(out, r.friend_distance_m);
    out << '\n';
  }
  out.precision(precision);
}

}  // namespace d2dsim
