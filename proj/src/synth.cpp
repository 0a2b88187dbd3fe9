// SPDX-License-Identifier: Apache-2.0

#include "d2dsim/synth.hpp"

#include <algorithm>
#include <numeric>
#include <cmath>
#include <queue>
#include <string>
#include <unordered_set>

namespace d2dsim {

namespace {

// Stream tags for derive_seed; one independent rng stream per generator stage.
constexpr std::uint64_t kGraphStream = 1;
constexpr std::uint64_t kEdgeProbStream = 2;
constexpr std::uint64_t kRateStream = 3;
constexpr std::uint64_t kPostStream = 4;
constexpr std::uint64_t kCascadeStream = 5;
constexpr std::uint64_t kRegionStream = 6;
constexpr std::uint64_t kUserWalkStream = 7;

std::uint64_t pair_key(std::size_t a, std::size_t b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

SocialGraph assemble_graph(std::size_t n_users, std::vector<std::pair<UserId, UserId>> edges,
                           const SynthConfig& cfg) {
  std::sort(edges.begin(), edges.end());
  Rng rng(derive_seed(cfg.seed, kEdgeProbStream));
  SocialGraph graph(n_users);
  for (const auto& [u, v] : edges) {
    graph.add_edge(u, v, bounded_powerlaw(cfg.powerlaw_exponent_edges, cfg.reshare_prob_min, 1.0, rng));
  }
  return graph;
}

std::size_t target_edge_count(const SynthConfig& cfg) {
  if (cfg.n_users < 2) throw ValidationError("social graph needs at least 2 users");
  if (cfg.avg_degree < 0.0 || cfg.avg_degree >= static_cast<double>(cfg.n_users)) {
    throw ValidationError("avg_degree must be in [0, n_users)");
  }
  return static_cast<std::size_t>(
      std::llround(static_cast<double>(cfg.n_users) * cfg.avg_degree / 2.0));
}

}  // namespace

std::string_view to_string(Area area) { return area == Area::indoor ? "indoor" : "outdoor"; }

Area parse_area(std::string_view name) {
  if (name == "indoor") return Area::indoor;
  if (name == "outdoor") return Area::outdoor;
  throw std::invalid_argument("unknown scenario '" + std::string(name) + "'");
}

SynthConfig SynthConfig::indoor() { return SynthConfig{}; }

SynthConfig SynthConfig::outdoor() {
  SynthConfig cfg;
  cfg.area = Area::outdoor;
  cfg.n_regions = 100;
  cfg.crowdedness_min = 0.0;
  cfg.crowdedness_max = 5.0;
  return cfg;
}

double SynthConfig::crowdedness() const {
  return target_crowdedness.value_or((crowdedness_min + crowdedness_max) / 2.0);
}

double SynthConfig::presence_fraction() const {
  if (n_users == 0) return 0.0;
  return crowdedness() * static_cast<double>(n_regions) / static_cast<double>(n_users);
}

void SynthConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ValidationError("synth config: " + msg); };
  if (n_users == 0) fail("n_users must be positive");
  if (n_regions == 0) fail("n_regions must be positive");
  if (lambda_p_min < 0.0 || lambda_p_max < lambda_p_min) fail("lambda_p range is empty or negative");
  if (!(reshare_mean_latency_s > 0.0)) fail("reshare_mean_latency_s must be positive");
  if (!(powerlaw_exponent_edges > 0.0)) fail("powerlaw_exponent_edges must be positive");
  if (!(powerlaw_exponent_migration > 0.0)) fail("powerlaw_exponent_migration must be positive");
  if (!(zipf_exponent_regions > 0.0)) fail("zipf_exponent_regions must be positive");
  if (!(reshare_prob_min > 0.0 && reshare_prob_min <= 1.0)) fail("reshare_prob_min must be in (0,1]");
  if (crowdedness_min < 0.0 || crowdedness_max < crowdedness_min) fail("crowdedness range is empty");
  if (!(mean_association_s > 0.0)) fail("mean_association_s must be positive");
  if (!(mean_session_s > 0.0)) fail("mean_session_s must be positive");
  if (favored_regions_min == 0 || favored_regions_max < favored_regions_min) {
    fail("favored region range is empty");
  }
  if (!(favored_share > 0.0 && favored_share <= 1.0)) fail("favored_share must be in (0,1]");
  if (horizon_slots < 1) fail("horizon_slots must be at least 1");
  if (slot_length_s <= 0) fail("slot_length_s must be positive");
  const double c = crowdedness();
  if (c < crowdedness_min || c > crowdedness_max) fail("target crowdedness outside crowdedness range");
}

// ---------------------------------------------------------------------------
// Social graph

double bounded_powerlaw(double exponent, double lo, double hi, Rng& rng) {
  const double u = uniform01(rng);
  if (std::abs(exponent - 1.0) < 1e-12) return lo * std::pow(hi / lo, u);
  // Inverse CDF written relative to lo so large exponents do not overflow.
  const double one_minus = 1.0 - exponent;
  const double span = std::pow(hi / lo, one_minus) - 1.0;
  return std::clamp(lo * std::pow(1.0 + u * span, 1.0 / one_minus), lo, hi);
}

SocialGraph gen_social_graph(const SynthConfig& cfg) {
  const std::size_t m = target_edge_count(cfg);
  const std::size_t n = cfg.n_users;
  const std::size_t max_pairs = n * (n - 1) / 2;
  Rng rng(derive_seed(cfg.seed, kGraphStream));

  std::vector<std::pair<UserId, UserId>> edges;
  edges.reserve(m);
  if (2 * m > max_pairs) {
    for (std::size_t u = 0; u < n; ++u) {
      for (std::size_t v = u + 1; v < n; ++v) edges.emplace_back(UserId(u), UserId(v));
    }
    std::shuffle(edges.begin(), edges.end(), rng);
    edges.resize(m);
  } else {
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(2 * m);
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    while (edges.size() < m) {
      const std::size_t u = pick(rng);
      const std::size_t v = pick(rng);
      if (u == v || !seen.insert(pair_key(u, v)).second) continue;
      edges.emplace_back(UserId(std::min(u, v)), UserId(std::max(u, v)));
    }
  }
  return assemble_graph(n, std::move(edges), cfg);
}

SocialGraph gen_distance_graph(const SynthConfig& cfg, std::span<const Region> homes,
                               double min_distance_m, double max_distance_m) {
  const std::size_t m = target_edge_count(cfg);
  const std::size_t n = cfg.n_users;
  if (homes.size() != n) throw ValidationError("one home position per user required");
  if (!(min_distance_m >= 0.0) || !(max_distance_m > min_distance_m)) {
    throw ValidationError("distance interval is empty");
  }
  Rng rng(derive_seed(cfg.seed, kGraphStream, 1));

  std::vector<std::pair<UserId, UserId>> pairs;
  for (std::size_t u = 0; u < n; ++u) {
    for (std::size_t v = u + 1; v < n; ++v) {
      const double d = region_distance(homes[u], homes[v]);
      if (d >= min_distance_m && d < max_distance_m) pairs.emplace_back(UserId(u), UserId(v));
    }
  }
  // Partial Fisher-Yates: the first m entries become a uniform sample.
  const std::size_t take = std::min(m, pairs.size());
  for (std::size_t i = 0; i < take; ++i) {
    const std::size_t j = std::uniform_int_distribution<std::size_t>(i, pairs.size() - 1)(rng);
    std::swap(pairs[i], pairs[j]);
  }
  pairs.resize(take);
  return assemble_graph(n, std::move(pairs), cfg);
}

// ---------------------------------------------------------------------------
// Propagation

std::vector<ShareEvent> simulate_cascade(const SocialGraph& graph, const ShareEvent& post,
                                         double mean_latency_s, Seconds end, Rng& rng) {
  struct Trigger {
    Seconds time;
    std::uint32_t user;
    std::uint32_t parent;
    bool operator>(const Trigger& o) const { return std::tie(time, user) > std::tie(o.time, o.user); }
  };
  std::priority_queue<Trigger, std::vector<Trigger>, std::greater<>> pending;
  std::unordered_set<std::uint32_t> shared{post.sharer.value()};
  const UserId root = post.sharer;

  auto trigger_friends = [&](UserId who, Seconds at) {
    for (const Friend& f : graph.friends(who)) {
      if (shared.contains(f.user.value())) continue;
      if (uniform01(rng) >= f.reshare_prob) continue;
      const Seconds delay = std::max<Seconds>(1, std::llround(exponential(rng, mean_latency_s)));
      pending.push({at + delay, f.user.value(), who.value()});
    }
  };

  std::vector<ShareEvent> reshares;
  trigger_friends(post.sharer, post.time);
  while (!pending.empty()) {
    const Trigger t = pending.top();
    pending.pop();
    if (t.time >= end) break;
    if (!shared.insert(t.user).second) continue;
    ShareEvent e;
    e.time = t.time;
    e.sharer = UserId(t.user);
    e.content = post.content;
    e.parent = UserId(t.parent);
    e.root = root;
    reshares.push_back(e);
    trigger_friends(e.sharer, e.time);
  }
  return reshares;
}

PropagationTrace gen_propagation(const SynthConfig& cfg, const SocialGraph& graph) {
  cfg.validate();
  PropagationTrace out;
  const std::size_t n = graph.user_count();
  out.post_rate.resize(n);

  struct Post {
    Seconds time;
    std::uint32_t user;
  };
  std::vector<Post> posts;
  for (std::size_t u = 0; u < n; ++u) {
    Rng rate_rng(derive_seed(cfg.seed, kRateStream, u));
    const double rate = cfg.lambda_p_min + (cfg.lambda_p_max - cfg.lambda_p_min) * uniform01(rate_rng);
    out.post_rate[u] = rate;
    if (!(rate > 0.0)) continue;
    Rng rng(derive_seed(cfg.seed, kPostStream, u));
    std::poisson_distribution<int> per_slot(rate);
    for (std::int64_t slot = 0; slot < cfg.horizon_slots; ++slot) {
      const int k = per_slot(rng);
      for (int i = 0; i < k; ++i) {
        const Seconds offset = std::min<Seconds>(
            cfg.slot_length_s - 1, static_cast<Seconds>(uniform01(rng) * static_cast<double>(cfg.slot_length_s)));
        posts.push_back({slot * cfg.slot_length_s + offset, static_cast<std::uint32_t>(u)});
      }
    }
  }
  std::sort(posts.begin(), posts.end(),
            [](const Post& a, const Post& b) { return std::tie(a.time, a.user) < std::tie(b.time, b.user); });

  const Seconds end = cfg.horizon_s();
  for (std::size_t c = 0; c < posts.size(); ++c) {
    ShareEvent post;
    post.time = posts[c].time;
    post.sharer = UserId(posts[c].user);
    post.content = ContentId(c);
    out.events.push_back(post);
    Rng rng(derive_seed(cfg.seed, kCascadeStream, c));
    auto reshares = simulate_cascade(graph, post, cfg.reshare_mean_latency_s, end, rng);
    out.events.insert(out.events.end(), reshares.begin(), reshares.end());
  }
  out.content_count = posts.size();
  std::sort(out.events.begin(), out.events.end(), [](const ShareEvent& a, const ShareEvent& b) {
    return std::tie(a.time, a.content, a.sharer) < std::tie(b.time, b.content, b.sharer);
  });
  return out;
}

// ---------------------------------------------------------------------------
// Mobility

std::vector<Region> region_layout(const SynthConfig& cfg) {
  const std::size_t n = cfg.n_regions;
  const auto side = static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
  const double spacing = cfg.area == Area::indoor ? 100.0 : 5000.0 / static_cast<double>(side);
  std::vector<Region> regions(n);
  for (std::size_t i = 0; i < n; ++i) {
    regions[i].id = RegionId(i);
    regions[i].x_m = (static_cast<double>(i % side) + 0.5) * spacing;
    regions[i].y_m = (static_cast<double>(i / side) + 0.5) * spacing;
    regions[i].has_position = true;
  }
  return regions;
}

MobilityTrace gen_mobility(const SynthConfig& cfg) {
  cfg.validate();
  const std::size_t n_regions = cfg.n_regions;
  if (n_regions < 2) throw ValidationError("mobility generation needs at least 2 regions");
  const double presence = cfg.presence_fraction();
  if (presence > 1.0) {
    throw ValidationError("infeasible crowdedness: " + std::to_string(cfg.n_users) + " users cannot keep " +
                          std::to_string(cfg.crowdedness()) + " users per region in " +
                          std::to_string(n_regions) + " regions");
  }

  MobilityTrace trace;
  trace.n_users = cfg.n_users;
  trace.regions = region_layout(cfg);
  const double spacing = n_regions > 1 ? region_distance(trace.regions[0], trace.regions[1]) : 1.0;

  // Zipf base popularity over a random rank order.
  Rng region_rng(derive_seed(cfg.seed, kRegionStream));
  std::vector<std::size_t> rank(n_regions);
  std::iota(rank.begin(), rank.end(), 0);
  std::shuffle(rank.begin(), rank.end(), region_rng);
  std::vector<double> base(n_regions);
  for (std::size_t i = 0; i < n_regions; ++i) {
    base[rank[i]] = 1.0 / std::pow(static_cast<double>(i + 1), cfg.zipf_exponent_regions);
  }

  // Symmetric power-law distance kernel for proposals and favored-region picks.
  std::vector<std::vector<double>> kernel(n_regions, std::vector<double>(n_regions, 0.0));
  std::vector<double> kernel_mass(n_regions, 0.0);
  std::vector<CumulativeSampler> propose(n_regions);
  for (std::size_t r = 0; r < n_regions; ++r) {
    for (std::size_t s = 0; s < n_regions; ++s) {
      if (s == r) continue;
      const double d = region_distance(trace.regions[r], trace.regions[s]);
      kernel[r][s] = std::pow(1.0 + d / spacing, -cfg.powerlaw_exponent_migration);
      kernel_mass[r] += kernel[r][s];
    }
    propose[r] = CumulativeSampler(kernel[r]);
  }

  const Seconds horizon = cfg.horizon_s();
  const Seconds slot = cfg.slot_length_s;
  const double mean_on = cfg.mean_session_s;
  const double mean_off = presence > 0.0 ? mean_on * (1.0 - presence) / presence : 0.0;

  auto emit = [&](UserId u, RegionId r, Seconds from, Seconds to) {
    // Split at slot boundaries so every slot sees its own association record.
    while (from < to) {
      const Seconds boundary = (from / slot + 1) * slot;
      const Seconds stop = std::min(to, boundary);
      trace.events.push_back({from, u, r, stop - from});
      from = stop;
    }
  };

  for (std::size_t u = 0; u < cfg.n_users && presence > 0.0; ++u) {
    Rng rng(derive_seed(cfg.seed, kUserWalkStream, u));

    // Favored regions: an anchor drawn by popularity, then nearby popular regions.
    const std::size_t k = std::min<std::size_t>(
        n_regions, std::uniform_int_distribution<std::size_t>(cfg.favored_regions_min,
                                                              cfg.favored_regions_max)(rng));
    std::vector<bool> favored(n_regions, false);
    const std::size_t anchor = CumulativeSampler(base)(rng);
    favored[anchor] = true;
    for (std::size_t picked = 1; picked < k; ++picked) {
      std::vector<double> w(n_regions, 0.0);
      for (std::size_t s = 0; s < n_regions; ++s) {
        if (!favored[s]) w[s] = base[s] * kernel[anchor][s];
      }
      favored[weighted_index(w, rng)] = true;
    }
    // Favored regions share their mass evenly; popularity already shaped the pick.
    double other_mass = 0.0;
    for (std::size_t s = 0; s < n_regions; ++s) {
      if (!favored[s]) other_mass += base[s];
    }
    std::vector<double> target(n_regions);
    for (std::size_t s = 0; s < n_regions; ++s) {
      if (favored[s]) {
        target[s] = (other_mass > 0.0 ? cfg.favored_share : 1.0) / static_cast<double>(k);
      } else {
        target[s] = (1.0 - cfg.favored_share) * base[s] / other_mass;
      }
    }
    const CumulativeSampler entry(target);

    bool present = uniform01(rng) < presence;
    Seconds t = 0;
    while (t < horizon) {
      const double mean = present ? mean_on : mean_off;
      const Seconds length = presence >= 1.0 && present
                                 ? horizon
                                 : std::max<Seconds>(1, std::llround(exponential(rng, mean)));
      const Seconds session_end = std::min(horizon, t + length);
      if (present) {
        std::size_t region = entry(rng);
        while (t < session_end) {
          const Seconds d = std::max<Seconds>(1, std::llround(exponential(rng, cfg.mean_association_s)));
          const Seconds stop = std::min(session_end, t + d);
          emit(UserId(u), RegionId(region), t, stop);
          t = stop;
          // Metropolis-Hastings move towards the user's stationary preference.
          const std::size_t proposal = propose[region](rng);
          const double accept = (target[proposal] * kernel_mass[region]) /
                                (target[region] * kernel_mass[proposal]);
          if (uniform01(rng) < accept) region = proposal;
        }
      }
      t = session_end;
      present = !present;
    }
  }

  std::stable_sort(trace.events.begin(), trace.events.end(),
                   [](const AssociationEvent& a, const AssociationEvent& b) {
                     return std::tie(a.time, a.user) < std::tie(b.time, b.user);
                   });
  return trace;
}

SyntheticTraces gen_traces(const SynthConfig& cfg) {
  cfg.validate();
  SyntheticTraces out;
  out.social.n_users = cfg.n_users;
  out.social.graph = gen_social_graph(cfg);
  auto propagation = gen_propagation(cfg, out.social.graph);
  out.social.events = std::move(propagation.events);
  out.post_rate = std::move(propagation.post_rate);
  out.mobility = gen_mobility(cfg);
  return out;
}

// ---------------------------------------------------------------------------
// Diagnostics

std::vector<std::size_t> region_visit_counts(const MobilityTrace& trace) {
  std::vector<std::size_t> counts(trace.region_count(), 0);
  for (const auto& e : trace.events) ++counts[e.region];
  return counts;
}

double fit_zipf_exponent(std::vector<std::size_t> counts) {
  std::erase(counts, 0);
  std::sort(counts.begin(), counts.end(), std::greater<>());
  if (counts.size() < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double x = std::log(static_cast<double>(i + 1));
    const double y = std::log(static_cast<double>(counts[i]));
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return -(n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double revisit_fraction(const MobilityTrace& trace, Seconds window_s) {
  std::size_t active = 0;
  std::size_t revisiting = 0;
  for (const auto& list : associations_by_user(trace)) {
    std::vector<std::size_t> visits(trace.region_count(), 0);
    const AssociationEvent* prev = nullptr;
    bool any = false;
    for (const auto& e : list) {
      if (e.time >= window_s) break;
      any = true;
      const bool continues = prev && prev->region == e.region && prev->end() == e.time;
      if (!continues) ++visits[e.region];
      prev = &e;
    }
    if (!any) continue;
    ++active;
    if (std::any_of(visits.begin(), visits.end(), [](std::size_t v) { return v >= 2; })) ++revisiting;
  }
  return active == 0 ? 0.0 : static_cast<double>(revisiting) / static_cast<double>(active);
}

double mean_crowdedness(const MobilityTrace& trace, Seconds horizon_s) {
  if (trace.region_count() == 0 || horizon_s <= 0) return 0.0;
  double occupied = 0.0;
  for (const auto& e : trace.events) {
    const Seconds stop = std::min(e.end(), horizon_s);
    if (stop > e.time) occupied += static_cast<double>(stop - e.time);
  }
  return occupied / (static_cast<double>(horizon_s) * static_cast<double>(trace.region_count()));
}

}  // namespace d2dsim
