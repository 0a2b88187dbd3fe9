// SPDX-License-Identifier: Apache-2.0

#include "d2dsim/trace.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <numeric>
#include <ostream>
#include <set>
#include <string>

#include "d2dsim/random.hpp"

namespace d2dsim {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    fields.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

template <typename T>
T parse_number(std::string_view field, std::size_t line, const char* what) {
  T value{};
  const auto* first = field.data();
  const auto* last = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last || field.empty()) {
    throw ParseError(line, std::string("bad ") + what + " '" + std::string(field) + "'");
  }
  return value;
}

std::uint32_t parse_id(std::string_view field, std::size_t line, const char* what) {
  return parse_number<std::uint32_t>(field, line, what);
}

std::optional<std::uint32_t> parse_optional_id(std::string_view field, std::size_t line,
                                               const char* what) {
  if (field == "-") return std::nullopt;
  return parse_id(field, line, what);
}

void expect_fields(const std::vector<std::string_view>& fields, std::size_t n, std::size_t line) {
  if (fields.size() != n) {
    throw ParseError(line, "expected " + std::to_string(n) + " fields, got " +
                               std::to_string(fields.size()));
  }
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

template <typename Fn>
void for_each_record(std::istream& in, Fn&& fn) {
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(raw);
    if (line.empty() || line.front() == '#') continue;
    fn(split_fields(line), line_no);
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// SocialGraph

void SocialGraph::add_edge(UserId u, UserId v, double prob) {
  if (u == v) throw ValidationError("self edge on user " + std::to_string(u.value()));
  if (!(prob >= 0.0 && prob <= 1.0)) {
    throw ValidationError("reshare probability out of [0,1] on edge " +
                          std::to_string(u.value()) + "-" + std::to_string(v.value()));
  }
  const std::size_t needed = std::max<std::size_t>(u, v) + 1;
  if (needed > adjacency_.size()) adjacency_.resize(needed);

  if (auto existing = reshare_prob(u, v)) {
    if (*existing != prob) {
      throw ValidationError("asymmetric edge " + std::to_string(u.value()) + "-" +
                            std::to_string(v.value()) + ": " + format_double(*existing) +
                            " vs " + format_double(prob));
    }
    return;
  }
  auto insert = [](std::vector<Friend>& list, UserId who, double p) {
    auto pos = std::lower_bound(list.begin(), list.end(), who,
                                [](const Friend& f, UserId id) { return f.user < id; });
    list.insert(pos, Friend{who, p});
  };
  insert(adjacency_[u], v, prob);
  insert(adjacency_[v], u, prob);
  ++edge_count_;
}

double SocialGraph::average_degree() const {
  if (adjacency_.empty()) return 0.0;
  return 2.0 * static_cast<double>(edge_count_) / static_cast<double>(adjacency_.size());
}

bool SocialGraph::are_friends(UserId u, UserId v) const { return reshare_prob(u, v).has_value(); }

std::optional<double> SocialGraph::reshare_prob(UserId u, UserId v) const {
  if (u >= adjacency_.size()) return std::nullopt;
  const auto& list = adjacency_[u];
  auto pos = std::lower_bound(list.begin(), list.end(), v,
                              [](const Friend& f, UserId id) { return f.user < id; });
  if (pos == list.end() || pos->user != v) return std::nullopt;
  return pos->reshare_prob;
}

void SocialGraph::resize(std::size_t n_users) {
  if (n_users < adjacency_.size()) {
    for (std::size_t u = n_users; u < adjacency_.size(); ++u) {
      if (!adjacency_[u].empty()) {
        throw ValidationError("cannot shrink graph below user " + std::to_string(u));
      }
    }
  }
  adjacency_.resize(n_users);
}

double region_distance(const Region& a, const Region& b) {
  return std::hypot(a.x_m - b.x_m, a.y_m - b.y_m);
}

// ---------------------------------------------------------------------------
// Social trace I/O

SocialTrace read_social_trace(std::istream& in) {
  struct PendingShare {
    ShareEvent event;
    std::size_t line;
  };
  std::optional<std::size_t> declared_users;
  std::vector<PendingShare> shares;
  SocialGraph graph;
  std::set<std::uint32_t> known;

  for_each_record(in, [&](const std::vector<std::string_view>& f, std::size_t line) {
    if (f[0] == "N") {
      expect_fields(f, 2, line);
      declared_users = parse_number<std::size_t>(f[1], line, "user count");
    } else if (f[0] == "S") {
      expect_fields(f, 6, line);
      ShareEvent e;
      e.time = parse_number<Seconds>(f[1], line, "time");
      if (e.time < 0) throw ParseError(line, "negative time");
      e.sharer = UserId(parse_id(f[2], line, "user"));
      e.content = ContentId(parse_id(f[3], line, "content"));
      if (auto p = parse_optional_id(f[4], line, "parent")) e.parent = UserId(*p);
      if (auto r = parse_optional_id(f[5], line, "root")) e.root = UserId(*r);
      known.insert(e.sharer.value());
      shares.push_back({e, line});
    } else if (f[0] == "E") {
      expect_fields(f, 4, line);
      const UserId u(parse_id(f[1], line, "user"));
      const UserId v(parse_id(f[2], line, "user"));
      const double p = parse_number<double>(f[3], line, "reshare probability");
      try {
        graph.add_edge(u, v, p);
      } catch (const ValidationError& err) {
        throw ValidationError("line " + std::to_string(line) + ": " + err.what());
      }
      known.insert(u.value());
      known.insert(v.value());
    } else {
      throw ParseError(line, "unknown record type '" + std::string(f[0]) + "'");
    }
  });

  SocialTrace trace;
  if (declared_users) {
    trace.n_users = *declared_users;
    if (!known.empty() && *known.rbegin() >= trace.n_users) {
      throw ValidationError("user " + std::to_string(*known.rbegin()) +
                            " outside declared population of " + std::to_string(trace.n_users));
    }
  } else {
    trace.n_users = known.empty() ? 0 : static_cast<std::size_t>(*known.rbegin()) + 1;
  }
  auto is_known = [&](UserId u) {
    return declared_users ? u < trace.n_users : known.contains(u.value());
  };
  for (const auto& [e, line] : shares) {
    if (e.parent && !is_known(*e.parent)) {
      throw ParseError(line, "unknown parent user " + std::to_string(e.parent->value()));
    }
    if (e.root && !is_known(*e.root)) {
      throw ParseError(line, "unknown root user " + std::to_string(e.root->value()));
    }
  }

  graph.resize(trace.n_users);
  trace.events.reserve(shares.size());
  for (const auto& s : shares) trace.events.push_back(s.event);
  std::stable_sort(trace.events.begin(), trace.events.end(),
                   [](const ShareEvent& a, const ShareEvent& b) { return a.time < b.time; });
  for (const auto& e : trace.events) {
    if (e.parent && !graph.are_friends(e.sharer, *e.parent)) ++trace.non_friend_reshares;
  }
  trace.graph = std::move(graph);
  return trace;
}

SocialTrace load_social_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open social trace " + path.string());
  return read_social_trace(in);
}

void write_social_trace(std::ostream& out, const SocialTrace& trace) {
  out << "N," << trace.n_users << '\n';
  for (std::size_t u = 0; u < trace.graph.user_count(); ++u) {
    for (const Friend& f : trace.graph.friends(UserId(u))) {
      if (f.user > u) out << "E," << u << ',' << f.user.value() << ',' << format_double(f.reshare_prob) << '\n';
    }
  }
  for (const ShareEvent& e : trace.events) {
    out << "S," << e.time << ',' << e.sharer.value() << ',' << e.content.value() << ',';
    if (e.parent) out << e.parent->value(); else out << '-';
    out << ',';
    if (e.root) out << e.root->value(); else out << '-';
    out << '\n';
  }
}

// ---------------------------------------------------------------------------
// Mobility trace I/O

void validate_associations(std::span<const AssociationEvent> events) {
  std::map<std::uint32_t, std::vector<AssociationEvent>> per_user;
  for (const auto& e : events) {
    if (e.duration <= 0) {
      throw ValidationError("user " + std::to_string(e.user.value()) +
                            ": non-positive association duration at t=" + std::to_string(e.time));
    }
    per_user[e.user.value()].push_back(e);
  }
  for (auto& [user, list] : per_user) {
    std::stable_sort(list.begin(), list.end(),
                     [](const AssociationEvent& a, const AssociationEvent& b) { return a.time < b.time; });
    for (std::size_t i = 1; i < list.size(); ++i) {
      if (list[i].time < list[i - 1].end()) {
        throw ValidationError("user " + std::to_string(user) + ": association at t=" +
                              std::to_string(list[i].time) + " overlaps association [" +
                              std::to_string(list[i - 1].time) + "," +
                              std::to_string(list[i - 1].end()) + ")");
      }
    }
  }
}

MobilityTrace read_mobility_trace(std::istream& in) {
  std::optional<std::size_t> declared_users;
  std::map<std::uint32_t, Region> positioned;
  std::vector<AssociationEvent> events;
  std::uint32_t max_region = 0;
  bool any_region = false;
  std::uint32_t max_user = 0;
  bool any_user = false;

  for_each_record(in, [&](const std::vector<std::string_view>& f, std::size_t line) {
    if (f[0] == "N") {
      expect_fields(f, 2, line);
      declared_users = parse_number<std::size_t>(f[1], line, "user count");
    } else if (f[0] == "A") {
      expect_fields(f, 5, line);
      AssociationEvent e;
      e.time = parse_number<Seconds>(f[1], line, "time");
      if (e.time < 0) throw ParseError(line, "negative time");
      e.user = UserId(parse_id(f[2], line, "user"));
      e.region = RegionId(parse_id(f[3], line, "region"));
      e.duration = parse_number<Seconds>(f[4], line, "duration");
      if (e.duration <= 0) throw ParseError(line, "duration must be positive");
      max_region = std::max(max_region, e.region.value());
      max_user = std::max(max_user, e.user.value());
      any_region = any_user = true;
      events.push_back(e);
    } else if (f[0] == "R") {
      expect_fields(f, 4, line);
      Region r;
      r.id = RegionId(parse_id(f[1], line, "region"));
      r.x_m = parse_number<double>(f[2], line, "x");
      r.y_m = parse_number<double>(f[3], line, "y");
      r.has_position = true;
      if (positioned.contains(r.id.value())) {
        throw ParseError(line, "duplicate region " + std::to_string(r.id.value()));
      }
      max_region = std::max(max_region, r.id.value());
      any_region = true;
      positioned[r.id.value()] = r;
    } else {
      throw ParseError(line, "unknown record type '" + std::string(f[0]) + "'");
    }
  });

  MobilityTrace trace;
  trace.n_users = declared_users.value_or(any_user ? max_user + 1 : 0);
  if (any_user && max_user >= trace.n_users) {
    throw ValidationError("user " + std::to_string(max_user) + " outside declared population of " +
                          std::to_string(trace.n_users));
  }
  const std::size_t n_regions = any_region ? max_region + 1 : 0;
  trace.regions.resize(n_regions);
  for (std::size_t r = 0; r < n_regions; ++r) trace.regions[r].id = RegionId(r);
  for (const auto& [id, region] : positioned) trace.regions[id] = region;

  validate_associations(events);
  std::stable_sort(events.begin(), events.end(), [](const AssociationEvent& a, const AssociationEvent& b) {
    return std::tie(a.time, a.user) < std::tie(b.time, b.user);
  });
  trace.events = std::move(events);
  return trace;
}

MobilityTrace load_mobility_trace(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mobility trace " + path.string());
  return read_mobility_trace(in);
}

void write_mobility_trace(std::ostream& out, const MobilityTrace& trace) {
  out << "N," << trace.n_users << '\n';
  for (const Region& r : trace.regions) {
    if (r.has_position) {
      out << "R," << r.id.value() << ',' << format_double(r.x_m) << ',' << format_double(r.y_m) << '\n';
    }
  }
  for (const AssociationEvent& e : trace.events) {
    out << "A," << e.time << ',' << e.user.value() << ',' << e.region.value() << ',' << e.duration << '\n';
  }
}

// ---------------------------------------------------------------------------
// Derived views

std::vector<std::vector<AssociationEvent>> associations_by_user(const MobilityTrace& trace) {
  std::vector<std::vector<AssociationEvent>> out(trace.n_users);
  for (const auto& e : trace.events) out[e.user].push_back(e);
  return out;
}

std::vector<Migration> migration_pairs(const MobilityTrace& trace) {
  std::vector<Migration> out;
  for (const auto& list : associations_by_user(trace)) {
    for (std::size_t i = 1; i < list.size(); ++i) {
      out.push_back({list[i].user, list[i - 1].region, list[i].region, list[i].time});
    }
  }
  return out;
}

std::vector<std::size_t> occupancy_at(const MobilityTrace& trace, Seconds t) {
  std::vector<std::size_t> count(trace.region_count(), 0);
  for (const auto& e : trace.events) {
    if (e.time <= t && t < e.end()) ++count[e.region];
  }
  return count;
}

std::vector<std::size_t> social_intensity(const SocialTrace& trace) {
  std::vector<std::size_t> out(trace.n_users, 0);
  for (const auto& e : trace.events) ++out[e.sharer];
  return out;
}

std::vector<std::size_t> mobility_intensity(const MobilityTrace& trace) {
  std::vector<std::size_t> out(trace.n_users, 0);
  for (const auto& e : trace.events) ++out[e.user];
  return out;
}

std::vector<std::optional<RegionId>> home_regions(const MobilityTrace& trace) {
  std::vector<std::map<std::uint32_t, Seconds>> time_in(trace.n_users);
  for (const auto& e : trace.events) time_in[e.user][e.region.value()] += e.duration;
  std::vector<std::optional<RegionId>> out(trace.n_users);
  for (std::size_t u = 0; u < trace.n_users; ++u) {
    Seconds best = -1;
    for (const auto& [region, t] : time_in[u]) {
      if (t > best) {
        best = t;
        out[u] = RegionId(region);
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// User mapping

MappingScheme parse_mapping_scheme(std::string_view name) {
  if (name == "independent") return MappingScheme::independent;
  if (name == "social_rank") return MappingScheme::social_rank;
  if (name == "social_mobility_rank") return MappingScheme::social_mobility_rank;
  throw std::invalid_argument("unknown mapping scheme '" + std::string(name) + "'");
}

std::string_view to_string(MappingScheme scheme) {
  switch (scheme) {
    case MappingScheme::independent: return "independent";
    case MappingScheme::social_rank: return "social_rank";
    case MappingScheme::social_mobility_rank: return "social_mobility_rank";
  }
  return "?";
}

namespace {

std::vector<UserId> keep_uniform(std::size_t population, std::size_t keep, Rng& rng) {
  std::vector<UserId> all(population);
  for (std::size_t i = 0; i < population; ++i) all[i] = UserId(i);
  if (keep < population) {
    std::shuffle(all.begin(), all.end(), rng);
    all.resize(keep);
    std::sort(all.begin(), all.end());
  }
  return all;
}

/// Stable ordering by descending intensity, ties by ascending id.
std::vector<UserId> rank_by(std::vector<UserId> users, const std::vector<std::size_t>& intensity) {
  std::stable_sort(users.begin(), users.end(),
                   [&](UserId a, UserId b) { return intensity[a] > intensity[b]; });
  return users;
}

}  // namespace

UserMapping map_users(const SocialTrace& social, const MobilityTrace& mobility,
                      MappingScheme scheme, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x6d6170));
  const std::size_t common = std::min(social.n_users, mobility.n_users);
  std::vector<UserId> social_kept = keep_uniform(social.n_users, common, rng);
  std::vector<UserId> mobility_kept = keep_uniform(mobility.n_users, common, rng);

  std::vector<UserId> social_order;
  std::vector<UserId> mobility_order;
  switch (scheme) {
    case MappingScheme::independent:
      social_order = social_kept;
      mobility_order = mobility_kept;
      std::shuffle(mobility_order.begin(), mobility_order.end(), rng);
      break;
    case MappingScheme::social_rank: {
      social_order = rank_by(social_kept, social_intensity(social));
      // Mobility users grouped by home region; groups and members in random order.
      const auto homes = home_regions(mobility);
      std::map<std::int64_t, std::vector<UserId>> groups;
      for (UserId m : mobility_kept) {
        groups[homes[m] ? static_cast<std::int64_t>(homes[m]->value()) : -1].push_back(m);
      }
      std::vector<std::vector<UserId>> ordered;
      for (auto& [home, members] : groups) {
        std::shuffle(members.begin(), members.end(), rng);
        ordered.push_back(std::move(members));
      }
      std::shuffle(ordered.begin(), ordered.end(), rng);
      for (auto& g : ordered) mobility_order.insert(mobility_order.end(), g.begin(), g.end());
      break;
    }
    case MappingScheme::social_mobility_rank:
      social_order = rank_by(social_kept, social_intensity(social));
      mobility_order = rank_by(mobility_kept, mobility_intensity(mobility));
      break;
  }

  std::vector<std::pair<UserId, UserId>> pairs(common);
  for (std::size_t i = 0; i < common; ++i) pairs[i] = {social_order[i], mobility_order[i]};
  std::sort(pairs.begin(), pairs.end());

  UserMapping mapping;
  mapping.scheme = scheme;
  for (const auto& [s, m] : pairs) {
    mapping.social.push_back(s);
    mapping.mobility.push_back(m);
  }
  return mapping;
}

Scenario build_scenario(const SocialTrace& social, const MobilityTrace& mobility,
                        const UserMapping& mapping) {
  constexpr std::uint32_t kDropped = UINT32_MAX;
  std::vector<std::uint32_t> from_social(social.n_users, kDropped);
  std::vector<std::uint32_t> from_mobility(mobility.n_users, kDropped);
  for (std::size_t i = 0; i < mapping.size(); ++i) {
    if (mapping.social[i] >= social.n_users || mapping.mobility[i] >= mobility.n_users) {
      throw ValidationError("mapping references a user outside the traces");
    }
    from_social[mapping.social[i]] = static_cast<std::uint32_t>(i);
    from_mobility[mapping.mobility[i]] = static_cast<std::uint32_t>(i);
  }

  Scenario scenario;
  scenario.n_users = mapping.size();
  scenario.regions = mobility.regions;
  scenario.graph = SocialGraph(scenario.n_users);
  for (std::size_t u = 0; u < social.graph.user_count(); ++u) {
    if (from_social[u] == kDropped) continue;
    for (const Friend& f : social.graph.friends(UserId(u))) {
      if (f.user < u || from_social[f.user] == kDropped) continue;
      scenario.graph.add_edge(UserId(from_social[u]), UserId(from_social[f.user]), f.reshare_prob);
    }
  }
  for (const ShareEvent& e : social.events) {
    if (from_social[e.sharer] == kDropped) continue;
    if (e.parent && from_social[*e.parent] == kDropped) continue;
    ShareEvent out = e;
    out.sharer = UserId(from_social[e.sharer]);
    if (e.parent) out.parent = UserId(from_social[*e.parent]);
    if (e.root) {
      if (from_social[*e.root] == kDropped) out.root.reset();
      else out.root = UserId(from_social[*e.root]);
    }
    scenario.shares.push_back(out);
  }
  for (const AssociationEvent& e : mobility.events) {
    if (from_mobility[e.user] == kDropped) continue;
    AssociationEvent out = e;
    out.user = UserId(from_mobility[e.user]);
    scenario.associations.push_back(out);
  }
  std::stable_sort(scenario.associations.begin(), scenario.associations.end(),
                   [](const AssociationEvent& a, const AssociationEvent& b) {
                     return std::tie(a.time, a.user) < std::tie(b.time, b.user);
                   });
  return scenario;
}

}  // namespace d2dsim
