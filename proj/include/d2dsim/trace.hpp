// SPDX-License-Identifier: Apache-2.0

#ifndef D2DSIM_TRACE_HPP
#define D2DSIM_TRACE_HPP

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "d2dsim/ids.hpp"

namespace d2dsim {

/// A post (no parent) or a reshare of a content item.
struct ShareEvent {
  Seconds time = 0;
  UserId sharer;
  ContentId content;
  std::optional<UserId> parent;
  std::optional<UserId> root;

  bool is_reshare() const { return parent.has_value(); }
  friend bool operator==(const ShareEvent&, const ShareEvent&) = default;
};

/// One user's association with the access point of a region over
/// [time, time + duration).
struct AssociationEvent {
  Seconds time = 0;
  UserId user;
  RegionId region;
  Seconds duration = 0;

  Seconds end() const { return time + duration; }
  friend bool operator==(const AssociationEvent&, const AssociationEvent&) = default;
};

struct Friend {
  UserId user;
  double reshare_prob = 0.0;
  friend bool operator==(const Friend&, const Friend&) = default;
};

/// Undirected friendship graph with one reshare probability per edge.
class SocialGraph {
 public:
  SocialGraph() = default;
  explicit SocialGraph(std::size_t n_users) : adjacency_(n_users) {}

  /// Adds u-v. Re-adding an existing edge with the same probability is a
  /// no-op; a different probability is rejected as an asymmetric edge.
  void add_edge(UserId u, UserId v, double prob);

  std::size_t user_count() const { return adjacency_.size(); }
  std::size_t edge_count() const { return edge_count_; }
  double average_degree() const;

  /// Friends of u sorted by id.
  std::span<const Friend> friends(UserId u) const { return adjacency_[u]; }
  bool are_friends(UserId u, UserId v) const;
  std::optional<double> reshare_prob(UserId u, UserId v) const;

  void resize(std::size_t n_users);

  friend bool operator==(const SocialGraph&, const SocialGraph&) = default;

 private:
  std::vector<std::vector<Friend>> adjacency_;
  std::size_t edge_count_ = 0;
};

struct SocialTrace {
  std::size_t n_users = 0;
  std::vector<ShareEvent> events;  // sorted by time
  SocialGraph graph;
  /// Reshares whose parent is not a declared friend of the resharer.
  std::size_t non_friend_reshares = 0;
};

struct Region {
  RegionId id;
  double x_m = 0.0;
  double y_m = 0.0;
  bool has_position = false;
  friend bool operator==(const Region&, const Region&) = default;
};

double region_distance(const Region& a, const Region& b);

struct MobilityTrace {
  std::size_t n_users = 0;
  std::vector<Region> regions;             // indexed by RegionId
  std::vector<AssociationEvent> events;    // sorted by (time, user)

  std::size_t region_count() const { return regions.size(); }
};

/// Social trace lines: `S,<time_s>,<user>,<content>,<parent|->,<root|->` and
/// `E,<u>,<v>,<reshare_prob>`. An optional `N,<n_users>` line fixes the user
/// count; without it the users are those named by S sharers and E endpoints.
/// Blank lines and lines starting with '#' are ignored.
SocialTrace read_social_trace(std::istream& in);
SocialTrace load_social_trace(const std::filesystem::path& path);
void write_social_trace(std::ostream& out, const SocialTrace& trace);

/// Mobility trace lines: `A,<time_s>,<user>,<region>,<duration_s>` and
/// `R,<region>,<x_m>,<y_m>`. Optional `N,<n_users>` header as above.
MobilityTrace read_mobility_trace(std::istream& in);
MobilityTrace load_mobility_trace(const std::filesystem::path& path);
void write_mobility_trace(std::ostream& out, const MobilityTrace& trace);

/// Throws ValidationError when two associations of one user overlap or a
/// duration is not positive.
void validate_associations(std::span<const AssociationEvent> events);

/// Associations grouped per user, each group sorted by time.
std::vector<std::vector<AssociationEvent>> associations_by_user(const MobilityTrace& trace);

struct Migration {
  UserId user;
  RegionId from;
  RegionId to;
  Seconds time = 0;  // start of the second association
};

/// Consecutive association pairs of every user, same-region pairs included.
std::vector<Migration> migration_pairs(const MobilityTrace& trace);

/// Number of users associated with each region at instant t.
std::vector<std::size_t> occupancy_at(const MobilityTrace& trace, Seconds t);

/// Per-user activity used to rank users: posts + reshares.
std::vector<std::size_t> social_intensity(const SocialTrace& trace);
/// Per-user association count.
std::vector<std::size_t> mobility_intensity(const MobilityTrace& trace);
/// Region where each user spent the most associated time (nullopt if none).
std::vector<std::optional<RegionId>> home_regions(const MobilityTrace& trace);

enum class MappingScheme { independent, social_rank, social_mobility_rank };

MappingScheme parse_mapping_scheme(std::string_view name);
std::string_view to_string(MappingScheme scheme);

/// Pair i maps social user `social[i]` onto mobility user `mobility[i]`.
/// `social` is sorted ascending; pair index i is the combined user id.
struct UserMapping {
  MappingScheme scheme = MappingScheme::independent;
  std::vector<UserId> social;
  std::vector<UserId> mobility;

  std::size_t size() const { return social.size(); }
};

/// Builds a bijection between the two populations. The larger population is
/// first truncated to the size of the smaller by seeded uniform sampling.
UserMapping map_users(const SocialTrace& social, const MobilityTrace& mobility,
                      MappingScheme scheme, std::uint64_t seed);

/// Both traces rewritten onto combined user ids [0, mapping.size()).
struct Scenario {
  std::size_t n_users = 0;
  std::vector<Region> regions;
  SocialGraph graph;
  std::vector<ShareEvent> shares;
  std::vector<AssociationEvent> associations;

  std::size_t region_count() const { return regions.size(); }
};

/// Events of users dropped by truncation are removed, as are reshares whose
/// parent was dropped.
Scenario build_scenario(const SocialTrace& social, const MobilityTrace& mobility,
                        const UserMapping& mapping);

}  // namespace d2dsim

#endif  // D2DSIM_TRACE_HPP
