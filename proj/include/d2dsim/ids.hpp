// SPDX-License-Identifier: Apache-2.0

#ifndef D2DSIM_IDS_HPP
#define D2DSIM_IDS_HPP

#include <compare>
#include <concepts>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>

namespace d2dsim {

/// Dense 0-based identifier. Construction from an integer is explicit so a
/// UserId can never be passed where a RegionId is expected; the implicit
/// conversion back to size_t lets the id index the dense tables directly.
template <typename Tag>
class StrongId {
 public:
  using value_type = std::uint32_t;

  constexpr StrongId() = default;
  template <std::integral I>
  constexpr explicit StrongId(I v) : value_(static_cast<value_type>(v)) {}

  constexpr value_type value() const { return value_; }
  constexpr operator std::size_t() const { return value_; }

  friend constexpr auto operator<=>(StrongId, StrongId) = default;

 private:
  value_type value_ = 0;
};

struct UserTag {};
struct RegionTag {};
struct ContentTag {};

using UserId = StrongId<UserTag>;
using RegionId = StrongId<RegionTag>;
using ContentId = StrongId<ContentTag>;

/// Whole seconds since the start of the trace.
using Seconds = std::int64_t;
/// Index of a fixed-length time slot.
using Slot = std::int64_t;

/// Input that failed to parse. Carries the 1-based line number when known.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Input that parsed but breaks a trace or configuration invariant.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A simulation state invariant broke. Always a bug.
class InvariantError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// SplitMix64 finalizer; used to derive independent rng streams from one seed.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream,
                                    std::uint64_t sub = 0) {
  return mix_seed(mix_seed(seed ^ mix_seed(stream)) + sub);
}

}  // namespace d2dsim

template <typename Tag>
struct std::hash<d2dsim::StrongId<Tag>> {
  std::size_t operator()(d2dsim::StrongId<Tag> id) const noexcept {
    return std::hash<std::uint32_t>{}(id.value());
  }
};

#endif  // D2DSIM_IDS_HPP
