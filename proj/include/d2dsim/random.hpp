// SPDX-License-Identifier: Apache-2.0

#ifndef D2DSIM_RANDOM_HPP
#define D2DSIM_RANDOM_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace d2dsim {

using Rng = std::mt19937_64;

/// Uniform draw in the open interval (0, 1).
inline double uniform01(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

inline double exponential(Rng& rng, double mean) { return -mean * std::log(uniform01(rng)); }

/// Index drawn with probability proportional to `weights`; uniform when every
/// weight is zero. `weights` must be non-empty and nonnegative.
inline std::size_t weighted_index(std::span<const double> weights, Rng& rng) {
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  if (!(total > 0.0)) {
    return std::uniform_int_distribution<std::size_t>(0, weights.size() - 1)(rng);
  }
  double target = uniform01(rng) * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    if (target < weights[i]) return i;
    target -= weights[i];
  }
  // Rounding left a sliver past the end; give it to the last positive weight.
  for (std::size_t i = weights.size(); i-- > 0;) {
    if (weights[i] > 0.0) return i;
  }
  return weights.size() - 1;
}

/// Sampler over a fixed weight vector using a cumulative table.
class CumulativeSampler {
 public:
  CumulativeSampler() = default;
  explicit CumulativeSampler(std::span<const double> weights) : cumulative_(weights.size()) {
    double running = 0.0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      running += std::max(0.0, weights[i]);
      cumulative_[i] = running;
    }
  }

  bool empty() const { return cumulative_.empty() || !(cumulative_.back() > 0.0); }
  std::size_t size() const { return cumulative_.size(); }

  std::size_t operator()(Rng& rng) const {
    const double target = uniform01(rng) * cumulative_.back();
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
    if (it == cumulative_.end()) --it;
    return static_cast<std::size_t>(it - cumulative_.begin());
  }

 private:
  std::vector<double> cumulative_;
};

}  // namespace d2dsim

#endif  // D2DSIM_RANDOM_HPP
