#pragma once

#include <cstdint>
#include <limits>

#include "tumblenav/quaternion.hpp"

namespace tumblenav {

/// Counter-based generator: output i of stream (seed, stream) is a splitmix64
/// finalizer applied to a key built from all three. Streams are independent
/// and any draw is reproducible from (seed, stream, counter).
class CounterRng {
 public:
  using result_type = std::uint64_t;

  CounterRng(std::uint64_t seed, std::uint64_t stream);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
  result_type operator()();

  /// Uniform in (0, 1).
  double uniform();
  /// Standard normal (Box-Muller, one value per call).
  double gaussian();
  Vec3 gaussian3(double sigma);
  /// Uniformly distributed unit vector.
  Vec3 unit_vector();

  std::uint64_t counter() const { return counter_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

/// Stream ids used by the simulator.
namespace stream {
inline constexpr std::uint64_t truth_disturbance = 1;
inline constexpr std::uint64_t measurement_noise = 2;
inline constexpr std::uint64_t initial_estimate = 3;
}  // namespace stream

}  // namespace tumblenav
