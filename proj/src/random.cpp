#include "tumblenav/random.hpp"

#include <cmath>
#include <numbers>

namespace tumblenav {

namespace {

std::uint64_t mix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace

CounterRng::CounterRng(std::uint64_t seed, std::uint64_t stream) : key_(mix(mix(seed) ^ (stream * 0xd1b54a32d192ed03ULL))) {}

CounterRng::result_type CounterRng::operator()() { return mix(key_ ^ mix(counter_++)); }

double CounterRng::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
}

double CounterRng::gaussian() {
  const double u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

Vec3 CounterRng::gaussian3(double sigma) {
  const double x = gaussian();
  const double y = gaussian();
  const double z = gaussian();
  return sigma * Vec3(x, y, z);
}

Vec3 CounterRng::unit_vector() {
  Vec3 v;
  do {
    v = gaussian3(1.0);
  } while (v.norm() < 1e-12);
  return v.normalized();
}

}  // namespace tumblenav
