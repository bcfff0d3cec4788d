#pragma once

#include <cstdint>
#include <random>

namespace hypergrad {

/// Name recorded in output metadata so runs can be matched across builds.
inline constexpr const char* kRngName = "mt19937_64";

/// Seeded generator with distributions written out by hand: the standard
/// library distributions are not required to be identical across vendors.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) from the top 53 bits.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  /// Uniform in [low, high).
  double uniform(double low, double high);
  /// Standard normal via Box-Muller (one draw per call).
  double normal();

 private:
  std::mt19937_64 engine_;
};

}  // namespace hypergrad
