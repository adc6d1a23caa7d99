#pragma once

#include <cstdint>
#include <random>

namespace harnacklab {

/// Deterministic uniform sampler: std::mt19937_64 raw draws mapped to [0, 1)
/// by keeping the top 53 bits. std::uniform_real_distribution is
/// implementation-defined, so it is avoided; this stream is bit-identical on
/// every platform. Artifact headers record the generator as
/// "mt19937_64/top53" together with the seed.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : engine_(seed) {}

  double uniform01() { return (engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform01();
  }

  std::uint64_t raw() { return engine_(); }

  static constexpr const char* name() { return "mt19937_64/top53"; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace harnacklab
