#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace adapitch {

// Seeded RNG used everywhere randomness is needed. Wraps std::mt19937 but
// derives all values from raw engine draws, so streams are identical across
// standard library implementations (the std distributions are not portable).
class Rng {
 public:
  explicit Rng(uint64_t seed) : engine_(static_cast<uint32_t>(seed ^ (seed >> 32))) {}

  /// Uniform in [0, 1).
  float uniform() {
    return static_cast<float>(engine_() >> 8) * (1.0f / 16777216.0f);
  }

  /// Uniform in [lo, hi).
  float uniform(float lo, float hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform integer in [lo, hi] inclusive.
  int uniform_int(int lo, int hi) {
    uint32_t span = static_cast<uint32_t>(hi - lo + 1);
    return lo + static_cast<int>(engine_() % span);
  }

  /// Standard normal via Box-Muller.
  float normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    float u1 = uniform();
    float u2 = uniform();
    if (u1 < 1e-12f) u1 = 1e-12f;
    float r = std::sqrt(-2.0f * std::log(u1));
    float theta = 6.2831853071795864769f * u2;
    spare_ = r * std::sin(theta);
    have_spare_ = true;
    return r * std::cos(theta);
  }

  /// Fisher-Yates shuffle with this engine.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = engine_() % i;
      std::swap(v[i - 1], v[j]);
    }
  }

  uint32_t raw() { return engine_(); }

 private:
  std::mt19937 engine_;
  float spare_ = 0.0f;
  bool have_spare_ = false;
};

}  // namespace adapitch
