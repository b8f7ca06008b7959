#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "adapitch/nn.hpp"

namespace adapitch {

struct AdamConfig {
  float lr = 1e-3f;
  float beta1 = 0.9f;
  float beta2 = 0.999f;
  float eps = 1e-8f;
};

// Adaptive-moment optimizer. Frozen parameters are skipped entirely; an
// unfrozen parameter without a gradient buffer is a caller error.
class AdamOptimizer {
 public:
  explicit AdamOptimizer(AdamConfig cfg = {}) : cfg_(cfg) {}

  void step(ParameterSet& params);

  int64_t step_count() const { return t_; }
  const AdamConfig& config() const { return cfg_; }

 private:
  struct Moments {
    std::vector<float> m, v;
  };
  AdamConfig cfg_;
  int64_t t_ = 0;
  std::map<std::string, Moments> state_;
};

}  // namespace adapitch
