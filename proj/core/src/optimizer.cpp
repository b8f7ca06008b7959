#include "adapitch/optimizer.hpp"

#include <cmath>

namespace adapitch {

void AdamOptimizer::step(ParameterSet& params) {
  t_ += 1;
  const float bc1 = 1.0f - std::pow(cfg_.beta1, static_cast<float>(t_));
  const float bc2 = 1.0f - std::pow(cfg_.beta2, static_cast<float>(t_));
  for (const auto& name : params.names()) {
    if (params.frozen(name)) continue;
    Tensor p = params.get(name);
    check(p.has_grad(), "optimizer step: no gradient for unfrozen parameter " + name);
    auto& mom = state_[name];
    if (mom.m.empty()) {
      mom.m.assign(static_cast<size_t>(p.size()), 0.0f);
      mom.v.assign(static_cast<size_t>(p.size()), 0.0f);
    }
    check(mom.m.size() == static_cast<size_t>(p.size()),
          "optimizer state shape mismatch for " + name);
    auto vals = p.values_mut();
    auto grads = p.grad();
    for (size_t i = 0; i < vals.size(); ++i) {
      const float g = grads[i];
      mom.m[i] = cfg_.beta1 * mom.m[i] + (1.0f - cfg_.beta1) * g;
      mom.v[i] = cfg_.beta2 * mom.v[i] + (1.0f - cfg_.beta2) * g * g;
      const float mhat = mom.m[i] / bc1;
      const float vhat = mom.v[i] / bc2;
      vals[i] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace adapitch
