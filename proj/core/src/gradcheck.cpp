#include "adapitch/gradcheck.hpp"

#include <cmath>

namespace adapitch {

float finite_difference_check(const std::function<Tensor()>& loss_fn,
                              const std::vector<Tensor>& wrt, float step) {
  check(step > 0.0f, "finite_difference_check: step must be positive");

  Tensor loss = loss_fn();
  check(loss.size() == 1, "finite_difference_check: loss must be scalar");
  backward(loss);
  std::vector<std::vector<float>> analytic;
  analytic.reserve(wrt.size());
  for (const auto& t : wrt) {
    check(t.needs_grad(), "finite_difference_check: tensor does not track gradients");
    analytic.emplace_back(t.grad().begin(), t.grad().end());
  }

  float worst = 0.0f;
  for (size_t k = 0; k < wrt.size(); ++k) {
    Tensor t = wrt[k];
    auto vals = t.values_mut();
    for (size_t i = 0; i < vals.size(); ++i) {
      const float saved = vals[i];
      vals[i] = saved + step;
      const double fp = static_cast<double>(loss_fn().item());
      vals[i] = saved - step;
      const double fm = static_cast<double>(loss_fn().item());
      vals[i] = saved;
      const float fd = static_cast<float>((fp - fm) / (2.0 * static_cast<double>(step)));
      const float a = analytic[k][i];
      const float denom = std::max({1.0f, std::fabs(a), std::fabs(fd)});
      const float rel = std::fabs(a - fd) / denom;
      if (rel > worst) worst = rel;
    }
  }
  return worst;
}

}  // namespace adapitch
