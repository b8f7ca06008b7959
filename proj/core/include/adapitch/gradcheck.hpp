#pragma once

#include <functional>
#include <vector>

#include "adapitch/tensor.hpp"

namespace adapitch {

// Central-difference gradient checker. `loss_fn` rebuilds a scalar loss from
// the current values of the leaf tensors in `wrt`; the checker perturbs each
// element by +/- step and compares against the analytic gradient.
//
// Returns the worst elementwise deviation |analytic - fd| / max(1, |analytic|,
// |fd|). The unit floor in the denominator keeps the measure meaningful for
// near-zero gradients, where float32 forward noise dominates any quotient.
float finite_difference_check(const std::function<Tensor()>& loss_fn,
                              const std::vector<Tensor>& wrt, float step = 1e-2f);

}  // namespace adapitch
