#include <doctest.h>

#include <cmath>
#include <cstring>

#include "adapitch/gradcheck.hpp"
#include "adapitch/nn.hpp"
#include "adapitch/ops.hpp"
#include "adapitch/optimizer.hpp"

using namespace adapitch;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, bool needs_grad = true) {
  Tensor t = Tensor::zeros(std::move(shape), needs_grad);
  for (auto& v : t.values_mut()) v = rng.uniform(-1.0f, 1.0f);
  return t;
}

}  // namespace

TEST_SUITE_BEGIN("autodiff");

TEST_CASE("mse_loss matches hand values") {
  CHECK(mse_loss(Tensor::from({2}, {1, 2}), Tensor::from({2}, {1, 2})).item() ==
        doctest::Approx(0.0));
  // mean((-1)^2, (-1)^2) = 1
  CHECK(mse_loss(Tensor::from({2}, {0, 0}), Tensor::from({2}, {1, 1})).item() ==
        doctest::Approx(1.0));
  // (3-1)^2 = 4
  CHECK(mse_loss(Tensor::from({1}, {3}), Tensor::from({1}, {1})).item() ==
        doctest::Approx(4.0));
  CHECK_THROWS_AS(mse_loss(Tensor::from({2}, {0, 0}), Tensor::from({1}, {1})),
                  ContractViolation);
}

TEST_CASE("backward computes d(w^2)/dw and resets between calls") {
  Tensor w = Tensor::from({1}, {3.0f}, true);
  Tensor loss = mse_loss(w, Tensor::from({1}, {0.0f}));
  backward(loss);
  CHECK(w.grad()[0] == doctest::Approx(6.0));
  backward(loss);  // reset policy: same value, not accumulated
  CHECK(w.grad()[0] == doctest::Approx(6.0));
}

TEST_CASE("gradient is zero when the loss is constant in the parameter") {
  Tensor w = Tensor::from({3}, {1.0f, -2.0f, 0.5f}, true);
  Tensor loss = mean_all(scale(w, 0.0f));
  backward(loss);
  for (float g : w.grad()) CHECK(g == doctest::Approx(0.0));
}

TEST_CASE("backward requires a scalar loss") {
  Tensor w = Tensor::from({2}, {1.0f, 2.0f}, true);
  CHECK_THROWS_AS(backward(add(w, w)), ContractViolation);
}

TEST_CASE("finite differences agree for elementwise and reduction ops") {
  Rng rng(11);
  Tensor a = random_tensor({4, 3}, rng);
  Tensor b = random_tensor({4, 3}, rng);
  CHECK(finite_difference_check([&] { return mse_loss(mul(a, b), Tensor::zeros({4, 3})); },
                                {a, b}) <= 1e-3f);
  CHECK(finite_difference_check(
            [&] { return mean_all(relu(sub(a, b))); }, {a, b}) <= 1e-3f);
  CHECK(finite_difference_check(
            [&] { return mean_all(tanh_op(add(a, b))); }, {a, b}) <= 1e-3f);
  CHECK(finite_difference_check([&] { return mean_all(sigmoid(a)); }, {a}) <= 1e-3f);
}

TEST_CASE("finite differences agree for matmul, softmax and layer norm") {
  Rng rng(12);
  Tensor a = random_tensor({3, 4}, rng);
  Tensor b = random_tensor({4, 5}, rng);
  Tensor target = random_tensor({3, 5}, rng, false);
  CHECK(finite_difference_check([&] { return mse_loss(matmul(a, b), target); }, {a, b}) <=
        1e-3f);
  CHECK(finite_difference_check([&] { return mse_loss(softmax_rows(matmul(a, b)), target); },
                                {a, b}) <= 1e-3f);
  Tensor gain = random_tensor({4}, rng);
  Tensor bias = random_tensor({4}, rng);
  Tensor x = random_tensor({5, 4}, rng);
  Tensor lt = random_tensor({5, 4}, rng, false);
  CHECK(finite_difference_check(
            [&] { return mse_loss(layer_norm_rows(x, gain, bias), lt); }, {x, gain, bias}) <=
        1e-3f);
}

TEST_CASE("mse at identical prediction/target has zero gradient") {
  Rng rng(13);
  Tensor a = random_tensor({6}, rng);
  Tensor t = Tensor::from({6}, std::vector<float>(a.values().begin(), a.values().end()));
  CHECK(finite_difference_check([&] { return mse_loss(a, t); }, {a}) <= 1e-3f);
  backward(mse_loss(a, t));
  for (float g : a.grad()) CHECK(g == doctest::Approx(0.0));
}

TEST_CASE("structural ops route gradients correctly") {
  Rng rng(14);
  Tensor a = random_tensor({4, 3}, rng);
  Tensor b = random_tensor({4, 2}, rng);
  Tensor target = random_tensor({4, 5}, rng, false);
  CHECK(finite_difference_check([&] { return mse_loss(concat_cols({a, b}), target); },
                                {a, b}) <= 1e-3f);
  Tensor t2 = random_tensor({4, 2}, rng, false);
  CHECK(finite_difference_check([&] { return mse_loss(slice_cols(a, 1, 3), t2); }, {a}) <=
        1e-3f);
  Tensor t3 = random_tensor({2, 3}, rng, false);
  CHECK(finite_difference_check([&] { return mse_loss(slice_rows(a, 1, 3), t3); }, {a}) <=
        1e-3f);
  Tensor v = random_tensor({5}, rng);
  Tensor t4 = random_tensor({3, 5}, rng, false);
  CHECK(finite_difference_check([&] { return mse_loss(broadcast_row(v, 3), t4); }, {v}) <=
        1e-3f);
  std::vector<int> durations = {2, 0, 3, 1};
  Tensor t5 = random_tensor({6, 3}, rng, false);
  CHECK(finite_difference_check([&] { return mse_loss(repeat_rows(a, durations), t5); },
                                {a}) <= 1e-3f);
  Tensor scalars = random_tensor({4}, rng);
  Tensor t6 = random_tensor({6}, rng, false);
  CHECK(finite_difference_check(
            [&] { return mse_loss(interp_upsample(scalars, durations), t6); }, {scalars}) <=
        1e-3f);
}

TEST_CASE("masked mse ignores masked elements") {
  Tensor pred = Tensor::from({4}, {1, 2, 3, 4}, true);
  Tensor target = Tensor::from({4}, {0, 2, 0, 5});
  std::vector<float> mask = {0, 1, 0, 1};
  // only elements 1 and 3 count: (0^2 + 1^2)/2
  CHECK(masked_mse_loss(pred, target, mask).item() == doctest::Approx(0.5));
  backward(masked_mse_loss(pred, target, mask));
  CHECK(pred.grad()[0] == doctest::Approx(0.0));
  CHECK(pred.grad()[2] == doctest::Approx(0.0));
  // empty mask: constant zero
  CHECK(masked_mse_loss(pred, target, {0, 0, 0, 0}).item() == doctest::Approx(0.0));
}

TEST_CASE("adaptive-moment optimizer honors the freeze contract") {
  ParameterSet ps;
  Rng rng(15);
  Tensor frozen = ps.ensure("frozen.w", {4}, Init::uniform(-1, 1), rng);
  Tensor live = ps.ensure("live.w", {4}, Init::uniform(-1, 1), rng);
  ps.set_frozen("frozen.w", true);
  const std::vector<float> before(frozen.values().begin(), frozen.values().end());

  AdamOptimizer opt;
  for (int i = 0; i < 5; ++i) {
    backward(mse_loss(live, Tensor::zeros({4})));
    opt.step(ps);
  }
  CHECK(opt.step_count() == 5);
  const std::vector<float> after(frozen.values().begin(), frozen.values().end());
  CHECK(std::memcmp(before.data(), after.data(), before.size() * sizeof(float)) == 0);
}

TEST_CASE("optimizer first step moves opposite to the gradient") {
  ParameterSet ps;
  Rng rng(16);
  Tensor p = ps.ensure("p", {1}, Init::zeros(), rng);
  p.values_mut()[0] = 0.7f;
  backward(mean_all(p));  // gradient exactly 1
  AdamOptimizer opt(AdamConfig{.lr = 0.1f});
  opt.step(ps);
  // first adaptive-moment step: p -= lr * 1/(1+eps)
  CHECK(p.values()[0] == doctest::Approx(0.6).epsilon(1e-4));
}

TEST_CASE("optimizer leaves values unchanged under zero gradient") {
  ParameterSet ps;
  Rng rng(17);
  Tensor p = ps.ensure("p", {3}, Init::uniform(-1, 1), rng);
  const std::vector<float> before(p.values().begin(), p.values().end());
  backward(mean_all(scale(p, 0.0f)));
  AdamOptimizer opt;
  opt.step(ps);
  for (size_t i = 0; i < before.size(); ++i)
    CHECK(p.values()[i] == doctest::Approx(before[i]));
}

TEST_CASE("optimizer rejects an unfrozen parameter without gradient") {
  ParameterSet ps;
  Rng rng(18);
  ps.ensure("p", {2}, Init::uniform(-1, 1), rng);
  AdamOptimizer opt;
  CHECK_THROWS_AS(opt.step(ps), ContractViolation);
}

TEST_CASE("training-style updates are deterministic for a fixed seed") {
  auto run = [](uint64_t seed) {
    ParameterSet ps;
    Rng rng(seed);
    Tensor w = ps.ensure("w", {4, 4}, Init::fan_in(4), rng);
    Tensor x = random_tensor({2, 4}, rng, false);
    AdamOptimizer opt;
    std::vector<float> losses;
    for (int i = 0; i < 20; ++i) {
      Tensor loss = mse_loss(matmul(x, w), Tensor::zeros({2, 4}));
      losses.push_back(loss.item());
      backward(loss);
      opt.step(ps);
    }
    return losses;
  };
  const auto a = run(99), b = run(99);
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_SUITE_END();
