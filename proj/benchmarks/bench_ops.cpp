#include <benchmark/benchmark.h>

#include "adapitch/nn.hpp"
#include "adapitch/ops.hpp"

using namespace adapitch;

namespace {

Tensor random_tensor(Shape shape, Rng& rng, bool needs_grad = false) {
  Tensor t = Tensor::zeros(std::move(shape), needs_grad);
  for (auto& v : t.values_mut()) v = rng.uniform(-1.0f, 1.0f);
  return t;
}

void BM_MatmulForward(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(1);
  Tensor a = random_tensor({n, n}, rng);
  Tensor b = random_tensor({n, n}, rng);
  for (auto _ : state) {
    Tensor c = matmul(a, b);
    benchmark::DoNotOptimize(c.values().data());
  }
  state.SetItemsProcessed(state.iterations() * 2LL * n * n * n);
}
BENCHMARK(BM_MatmulForward)->Arg(64)->Arg(128)->Arg(256);

void BM_MatmulTrainStep(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  Rng rng(2);
  Tensor a = random_tensor({n, n}, rng, true);
  Tensor b = random_tensor({n, n}, rng, true);
  Tensor target = random_tensor({n, n}, rng);
  for (auto _ : state) {
    Tensor loss = mse_loss(matmul(a, b), target);
    backward(loss);
    benchmark::DoNotOptimize(loss.item());
  }
}
BENCHMARK(BM_MatmulTrainStep)->Arg(64)->Arg(128);

void BM_Conv1dForward(benchmark::State& state) {
  Rng rng(3);
  Tensor x = random_tensor({100, 64}, rng);
  Tensor k = random_tensor({5, 64, 64}, rng);
  Tensor b = Tensor::zeros({64});
  for (auto _ : state) {
    Tensor y = conv1d(x, k, b, 1, 2);
    benchmark::DoNotOptimize(y.values().data());
  }
}
BENCHMARK(BM_Conv1dForward);

void BM_LstmSequence(benchmark::State& state) {
  ParameterSet ps;
  Rng rng(4);
  LstmLayer lstm = LstmLayer::make(ps, "lstm", 64, 64, rng);
  Tensor seq = random_tensor({50, 64}, rng);
  for (auto _ : state) {
    Tensor out = lstm.run(seq);
    benchmark::DoNotOptimize(out.values().data());
  }
}
BENCHMARK(BM_LstmSequence);

void BM_TransformerBlock(benchmark::State& state) {
  ParameterSet ps;
  Rng rng(5);
  TransformerBlock blk = TransformerBlock::make(ps, "blk", 256, 1024, rng);
  Tensor x = random_tensor({100, 256}, rng);
  for (auto _ : state) {
    Tensor out = blk.forward(x);
    benchmark::DoNotOptimize(out.values().data());
  }
}
BENCHMARK(BM_TransformerBlock);

}  // namespace

BENCHMARK_MAIN();
