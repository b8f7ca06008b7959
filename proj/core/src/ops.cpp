#include "adapitch/ops.hpp"

#include <cmath>

namespace adapitch {

namespace {

bool any_needs_grad(const std::vector<Tensor>& inputs) {
  for (const auto& t : inputs)
    if (t.needs_grad()) return true;
  return false;
}

Tensor make_op(Shape shape, std::vector<float> value, std::vector<Tensor> inputs,
               std::function<void(TensorNode&)> bp) {
  bool ng = any_needs_grad(inputs);
  Tensor out = Tensor::from(std::move(shape), std::move(value), ng);
  if (ng) {
    out.node()->inputs = std::move(inputs);
    out.node()->backprop = std::move(bp);
  }
  return out;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  check(a.shape() == b.shape(), std::string(op) + ": shape mismatch " +
                                    shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

// Matrix view helpers: every rank-2 tensor is row-major [rows, cols].
int rows_of(const Tensor& t) { return t.rank() == 1 ? 1 : t.dim(0); }
int cols_of(const Tensor& t) { return t.rank() == 1 ? t.dim(0) : t.dim(1); }

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "add");
  std::vector<float> out(a.values().begin(), a.values().end());
  for (size_t i = 0; i < out.size(); ++i) out[i] += b.values()[i];
  return make_op(a.shape(), std::move(out), {a, b}, [](TensorNode& self) {
    for (int k = 0; k < 2; ++k) {
      auto& in = self.inputs[static_cast<size_t>(k)];
      if (!in.needs_grad()) continue;
      auto g = in.node()->grad.data();
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "sub");
  std::vector<float> out(a.values().begin(), a.values().end());
  for (size_t i = 0; i < out.size(); ++i) out[i] -= b.values()[i];
  return make_op(a.shape(), std::move(out), {a, b}, [](TensorNode& self) {
    if (self.inputs[0].needs_grad()) {
      auto g = self.inputs[0].node()->grad.data();
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (self.inputs[1].needs_grad()) {
      auto g = self.inputs[1].node()->grad.data();
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] -= self.grad[i];
    }
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  check_same_shape(a, b, "mul");
  std::vector<float> out(static_cast<size_t>(a.size()));
  for (size_t i = 0; i < out.size(); ++i) out[i] = a.values()[i] * b.values()[i];
  return make_op(a.shape(), std::move(out), {a, b}, [](TensorNode& self) {
    const auto av = self.inputs[0].values();
    const auto bv = self.inputs[1].values();
    if (self.inputs[0].needs_grad()) {
      auto g = self.inputs[0].node()->grad.data();
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * bv[i];
    }
    if (self.inputs[1].needs_grad()) {
      auto g = self.inputs[1].node()->grad.data();
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i] * av[i];
    }
  });
}

Tensor scale(const Tensor& a, float s) {
  std::vector<float> out(a.values().begin(), a.values().end());
  for (auto& x : out) x *= s;
  return make_op(a.shape(), std::move(out), {a}, [s](TensorNode& self) {
    if (!self.inputs[0].needs_grad()) return;
    auto g = self.inputs[0].node()->grad.data();
    for (size_t i = 0; i < self.grad.size(); ++i) g[i] += s * self.grad[i];
  });
}

Tensor add_weighted(const std::vector<Tensor>& xs, const std::vector<float>& ws) {
  check(!xs.empty() && xs.size() == ws.size(), "add_weighted: arity mismatch");
  for (const auto& x : xs) check_same_shape(xs[0], x, "add_weighted");
  std::vector<float> out(static_cast<size_t>(xs[0].size()), 0.0f);
  for (size_t k = 0; k < xs.size(); ++k)
    for (size_t i = 0; i < out.size(); ++i) out[i] += ws[k] * xs[k].values()[i];
  std::vector<float> ws_copy = ws;
  return make_op(xs[0].shape(), std::move(out), xs, [ws_copy](TensorNode& self) {
    for (size_t k = 0; k < self.inputs.size(); ++k) {
      if (!self.inputs[k].needs_grad()) continue;
      auto g = self.inputs[k].node()->grad.data();
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += ws_copy[k] * self.grad[i];
    }
  });
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  check(a.rank() == 2 && b.rank() == 2, "matmul: rank-2 tensors required");
  check(a.dim(1) == b.dim(0), "matmul: inner dimensions disagree, " +
                                  shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const int n = a.dim(0), k = a.dim(1), m = b.dim(1);
  std::vector<float> out(static_cast<size_t>(n) * m, 0.0f);
  const float* av = a.values().data();
  const float* bv = b.values().data();
  for (int i = 0; i < n; ++i)
    for (int p = 0; p < k; ++p) {
      const float aip = av[i * k + p];
      float* orow = out.data() + static_cast<size_t>(i) * m;
      const float* brow = bv + static_cast<size_t>(p) * m;
      for (int j = 0; j < m; ++j) orow[j] += aip * brow[j];
    }
  return make_op({n, m}, std::move(out), {a, b}, [n, k, m](TensorNode& self) {
    const float* g = self.grad.data();
    const float* av = self.inputs[0].values().data();
    const float* bv = self.inputs[1].values().data();
    if (self.inputs[0].needs_grad()) {
      float* ga = self.inputs[0].node()->grad.data();
      // dA = dC * B^T
      for (int i = 0; i < n; ++i)
        for (int p = 0; p < k; ++p) {
          float acc = 0.0f;
          const float* grow = g + static_cast<size_t>(i) * m;
          const float* brow = bv + static_cast<size_t>(p) * m;
          for (int j = 0; j < m; ++j) acc += grow[j] * brow[j];
          ga[i * k + p] += acc;
        }
    }
    if (self.inputs[1].needs_grad()) {
      float* gb = self.inputs[1].node()->grad.data();
      // dB = A^T * dC
      for (int p = 0; p < k; ++p)
        for (int i = 0; i < n; ++i) {
          const float aip = av[i * k + p];
          float* gbrow = gb + static_cast<size_t>(p) * m;
          const float* grow = g + static_cast<size_t>(i) * m;
          for (int j = 0; j < m; ++j) gbrow[j] += aip * grow[j];
        }
    }
  });
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  check(a.rank() == 2 && b.rank() == 2, "matmul_nt: rank-2 tensors required");
  check(a.dim(1) == b.dim(1), "matmul_nt: feature dimensions disagree, " +
                                  shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  const int n = a.dim(0), d = a.dim(1), m = b.dim(0);
  std::vector<float> out(static_cast<size_t>(n) * m, 0.0f);
  const float* av = a.values().data();
  const float* bv = b.values().data();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      float acc = 0.0f;
      const float* arow = av + static_cast<size_t>(i) * d;
      const float* brow = bv + static_cast<size_t>(j) * d;
      for (int p = 0; p < d; ++p) acc += arow[p] * brow[p];
      out[static_cast<size_t>(i) * m + j] = acc;
    }
  return make_op({n, m}, std::move(out), {a, b}, [n, d, m](TensorNode& self) {
    const float* g = self.grad.data();
    const float* av = self.inputs[0].values().data();
    const float* bv = self.inputs[1].values().data();
    if (self.inputs[0].needs_grad()) {
      float* ga = self.inputs[0].node()->grad.data();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
          const float gij = g[static_cast<size_t>(i) * m + j];
          float* garow = ga + static_cast<size_t>(i) * d;
          const float* brow = bv + static_cast<size_t>(j) * d;
          for (int p = 0; p < d; ++p) garow[p] += gij * brow[p];
        }
    }
    if (self.inputs[1].needs_grad()) {
      float* gb = self.inputs[1].node()->grad.data();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
          const float gij = g[static_cast<size_t>(i) * m + j];
          float* gbrow = gb + static_cast<size_t>(j) * d;
          const float* arow = av + static_cast<size_t>(i) * d;
          for (int p = 0; p < d; ++p) gbrow[p] += gij * arow[p];
        }
    }
  });
}

Tensor relu(const Tensor& a) {
  std::vector<float> out(a.values().begin(), a.values().end());
  for (auto& x : out) x = x > 0.0f ? x : 0.0f;
  return make_op(a.shape(), std::move(out), {a}, [](TensorNode& self) {
    if (!self.inputs[0].needs_grad()) return;
    const auto av = self.inputs[0].values();
    auto g = self.inputs[0].node()->grad.data();
    for (size_t i = 0; i < self.grad.size(); ++i)
      if (av[i] > 0.0f) g[i] += self.grad[i];
  });
}

Tensor tanh_op(const Tensor& a) {
  std::vector<float> out(a.values().begin(), a.values().end());
  for (auto& x : out) x = std::tanh(x);
  return make_op(a.shape(), std::move(out), {a}, [](TensorNode& self) {
    if (!self.inputs[0].needs_grad()) return;
    auto g = self.inputs[0].node()->grad.data();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const float y = self.value[i];
      g[i] += self.grad[i] * (1.0f - y * y);
    }
  });
}

Tensor sigmoid(const Tensor& a) {
  std::vector<float> out(a.values().begin(), a.values().end());
  for (auto& x : out) x = 1.0f / (1.0f + std::exp(-x));
  return make_op(a.shape(), std::move(out), {a}, [](TensorNode& self) {
    if (!self.inputs[0].needs_grad()) return;
    auto g = self.inputs[0].node()->grad.data();
    for (size_t i = 0; i < self.grad.size(); ++i) {
      const float y = self.value[i];
      g[i] += self.grad[i] * y * (1.0f - y);
    }
  });
}

Tensor softmax_rows(const Tensor& a) {
  const int n = rows_of(a), d = cols_of(a);
  std::vector<float> out(static_cast<size_t>(n) * d);
  const float* av = a.values().data();
  for (int i = 0; i < n; ++i) {
    const float* row = av + static_cast<size_t>(i) * d;
    float mx = row[0];
    for (int j = 1; j < d; ++j) mx = row[j] > mx ? row[j] : mx;
    float sum = 0.0f;
    float* orow = out.data() + static_cast<size_t>(i) * d;
    for (int j = 0; j < d; ++j) {
      orow[j] = std::exp(row[j] - mx);
      sum += orow[j];
    }
    const float inv = 1.0f / sum;
    for (int j = 0; j < d; ++j) orow[j] *= inv;
  }
  return make_op(a.shape(), std::move(out), {a}, [n, d](TensorNode& self) {
    if (!self.inputs[0].needs_grad()) return;
    auto g = self.inputs[0].node()->grad.data();
    for (int i = 0; i < n; ++i) {
      const float* y = self.value.data() + static_cast<size_t>(i) * d;
      const float* gy = self.grad.data() + static_cast<size_t>(i) * d;
      float dot = 0.0f;
      for (int j = 0; j < d; ++j) dot += gy[j] * y[j];
      float* grow = g + static_cast<size_t>(i) * d;
      for (int j = 0; j < d; ++j) grow[j] += y[j] * (gy[j] - dot);
    }
  });
}

Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias, float eps) {
  const int n = rows_of(x), d = cols_of(x);
  check(gain.size() == d && bias.size() == d, "layer_norm: gain/bias must have width " +
                                                  std::to_string(d));
  std::vector<float> out(static_cast<size_t>(n) * d);
  const float* xv = x.values().data();
  const float* gv = gain.values().data();
  const float* bv = bias.values().data();
  for (int i = 0; i < n; ++i) {
    const float* row = xv + static_cast<size_t>(i) * d;
    float mean = 0.0f;
    for (int j = 0; j < d; ++j) mean += row[j];
    mean /= static_cast<float>(d);
    float var = 0.0f;
    for (int j = 0; j < d; ++j) {
      const float c = row[j] - mean;
      var += c * c;
    }
    var /= static_cast<float>(d);
    const float inv = 1.0f / std::sqrt(var + eps);
    float* orow = out.data() + static_cast<size_t>(i) * d;
    for (int j = 0; j < d; ++j) orow[j] = (row[j] - mean) * inv * gv[j] + bv[j];
  }
  return make_op(x.shape(), std::move(out), {x, gain, bias}, [n, d, eps](TensorNode& self) {
    const float* xv = self.inputs[0].values().data();
    const float* gv = self.inputs[1].values().data();
    const bool need_x = self.inputs[0].needs_grad();
    const bool need_g = self.inputs[1].needs_grad();
    const bool need_b = self.inputs[2].needs_grad();
    float* gx = need_x ? self.inputs[0].node()->grad.data() : nullptr;
    float* gg = need_g ? self.inputs[1].node()->grad.data() : nullptr;
    float* gb = need_b ? self.inputs[2].node()->grad.data() : nullptr;
    std::vector<float> xhat(static_cast<size_t>(d));
    std::vector<float> dxhat(static_cast<size_t>(d));
    for (int i = 0; i < n; ++i) {
      const float* row = xv + static_cast<size_t>(i) * d;
      const float* gy = self.grad.data() + static_cast<size_t>(i) * d;
      float mean = 0.0f;
      for (int j = 0; j < d; ++j) mean += row[j];
      mean /= static_cast<float>(d);
      float var = 0.0f;
      for (int j = 0; j < d; ++j) {
        const float c = row[j] - mean;
        var += c * c;
      }
      var /= static_cast<float>(d);
      const float inv = 1.0f / std::sqrt(var + eps);
      for (int j = 0; j < d; ++j) xhat[static_cast<size_t>(j)] = (row[j] - mean) * inv;
      if (need_g)
        for (int j = 0; j < d; ++j) gg[j] += gy[j] * xhat[static_cast<size_t>(j)];
      if (need_b)
        for (int j = 0; j < d; ++j) gb[j] += gy[j];
      if (need_x) {
        float m1 = 0.0f, m2 = 0.0f;
        for (int j = 0; j < d; ++j) {
          dxhat[static_cast<size_t>(j)] = gy[j] * gv[j];
          m1 += dxhat[static_cast<size_t>(j)];
          m2 += dxhat[static_cast<size_t>(j)] * xhat[static_cast<size_t>(j)];
        }
        m1 /= static_cast<float>(d);
        m2 /= static_cast<float>(d);
        float* grow = gx + static_cast<size_t>(i) * d;
        for (int j = 0; j < d; ++j)
          grow[j] += inv * (dxhat[static_cast<size_t>(j)] - m1 -
                            xhat[static_cast<size_t>(j)] * m2);
      }
    }
  });
}

Tensor mse_loss(const Tensor& prediction, const Tensor& target) {
  check_same_shape(prediction, target, "mse_loss");
  const size_t n = static_cast<size_t>(prediction.size());
  float acc = 0.0f;
  for (size_t i = 0; i < n; ++i) {
    const float d = prediction.values()[i] - target.values()[i];
    acc += d * d;
  }
  acc /= static_cast<float>(n);
  return make_op({1}, {acc}, {prediction, target}, [n](TensorNode& self) {
    const float g = self.grad[0] * 2.0f / static_cast<float>(n);
    const auto pv = self.inputs[0].values();
    const auto tv = self.inputs[1].values();
    if (self.inputs[0].needs_grad()) {
      auto gp = self.inputs[0].node()->grad.data();
      for (size_t i = 0; i < n; ++i) gp[i] += g * (pv[i] - tv[i]);
    }
    if (self.inputs[1].needs_grad()) {
      auto gt = self.inputs[1].node()->grad.data();
      for (size_t i = 0; i < n; ++i) gt[i] -= g * (pv[i] - tv[i]);
    }
  });
}

Tensor masked_mse_loss(const Tensor& prediction, const Tensor& target,
                       const std::vector<float>& mask) {
  check_same_shape(prediction, target, "masked_mse_loss");
  check(mask.size() == static_cast<size_t>(prediction.size()),
        "masked_mse_loss: mask size mismatch");
  size_t count = 0;
  float acc = 0.0f;
  for (size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] == 0.0f) continue;
    const float d = prediction.values()[i] - target.values()[i];
    acc += d * d;
    ++count;
  }
  if (count == 0) return Tensor::scalar(0.0f);
  acc /= static_cast<float>(count);
  std::vector<float> m = mask;
  return make_op({1}, {acc}, {prediction, target}, [m, count](TensorNode& self) {
    const float g = self.grad[0] * 2.0f / static_cast<float>(count);
    const auto pv = self.inputs[0].values();
    const auto tv = self.inputs[1].values();
    if (self.inputs[0].needs_grad()) {
      auto gp = self.inputs[0].node()->grad.data();
      for (size_t i = 0; i < m.size(); ++i)
        if (m[i] != 0.0f) gp[i] += g * (pv[i] - tv[i]);
    }
    if (self.inputs[1].needs_grad()) {
      auto gt = self.inputs[1].node()->grad.data();
      for (size_t i = 0; i < m.size(); ++i)
        if (m[i] != 0.0f) gt[i] -= g * (pv[i] - tv[i]);
    }
  });
}

Tensor mean_all(const Tensor& a) {
  const size_t n = static_cast<size_t>(a.size());
  float acc = 0.0f;
  for (size_t i = 0; i < n; ++i) acc += a.values()[i];
  acc /= static_cast<float>(n);
  return make_op({1}, {acc}, {a}, [n](TensorNode& self) {
    if (!self.inputs[0].needs_grad()) return;
    const float g = self.grad[0] / static_cast<float>(n);
    auto ga = self.inputs[0].node()->grad.data();
    for (size_t i = 0; i < n; ++i) ga[i] += g;
  });
}

Tensor concat_cols(const std::vector<Tensor>& xs) {
  check(!xs.empty(), "concat_cols: empty input list");
  const int n = rows_of(xs[0]);
  int total = 0;
  for (const auto& x : xs) {
    check(rows_of(x) == n, "concat_cols: row counts disagree");
    total += cols_of(x);
  }
  std::vector<float> out(static_cast<size_t>(n) * total);
  int off = 0;
  for (const auto& x : xs) {
    const int d = cols_of(x);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j)
        out[static_cast<size_t>(i) * total + off + j] =
            x.values()[static_cast<size_t>(i) * d + j];
    off += d;
  }
  return make_op({n, total}, std::move(out), xs, [n, total](TensorNode& self) {
    int off = 0;
    for (auto& in : self.inputs) {
      const int d = in.rank() == 1 ? in.dim(0) : in.dim(1);
      if (in.needs_grad()) {
        auto g = in.node()->grad.data();
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < d; ++j)
            g[static_cast<size_t>(i) * d + j] +=
                self.grad[static_cast<size_t>(i) * total + off + j];
      }
      off += d;
    }
  });
}

Tensor slice_cols(const Tensor& a, int c0, int c1) {
  const int n = rows_of(a), d = cols_of(a);
  check(0 <= c0 && c0 < c1 && c1 <= d, "slice_cols: bad range");
  const int w = c1 - c0;
  std::vector<float> out(static_cast<size_t>(n) * w);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < w; ++j)
      out[static_cast<size_t>(i) * w + j] = a.values()[static_cast<size_t>(i) * d + c0 + j];
  return make_op({n, w}, std::move(out), {a}, [n, d, c0, w](TensorNode& self) {
    if (!self.inputs[0].needs_grad()) return;
    auto g = self.inputs[0].node()->grad.data();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < w; ++j)
        g[static_cast<size_t>(i) * d + c0 + j] += self.grad[static_cast<size_t>(i) * w + j];
  });
}

Tensor slice_rows(const Tensor& a, int r0, int r1) {
  const int n = rows_of(a), d = cols_of(a);
  check(0 <= r0 && r0 < r1 && r1 <= n, "slice_rows: bad range");
  const int h = r1 - r0;
  std::vector<float> out(a.values().begin() + static_cast<size_t>(r0) * d,
                         a.values().begin() + static_cast<size_t>(r1) * d);
  return make_op({h, d}, std::move(out), {a}, [d, r0, h](TensorNode& self) {
    if (!self.inputs[0].needs_grad()) return;
    auto g = self.inputs[0].node()->grad.data();
    for (int i = 0; i < h; ++i)
      for (int j = 0; j < d; ++j)
        g[static_cast<size_t>(r0 + i) * d + j] += self.grad[static_cast<size_t>(i) * d + j];
  });
}

Tensor stack_rows(const std::vector<Tensor>& rows) {
  check(!rows.empty(), "stack_rows: empty input list");
  const int d = cols_of(rows[0]);
  const int n = static_cast<int>(rows.size());
  std::vector<float> out(static_cast<size_t>(n) * d);
  for (int i = 0; i < n; ++i) {
    check(rows[static_cast<size_t>(i)].size() == d, "stack_rows: row widths disagree");
    for (int j = 0; j < d; ++j)
      out[static_cast<size_t>(i) * d + j] = rows[static_cast<size_t>(i)].values()[static_cast<size_t>(j)];
  }
  return make_op({n, d}, std::move(out), rows, [d](TensorNode& self) {
    for (size_t i = 0; i < self.inputs.size(); ++i) {
      if (!self.inputs[i].needs_grad()) continue;
      auto g = self.inputs[i].node()->grad.data();
      for (int j = 0; j < d; ++j) g[j] += self.grad[i * static_cast<size_t>(d) + static_cast<size_t>(j)];
    }
  });
}

Tensor reshape(const Tensor& a, Shape shape) {
  check(numel(shape) == a.size(), "reshape: element count mismatch");
  std::vector<float> out(a.values().begin(), a.values().end());
  return make_op(std::move(shape), std::move(out), {a}, [](TensorNode& self) {
    if (!self.inputs[0].needs_grad()) return;
    auto g = self.inputs[0].node()->grad.data();
    for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
  });
}

Tensor add_rowvec(const Tensor& a, const Tensor& v) {
  const int n = rows_of(a), d = cols_of(a);
  check(v.size() == d, "add_rowvec: vector width mismatch");
  std::vector<float> out(a.values().begin(), a.values().end());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) out[static_cast<size_t>(i) * d + j] += v.values()[static_cast<size_t>(j)];
  return make_op(a.shape(), std::move(out), {a, v}, [n, d](TensorNode& self) {
    if (self.inputs[0].needs_grad()) {
      auto g = self.inputs[0].node()->grad.data();
      for (size_t i = 0; i < self.grad.size(); ++i) g[i] += self.grad[i];
    }
    if (self.inputs[1].needs_grad()) {
      auto g = self.inputs[1].node()->grad.data();
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < d; ++j) g[j] += self.grad[static_cast<size_t>(i) * d + j];
    }
  });
}

Tensor mul_rows(const Tensor& a, const std::vector<float>& row_scale) {
  const int n = rows_of(a), d = cols_of(a);
  check(row_scale.size() == static_cast<size_t>(n), "mul_rows: scale count mismatch");
  std::vector<float> out(a.values().begin(), a.values().end());
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) out[static_cast<size_t>(i) * d + j] *= row_scale[static_cast<size_t>(i)];
  std::vector<float> s = row_scale;
  return make_op(a.shape(), std::move(out), {a}, [n, d, s](TensorNode& self) {
    if (!self.inputs[0].needs_grad()) return;
    auto g = self.inputs[0].node()->grad.data();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j)
        g[static_cast<size_t>(i) * d + j] += self.grad[static_cast<size_t>(i) * d + j] * s[static_cast<size_t>(i)];
  });
}

Tensor broadcast_row(const Tensor& v, int n) {
  const int d = static_cast<int>(v.size());
  check(n > 0, "broadcast_row: row count must be positive");
  std::vector<float> out(static_cast<size_t>(n) * d);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < d; ++j) out[static_cast<size_t>(i) * d + j] = v.values()[static_cast<size_t>(j)];
  return make_op({n, d}, std::move(out), {v}, [n, d](TensorNode& self) {
    if (!self.inputs[0].needs_grad()) return;
    auto g = self.inputs[0].node()->grad.data();
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < d; ++j) g[j] += self.grad[static_cast<size_t>(i) * d + j];
  });
}

Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids) {
  check(table.rank() == 2, "embedding_lookup: table must be rank 2");
  const int v = table.dim(0), d = table.dim(1);
  check(!ids.empty(), "embedding_lookup: empty id sequence");
  for (int id : ids)
    check(0 <= id && id < v,
          "embedding_lookup: id " + std::to_string(id) + " outside vocabulary of size " +
              std::to_string(v));
  const int L = static_cast<int>(ids.size());
  std::vector<float> out(static_cast<size_t>(L) * d);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < d; ++j)
      out[static_cast<size_t>(i) * d + j] =
          table.values()[static_cast<size_t>(ids[static_cast<size_t>(i)]) * d + j];
  std::vector<int> ids_copy = ids;
  return make_op({L, d}, std::move(out), {table}, [ids_copy, d](TensorNode& self) {
    if (!self.inputs[0].needs_grad()) return;
    auto g = self.inputs[0].node()->grad.data();
    for (size_t i = 0; i < ids_copy.size(); ++i)
      for (int j = 0; j < d; ++j)
        g[static_cast<size_t>(ids_copy[i]) * d + j] += self.grad[i * static_cast<size_t>(d) + static_cast<size_t>(j)];
  });
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  check(x.rank() <= 2 && w.rank() == 2, "linear: bad ranks");
  Tensor xm = x.rank() == 1 ? reshape(x, {1, x.dim(0)}) : x;
  check(xm.dim(1) == w.dim(0), "linear: input width " + std::to_string(xm.dim(1)) +
                                   " does not match weight rows " + std::to_string(w.dim(0)));
  check(b.size() == w.dim(1), "linear: bias width mismatch");
  return add_rowvec(matmul(xm, w), b);
}

Tensor conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias, int stride,
              int padding) {
  check(x.rank() == 2 && kernel.rank() == 3, "conv1d: x must be [t,c_in], kernel [k,c_in,c_out]");
  const int t = x.dim(0), ci = x.dim(1);
  const int k = kernel.dim(0), kci = kernel.dim(1), co = kernel.dim(2);
  check(kci == ci, "conv1d: channel mismatch");
  check(stride >= 1 && padding >= 0, "conv1d: bad stride/padding");
  check(k <= t + 2 * padding, "conv1d: kernel longer than padded input");
  check(bias.size() == co, "conv1d: bias width mismatch");
  const int to = (t + 2 * padding - k) / stride + 1;
  std::vector<float> out(static_cast<size_t>(to) * co);
  const float* xv = x.values().data();
  const float* kv = kernel.values().data();
  const float* bv = bias.values().data();
  for (int o = 0; o < to; ++o) {
    float* orow = out.data() + static_cast<size_t>(o) * co;
    for (int j = 0; j < co; ++j) orow[j] = bv[j];
    for (int dk = 0; dk < k; ++dk) {
      const int ti = o * stride - padding + dk;
      if (ti < 0 || ti >= t) continue;
      const float* xrow = xv + static_cast<size_t>(ti) * ci;
      for (int c = 0; c < ci; ++c) {
        const float xc = xrow[c];
        const float* krow = kv + (static_cast<size_t>(dk) * ci + c) * co;
        for (int j = 0; j < co; ++j) orow[j] += xc * krow[j];
      }
    }
  }
  return make_op({to, co}, std::move(out), {x, kernel, bias},
                 [t, ci, k, co, to, stride, padding](TensorNode& self) {
    const float* g = self.grad.data();
    const float* xv = self.inputs[0].values().data();
    const float* kv = self.inputs[1].values().data();
    float* gx = self.inputs[0].needs_grad() ? self.inputs[0].node()->grad.data() : nullptr;
    float* gk = self.inputs[1].needs_grad() ? self.inputs[1].node()->grad.data() : nullptr;
    float* gb = self.inputs[2].needs_grad() ? self.inputs[2].node()->grad.data() : nullptr;
    for (int o = 0; o < to; ++o) {
      const float* grow = g + static_cast<size_t>(o) * co;
      if (gb)
        for (int j = 0; j < co; ++j) gb[j] += grow[j];
      for (int dk = 0; dk < k; ++dk) {
        const int ti = o * stride - padding + dk;
        if (ti < 0 || ti >= t) continue;
        const float* xrow = xv + static_cast<size_t>(ti) * ci;
        for (int c = 0; c < ci; ++c) {
          const float* krow = kv + (static_cast<size_t>(dk) * ci + c) * co;
          if (gx) {
            float acc = 0.0f;
            for (int j = 0; j < co; ++j) acc += grow[j] * krow[j];
            gx[static_cast<size_t>(ti) * ci + c] += acc;
          }
          if (gk) {
            float* gkrow = gk + (static_cast<size_t>(dk) * ci + c) * co;
            const float xc = xrow[c];
            for (int j = 0; j < co; ++j) gkrow[j] += xc * grow[j];
          }
        }
      }
    }
  });
}

Tensor conv2d_same(const Tensor& x, const Tensor& kernel, const Tensor& bias) {
  check(x.rank() == 3 && kernel.rank() == 4,
        "conv2d_same: x must be [h,w,c_in], kernel [kh,kw,c_in,c_out]");
  const int h = x.dim(0), w = x.dim(1), ci = x.dim(2);
  const int kh = kernel.dim(0), kw = kernel.dim(1), kci = kernel.dim(2), co = kernel.dim(3);
  check(kci == ci, "conv2d_same: channel mismatch");
  check(kh % 2 == 1 && kw % 2 == 1, "conv2d_same: kernel extents must be odd");
  check(bias.size() == co, "conv2d_same: bias width mismatch");
  const int ph = kh / 2, pw = kw / 2;
  std::vector<float> out(static_cast<size_t>(h) * w * co);
  const float* xv = x.values().data();
  const float* kv = kernel.values().data();
  const float* bv = bias.values().data();
  for (int r = 0; r < h; ++r)
    for (int c = 0; c < w; ++c) {
      float* ocell = out.data() + (static_cast<size_t>(r) * w + c) * co;
      for (int j = 0; j < co; ++j) ocell[j] = bv[j];
      for (int dr = 0; dr < kh; ++dr) {
        const int rr = r - ph + dr;
        if (rr < 0 || rr >= h) continue;
        for (int dc = 0; dc < kw; ++dc) {
          const int cc = c - pw + dc;
          if (cc < 0 || cc >= w) continue;
          const float* xcell = xv + (static_cast<size_t>(rr) * w + cc) * ci;
          const float* kcell = kv + ((static_cast<size_t>(dr) * kw + dc) * ci) * co;
          for (int p = 0; p < ci; ++p) {
            const float xp = xcell[p];
            const float* krow = kcell + static_cast<size_t>(p) * co;
            for (int j = 0; j < co; ++j) ocell[j] += xp * krow[j];
          }
        }
      }
    }
  return make_op({h, w, co}, std::move(out), {x, kernel, bias},
                 [h, w, ci, kh, kw, co](TensorNode& self) {
    const int ph = kh / 2, pw = kw / 2;
    const float* g = self.grad.data();
    const float* xv = self.inputs[0].values().data();
    const float* kv = self.inputs[1].values().data();
    float* gx = self.inputs[0].needs_grad() ? self.inputs[0].node()->grad.data() : nullptr;
    float* gk = self.inputs[1].needs_grad() ? self.inputs[1].node()->grad.data() : nullptr;
    float* gb = self.inputs[2].needs_grad() ? self.inputs[2].node()->grad.data() : nullptr;
    for (int r = 0; r < h; ++r)
      for (int c = 0; c < w; ++c) {
        const float* gcell = g + (static_cast<size_t>(r) * w + c) * co;
        if (gb)
          for (int j = 0; j < co; ++j) gb[j] += gcell[j];
        for (int dr = 0; dr < kh; ++dr) {
          const int rr = r - ph + dr;
          if (rr < 0 || rr >= h) continue;
          for (int dc = 0; dc < kw; ++dc) {
            const int cc = c - pw + dc;
            if (cc < 0 || cc >= w) continue;
            const float* xcell = xv + (static_cast<size_t>(rr) * w + cc) * ci;
            for (int p = 0; p < ci; ++p) {
              const float* krow = kv + ((static_cast<size_t>(dr) * kw + dc) * ci +
                                        static_cast<size_t>(p)) * co;
              if (gx) {
                float acc = 0.0f;
                for (int j = 0; j < co; ++j) acc += gcell[j] * krow[j];
                gx[(static_cast<size_t>(rr) * w + cc) * ci + static_cast<size_t>(p)] += acc;
              }
              if (gk) {
                float* gkrow = gk + ((static_cast<size_t>(dr) * kw + dc) * ci +
                                     static_cast<size_t>(p)) * co;
                const float xp = xcell[p];
                for (int j = 0; j < co; ++j) gkrow[j] += xp * gcell[j];
              }
            }
          }
        }
      }
  });
}

Tensor scaled_dot_attention(const Tensor& query, const Tensor& keys, const Tensor& values) {
  check(query.rank() == 2 && keys.rank() == 2 && values.rank() == 2,
        "scaled_dot_attention: rank-2 tensors required");
  check(query.dim(1) == keys.dim(1), "scaled_dot_attention: query/key widths disagree");
  check(keys.dim(0) == values.dim(0), "scaled_dot_attention: key/value counts disagree");
  const float inv_sqrt_d = 1.0f / std::sqrt(static_cast<float>(query.dim(1)));
  Tensor scores = scale(matmul_nt(query, keys), inv_sqrt_d);
  Tensor weights = softmax_rows(scores);
  return matmul(weights, values);
}

Tensor repeat_rows(const Tensor& a, const std::vector<int>& durations) {
  const int n = rows_of(a), d = cols_of(a);
  check(durations.size() == static_cast<size_t>(n), "repeat_rows: duration count mismatch");
  int total = 0;
  for (int dur : durations) {
    check(dur >= 0, "repeat_rows: negative duration");
    total += dur;
  }
  check(total >= 1, "repeat_rows: all durations are zero");
  std::vector<float> out(static_cast<size_t>(total) * d);
  int f = 0;
  for (int i = 0; i < n; ++i)
    for (int r = 0; r < durations[static_cast<size_t>(i)]; ++r, ++f)
      for (int j = 0; j < d; ++j)
        out[static_cast<size_t>(f) * d + j] = a.values()[static_cast<size_t>(i) * d + j];
  std::vector<int> durs = durations;
  return make_op({total, d}, std::move(out), {a}, [durs, d](TensorNode& self) {
    if (!self.inputs[0].needs_grad()) return;
    auto g = self.inputs[0].node()->grad.data();
    size_t f = 0;
    for (size_t i = 0; i < durs.size(); ++i)
      for (int r = 0; r < durs[i]; ++r, ++f)
        for (int j = 0; j < d; ++j)
          g[i * static_cast<size_t>(d) + static_cast<size_t>(j)] +=
              self.grad[f * static_cast<size_t>(d) + static_cast<size_t>(j)];
  });
}

Tensor interp_upsample(const Tensor& token_values, const std::vector<int>& durations) {
  check(token_values.rank() == 1 || cols_of(token_values) == 1,
        "interp_upsample: per-token scalars required");
  const int n = static_cast<int>(token_values.size());
  check(durations.size() == static_cast<size_t>(n), "interp_upsample: duration count mismatch");
  int total = 0;
  for (int dur : durations) {
    check(dur >= 0, "interp_upsample: negative duration");
    total += dur;
  }
  check(total >= 1, "interp_upsample: zero total duration");

  // Anchor each token with positive duration at the center of its frame span.
  struct Anchor {
    float center;
    int token;
  };
  std::vector<Anchor> anchors;
  int start = 0;
  for (int i = 0; i < n; ++i) {
    const int dur = durations[static_cast<size_t>(i)];
    if (dur > 0) anchors.push_back({static_cast<float>(start) + (dur - 1) * 0.5f, i});
    start += dur;
  }

  // Two sparse weights per output frame.
  std::vector<int> idx0(static_cast<size_t>(total)), idx1(static_cast<size_t>(total));
  std::vector<float> w1(static_cast<size_t>(total));
  size_t seg = 0;
  for (int f = 0; f < total; ++f) {
    const float x = static_cast<float>(f);
    while (seg + 1 < anchors.size() && x > anchors[seg + 1].center) ++seg;
    if (x <= anchors.front().center) {
      idx0[static_cast<size_t>(f)] = idx1[static_cast<size_t>(f)] = anchors.front().token;
      w1[static_cast<size_t>(f)] = 0.0f;
    } else if (x >= anchors.back().center) {
      idx0[static_cast<size_t>(f)] = idx1[static_cast<size_t>(f)] = anchors.back().token;
      w1[static_cast<size_t>(f)] = 0.0f;
    } else {
      const Anchor& a0 = anchors[seg];
      const Anchor& a1 = anchors[seg + 1];
      idx0[static_cast<size_t>(f)] = a0.token;
      idx1[static_cast<size_t>(f)] = a1.token;
      w1[static_cast<size_t>(f)] = (x - a0.center) / (a1.center - a0.center);
    }
  }

  std::vector<float> out(static_cast<size_t>(total));
  for (int f = 0; f < total; ++f) {
    const float v0 = token_values.values()[static_cast<size_t>(idx0[static_cast<size_t>(f)])];
    const float v1 = token_values.values()[static_cast<size_t>(idx1[static_cast<size_t>(f)])];
    out[static_cast<size_t>(f)] = v0 + (v1 - v0) * w1[static_cast<size_t>(f)];
  }
  return make_op({total}, std::move(out), {token_values},
                 [idx0, idx1, w1](TensorNode& self) {
    if (!self.inputs[0].needs_grad()) return;
    auto g = self.inputs[0].node()->grad.data();
    for (size_t f = 0; f < self.grad.size(); ++f) {
      g[static_cast<size_t>(idx0[f])] += self.grad[f] * (1.0f - w1[f]);
      g[static_cast<size_t>(idx1[f])] += self.grad[f] * w1[f];
    }
  });
}

LstmState lstm_cell(const Tensor& x, const Tensor& h, const Tensor& c, const Tensor& w_ih,
                    const Tensor& w_hh, const Tensor& b) {
  const int dh = cols_of(h);
  check(cols_of(c) == dh, "lstm_cell: hidden/cell widths disagree");
  check(w_ih.dim(1) == 4 * dh && w_hh.dim(0) == dh && w_hh.dim(1) == 4 * dh &&
            b.size() == 4 * dh,
        "lstm_cell: parameter shapes do not match hidden size " + std::to_string(dh));
  Tensor z = add_rowvec(add(matmul(x, w_ih), matmul(h, w_hh)), b);
  Tensor gi = sigmoid(slice_cols(z, 0, dh));
  Tensor gf = sigmoid(slice_cols(z, dh, 2 * dh));
  Tensor gg = tanh_op(slice_cols(z, 2 * dh, 3 * dh));
  Tensor go = sigmoid(slice_cols(z, 3 * dh, 4 * dh));
  Tensor c_new = add(mul(gf, c), mul(gi, gg));
  Tensor h_new = mul(go, tanh_op(c_new));
  return {h_new, c_new};
}

}  // namespace adapitch
