#pragma once

#include <vector>

#include "adapitch/tensor.hpp"

namespace adapitch {

// Differentiable primitives. All tensors are float32, row-major. Reductions
// run in a fixed left-to-right order so results are reproducible bit-for-bit.

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& a, float s);
/// Weighted sum of same-shape tensors: sum_i ws[i] * xs[i].
Tensor add_weighted(const std::vector<Tensor>& xs, const std::vector<float>& ws);

Tensor matmul(const Tensor& a, const Tensor& b);     // [n,k] x [k,m] -> [n,m]
Tensor matmul_nt(const Tensor& a, const Tensor& b);  // [n,d] x [m,d]^T -> [n,m]

Tensor relu(const Tensor& a);
Tensor tanh_op(const Tensor& a);
Tensor sigmoid(const Tensor& a);
Tensor softmax_rows(const Tensor& a);
Tensor layer_norm_rows(const Tensor& x, const Tensor& gain, const Tensor& bias,
                       float eps = 1e-5f);

/// Mean over all elements of squared differences.
Tensor mse_loss(const Tensor& prediction, const Tensor& target);
/// Same, restricted to elements with mask != 0. Returns a constant zero when
/// the mask is empty; callers that care about degenerate targets check the
/// mask themselves.
Tensor masked_mse_loss(const Tensor& prediction, const Tensor& target,
                       const std::vector<float>& mask);
Tensor mean_all(const Tensor& a);

Tensor concat_cols(const std::vector<Tensor>& xs);
Tensor slice_cols(const Tensor& a, int c0, int c1);
Tensor slice_rows(const Tensor& a, int r0, int r1);
/// Stack L row vectors (shape [d] or [1,d]) into an [L,d] matrix.
Tensor stack_rows(const std::vector<Tensor>& rows);
Tensor reshape(const Tensor& a, Shape shape);
/// a[i,:] + v for every row i.
Tensor add_rowvec(const Tensor& a, const Tensor& v);
/// a[i,:] * row_scale[i]; the scales are constants, not differentiated.
Tensor mul_rows(const Tensor& a, const std::vector<float>& row_scale);
Tensor broadcast_row(const Tensor& v, int n);

/// Row gather with scatter-add backward into the table.
Tensor embedding_lookup(const Tensor& table, const std::vector<int>& ids);

/// x [n,d_in] * w [d_in,d_out] + b [d_out].
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

/// x [t,c_in], kernel [k,c_in,c_out], zero padding; t' = (t+2p-k)/stride + 1.
Tensor conv1d(const Tensor& x, const Tensor& kernel, const Tensor& bias,
              int stride, int padding);
/// x [h,w,c_in], kernel [kh,kw,c_in,c_out], odd kernel, stride 1, same padding.
Tensor conv2d_same(const Tensor& x, const Tensor& kernel, const Tensor& bias);

/// softmax(q k^T / sqrt(d)) v; rows of the weight matrix sum to 1.
Tensor scaled_dot_attention(const Tensor& query, const Tensor& keys,
                            const Tensor& values);

/// Nearest-neighbor length regulation: row i repeated durations[i] times.
Tensor repeat_rows(const Tensor& a, const std::vector<int>& durations);
/// Linear interpolation of per-token scalars between token-center anchors;
/// output has sum(durations) frames, endpoints clamped.
Tensor interp_upsample(const Tensor& token_values, const std::vector<int>& durations);

struct LstmState {
  Tensor h;
  Tensor c;
};
/// One gated recurrent update. x [1,d_in], h/c [1,d_h], w_ih [d_in,4d_h],
/// w_hh [d_h,4d_h], b [4d_h]; gate order (input, forget, candidate, output).
LstmState lstm_cell(const Tensor& x, const Tensor& h, const Tensor& c,
                    const Tensor& w_ih, const Tensor& w_hh, const Tensor& b);

}  // namespace adapitch
