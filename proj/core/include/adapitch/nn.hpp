#pragma once

#include <map>
#include <string>
#include <vector>

#include "adapitch/ops.hpp"
#include "adapitch/rng.hpp"
#include "adapitch/tensor.hpp"

namespace adapitch {

// Parameter initialization recipe; drawn from the run RNG in creation order.
struct Init {
  enum Kind { kZeros, kOnes, kFanInUniform, kUniformRange };
  Kind kind = kZeros;
  float a = 0.0f;
  float b = 0.0f;

  static Init zeros() { return {kZeros, 0, 0}; }
  static Init ones() { return {kOnes, 0, 0}; }
  /// U(-1/sqrt(fan_in), 1/sqrt(fan_in)).
  static Init fan_in(int fan) { return {kFanInUniform, static_cast<float>(fan), 0}; }
  static Init uniform(float lo, float hi) { return {kUniformRange, lo, hi}; }
};

// Named map of trainable tensors. Frozen parameters keep their values across
// any number of optimizer steps and never receive gradients.
class ParameterSet {
 public:
  /// Returns the named parameter, creating and initializing it if absent.
  /// An existing parameter must match the requested shape.
  Tensor ensure(const std::string& name, Shape shape, const Init& init, Rng& rng);

  /// Inserts a pre-built tensor (checkpoint load). Replaces any existing entry.
  void put(const std::string& name, Tensor t, bool frozen);

  Tensor get(const std::string& name) const;
  bool has(const std::string& name) const { return entries_.count(name) != 0; }
  bool frozen(const std::string& name) const;
  void set_frozen(const std::string& name, bool frozen);
  /// Freezes every parameter whose name starts with `prefix`.
  void freeze_prefix(const std::string& prefix);
  void erase_prefix(const std::string& prefix);

  std::vector<std::string> names() const;
  std::vector<std::string> names_with_prefix(const std::string& prefix) const;
  size_t size() const { return entries_.size(); }

 private:
  struct Entry {
    Tensor tensor;
    bool frozen = false;
  };
  std::map<std::string, Entry> entries_;
};

// --- layers -----------------------------------------------------------------

struct Dense {
  Tensor w, b;
  static Dense make(ParameterSet& ps, const std::string& prefix, int d_in, int d_out,
                    Rng& rng);
  Tensor forward(const Tensor& x) const { return linear(x, w, b); }
};

struct Conv1dLayer {
  Tensor kernel, bias;
  int stride = 1;
  int padding = 0;
  static Conv1dLayer make(ParameterSet& ps, const std::string& prefix, int k, int c_in,
                          int c_out, int stride, int padding, Rng& rng);
  Tensor forward(const Tensor& x) const { return conv1d(x, kernel, bias, stride, padding); }
};

struct Conv2dLayer {
  Tensor kernel, bias;
  static Conv2dLayer make(ParameterSet& ps, const std::string& prefix, int kh, int kw,
                          int c_in, int c_out, Rng& rng);
  Tensor forward(const Tensor& x) const { return conv2d_same(x, kernel, bias); }
};

struct LayerNormLayer {
  Tensor gain, bias;
  static LayerNormLayer make(ParameterSet& ps, const std::string& prefix, int d, Rng& rng);
  Tensor forward(const Tensor& x) const { return layer_norm_rows(x, gain, bias); }
};

struct LstmLayer {
  Tensor w_ih, w_hh, b;
  int hidden = 0;
  static LstmLayer make(ParameterSet& ps, const std::string& prefix, int d_in, int d_h,
                        Rng& rng);
  LstmState step(const Tensor& x, const LstmState& state) const {
    return lstm_cell(x, state.h, state.c, w_ih, w_hh, b);
  }
  LstmState zero_state() const {
    return {Tensor::zeros({1, hidden}), Tensor::zeros({1, hidden})};
  }
  /// Runs the cell over the rows of seq [L,d_in]; returns [L,d_h].
  Tensor run(const Tensor& seq, bool reverse = false) const;
};

struct BiLstm {
  LstmLayer fwd, bwd;
  static BiLstm make(ParameterSet& ps, const std::string& prefix, int d_in, int d_h,
                     Rng& rng);
  /// [L,d_in] -> [L,2*d_h], forward and reverse passes concatenated per row.
  Tensor forward(const Tensor& seq) const;
};

// Self-attention + position-wise feed-forward, post-norm convention:
// sublayer -> residual add -> layer norm. With zero sublayer weights the block
// reduces to layer normalization of its input.
struct TransformerBlock {
  Dense q, k, v, o, ffn1, ffn2;
  LayerNormLayer ln1, ln2;
  static TransformerBlock make(ParameterSet& ps, const std::string& prefix, int d,
                               int ffn_dim, Rng& rng);
  Tensor forward(const Tensor& x) const;
};

struct EmbeddingLayer {
  Tensor table;
  static EmbeddingLayer make(ParameterSet& ps, const std::string& prefix, int vocab,
                             int dim, Rng& rng);
  Tensor forward(const std::vector<int>& ids) const { return embedding_lookup(table, ids); }
};

}  // namespace adapitch
