#include "adapitch/nn.hpp"

#include <cmath>

namespace adapitch {

Tensor ParameterSet::ensure(const std::string& name, Shape shape, const Init& init,
                            Rng& rng) {
  auto it = entries_.find(name);
  if (it != entries_.end()) {
    check(it->second.tensor.shape() == shape,
          "parameter " + name + " exists with shape " + shape_str(it->second.tensor.shape()) +
              ", requested " + shape_str(shape));
    return it->second.tensor;
  }
  Tensor t = Tensor::zeros(shape, /*needs_grad=*/true);
  t.node()->parameter = true;
  auto vals = t.values_mut();
  switch (init.kind) {
    case Init::kZeros:
      break;
    case Init::kOnes:
      for (auto& v : vals) v = 1.0f;
      break;
    case Init::kFanInUniform: {
      const float bound = 1.0f / std::sqrt(init.a);
      for (auto& v : vals) v = rng.uniform(-bound, bound);
      break;
    }
    case Init::kUniformRange:
      for (auto& v : vals) v = rng.uniform(init.a, init.b);
      break;
  }
  entries_[name] = Entry{t, false};
  return t;
}

void ParameterSet::put(const std::string& name, Tensor t, bool frozen) {
  t.node()->parameter = true;
  t.node()->needs_grad = !frozen;
  entries_[name] = Entry{std::move(t), frozen};
}

Tensor ParameterSet::get(const std::string& name) const {
  auto it = entries_.find(name);
  check(it != entries_.end(), "unknown parameter " + name);
  return it->second.tensor;
}

bool ParameterSet::frozen(const std::string& name) const {
  auto it = entries_.find(name);
  check(it != entries_.end(), "unknown parameter " + name);
  return it->second.frozen;
}

void ParameterSet::set_frozen(const std::string& name, bool frozen) {
  auto it = entries_.find(name);
  check(it != entries_.end(), "unknown parameter " + name);
  it->second.frozen = frozen;
  it->second.tensor.node()->needs_grad = !frozen;
}

void ParameterSet::freeze_prefix(const std::string& prefix) {
  for (auto& [name, entry] : entries_) {
    if (name.rfind(prefix, 0) == 0) {
      entry.frozen = true;
      entry.tensor.node()->needs_grad = false;
    }
  }
}

void ParameterSet::erase_prefix(const std::string& prefix) {
  for (auto it = entries_.begin(); it != entries_.end();) {
    if (it->first.rfind(prefix, 0) == 0)
      it = entries_.erase(it);
    else
      ++it;
  }
}

std::vector<std::string> ParameterSet::names() const {
  std::vector<std::string> out;
  out.reserve(entries_.size());
  for (const auto& [name, entry] : entries_) out.push_back(name);
  return out;
}

std::vector<std::string> ParameterSet::names_with_prefix(const std::string& prefix) const {
  std::vector<std::string> out;
  for (const auto& [name, entry] : entries_)
    if (name.rfind(prefix, 0) == 0) out.push_back(name);
  return out;
}

// --- layers -----------------------------------------------------------------

Dense Dense::make(ParameterSet& ps, const std::string& prefix, int d_in, int d_out,
                  Rng& rng) {
  Dense l;
  l.w = ps.ensure(prefix + ".w", {d_in, d_out}, Init::fan_in(d_in), rng);
  l.b = ps.ensure(prefix + ".b", {d_out}, Init::zeros(), rng);
  return l;
}

Conv1dLayer Conv1dLayer::make(ParameterSet& ps, const std::string& prefix, int k, int c_in,
                              int c_out, int stride, int padding, Rng& rng) {
  Conv1dLayer l;
  l.kernel = ps.ensure(prefix + ".kernel", {k, c_in, c_out}, Init::fan_in(k * c_in), rng);
  l.bias = ps.ensure(prefix + ".bias", {c_out}, Init::zeros(), rng);
  l.stride = stride;
  l.padding = padding;
  return l;
}

Conv2dLayer Conv2dLayer::make(ParameterSet& ps, const std::string& prefix, int kh, int kw,
                              int c_in, int c_out, Rng& rng) {
  Conv2dLayer l;
  l.kernel =
      ps.ensure(prefix + ".kernel", {kh, kw, c_in, c_out}, Init::fan_in(kh * kw * c_in), rng);
  l.bias = ps.ensure(prefix + ".bias", {c_out}, Init::zeros(), rng);
  return l;
}

LayerNormLayer LayerNormLayer::make(ParameterSet& ps, const std::string& prefix, int d,
                                    Rng& rng) {
  LayerNormLayer l;
  l.gain = ps.ensure(prefix + ".gain", {d}, Init::ones(), rng);
  l.bias = ps.ensure(prefix + ".bias", {d}, Init::zeros(), rng);
  return l;
}

LstmLayer LstmLayer::make(ParameterSet& ps, const std::string& prefix, int d_in, int d_h,
                          Rng& rng) {
  LstmLayer l;
  l.w_ih = ps.ensure(prefix + ".w_ih", {d_in, 4 * d_h}, Init::fan_in(d_in), rng);
  l.w_hh = ps.ensure(prefix + ".w_hh", {d_h, 4 * d_h}, Init::fan_in(d_h), rng);
  l.b = ps.ensure(prefix + ".b", {4 * d_h}, Init::zeros(), rng);
  l.hidden = d_h;
  return l;
}

Tensor LstmLayer::run(const Tensor& seq, bool reverse) const {
  const int L = seq.dim(0);
  LstmState state = zero_state();
  std::vector<Tensor> outputs(static_cast<size_t>(L));
  for (int i = 0; i < L; ++i) {
    const int t = reverse ? L - 1 - i : i;
    state = step(slice_rows(seq, t, t + 1), state);
    outputs[static_cast<size_t>(t)] = state.h;
  }
  return stack_rows(outputs);
}

BiLstm BiLstm::make(ParameterSet& ps, const std::string& prefix, int d_in, int d_h,
                    Rng& rng) {
  BiLstm l;
  l.fwd = LstmLayer::make(ps, prefix + ".fwd", d_in, d_h, rng);
  l.bwd = LstmLayer::make(ps, prefix + ".bwd", d_in, d_h, rng);
  return l;
}

Tensor BiLstm::forward(const Tensor& seq) const {
  return concat_cols({fwd.run(seq, false), bwd.run(seq, true)});
}

TransformerBlock TransformerBlock::make(ParameterSet& ps, const std::string& prefix, int d,
                                        int ffn_dim, Rng& rng) {
  TransformerBlock blk;
  blk.q = Dense::make(ps, prefix + ".q", d, d, rng);
  blk.k = Dense::make(ps, prefix + ".k", d, d, rng);
  blk.v = Dense::make(ps, prefix + ".v", d, d, rng);
  blk.o = Dense::make(ps, prefix + ".o", d, d, rng);
  blk.ffn1 = Dense::make(ps, prefix + ".ffn1", d, ffn_dim, rng);
  blk.ffn2 = Dense::make(ps, prefix + ".ffn2", ffn_dim, d, rng);
  blk.ln1 = LayerNormLayer::make(ps, prefix + ".ln1", d, rng);
  blk.ln2 = LayerNormLayer::make(ps, prefix + ".ln2", d, rng);
  return blk;
}

Tensor TransformerBlock::forward(const Tensor& x) const {
  Tensor attn =
      scaled_dot_attention(q.forward(x), k.forward(x), v.forward(x));
  Tensor x1 = ln1.forward(add(x, o.forward(attn)));
  Tensor f = ffn2.forward(relu(ffn1.forward(x1)));
  return ln2.forward(add(x1, f));
}

EmbeddingLayer EmbeddingLayer::make(ParameterSet& ps, const std::string& prefix, int vocab,
                                    int dim, Rng& rng) {
  EmbeddingLayer l;
  l.table = ps.ensure(prefix + ".table", {vocab, dim}, Init::uniform(-0.1f, 0.1f), rng);
  return l;
}

}  // namespace adapitch
