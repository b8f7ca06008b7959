#include "adapitch/t2t.hpp"

namespace adapitch {

TextEncoder::TextEncoder(ParameterSet& ps, const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
  check(cfg.vocab_size > 0, "text encoder: vocab_size must be set");
  const int d = cfg.text_embed_dim;
  embed_ = EmbeddingLayer::make(ps, kEmbedPrefix, cfg.vocab_size, d, rng);
  const int pad = (cfg.text_conv_kernel - 1) / 2;
  for (int i = 0; i < cfg.text_conv_layers; ++i)
    convs_.push_back(Conv1dLayer::make(ps, std::string(kPrefix) + ".conv" + std::to_string(i),
                                       cfg.text_conv_kernel, d, d, 1, pad, rng));
  bilstm_ = BiLstm::make(ps, std::string(kPrefix) + ".bilstm", d, cfg.text_lstm_hidden, rng);
}

Tensor TextEncoder::encode(const PhonemeSequence& tokens) const {
  check(!tokens.ids.empty(), "text encode: empty token sequence");
  Tensor x = embed_.forward(tokens.ids);
  for (const auto& conv : convs_) x = relu(conv.forward(x));
  return bilstm_.forward(x);
}

TextDecoder::TextDecoder(ParameterSet& ps, const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
  const int d_enc = cfg.text_encoder_out();
  const int d_dec = cfg.text_dec_hidden;
  lstm_ = LstmLayer::make(ps, std::string(kPrefix) + ".lstm", d_enc, d_dec, rng);
  attn_key_ = Dense::make(ps, std::string(kPrefix) + ".attn_key", d_enc, d_dec, rng);
  out_ = Dense::make(ps, std::string(kPrefix) + ".out", d_dec + d_enc, cfg.vocab_size, rng);
  ln_ = LayerNormLayer::make(ps, std::string(kPrefix) + ".ln", cfg.vocab_size, rng);
}

Tensor TextDecoder::decode(const Tensor& latent) const {
  check(latent.rank() == 2 && latent.dim(0) >= 1, "text decode: empty latent");
  const int L = latent.dim(0);
  Tensor keys = attn_key_.forward(latent);
  LstmState state = lstm_.zero_state();
  std::vector<Tensor> rows(static_cast<size_t>(L));
  for (int i = 0; i < L; ++i) {
    state = lstm_.step(slice_rows(latent, i, i + 1), state);
    Tensor ctx = scaled_dot_attention(state.h, keys, latent);
    rows[static_cast<size_t>(i)] = out_.forward(concat_cols({state.h, ctx}));
  }
  // "linear norm layer": dense projection, layer normalization, then softmax
  return softmax_rows(ln_.forward(stack_rows(rows)));
}

Tensor T2tModel::one_hot(const PhonemeSequence& tokens, int vocab_size) {
  const int L = tokens.length();
  std::vector<float> data(static_cast<size_t>(L) * vocab_size, 0.0f);
  for (int i = 0; i < L; ++i) {
    check(tokens.ids[static_cast<size_t>(i)] < vocab_size, "one_hot: id outside vocabulary");
    data[static_cast<size_t>(i) * vocab_size + tokens.ids[static_cast<size_t>(i)]] = 1.0f;
  }
  return Tensor::from({L, vocab_size}, std::move(data));
}

Tensor T2tModel::reconstruction_loss(const PhonemeSequence& tokens) const {
  Tensor probs = decode(encode(tokens));
  return mse_loss(probs, one_hot(tokens, cfg_.vocab_size));
}

std::vector<int> T2tModel::greedy_ids(const Tensor& probs) {
  const int L = probs.dim(0), V = probs.dim(1);
  std::vector<int> ids(static_cast<size_t>(L));
  for (int i = 0; i < L; ++i) {
    int best = 0;
    float best_v = probs.values()[static_cast<size_t>(i) * V];
    for (int j = 1; j < V; ++j) {
      const float v = probs.values()[static_cast<size_t>(i) * V + j];
      if (v > best_v) {
        best_v = v;
        best = j;
      }
    }
    ids[static_cast<size_t>(i)] = best;
  }
  return ids;
}

}  // namespace adapitch
