#pragma once

#include <vector>

#include "adapitch/model_config.hpp"
#include "adapitch/nn.hpp"
#include "adapitch/text.hpp"

namespace adapitch {

// Text encoder E_T shared between the self-supervised stage and the
// supervised model: embedding -> 3 x (conv1d k=5, stride 1, same padding,
// relu) -> bi-LSTM. Output is [L, 2*hidden].
class TextEncoder {
 public:
  TextEncoder(ParameterSet& ps, const ModelConfig& cfg, Rng& rng);

  Tensor encode(const PhonemeSequence& tokens) const;

  static constexpr const char* kPrefix = "t2t.encoder";
  static constexpr const char* kEmbedPrefix = "t2t.embed";

 private:
  ModelConfig cfg_;
  EmbeddingLayer embed_;
  std::vector<Conv1dLayer> convs_;
  BiLstm bilstm_;
};

// Auxiliary reconstruction decoder D_T: a position-synchronous LSTM that
// consumes latent row i, attends over all latent rows, and emits a
// row-stochastic distribution over the vocabulary per position (dense
// projection, layer normalization, softmax).
class TextDecoder {
 public:
  TextDecoder(ParameterSet& ps, const ModelConfig& cfg, Rng& rng);

  Tensor decode(const Tensor& latent) const;  // [L, V], rows sum to 1

  static constexpr const char* kPrefix = "t2t.decoder";

 private:
  ModelConfig cfg_;
  LstmLayer lstm_;
  Dense attn_key_;
  Dense out_;
  LayerNormLayer ln_;
};

// The self-supervised text-to-text module (Eq. 4 style reconstruction:
// mean squared error against one-hot targets).
class T2tModel {
 public:
  T2tModel(ParameterSet& ps, const ModelConfig& cfg, Rng& rng)
      : encoder_(ps, cfg, rng), decoder_(ps, cfg, rng), cfg_(cfg) {}

  Tensor encode(const PhonemeSequence& tokens) const { return encoder_.encode(tokens); }
  Tensor decode(const Tensor& latent) const { return decoder_.decode(latent); }
  Tensor reconstruction_loss(const PhonemeSequence& tokens) const;

  const TextEncoder& encoder() const { return encoder_; }
  const ModelConfig& config() const { return cfg_; }

  static Tensor one_hot(const PhonemeSequence& tokens, int vocab_size);
  static std::vector<int> greedy_ids(const Tensor& probs);

 private:
  TextEncoder encoder_;
  TextDecoder decoder_;
  ModelConfig cfg_;
};

}  // namespace adapitch
