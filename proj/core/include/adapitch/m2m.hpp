#pragma once

#include <vector>

#include "adapitch/mel.hpp"
#include "adapitch/model_config.hpp"
#include "adapitch/nn.hpp"

namespace adapitch {

/// Constant tensor view of a mel spectrogram, [frames, bins].
Tensor mel_to_tensor(const MelSpectrogram& mel);

// Mel encoder E_M: 3 stacked 3x3 2-D convolutions over the time x mel plane
// followed by a per-frame projection to the latent width. Frame count is
// preserved (stride 1, same padding). In stage 2 its output is the frozen
// teacher signal for the adaptation loss.
class MelEncoder {
 public:
  MelEncoder(ParameterSet& ps, const ModelConfig& cfg, Rng& rng);

  Tensor encode(const Tensor& mel) const;  // [F, bins] -> [F, fused_dim]

  static constexpr const char* kPrefix = "m2m.encoder";

 private:
  ModelConfig cfg_;
  std::vector<Conv2dLayer> convs_;
  Dense proj_;
};

// Mel decoder D_M: 4 feed-forward transformer blocks at the latent width plus
// a per-frame projection back to mel bins.
class MelDecoder {
 public:
  MelDecoder(ParameterSet& ps, const ModelConfig& cfg, Rng& rng);

  Tensor decode(const Tensor& latent) const;  // [F, fused_dim] -> [F, bins]

  static constexpr const char* kPrefix = "m2m.decoder";

 private:
  ModelConfig cfg_;
  std::vector<TransformerBlock> blocks_;
  Dense out_;
};

// The self-supervised mel-to-mel module (Eq. 5 style reconstruction).
class M2mModel {
 public:
  M2mModel(ParameterSet& ps, const ModelConfig& cfg, Rng& rng)
      : encoder_(ps, cfg, rng), decoder_(ps, cfg, rng), cfg_(cfg) {}

  Tensor encode(const Tensor& mel) const { return encoder_.encode(mel); }
  Tensor decode(const Tensor& latent) const { return decoder_.decode(latent); }
  Tensor reconstruction_loss(const Tensor& mel) const {
    return mse_loss(decode(encode(mel)), mel);
  }

  const MelEncoder& encoder() const { return encoder_; }
  const MelDecoder& decoder() const { return decoder_; }
  const ModelConfig& config() const { return cfg_; }

 private:
  MelEncoder encoder_;
  MelDecoder decoder_;
  ModelConfig cfg_;
};

}  // namespace adapitch
