#include "adapitch/m2m.hpp"

namespace adapitch {

Tensor mel_to_tensor(const MelSpectrogram& mel) {
  return Tensor::from({mel.frames, mel.bins}, mel.data);
}

MelEncoder::MelEncoder(ParameterSet& ps, const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
  const int ch = cfg.mel_conv_channels;
  for (int i = 0; i < cfg.mel_conv_layers; ++i) {
    const int c_in = i == 0 ? 1 : ch;
    convs_.push_back(Conv2dLayer::make(ps, std::string(kPrefix) + ".conv" + std::to_string(i),
                                       3, 3, c_in, ch, rng));
  }
  proj_ = Dense::make(ps, std::string(kPrefix) + ".proj", cfg.mel_bins * ch, cfg.fused_dim, rng);
}

Tensor MelEncoder::encode(const Tensor& mel) const {
  check(mel.rank() == 2 && mel.dim(0) >= 1, "mel encode: empty mel");
  check(mel.dim(1) == cfg_.mel_bins, "mel encode: mel bin count " + std::to_string(mel.dim(1)) +
                                         " does not match config " +
                                         std::to_string(cfg_.mel_bins));
  const int frames = mel.dim(0);
  Tensor x = reshape(mel, {frames, cfg_.mel_bins, 1});
  for (const auto& conv : convs_) x = relu(conv.forward(x));
  x = reshape(x, {frames, cfg_.mel_bins * cfg_.mel_conv_channels});
  return proj_.forward(x);
}

MelDecoder::MelDecoder(ParameterSet& ps, const ModelConfig& cfg, Rng& rng) : cfg_(cfg) {
  for (int i = 0; i < cfg.mel_dec_blocks; ++i)
    blocks_.push_back(TransformerBlock::make(ps,
                                             std::string(kPrefix) + ".block" + std::to_string(i),
                                             cfg.fused_dim, cfg.mel_dec_ffn, rng));
  out_ = Dense::make(ps, std::string(kPrefix) + ".out", cfg.fused_dim, cfg.mel_bins, rng);
}

Tensor MelDecoder::decode(const Tensor& latent) const {
  check(latent.rank() == 2 && latent.dim(0) >= 1, "mel decode: empty latent");
  check(latent.dim(1) == cfg_.fused_dim, "mel decode: latent width mismatch");
  Tensor x = latent;
  for (const auto& blk : blocks_) x = blk.forward(x);
  return out_.forward(x);
}

}  // namespace adapitch
