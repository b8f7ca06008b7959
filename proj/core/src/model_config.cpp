#include "adapitch/model_config.hpp"

#include "adapitch/error.hpp"

namespace adapitch {

ModelConfig ModelConfig::paper() { return ModelConfig{}; }

ModelConfig ModelConfig::toy() {
  ModelConfig cfg;
  cfg.text_embed_dim = 32;
  cfg.text_lstm_hidden = 16;
  cfg.text_dec_hidden = 32;
  cfg.pitch_enc_dim = 16;
  cfg.pitch_enc_ffn = 32;
  cfg.speaker_dim = 8;
  cfg.pitch_frame_embed_dim = 8;
  cfg.fused_dim = 16;
  cfg.mel_conv_channels = 8;
  cfg.mel_dec_ffn = 32;
  return cfg;
}

ModelConfig ModelConfig::preset(const std::string& name) {
  if (name == "paper") return paper();
  if (name == "toy") return toy();
  throw ContractViolation("unknown model preset: " + name);
}

}  // namespace adapitch
