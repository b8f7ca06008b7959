#pragma once

#include <string>

namespace adapitch {

// Widths of every sub-network. `paper()` carries the published sizes
// (512-wide text embedding, conv1d kernel 5, bi-LSTM hidden 256, 3x3 mel
// convolutions, 4 transformer decoder layers); `toy()` shrinks the widths for
// desk-scale training runs while keeping every layer count and kernel size.
struct ModelConfig {
  int vocab_size = 0;  // filled in from the vocabulary at build time

  // text encoder E_T / text decoder D_T
  int text_embed_dim = 512;
  int text_conv_layers = 3;
  int text_conv_kernel = 5;
  int text_lstm_hidden = 256;  // encoder output width is twice this
  int text_dec_hidden = 256;

  // pitch encoder E_P and regressor head R_p
  int pitch_enc_dim = 128;
  int pitch_enc_blocks = 2;
  int pitch_enc_ffn = 256;

  // variance adaptor
  int speaker_dim = 64;
  int pitch_frame_embed_dim = 64;
  int fused_dim = 256;  // output of the fusion FC; equals the m2m latent width

  // mel encoder E_M / mel decoder D_M
  int mel_bins = 80;
  int mel_conv_channels = 32;
  int mel_conv_layers = 3;
  int mel_dec_blocks = 4;
  int mel_dec_ffn = 1024;

  int text_encoder_out() const { return 2 * text_lstm_hidden; }

  static ModelConfig paper();
  static ModelConfig toy();
  static ModelConfig preset(const std::string& name);  // "paper" | "toy"
};

}  // namespace adapitch
