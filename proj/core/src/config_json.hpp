#pragma once

// Private JSON converters shared by the trainer and the CLI.

#include <json.hpp>

#include "adapitch/mel.hpp"
#include "adapitch/model_config.hpp"
#include "adapitch/pitch.hpp"
#include "adapitch/text.hpp"
#include "adapitch/trainer.hpp"

namespace adapitch {

inline void to_json(nlohmann::ordered_json& j, const ModelConfig& c) {
  j = nlohmann::ordered_json{{"vocab_size", c.vocab_size},
                             {"text_embed_dim", c.text_embed_dim},
                             {"text_conv_layers", c.text_conv_layers},
                             {"text_conv_kernel", c.text_conv_kernel},
                             {"text_lstm_hidden", c.text_lstm_hidden},
                             {"text_dec_hidden", c.text_dec_hidden},
                             {"pitch_enc_dim", c.pitch_enc_dim},
                             {"pitch_enc_blocks", c.pitch_enc_blocks},
                             {"pitch_enc_ffn", c.pitch_enc_ffn},
                             {"speaker_dim", c.speaker_dim},
                             {"pitch_frame_embed_dim", c.pitch_frame_embed_dim},
                             {"fused_dim", c.fused_dim},
                             {"mel_bins", c.mel_bins},
                             {"mel_conv_channels", c.mel_conv_channels},
                             {"mel_conv_layers", c.mel_conv_layers},
                             {"mel_dec_blocks", c.mel_dec_blocks},
                             {"mel_dec_ffn", c.mel_dec_ffn}};
}

inline void from_json(const nlohmann::ordered_json& j, ModelConfig& c) {
  c.vocab_size = j.value("vocab_size", c.vocab_size);
  c.text_embed_dim = j.value("text_embed_dim", c.text_embed_dim);
  c.text_conv_layers = j.value("text_conv_layers", c.text_conv_layers);
  c.text_conv_kernel = j.value("text_conv_kernel", c.text_conv_kernel);
  c.text_lstm_hidden = j.value("text_lstm_hidden", c.text_lstm_hidden);
  c.text_dec_hidden = j.value("text_dec_hidden", c.text_dec_hidden);
  c.pitch_enc_dim = j.value("pitch_enc_dim", c.pitch_enc_dim);
  c.pitch_enc_blocks = j.value("pitch_enc_blocks", c.pitch_enc_blocks);
  c.pitch_enc_ffn = j.value("pitch_enc_ffn", c.pitch_enc_ffn);
  c.speaker_dim = j.value("speaker_dim", c.speaker_dim);
  c.pitch_frame_embed_dim = j.value("pitch_frame_embed_dim", c.pitch_frame_embed_dim);
  c.fused_dim = j.value("fused_dim", c.fused_dim);
  c.mel_bins = j.value("mel_bins", c.mel_bins);
  c.mel_conv_channels = j.value("mel_conv_channels", c.mel_conv_channels);
  c.mel_conv_layers = j.value("mel_conv_layers", c.mel_conv_layers);
  c.mel_dec_blocks = j.value("mel_dec_blocks", c.mel_dec_blocks);
  c.mel_dec_ffn = j.value("mel_dec_ffn", c.mel_dec_ffn);
}

inline void to_json(nlohmann::ordered_json& j, const MelConfig& c) {
  j = nlohmann::ordered_json{{"sample_rate", c.sample_rate}, {"n_fft", c.n_fft},
                             {"hop", c.hop},                 {"win_length", c.win_length},
                             {"n_mels", c.n_mels},           {"fmin", c.fmin},
                             {"fmax", c.fmax},               {"log_floor", c.log_floor}};
}

inline void from_json(const nlohmann::ordered_json& j, MelConfig& c) {
  c.sample_rate = j.value("sample_rate", c.sample_rate);
  c.n_fft = j.value("n_fft", c.n_fft);
  c.hop = j.value("hop", c.hop);
  c.win_length = j.value("win_length", c.win_length);
  c.n_mels = j.value("n_mels", c.n_mels);
  c.fmin = j.value("fmin", c.fmin);
  c.fmax = j.value("fmax", c.fmax);
  c.log_floor = j.value("log_floor", c.log_floor);
}

inline void to_json(nlohmann::ordered_json& j, const PitchConfig& c) {
  j = nlohmann::ordered_json{{"sample_rate", c.sample_rate},
                             {"hop", c.hop},
                             {"window", c.window},
                             {"fmin", c.fmin},
                             {"fmax", c.fmax},
                             {"voiced_self_prob", c.voiced_self_prob}};
}

inline void from_json(const nlohmann::ordered_json& j, PitchConfig& c) {
  c.sample_rate = j.value("sample_rate", c.sample_rate);
  c.hop = j.value("hop", c.hop);
  c.window = j.value("window", c.window);
  c.fmin = j.value("fmin", c.fmin);
  c.fmax = j.value("fmax", c.fmax);
  c.voiced_self_prob = j.value("voiced_self_prob", c.voiced_self_prob);
}

inline void to_json(nlohmann::ordered_json& j, const LossWeights& w) {
  j = nlohmann::ordered_json{
      {"alpha", w.alpha}, {"beta", w.beta}, {"gamma", w.gamma}, {"duration", w.duration}};
}

inline void from_json(const nlohmann::ordered_json& j, LossWeights& w) {
  w.alpha = j.value("alpha", w.alpha);
  w.beta = j.value("beta", w.beta);
  w.gamma = j.value("gamma", w.gamma);
  w.duration = j.value("duration", w.duration);
}

}  // namespace adapitch
