#include "adapitch/variance_adaptor.hpp"

#include <cmath>

namespace adapitch {

VarianceAdaptor::VarianceAdaptor(ParameterSet& ps, const ModelConfig& cfg, int num_speakers,
                                 Rng& rng)
    : cfg_(cfg), num_speakers_(num_speakers) {
  check(num_speakers > 0, "variance adaptor: speaker count must be positive");
  check(cfg.vocab_size > 0, "variance adaptor: vocab_size must be set");
  const std::string p(kPrefix);
  speaker_table_ = ps.ensure(p + ".speaker.table", {num_speakers, cfg.speaker_dim},
                             Init::uniform(-0.1f, 0.1f), rng);
  pitch_embed_ = EmbeddingLayer::make(ps, p + ".pitch_encoder.embed", cfg.vocab_size,
                                      cfg.pitch_enc_dim, rng);
  for (int i = 0; i < cfg.pitch_enc_blocks; ++i)
    pitch_blocks_.push_back(TransformerBlock::make(
        ps, p + ".pitch_encoder.block" + std::to_string(i), cfg.pitch_enc_dim,
        cfg.pitch_enc_ffn, rng));
  pitch_head_ = Dense::make(ps, p + ".pitch_regressor.head", cfg.pitch_enc_dim, 1, rng);
  duration_head_ = Dense::make(ps, p + ".duration.head", cfg.text_encoder_out(), 1, rng);
  frame_pitch_proj_ = Dense::make(ps, p + ".pitch_embed.proj", 1, cfg.pitch_frame_embed_dim, rng);
  unvoiced_vec_ = ps.ensure(p + ".pitch_embed.unvoiced", {cfg.pitch_frame_embed_dim},
                            Init::uniform(-0.1f, 0.1f), rng);
  const int concat = cfg.text_encoder_out() + cfg.pitch_frame_embed_dim + cfg.speaker_dim;
  fuse_fc_ = Dense::make(ps, p + ".fc", concat, cfg.fused_dim, rng);
}

Tensor VarianceAdaptor::speaker_lookup(int speaker) const {
  check(speaker >= 0 && speaker < num_speakers_,
        "unknown speaker " + std::to_string(speaker) + " (table holds " +
            std::to_string(num_speakers_) + ")");
  return slice_rows(speaker_table_, speaker, speaker + 1);
}

Tensor VarianceAdaptor::pitch_encode(const PhonemeSequence& tokens) const {
  check(!tokens.ids.empty(), "pitch_encode: empty token sequence");
  Tensor x = pitch_embed_.forward(tokens.ids);
  for (const auto& blk : pitch_blocks_) x = blk.forward(x);
  return x;
}

Tensor VarianceAdaptor::pitch_regress(const Tensor& pitch_latent,
                                      const std::vector<int>& durations) const {
  check(pitch_latent.dim(0) == static_cast<int>(durations.size()),
        "pitch_regress: durations do not match token count");
  Tensor per_token = reshape(pitch_head_.forward(pitch_latent), {pitch_latent.dim(0)});
  return interp_upsample(per_token, durations);
}

VarianceAdaptor::PitchLoss VarianceAdaptor::pitch_regression_loss(
    const PhonemeSequence& tokens, const PitchContour& target,
    const std::vector<int>& durations) const {
  int total = 0;
  for (int d : durations) total += d;
  check(total == target.frames(),
        "pitch_regression_loss: " + std::to_string(total) + " frames from durations vs " +
            std::to_string(target.frames()) + " target frames");
  Tensor pred = pitch_regress(pitch_encode(tokens), durations);

  std::vector<float> target_log(static_cast<size_t>(target.frames()), 0.0f);
  std::vector<float> mask(static_cast<size_t>(target.frames()), 0.0f);
  bool any_voiced = false;
  for (int f = 0; f < target.frames(); ++f) {
    if (target.voiced[static_cast<size_t>(f)]) {
      target_log[static_cast<size_t>(f)] = std::log(target.f0[static_cast<size_t>(f)]);
      mask[static_cast<size_t>(f)] = 1.0f;
      any_voiced = true;
    }
  }
  PitchLoss out;
  out.degenerate = !any_voiced;
  out.loss = masked_mse_loss(pred, Tensor::from({target.frames()}, std::move(target_log)), mask);
  return out;
}

Tensor VarianceAdaptor::predict_log_durations(const Tensor& text_latent) const {
  check(text_latent.dim(0) >= 1, "predict_log_durations: empty latent");
  return reshape(duration_head_.forward(text_latent), {text_latent.dim(0)});
}

std::vector<int> VarianceAdaptor::round_durations(const Tensor& log_durations) {
  std::vector<int> out(static_cast<size_t>(log_durations.size()));
  for (size_t i = 0; i < out.size(); ++i) {
    const float d = std::exp(log_durations.values()[i]);
    out[i] = std::max(1, static_cast<int>(std::lrintf(d)));
  }
  return out;
}

Tensor VarianceAdaptor::duration_loss(const Tensor& predicted_log,
                                      const std::vector<int>& true_durations) {
  std::vector<float> as_float(true_durations.begin(), true_durations.end());
  return duration_loss(predicted_log, as_float);
}

Tensor VarianceAdaptor::duration_loss(const Tensor& predicted_log,
                                      const std::vector<float>& true_durations) {
  check(static_cast<size_t>(predicted_log.size()) == true_durations.size(),
        "duration_loss: length mismatch");
  std::vector<float> target(true_durations.size());
  for (size_t i = 0; i < target.size(); ++i) target[i] = std::log(true_durations[i] + 1.0f);
  return mse_loss(predicted_log,
                  Tensor::from({static_cast<int>(target.size())}, std::move(target)));
}

Tensor VarianceAdaptor::fuse(const Tensor& text_upsampled, const Tensor& log_f0,
                             const std::vector<float>& voiced_mask, int speaker) const {
  const int frames = text_upsampled.dim(0);
  check(static_cast<int>(log_f0.size()) == frames,
        "fuse: pitch frame count " + std::to_string(log_f0.size()) +
            " does not match text frames " + std::to_string(frames));
  check(voiced_mask.size() == static_cast<size_t>(frames), "fuse: voiced mask length mismatch");
  check(text_upsampled.dim(1) == cfg_.text_encoder_out(), "fuse: text latent width mismatch");

  Tensor voiced_embed = frame_pitch_proj_.forward(reshape(log_f0, {frames, 1}));
  Tensor unvoiced_embed = broadcast_row(unvoiced_vec_, frames);
  std::vector<float> inv_mask(voiced_mask.size());
  for (size_t i = 0; i < voiced_mask.size(); ++i) inv_mask[i] = 1.0f - voiced_mask[i];
  Tensor pitch_embed =
      add(mul_rows(voiced_embed, voiced_mask), mul_rows(unvoiced_embed, inv_mask));

  Tensor spk = broadcast_row(reshape(speaker_lookup(speaker), {cfg_.speaker_dim}), frames);
  return fuse_fc_.forward(concat_cols({text_upsampled, pitch_embed, spk}));
}

Tensor VarianceAdaptor::adaptation_loss(const Tensor& fused, const Tensor& teacher_latent) {
  check(teacher_latent.dim(0) == fused.dim(0),
        "adaptation_loss: frame counts disagree (" + std::to_string(teacher_latent.dim(0)) +
            " vs " + std::to_string(fused.dim(0)) + ")");
  return mse_loss(teacher_latent, fused);
}

Tensor VarianceAdaptor::adaptation_loss(const Tensor& fused, const MelSpectrogram& teacher_mel,
                                        const MelEncoder& mel_encoder) {
  return adaptation_loss(fused, mel_encoder.encode(mel_to_tensor(teacher_mel)));
}

}  // namespace adapitch
