#pragma once

#include <vector>

#include "adapitch/m2m.hpp"
#include "adapitch/model_config.hpp"
#include "adapitch/nn.hpp"
#include "adapitch/pitch.hpp"
#include "adapitch/text.hpp"

namespace adapitch {

// The supervised disentangling core: pitch encoder + regressor, speaker
// lookup table, duration predictor, length regulation, and the fusion layer
// whose output feeds the (frozen) mel decoder and the adaptation loss.
//
// Pitch values are handled in log-Hz; unvoiced frames are masked out of the
// regression loss and enter the fusion through a learned unvoiced embedding.
class VarianceAdaptor {
 public:
  VarianceAdaptor(ParameterSet& ps, const ModelConfig& cfg, int num_speakers, Rng& rng);

  int num_speakers() const { return num_speakers_; }

  /// Row j of the speaker table, [1, d_spk]; throws on unknown speaker.
  Tensor speaker_lookup(int speaker) const;

  /// E_P: private embedding followed by transformer blocks, [L, d_p].
  Tensor pitch_encode(const PhonemeSequence& tokens) const;

  /// R_p: per-token scalar head upsampled to frames by linear interpolation
  /// between token-center anchors; output [sum(durations)] in log-Hz.
  Tensor pitch_regress(const Tensor& pitch_latent, const std::vector<int>& durations) const;

  struct PitchLoss {
    Tensor loss;
    bool degenerate = false;  // no voiced frames in the target
  };
  /// MSE between the upsampled regressor output and the target contour,
  /// log-Hz domain, voiced frames only.
  PitchLoss pitch_regression_loss(const PhonemeSequence& tokens, const PitchContour& target,
                                  const std::vector<int>& durations) const;

  /// Per-token log-duration head over the text latent, [L].
  Tensor predict_log_durations(const Tensor& text_latent) const;
  /// Inference rounding: exp(log duration) to nearest integer, floor 1.
  static std::vector<int> round_durations(const Tensor& log_durations);
  /// MSE in the log domain against log(d + 1) targets.
  static Tensor duration_loss(const Tensor& predicted_log, const std::vector<int>& true_durations);
  static Tensor duration_loss(const Tensor& predicted_log, const std::vector<float>& true_durations);

  /// Concatenate [text | pitch embedding | speaker] per frame and project to
  /// the fused width. log_f0 is a [F] tensor (ground truth at training,
  /// regressor output at inference); voiced_mask selects the learned unvoiced
  /// embedding where 0.
  Tensor fuse(const Tensor& text_upsampled, const Tensor& log_f0,
              const std::vector<float>& voiced_mask, int speaker) const;

  /// MSE between the frozen mel encoder's latent of the target mel and the
  /// fused latent. Gradient reaches only the fused (supervised) side.
  static Tensor adaptation_loss(const Tensor& fused, const Tensor& teacher_latent);
  static Tensor adaptation_loss(const Tensor& fused, const MelSpectrogram& teacher_mel,
                                const MelEncoder& mel_encoder);

  static constexpr const char* kPrefix = "va";

 private:
  ModelConfig cfg_;
  int num_speakers_ = 0;
  Tensor speaker_table_;  // [S, d_spk]
  EmbeddingLayer pitch_embed_;
  std::vector<TransformerBlock> pitch_blocks_;
  Dense pitch_head_;
  Dense duration_head_;
  Dense frame_pitch_proj_;  // scalar log-f0 -> d_pe
  Tensor unvoiced_vec_;     // learned embedding for unvoiced frames
  Dense fuse_fc_;
};

}  // namespace adapitch
