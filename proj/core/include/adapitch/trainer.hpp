#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "adapitch/batch.hpp"
#include "adapitch/checkpoint.hpp"
#include "adapitch/m2m.hpp"
#include "adapitch/manifest.hpp"
#include "adapitch/mel.hpp"
#include "adapitch/model_config.hpp"
#include "adapitch/optimizer.hpp"
#include "adapitch/pitch.hpp"
#include "adapitch/t2t.hpp"
#include "adapitch/text.hpp"
#include "adapitch/variance_adaptor.hpp"

namespace adapitch {

// Loss combination weights: alpha/beta/gamma weight the synthesis,
// regression and adaptation terms; the duration term is an auxiliary with
// its own fixed weight, reported separately.
struct LossWeights {
  float alpha = 1.0f;
  float beta = 0.1f;
  float gamma = 0.1f;
  float duration = 0.1f;
};

struct TrainConfig {
  int max_steps = 5000;
  int batch_size = 8;
  uint64_t seed = 1234;
  float lr = 1e-3f;
  std::string model_preset = "toy";  // stage-1 runs; stage 2 inherits from checkpoints
  LossWeights weights;
  MelConfig mel;
  PitchConfig pitch;
};

/// One (name, value) pair per loss term, plus "total".
using StepRecord = std::vector<std::pair<std::string, float>>;
using StepLogger = std::function<void(int step, const StepRecord&)>;

struct LossTerms {
  float syn = 0.0f, reg = 0.0f, ada = 0.0f, dur = 0.0f;
  float weighted_syn = 0.0f, weighted_reg = 0.0f, weighted_ada = 0.0f, weighted_dur = 0.0f;
  float total = 0.0f;
  bool reg_degenerate = false;

  StepRecord record() const;
};

// --- stage 1 ------------------------------------------------------------

/// Self-supervised text-to-text pretraining on a text-only manifest.
Checkpoint run_stage1_t2t(const std::vector<ManifestEntry>& corpus, const Lexicon& lexicon,
                          const TrainConfig& cfg, const StepLogger& log = nullptr);

/// Self-supervised mel-to-mel pretraining on an audio-only manifest.
Checkpoint run_stage1_m2m(const std::vector<ManifestEntry>& corpus, const TrainConfig& cfg,
                          const StepLogger& log = nullptr);

// --- stage 2 ------------------------------------------------------------

// Supervised training with E_T, E_M and D_M loaded from the stage-1
// checkpoints and frozen. Trains the pitch encoder/regressor, duration head,
// fusion layer, speaker table and frame-pitch embedding against
// alpha*L_syn + beta*L_reg + gamma*L_ada (+ the auxiliary duration term).
// Ground-truth pitch and durations are teacher-forced into the fusion path.
class Stage2Trainer {
 public:
  Stage2Trainer(const std::vector<ManifestEntry>& corpus, const Lexicon& lexicon,
                const Checkpoint& t2t_ckpt, const Checkpoint& m2m_ckpt, TrainConfig cfg);

  /// Builds the weighted total for one batch and reports every term.
  Tensor total_loss(const PaddedBatch& batch, LossTerms* report);

  /// Runs the configured number of steps.
  void train(const StepLogger& log = nullptr);

  Checkpoint checkpoint() const;

  ParameterSet& params() { return params_; }
  const std::vector<SequenceItem>& items() const { return items_; }
  const Vocabulary& vocab() const { return vocab_; }
  const ModelConfig& model_config() const { return model_cfg_; }
  int num_speakers() const { return num_speakers_; }
  int64_t steps_done() const { return opt_.step_count(); }

 private:
  TrainConfig cfg_;
  ModelConfig model_cfg_;
  Vocabulary vocab_;
  int num_speakers_ = 0;
  ParameterSet params_;
  std::vector<SequenceItem> items_;
  std::vector<Tensor> text_latents_;    // cached, E_T frozen
  std::vector<Tensor> teacher_latents_;  // cached, E_M frozen
  std::vector<Tensor> mel_targets_;
  std::vector<PhonemeSequence> token_seqs_;
  std::unique_ptr<TextEncoder> text_encoder_;
  std::unique_ptr<M2mModel> m2m_;
  std::unique_ptr<VarianceAdaptor> va_;
  AdamOptimizer opt_;
};

// --- inference ------------------------------------------------------------

struct SynthesisRequest {
  PhonemeSequence tokens;
  int speaker = 0;
  /// Optional per-frame contour override in Hz (0 = unvoiced); resampled by
  /// nearest neighbor to the predicted frame count when lengths differ.
  std::vector<float> pitch_override;
};

struct SynthesisResult {
  MelSpectrogram mel;
  std::vector<int> durations;   // predicted frames per token
  std::vector<float> log_f0;    // fused per-frame log pitch
};

// Inference path: text encoder -> duration prediction -> length regulation ->
// regressor (or override) pitch -> fusion -> mel decoder. Executes without
// the text decoder and mel encoder parameter groups.
class Synthesizer {
 public:
  explicit Synthesizer(const Checkpoint& ckpt);

  SynthesisResult synthesize(const SynthesisRequest& request) const;

  const Vocabulary& vocab() const { return vocab_; }
  const MelConfig& mel_config() const { return mel_cfg_; }
  const ModelConfig& model_config() const { return model_cfg_; }
  int num_speakers() const { return num_speakers_; }

 private:
  ModelConfig model_cfg_;
  MelConfig mel_cfg_;
  Vocabulary vocab_;
  int num_speakers_ = 0;
  ParameterSet params_;
  std::unique_ptr<TextEncoder> text_encoder_;
  std::unique_ptr<MelDecoder> mel_decoder_;
  std::unique_ptr<VarianceAdaptor> va_;
};

// --- helpers shared by stages, tests and the CLI ---------------------------

/// Tokenized, mel-cropped, pitch-annotated view of a stage-2 corpus. Mel and
/// contour are trimmed to sum(durations) frames (the analysis emits one
/// trailing center-padding frame beyond the duration total).
std::vector<SequenceItem> prepare_stage2_items(const std::vector<ManifestEntry>& corpus,
                                               const Lexicon& lexicon, const Vocabulary& vocab,
                                               const MelConfig& mel_cfg,
                                               const PitchConfig& pitch_cfg);

/// Throws DivergenceError when the loss is not finite.
void check_finite(float loss, int step);

/// Fraction of token positions whose greedy reconstruction matches the input,
/// over the whole corpus, under the checkpoint's parameters.
double t2t_reconstruction_accuracy(const Checkpoint& t2t_ckpt,
                                   const std::vector<ManifestEntry>& corpus,
                                   const Lexicon& lexicon);

}  // namespace adapitch
