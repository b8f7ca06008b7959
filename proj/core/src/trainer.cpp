#include "adapitch/trainer.hpp"

#include <cmath>

#include "adapitch/wav.hpp"
#include "config_json.hpp"

namespace adapitch {

using nlohmann::ordered_json;

StepRecord LossTerms::record() const {
  return {{"syn", syn},
          {"reg", reg},
          {"ada", ada},
          {"dur", dur},
          {"weighted_syn", weighted_syn},
          {"weighted_reg", weighted_reg},
          {"weighted_ada", weighted_ada},
          {"weighted_dur", weighted_dur},
          {"total", total}};
}

void check_finite(float loss, int step) {
  if (!std::isfinite(loss))
    throw DivergenceError("training diverged: non-finite loss at step " + std::to_string(step));
}

namespace {

Tensor mean_of(const std::vector<Tensor>& xs) {
  return add_weighted(xs, std::vector<float>(xs.size(), 1.0f / static_cast<float>(xs.size())));
}

std::string stage1_config_json(const ModelConfig& mc, const TrainConfig& cfg,
                               const Vocabulary* vocab) {
  ordered_json j;
  j["model"] = mc;
  j["mel"] = cfg.mel;
  j["pitch"] = cfg.pitch;
  j["weights"] = cfg.weights;
  j["preset"] = cfg.model_preset;
  if (vocab) j["vocab"] = vocab->tokens;
  return j.dump();
}

void check_matching_mel_dims(const ModelConfig& a, const ModelConfig& b) {
  check(a.fused_dim == b.fused_dim && a.mel_bins == b.mel_bins &&
            a.mel_conv_channels == b.mel_conv_channels &&
            a.mel_conv_layers == b.mel_conv_layers && a.mel_dec_blocks == b.mel_dec_blocks &&
            a.mel_dec_ffn == b.mel_dec_ffn,
        "stage 2: text and mel checkpoints were trained with different model dimensions");
}

}  // namespace

Checkpoint run_stage1_t2t(const std::vector<ManifestEntry>& corpus, const Lexicon& lexicon,
                          const TrainConfig& cfg, const StepLogger& log) {
  check(!corpus.empty(), "stage 1 t2t: empty corpus");
  for (const auto& e : corpus) require_fields(e, false, true, false, false);

  const Vocabulary vocab = Vocabulary::build(lexicon);
  ModelConfig mc = ModelConfig::preset(cfg.model_preset);
  mc.vocab_size = vocab.size();

  std::vector<SequenceItem> items;
  for (const auto& e : corpus) {
    SequenceItem item;
    item.id = e.id;
    item.tokens = text_to_phonemes(e.text, lexicon, vocab).ids;
    items.push_back(std::move(item));
  }

  ParameterSet ps;
  Rng rng(cfg.seed);
  T2tModel model(ps, mc, rng);
  BatchStream stream(&items, cfg.batch_size, cfg.seed);
  AdamOptimizer opt(AdamConfig{.lr = cfg.lr});

  for (int step = 1; step <= cfg.max_steps; ++step) {
    const PaddedBatch batch = stream.next();
    std::vector<Tensor> losses;
    for (int b = 0; b < batch.batch; ++b)
      losses.push_back(model.reconstruction_loss(PhonemeSequence{batch.tokens_of(b)}));
    Tensor loss = mean_of(losses);
    const float v = loss.item();
    check_finite(v, step);
    backward(loss);
    opt.step(ps);
    if (log) log(step, {{"rec", v}, {"total", v}});
  }

  Checkpoint ckpt;
  ckpt.stage = "t2t";
  ckpt.step = opt.step_count();
  ckpt.seed = cfg.seed;
  ckpt.config_json = stage1_config_json(mc, cfg, &vocab);
  collect_params(ps, ckpt);
  return ckpt;
}

Checkpoint run_stage1_m2m(const std::vector<ManifestEntry>& corpus, const TrainConfig& cfg,
                          const StepLogger& log) {
  check(!corpus.empty(), "stage 1 m2m: empty corpus");
  for (const auto& e : corpus) require_fields(e, true, false, false, false);

  ModelConfig mc = ModelConfig::preset(cfg.model_preset);
  check(mc.mel_bins == cfg.mel.n_mels, "stage 1 m2m: model mel_bins must equal mel config n_mels");

  std::vector<SequenceItem> items;
  for (const auto& e : corpus) {
    const Waveform wave = load_wav(e.audio);
    const MelSpectrogram mel = mel_spectrogram(wave, cfg.mel);
    SequenceItem item;
    item.id = e.id;
    item.mel = mel.data;
    item.mel_frames = mel.frames;
    item.mel_bins = mel.bins;
    items.push_back(std::move(item));
  }

  ParameterSet ps;
  Rng rng(cfg.seed);
  M2mModel model(ps, mc, rng);
  BatchStream stream(&items, cfg.batch_size, cfg.seed);
  AdamOptimizer opt(AdamConfig{.lr = cfg.lr});

  for (int step = 1; step <= cfg.max_steps; ++step) {
    const PaddedBatch batch = stream.next();
    std::vector<Tensor> losses;
    for (int b = 0; b < batch.batch; ++b) {
      Tensor mel_t = Tensor::from({batch.frame_count(b), batch.bins}, batch.mel_of(b));
      losses.push_back(model.reconstruction_loss(mel_t));
    }
    Tensor loss = mean_of(losses);
    const float v = loss.item();
    check_finite(v, step);
    backward(loss);
    opt.step(ps);
    if (log) log(step, {{"rec", v}, {"total", v}});
  }

  Checkpoint ckpt;
  ckpt.stage = "m2m";
  ckpt.step = opt.step_count();
  ckpt.seed = cfg.seed;
  ckpt.config_json = stage1_config_json(mc, cfg, nullptr);
  collect_params(ps, ckpt);
  return ckpt;
}

std::vector<SequenceItem> prepare_stage2_items(const std::vector<ManifestEntry>& corpus,
                                               const Lexicon& lexicon, const Vocabulary& vocab,
                                               const MelConfig& mel_cfg,
                                               const PitchConfig& pitch_cfg) {
  check(!corpus.empty(), "stage 2: empty corpus");
  check(pitch_cfg.hop == mel_cfg.hop && pitch_cfg.sample_rate == mel_cfg.sample_rate,
        "stage 2: pitch analysis must share the mel hop and sample rate");
  std::vector<SequenceItem> items;
  for (const auto& e : corpus) {
    require_fields(e, true, true, true, true);
    SequenceItem item;
    item.id = e.id;
    item.tokens = text_to_phonemes(e.text, lexicon, vocab).ids;
    check(item.tokens.size() == e.durations.size(),
          "entry '" + e.id + "': " + std::to_string(item.tokens.size()) + " phonemes but " +
              std::to_string(e.durations.size()) + " durations");
    int total = 0;
    for (int d : e.durations) {
      check(d >= 0, "entry '" + e.id + "': negative duration");
      total += d;
    }
    check(total >= 1, "entry '" + e.id + "': zero total duration");

    const Waveform wave = load_wav(e.audio);
    MelSpectrogram mel = mel_spectrogram(wave, mel_cfg);
    check(mel.frames >= total, "entry '" + e.id + "': durations cover " + std::to_string(total) +
                                   " frames but the audio has only " +
                                   std::to_string(mel.frames));
    mel = mel.head(total);  // drop the trailing center-padding frame(s)
    item.mel = mel.data;
    item.mel_frames = mel.frames;
    item.mel_bins = mel.bins;

    const PitchContour contour = estimate_pitch(wave, pitch_cfg);
    item.log_f0.assign(static_cast<size_t>(total), 0.0f);
    item.voiced.assign(static_cast<size_t>(total), 0.0f);
    for (int f = 0; f < total; ++f) {
      if (contour.voiced[static_cast<size_t>(f)]) {
        item.log_f0[static_cast<size_t>(f)] = std::log(contour.f0[static_cast<size_t>(f)]);
        item.voiced[static_cast<size_t>(f)] = 1.0f;
      }
    }
    item.durations = e.durations;
    item.speaker = e.speaker;
    items.push_back(std::move(item));
  }
  return items;
}

Stage2Trainer::Stage2Trainer(const std::vector<ManifestEntry>& corpus, const Lexicon& lexicon,
                             const Checkpoint& t2t_ckpt, const Checkpoint& m2m_ckpt,
                             TrainConfig cfg)
    : cfg_(std::move(cfg)), opt_(AdamConfig{.lr = cfg_.lr}) {
  check(t2t_ckpt.stage == "t2t", "stage 2: first checkpoint is not a t2t checkpoint");
  check(m2m_ckpt.stage == "m2m", "stage 2: second checkpoint is not an m2m checkpoint");

  const ordered_json tj = ordered_json::parse(t2t_ckpt.config_json);
  const ordered_json mj = ordered_json::parse(m2m_ckpt.config_json);
  model_cfg_ = tj.at("model").get<ModelConfig>();
  const ModelConfig mel_side = mj.at("model").get<ModelConfig>();
  check_matching_mel_dims(model_cfg_, mel_side);
  vocab_ = Vocabulary::from_tokens(tj.at("vocab").get<std::vector<std::string>>());
  check(model_cfg_.vocab_size == vocab_.size(), "stage 2: vocabulary size mismatch");

  // The analysis parameters ride with the m2m checkpoint; pitch shares them.
  cfg_.mel = mj.at("mel").get<MelConfig>();
  cfg_.pitch.sample_rate = cfg_.mel.sample_rate;
  cfg_.pitch.hop = cfg_.mel.hop;

  // Pretrained parameter groups, frozen: {E_T, embedding, E_M, D_M}. The text
  // decoder is not part of the supervised model.
  for (const auto& [name, param] : t2t_ckpt.params) {
    if (name.rfind(std::string(TextDecoder::kPrefix), 0) == 0) continue;
    params_.put(name, Tensor::from(param.shape, param.values), /*frozen=*/true);
  }
  for (const auto& [name, param] : m2m_ckpt.params)
    params_.put(name, Tensor::from(param.shape, param.values), /*frozen=*/true);

  items_ = prepare_stage2_items(corpus, lexicon, vocab_, cfg_.mel, cfg_.pitch);
  num_speakers_ = 0;
  for (const auto& item : items_) num_speakers_ = std::max(num_speakers_, item.speaker + 1);

  Rng rng(cfg_.seed);
  text_encoder_ = std::make_unique<TextEncoder>(params_, model_cfg_, rng);
  m2m_ = std::make_unique<M2mModel>(params_, model_cfg_, rng);
  va_ = std::make_unique<VarianceAdaptor>(params_, model_cfg_, num_speakers_, rng);

  // Frozen sub-networks are pure functions of fixed inputs; cache their
  // outputs once instead of recomputing them every step.
  for (const auto& item : items_) {
    token_seqs_.push_back(PhonemeSequence{item.tokens});
    Tensor mel_t = Tensor::from({item.mel_frames, item.mel_bins}, item.mel);
    mel_targets_.push_back(mel_t);
    text_latents_.push_back(text_encoder_->encode(token_seqs_.back()));
    teacher_latents_.push_back(m2m_->encode(mel_t));
  }
}

Tensor Stage2Trainer::total_loss(const PaddedBatch& batch, LossTerms* report) {
  std::vector<Tensor> syn_terms, reg_terms, ada_terms, dur_terms;
  bool degenerate = false;
  for (int b = 0; b < batch.batch; ++b) {
    const int idx = batch.item_indices[static_cast<size_t>(b)];
    const auto& durations = batch.durations[static_cast<size_t>(b)];
    const int frames = batch.frame_count(b);

    Tensor text_up = repeat_rows(text_latents_[static_cast<size_t>(idx)], durations);
    Tensor log_f0 = Tensor::from({frames}, batch.log_f0_of(b));
    const std::vector<float> voiced = batch.voiced_of(b);
    Tensor fused = va_->fuse(text_up, log_f0, voiced, batch.speakers[static_cast<size_t>(b)]);

    Tensor mel_target = Tensor::from({frames, batch.bins}, batch.mel_of(b));
    syn_terms.push_back(mse_loss(m2m_->decode(fused), mel_target));
    ada_terms.push_back(
        VarianceAdaptor::adaptation_loss(fused, teacher_latents_[static_cast<size_t>(idx)]));

    Tensor pred_pitch = va_->pitch_regress(
        va_->pitch_encode(token_seqs_[static_cast<size_t>(idx)]), durations);
    bool any_voiced = false;
    for (float v : voiced) any_voiced |= v != 0.0f;
    degenerate |= !any_voiced;
    reg_terms.push_back(masked_mse_loss(pred_pitch, log_f0, voiced));

    dur_terms.push_back(VarianceAdaptor::duration_loss(
        va_->predict_log_durations(text_latents_[static_cast<size_t>(idx)]), durations));
  }
  Tensor syn = mean_of(syn_terms);
  Tensor reg = mean_of(reg_terms);
  Tensor ada = mean_of(ada_terms);
  Tensor dur = mean_of(dur_terms);
  const LossWeights& w = cfg_.weights;
  Tensor total = add_weighted({syn, reg, ada, dur}, {w.alpha, w.beta, w.gamma, w.duration});
  if (report) {
    report->syn = syn.item();
    report->reg = reg.item();
    report->ada = ada.item();
    report->dur = dur.item();
    report->weighted_syn = w.alpha * report->syn;
    report->weighted_reg = w.beta * report->reg;
    report->weighted_ada = w.gamma * report->ada;
    report->weighted_dur = w.duration * report->dur;
    report->total = total.item();
    report->reg_degenerate = degenerate;
  }
  return total;
}

void Stage2Trainer::train(const StepLogger& log) {
  BatchStream stream(&items_, cfg_.batch_size, cfg_.seed);
  for (int step = 1; step <= cfg_.max_steps; ++step) {
    const PaddedBatch batch = stream.next();
    LossTerms terms;
    Tensor total = total_loss(batch, &terms);
    check_finite(terms.total, step);
    backward(total);
    opt_.step(params_);
    if (log) log(step, terms.record());
  }
}

Checkpoint Stage2Trainer::checkpoint() const {
  Checkpoint ckpt;
  ckpt.stage = "stage2";
  ckpt.step = opt_.step_count();
  ckpt.seed = cfg_.seed;
  ordered_json j;
  j["model"] = model_cfg_;
  j["mel"] = cfg_.mel;
  j["pitch"] = cfg_.pitch;
  j["weights"] = cfg_.weights;
  j["vocab"] = vocab_.tokens;
  j["num_speakers"] = num_speakers_;
  ckpt.config_json = j.dump();
  collect_params(params_, ckpt);
  return ckpt;
}

Synthesizer::Synthesizer(const Checkpoint& ckpt) {
  const ordered_json j = ordered_json::parse(ckpt.config_json);
  model_cfg_ = j.at("model").get<ModelConfig>();
  mel_cfg_ = j.at("mel").get<MelConfig>();
  vocab_ = Vocabulary::from_tokens(j.at("vocab").get<std::vector<std::string>>());
  num_speakers_ = j.value("num_speakers", 1);

  // Inference executes without the text decoder and mel encoder groups; all
  // loaded parameters are constants here.
  install_params(ckpt, params_, /*force_frozen=*/true);
  Rng rng(ckpt.seed);
  text_encoder_ = std::make_unique<TextEncoder>(params_, model_cfg_, rng);
  mel_decoder_ = std::make_unique<MelDecoder>(params_, model_cfg_, rng);
  va_ = std::make_unique<VarianceAdaptor>(params_, model_cfg_, num_speakers_, rng);
}

SynthesisResult Synthesizer::synthesize(const SynthesisRequest& request) const {
  check(!request.tokens.ids.empty(), "synthesize: empty text");

  Tensor latent = text_encoder_->encode(request.tokens);
  SynthesisResult result;
  result.durations = VarianceAdaptor::round_durations(va_->predict_log_durations(latent));
  int frames = 0;
  for (int d : result.durations) frames += d;

  Tensor text_up = repeat_rows(latent, result.durations);
  std::vector<float> voiced(static_cast<size_t>(frames), 1.0f);
  Tensor log_f0;
  if (request.pitch_override.empty()) {
    log_f0 = va_->pitch_regress(va_->pitch_encode(request.tokens), result.durations);
  } else {
    // nearest-neighbor resample of the supplied contour onto the predicted
    // frame axis; zero entries mark unvoiced frames
    const size_t src = request.pitch_override.size();
    std::vector<float> values(static_cast<size_t>(frames), 0.0f);
    for (int f = 0; f < frames; ++f) {
      size_t s = static_cast<size_t>((static_cast<double>(f) + 0.5) * static_cast<double>(src) /
                                     static_cast<double>(frames));
      if (s >= src) s = src - 1;
      const float hz = request.pitch_override[s];
      if (hz > 0.0f) {
        values[static_cast<size_t>(f)] = std::log(hz);
      } else {
        voiced[static_cast<size_t>(f)] = 0.0f;
      }
    }
    log_f0 = Tensor::from({frames}, std::move(values));
  }
  result.log_f0.assign(log_f0.values().begin(), log_f0.values().end());

  Tensor fused = va_->fuse(text_up, log_f0, voiced, request.speaker);
  Tensor mel_t = mel_decoder_->decode(fused);

  result.mel.frames = frames;
  result.mel.bins = model_cfg_.mel_bins;
  result.mel.config = mel_cfg_;
  result.mel.data.assign(mel_t.values().begin(), mel_t.values().end());
  return result;
}

double t2t_reconstruction_accuracy(const Checkpoint& t2t_ckpt,
                                   const std::vector<ManifestEntry>& corpus,
                                   const Lexicon& lexicon) {
  check(t2t_ckpt.stage == "t2t", "accuracy: not a t2t checkpoint");
  const ordered_json j = ordered_json::parse(t2t_ckpt.config_json);
  ModelConfig mc = j.at("model").get<ModelConfig>();
  const Vocabulary vocab = Vocabulary::from_tokens(j.at("vocab").get<std::vector<std::string>>());

  ParameterSet ps;
  install_params(t2t_ckpt, ps, /*force_frozen=*/true);
  Rng rng(t2t_ckpt.seed);
  T2tModel model(ps, mc, rng);

  int64_t correct = 0, total = 0;
  for (const auto& e : corpus) {
    const PhonemeSequence tokens{text_to_phonemes(e.text, lexicon, vocab).ids};
    const std::vector<int> pred = T2tModel::greedy_ids(model.decode(model.encode(tokens)));
    for (size_t i = 0; i < tokens.ids.size(); ++i) {
      correct += pred[i] == tokens.ids[i] ? 1 : 0;
      ++total;
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(total);
}

}  // namespace adapitch
