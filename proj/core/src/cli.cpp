#include "adapitch/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "adapitch/error.hpp"
#include "adapitch/griffin_lim.hpp"
#include "adapitch/metrics.hpp"
#include "adapitch/toy_corpus.hpp"
#include "adapitch/trainer.hpp"
#include "adapitch/wav.hpp"
#include "config_json.hpp"

namespace adapitch {

namespace {

using nlohmann::ordered_json;

constexpr uint64_t kDefaultSeed = 1234;

uint64_t default_seed() {
  if (const char* env = std::getenv("ADAPITCH_SEED")) {
    char* end = nullptr;
    const unsigned long long v = std::strtoull(env, &end, 10);
    if (end && *end == '\0') return static_cast<uint64_t>(v);
    throw ContractViolation("ADAPITCH_SEED is not an integer: " + std::string(env));
  }
  return kDefaultSeed;
}

struct CommonTrainFlags {
  std::string config_path;
  int steps = -1;
  int batch = -1;
  double lr = -1.0;
  uint64_t seed = 0;
  bool seed_given = false;
  std::string preset;
};

void add_train_flags(CLI::App* cmd, CommonTrainFlags& f) {
  cmd->add_option("--config", f.config_path, "JSON config file (flags override file values)");
  cmd->add_option("--steps", f.steps, "training steps");
  cmd->add_option("--batch", f.batch, "batch size");
  cmd->add_option("--lr", f.lr, "learning rate");
  cmd->add_option("--seed", f.seed, "RNG seed")->each([&f](const std::string&) {
    f.seed_given = true;
  });
  cmd->add_option("--preset", f.preset, "model size preset: toy | paper");
}

// defaults <- ADAPITCH_SEED <- config file <- explicit flags
TrainConfig resolve_train_config(const CommonTrainFlags& f, const CLI::App* cmd) {
  TrainConfig cfg;
  cfg.seed = default_seed();
  if (!f.config_path.empty()) {
    std::ifstream in(f.config_path);
    if (!in) throw IoError("config: cannot open " + f.config_path);
    ordered_json j;
    try {
      j = ordered_json::parse(in);
    } catch (const std::exception& e) {
      throw ContractViolation("config: invalid JSON in " + f.config_path + ": " + e.what());
    }
    cfg.max_steps = j.value("steps", cfg.max_steps);
    cfg.batch_size = j.value("batch", cfg.batch_size);
    cfg.lr = j.value("lr", cfg.lr);
    cfg.seed = j.value("seed", cfg.seed);
    cfg.model_preset = j.value("preset", cfg.model_preset);
    if (j.contains("weights")) cfg.weights = j["weights"].get<LossWeights>();
    if (j.contains("mel")) cfg.mel = j["mel"].get<MelConfig>();
    if (j.contains("pitch")) cfg.pitch = j["pitch"].get<PitchConfig>();
  }
  if (cmd->count("--steps")) cfg.max_steps = f.steps;
  if (cmd->count("--batch")) cfg.batch_size = f.batch;
  if (cmd->count("--lr")) cfg.lr = static_cast<float>(f.lr);
  if (f.seed_given) cfg.seed = f.seed;
  if (cmd->count("--preset")) cfg.model_preset = f.preset;
  check(cfg.max_steps >= 1, "config: steps must be >= 1");
  check(cfg.batch_size >= 1, "config: batch must be >= 1");
  cfg.pitch.sample_rate = cfg.mel.sample_rate;
  cfg.pitch.hop = cfg.mel.hop;
  return cfg;
}

ordered_json effective_config_json(const TrainConfig& cfg) {
  ordered_json j;
  j["seed"] = cfg.seed;
  j["preset"] = cfg.model_preset;
  j["steps"] = cfg.max_steps;
  j["batch"] = cfg.batch_size;
  j["lr"] = cfg.lr;
  j["weights"] = cfg.weights;
  j["mel"] = cfg.mel;
  j["pitch"] = cfg.pitch;
  return j;
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("write failed for " + path);
}

void require_file(const std::string& path, const std::string& flag) {
  if (!std::filesystem::exists(path))
    throw ContractViolation(flag + ": file does not exist: " + path);
}

std::ofstream open_metrics_log(const std::string& ckpt_path) {
  const std::string path = ckpt_path + ".log.jsonl";
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  return out;
}

StepLogger jsonl_logger(std::ofstream& out) {
  return [&out](int step, const StepRecord& record) {
    ordered_json j;
    j["step"] = step;
    for (const auto& [name, value] : record) j[name] = value;
    out << j.dump() << '\n';
  };
}

bool ends_with(const std::string& s, const std::string& suffix) {
  return s.size() >= suffix.size() && s.compare(s.size() - suffix.size(), suffix.size(), suffix) == 0;
}

// --- subcommand bodies ------------------------------------------------------

int cmd_gen_corpus(const std::string& out_dir, int utts, int speakers, int vocab,
                   uint64_t seed) {
  ToyCorpusSpec spec;
  spec.num_utterances = utts;
  spec.num_speakers = speakers;
  spec.phoneme_vocab = vocab;
  spec.seed = seed;
  const ToyCorpus corpus = generate_toy_corpus(spec, out_dir);
  ordered_json j;
  j["seed"] = seed;
  j["utts"] = utts;
  j["speakers"] = speakers;
  j["vocab"] = vocab;
  j["mel"] = spec.mel;
  write_text_file((std::filesystem::path(out_dir) / "effective_config.json").string(),
                  j.dump(2) + "\n");
  std::cout << "wrote " << corpus.entries.size() << " utterances to " << out_dir << "\n";
  return 0;
}

int cmd_pretrain_t2t(const std::string& manifest, const std::string& lexicon_path,
                     const std::string& out, const TrainConfig& cfg) {
  require_file(manifest, "--manifest");
  require_file(lexicon_path, "--lexicon");
  const auto entries = load_manifest(manifest);
  const Lexicon lexicon = Lexicon::load(lexicon_path);
  std::ofstream log = open_metrics_log(out);
  const Checkpoint ckpt = run_stage1_t2t(entries, lexicon, cfg, jsonl_logger(log));
  save_checkpoint(ckpt, out);
  write_text_file(out + ".config.json", effective_config_json(cfg).dump(2) + "\n");
  std::cout << "t2t checkpoint written to " << out << "\n";
  return 0;
}

int cmd_pretrain_m2m(const std::string& manifest, const std::string& out,
                     const TrainConfig& cfg) {
  require_file(manifest, "--manifest");
  const auto entries = load_manifest(manifest);
  std::ofstream log = open_metrics_log(out);
  const Checkpoint ckpt = run_stage1_m2m(entries, cfg, jsonl_logger(log));
  save_checkpoint(ckpt, out);
  write_text_file(out + ".config.json", effective_config_json(cfg).dump(2) + "\n");
  std::cout << "m2m checkpoint written to " << out << "\n";
  return 0;
}

int cmd_train(const std::string& manifest, const std::string& lexicon_path,
              const std::string& t2t_path, const std::string& m2m_path, const std::string& out,
              const TrainConfig& cfg) {
  require_file(manifest, "--manifest");
  require_file(lexicon_path, "--lexicon");
  require_file(t2t_path, "--t2t");
  require_file(m2m_path, "--m2m");
  const auto entries = load_manifest(manifest);
  const Lexicon lexicon = Lexicon::load(lexicon_path);
  Stage2Trainer trainer(entries, lexicon, load_checkpoint(t2t_path), load_checkpoint(m2m_path),
                        cfg);
  std::ofstream log = open_metrics_log(out);
  trainer.train(jsonl_logger(log));
  save_checkpoint(trainer.checkpoint(), out);
  write_text_file(out + ".config.json", effective_config_json(cfg).dump(2) + "\n");
  std::cout << "stage-2 checkpoint written to " << out << "\n";
  return 0;
}

int cmd_synth(const std::string& ckpt_path, const std::string& text, int speaker,
              const std::string& out, const std::string& pitch_path,
              const std::string& lexicon_path, const std::string& wav_path, int gl_iters,
              uint64_t seed) {
  require_file(ckpt_path, "--ckpt");
  const Synthesizer synth(load_checkpoint(ckpt_path));
  Lexicon lexicon;
  if (!lexicon_path.empty()) {
    require_file(lexicon_path, "--lexicon");
    lexicon = Lexicon::load(lexicon_path);
  }
  SynthesisRequest request;
  request.tokens = text_to_phonemes(text, lexicon, synth.vocab());
  request.speaker = speaker;
  if (!pitch_path.empty()) {
    require_file(pitch_path, "--pitch");
    request.pitch_override = load_f0_file(pitch_path);
  }
  const SynthesisResult result = synth.synthesize(request);
  save_mel(result.mel, out);
  if (!wav_path.empty()) save_wav(griffin_lim(result.mel, gl_iters, seed), wav_path);
  std::cout << result.mel.frames << " frames\n";
  return 0;
}

struct EvalInput {
  MelSpectrogram mel;
  bool has_pitch = false;
  PitchContour contour;
};

EvalInput load_eval_input(const std::string& path, const MelConfig& mel_cfg,
                          const PitchConfig& pitch_cfg) {
  EvalInput in;
  if (ends_with(path, ".wav")) {
    const Waveform wave = load_wav(path);
    MelConfig mc = mel_cfg;
    mc.sample_rate = wave.sample_rate;
    PitchConfig pc = pitch_cfg;
    pc.sample_rate = wave.sample_rate;
    in.mel = mel_spectrogram(wave, mc);
    in.contour = estimate_pitch(wave, pc);
    in.has_pitch = true;
  } else {
    in.mel = load_mel(path);
  }
  return in;
}

int cmd_eval(const std::string& ref_path, const std::string& hyp_path, bool dtw,
             const std::string& out, const std::string& plot_path) {
  require_file(ref_path, "--ref");
  require_file(hyp_path, "--hyp");
  const MelConfig mel_cfg;
  const PitchConfig pitch_cfg;
  EvalInput ref = load_eval_input(ref_path, mel_cfg, pitch_cfg);
  EvalInput hyp = load_eval_input(hyp_path, mel_cfg, pitch_cfg);

  if (ref.mel.frames != hyp.mel.frames && !dtw)
    throw ContractViolation("eval: frame counts disagree (" + std::to_string(ref.mel.frames) +
                            " vs " + std::to_string(hyp.mel.frames) +
                            "); pass --dtw to align");

  MetricReport report;
  report.dtw = dtw;
  const int order = std::min(report.mcd_order, std::min(ref.mel.bins, hyp.mel.bins));
  report.mcd_order = order;
  report.mcd = mcd(mel_cepstra(ref.mel, order), mel_cepstra(hyp.mel, order),
                   dtw ? McdAlign::kDtw : McdAlign::kNone);
  report.has_mcd = true;
  report.mcd_frames = ref.mel.frames;

  std::string pitch_note;
  if (ref.has_pitch && hyp.has_pitch) {
    PitchComparison cmp;
    cmp.reference = ref.contour;
    cmp.hypothesis = hyp.contour;
    // unequal lengths (possible only under --dtw) are truncated to the prefix
    const int frames = std::min(cmp.reference.frames(), cmp.hypothesis.frames());
    cmp.reference.f0.resize(static_cast<size_t>(frames));
    cmp.reference.voiced.resize(static_cast<size_t>(frames));
    cmp.hypothesis.f0.resize(static_cast<size_t>(frames));
    cmp.hypothesis.voiced.resize(static_cast<size_t>(frames));
    report.gpe_threshold = cmp.gpe_threshold;
    try {
      report.pitch_mse_percent = pitch_mse_percent(cmp);
      report.gpe_percent = gpe_percent(cmp);
      report.fpe_cents = fpe_cents(cmp);
      report.has_pitch_metrics = true;
      int voiced = 0, fpe_frames = 0;
      for (int f = 0; f < frames; ++f) {
        if (!cmp.reference.voiced[static_cast<size_t>(f)] ||
            !cmp.hypothesis.voiced[static_cast<size_t>(f)])
          continue;
        ++voiced;
        const double rel = std::fabs(cmp.hypothesis.f0[static_cast<size_t>(f)] -
                                     cmp.reference.f0[static_cast<size_t>(f)]) /
                           cmp.reference.f0[static_cast<size_t>(f)];
        if (rel <= cmp.gpe_threshold) ++fpe_frames;
      }
      report.voiced_frames_used = voiced;
      report.fpe_frames_used = fpe_frames;
    } catch (const ContractViolation& e) {
      pitch_note = e.what();
    }
    if (!plot_path.empty()) {
      std::ofstream plot(plot_path);
      if (!plot) throw IoError("cannot write " + plot_path);
      char buf[64];
      for (int f = 0; f < frames; ++f) {
        std::snprintf(buf, sizeof(buf), "%.4f %.4f\n",
                      static_cast<double>(cmp.reference.f0[static_cast<size_t>(f)]),
                      static_cast<double>(cmp.hypothesis.f0[static_cast<size_t>(f)]));
        plot << buf;
      }
    }
  } else if (!plot_path.empty()) {
    throw ContractViolation("--plot-data requires two WAV inputs");
  }

  ordered_json j;
  j["ref"] = ref_path;
  j["hyp"] = hyp_path;
  j["mcd"] = report.mcd;
  j["mcd_frames"] = report.mcd_frames;
  if (report.has_pitch_metrics) {
    j["pitch_mse_percent"] = report.pitch_mse_percent;
    j["gpe_percent"] = report.gpe_percent;
    j["fpe_cents"] = report.fpe_cents;
    j["voiced_frames_used"] = report.voiced_frames_used;
    j["fpe_frames_used"] = report.fpe_frames_used;
  } else if (!pitch_note.empty()) {
    j["pitch_metrics_unavailable"] = pitch_note;
  }
  j["metadata"] = {{"gpe_threshold", report.gpe_threshold},
                   {"fpe", "population standard deviation, cents"},
                   {"pitch_mse", "mean squared relative error x 100, mutually voiced frames"},
                   {"mcd_order", report.mcd_order},
                   {"mcd_c0_excluded", true},
                   {"align", dtw ? "dtw" : "none"}};
  const std::string text = j.dump(2) + "\n";
  if (out.empty()) {
    std::cout << text;
  } else {
    write_text_file(out, text);
  }
  return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv) {
  CLI::App app{"Adapitch: pitch-disentangled multi-speaker TTS, desk scale"};
  app.require_subcommand(1);

  // gen-corpus
  auto* gen = app.add_subcommand("gen-corpus", "generate the synthetic toy corpus");
  std::string gen_out;
  int gen_utts = 32, gen_speakers = 2, gen_vocab = 16;
  uint64_t gen_seed = 0;
  bool gen_seed_given = false;
  gen->add_option("--out", gen_out, "output directory")->required();
  gen->add_option("--utts", gen_utts, "number of utterances");
  gen->add_option("--speakers", gen_speakers, "number of speakers");
  gen->add_option("--vocab", gen_vocab, "phoneme vocabulary size");
  gen->add_option("--seed", gen_seed, "RNG seed")->each([&gen_seed_given](const std::string&) {
    gen_seed_given = true;
  });

  // pretrain-t2t
  auto* pt2t = app.add_subcommand("pretrain-t2t", "self-supervised text-to-text pretraining");
  std::string pt2t_manifest, pt2t_lexicon, pt2t_out;
  CommonTrainFlags pt2t_flags;
  pt2t->add_option("--manifest", pt2t_manifest, "manifest (text required)")->required();
  pt2t->add_option("--lexicon", pt2t_lexicon, "lexicon file")->required();
  pt2t->add_option("--out", pt2t_out, "output checkpoint path")->required();
  add_train_flags(pt2t, pt2t_flags);

  // pretrain-m2m
  auto* pm2m = app.add_subcommand("pretrain-m2m", "self-supervised mel-to-mel pretraining");
  std::string pm2m_manifest, pm2m_out;
  CommonTrainFlags pm2m_flags;
  pm2m->add_option("--manifest", pm2m_manifest, "manifest (audio required)")->required();
  pm2m->add_option("--out", pm2m_out, "output checkpoint path")->required();
  add_train_flags(pm2m, pm2m_flags);

  // train
  auto* train = app.add_subcommand("train", "supervised stage-2 training");
  std::string tr_manifest, tr_lexicon, tr_t2t, tr_m2m, tr_out;
  CommonTrainFlags tr_flags;
  double tr_alpha = -1, tr_beta = -1, tr_gamma = -1, tr_durw = -1;
  train->add_option("--manifest", tr_manifest, "manifest (audio+text+speaker+durations)")
      ->required();
  train->add_option("--lexicon", tr_lexicon, "lexicon file")->required();
  train->add_option("--t2t", tr_t2t, "t2t checkpoint")->required();
  train->add_option("--m2m", tr_m2m, "m2m checkpoint")->required();
  train->add_option("--out", tr_out, "output checkpoint path")->required();
  train->add_option("--alpha", tr_alpha, "synthesis loss weight");
  train->add_option("--beta", tr_beta, "regression loss weight");
  train->add_option("--gamma", tr_gamma, "adaptation loss weight");
  train->add_option("--dur-weight", tr_durw, "auxiliary duration loss weight");
  add_train_flags(train, tr_flags);

  // synth
  auto* synth = app.add_subcommand("synth", "synthesize a mel (and optionally a wav)");
  std::string sy_ckpt, sy_text, sy_out, sy_pitch, sy_lexicon, sy_wav;
  int sy_speaker = 0, sy_gl_iters = 60;
  uint64_t sy_seed = 0;
  bool sy_seed_given = false;
  synth->add_option("--ckpt", sy_ckpt, "stage-2 checkpoint")->required();
  synth->add_option("--text", sy_text, "input text")->required();
  synth->add_option("--speaker", sy_speaker, "speaker id")->required();
  synth->add_option("--out", sy_out, "output mel file")->required();
  synth->add_option("--pitch", sy_pitch, "f0 contour file overriding predicted pitch");
  synth->add_option("--lexicon", sy_lexicon, "lexicon for tokenization");
  synth->add_option("--wav", sy_wav, "also render audio via Griffin-Lim");
  synth->add_option("--gl-iters", sy_gl_iters, "Griffin-Lim iterations");
  synth->add_option("--seed", sy_seed, "phase seed")->each([&sy_seed_given](const std::string&) {
    sy_seed_given = true;
  });

  // eval
  auto* eval = app.add_subcommand("eval", "objective metrics between two wav/mel files");
  std::string ev_ref, ev_hyp, ev_out, ev_plot;
  bool ev_dtw = false;
  eval->add_option("--ref", ev_ref, "reference wav or mel")->required();
  eval->add_option("--hyp", ev_hyp, "hypothesis wav or mel")->required();
  eval->add_flag("--dtw", ev_dtw, "align with dynamic time warping");
  eval->add_option("--out", ev_out, "report path (stdout when omitted)");
  eval->add_option("--plot-data", ev_plot, "per-frame two-column pitch table");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }

  try {
    if (gen->parsed())
      return cmd_gen_corpus(gen_out, gen_utts, gen_speakers, gen_vocab,
                            gen_seed_given ? gen_seed : default_seed());
    if (pt2t->parsed())
      return cmd_pretrain_t2t(pt2t_manifest, pt2t_lexicon, pt2t_out,
                              resolve_train_config(pt2t_flags, pt2t));
    if (pm2m->parsed())
      return cmd_pretrain_m2m(pm2m_manifest, pm2m_out, resolve_train_config(pm2m_flags, pm2m));
    if (train->parsed()) {
      TrainConfig cfg = resolve_train_config(tr_flags, train);
      if (train->count("--alpha")) cfg.weights.alpha = static_cast<float>(tr_alpha);
      if (train->count("--beta")) cfg.weights.beta = static_cast<float>(tr_beta);
      if (train->count("--gamma")) cfg.weights.gamma = static_cast<float>(tr_gamma);
      if (train->count("--dur-weight")) cfg.weights.duration = static_cast<float>(tr_durw);
      return cmd_train(tr_manifest, tr_lexicon, tr_t2t, tr_m2m, tr_out, cfg);
    }
    if (synth->parsed())
      return cmd_synth(sy_ckpt, sy_text, sy_speaker, sy_out, sy_pitch, sy_lexicon, sy_wav,
                       sy_gl_iters, sy_seed_given ? sy_seed : default_seed());
    if (eval->parsed()) return cmd_eval(ev_ref, ev_hyp, ev_dtw, ev_out, ev_plot);
  } catch (const DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const ContractViolation& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 2;
}

}  // namespace adapitch
