#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "adapitch/checkpoint.hpp"
#include "adapitch/toy_corpus.hpp"
#include "adapitch/trainer.hpp"

using namespace adapitch;

namespace {

std::string temp_dir(const std::string& name) {
  const auto path = std::filesystem::temp_directory_path() / ("adapitch_tr_" + name);
  std::filesystem::remove_all(path);
  std::filesystem::create_directories(path);
  return path.string();
}

struct ToyFixture {
  ToyCorpus corpus;
  Lexicon lexicon;
  ToyCorpusSpec spec;

  explicit ToyFixture(const std::string& name, int utts = 6, int speakers = 2,
                      uint64_t seed = 21) {
    spec.num_utterances = utts;
    spec.num_speakers = speakers;
    spec.seed = seed;
    corpus = generate_toy_corpus(spec, temp_dir(name));
    lexicon = Lexicon::load(corpus.lexicon_path);
  }
};

TrainConfig quick_config(int steps, uint64_t seed = 5) {
  TrainConfig cfg;
  cfg.max_steps = steps;
  cfg.batch_size = 4;
  cfg.seed = seed;
  cfg.model_preset = "toy";
  return cfg;
}

}  // namespace

TEST_SUITE_BEGIN("trainer");

TEST_CASE("stage-1 runners reject an empty corpus") {
  Lexicon lexicon;
  CHECK_THROWS_AS(run_stage1_t2t({}, lexicon, quick_config(1)), ContractViolation);
  CHECK_THROWS_AS(run_stage1_m2m({}, quick_config(1)), ContractViolation);
}

TEST_CASE("t2t pretraining is deterministic and its loss decreases") {
  ToyFixture fix("t2t_det");
  std::vector<float> first_run, second_run;
  auto capture = [](std::vector<float>& sink) {
    return [&sink](int, const StepRecord& r) { sink.push_back(r.back().second); };
  };
  const Checkpoint a =
      run_stage1_t2t(fix.corpus.entries, fix.lexicon, quick_config(30), capture(first_run));
  const Checkpoint b =
      run_stage1_t2t(fix.corpus.entries, fix.lexicon, quick_config(30), capture(second_run));
  REQUIRE(first_run.size() == 30);
  for (size_t i = 0; i < first_run.size(); ++i) CHECK(first_run[i] == second_run[i]);
  CHECK(first_run.back() < first_run.front());
  CHECK(a.stage == "t2t");
  CHECK(a.params.size() == b.params.size());
  for (const auto& [name, p] : a.params) CHECK(b.params.at(name).values == p.values);
}

TEST_CASE("m2m pretraining converges toward zero on a silence corpus") {
  const std::string dir = temp_dir("m2m_silence");
  std::vector<ManifestEntry> entries;
  for (int i = 0; i < 2; ++i) {
    Waveform silent;
    silent.sample_rate = 22050;
    silent.samples.assign(256 * 18, 0.0f);
    const std::string path = dir + "/s" + std::to_string(i) + ".wav";
    save_wav(silent, path);
    ManifestEntry e;
    e.id = "s" + std::to_string(i);
    e.audio = path;
    entries.push_back(e);
  }
  std::vector<float> losses;
  run_stage1_m2m(entries, quick_config(120),
                 [&losses](int, const StepRecord& r) { losses.push_back(r.back().second); });
  CHECK(losses.back() < losses.front());
  CHECK(losses.back() < 0.05f);
}

TEST_CASE("total loss composes the weighted terms and reports them") {
  ToyFixture fix("stage2_terms");
  TrainConfig cfg = quick_config(5);
  const Checkpoint t2t = run_stage1_t2t(fix.corpus.entries, fix.lexicon, quick_config(3));
  const Checkpoint m2m = run_stage1_m2m(fix.corpus.entries, quick_config(3));

  Stage2Trainer trainer(fix.corpus.entries, fix.lexicon, t2t, m2m, cfg);
  std::vector<int> indices(fix.corpus.entries.size());
  for (size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<int>(i);
  const PaddedBatch batch = make_padded_batch(trainer.items(), indices);

  LossTerms terms;
  Tensor total = trainer.total_loss(batch, &terms);
  const float sum = terms.weighted_syn + terms.weighted_reg + terms.weighted_ada +
                    terms.weighted_dur;
  CHECK(terms.total == doctest::Approx(sum).epsilon(1e-6));
  CHECK(total.item() == terms.total);
  CHECK(terms.syn > 0.0f);
  CHECK(terms.ada > 0.0f);

  // doubling gamma exactly doubles the gamma contribution
  TrainConfig cfg2 = cfg;
  cfg2.weights.gamma *= 2.0f;
  Stage2Trainer trainer2(fix.corpus.entries, fix.lexicon, t2t, m2m, cfg2);
  LossTerms terms2;
  trainer2.total_loss(batch, &terms2);
  CHECK(terms2.weighted_ada == doctest::Approx(2.0f * terms.weighted_ada).epsilon(1e-6));
  CHECK(terms2.ada == doctest::Approx(terms.ada).epsilon(1e-6));
}

TEST_CASE("weighted sum example: terms (1,2,3) at (1,0.1,0.1) give 1.5") {
  Tensor syn = Tensor::scalar(1.0f);
  Tensor reg = Tensor::scalar(2.0f);
  Tensor ada = Tensor::scalar(3.0f);
  CHECK(add_weighted({syn, reg, ada}, {1.0f, 0.1f, 0.1f}).item() ==
        doctest::Approx(1.5).epsilon(1e-6));
}

TEST_CASE("stage 2 trains only the supervised parts and keeps frozen groups byte-identical") {
  ToyFixture fix("stage2_freeze");
  const Checkpoint t2t = run_stage1_t2t(fix.corpus.entries, fix.lexicon, quick_config(3));
  const Checkpoint m2m = run_stage1_m2m(fix.corpus.entries, quick_config(3));
  Stage2Trainer trainer(fix.corpus.entries, fix.lexicon, t2t, m2m, quick_config(6));

  const uint64_t text_before = params_digest(trainer.params(), "t2t.");
  const uint64_t mel_before = params_digest(trainer.params(), "m2m.");
  const uint64_t va_before = params_digest(trainer.params(), "va.");
  trainer.train();
  CHECK(params_digest(trainer.params(), "t2t.") == text_before);
  CHECK(params_digest(trainer.params(), "m2m.") == mel_before);
  CHECK(params_digest(trainer.params(), "va.") != va_before);

  // the supervised parameter set contains no text decoder
  CHECK(trainer.params().names_with_prefix("t2t.decoder").empty());

  const Checkpoint out = trainer.checkpoint();
  CHECK(out.stage == "stage2");
  CHECK(out.params.at("t2t.embed.table").frozen);
  CHECK_FALSE(out.params.at("va.fc.w").frozen);
}

TEST_CASE("stage-2 losses are reproducible for a fixed seed") {
  ToyFixture fix("stage2_det");
  const Checkpoint t2t = run_stage1_t2t(fix.corpus.entries, fix.lexicon, quick_config(3));
  const Checkpoint m2m = run_stage1_m2m(fix.corpus.entries, quick_config(3));
  auto run = [&] {
    Stage2Trainer trainer(fix.corpus.entries, fix.lexicon, t2t, m2m, quick_config(8));
    std::vector<float> losses;
    trainer.train([&losses](int, const StepRecord& r) { losses.push_back(r.back().second); });
    return losses;
  };
  const auto a = run(), b = run();
  REQUIRE(a.size() == 8);
  for (size_t i = 0; i < a.size(); ++i) CHECK(a[i] == b[i]);
}

TEST_CASE("synthesis: frame contract, determinism, unknown speaker") {
  ToyFixture fix("synth");
  const Checkpoint t2t = run_stage1_t2t(fix.corpus.entries, fix.lexicon, quick_config(3));
  const Checkpoint m2m = run_stage1_m2m(fix.corpus.entries, quick_config(3));
  Stage2Trainer trainer(fix.corpus.entries, fix.lexicon, t2t, m2m, quick_config(5));
  trainer.train();
  const Checkpoint ckpt = trainer.checkpoint();

  const Synthesizer synth(ckpt);
  SynthesisRequest req;
  req.tokens = text_to_phonemes(fix.corpus.entries[0].text, fix.lexicon, synth.vocab());
  req.speaker = 0;
  const SynthesisResult out = synth.synthesize(req);
  int expect = 0;
  for (int d : out.durations) expect += d;
  CHECK(out.mel.frames == expect);
  CHECK(out.durations.size() == req.tokens.ids.size());

  const SynthesisResult again = synth.synthesize(req);
  CHECK(again.mel.data == out.mel.data);

  SynthesisRequest bad = req;
  bad.speaker = 99;
  CHECK_THROWS_AS(synth.synthesize(bad), ContractViolation);
  SynthesisRequest empty;
  empty.speaker = 0;
  CHECK_THROWS_AS(synth.synthesize(empty), ContractViolation);
}

TEST_CASE("synthesis runs with the text decoder and mel encoder stripped") {
  ToyFixture fix("synth_strip");
  const Checkpoint t2t = run_stage1_t2t(fix.corpus.entries, fix.lexicon, quick_config(3));
  const Checkpoint m2m = run_stage1_m2m(fix.corpus.entries, quick_config(3));
  Stage2Trainer trainer(fix.corpus.entries, fix.lexicon, t2t, m2m, quick_config(3));
  trainer.train();
  Checkpoint ckpt = trainer.checkpoint();

  for (auto it = ckpt.params.begin(); it != ckpt.params.end();) {
    if (it->first.rfind("m2m.encoder", 0) == 0 || it->first.rfind("t2t.decoder", 0) == 0)
      it = ckpt.params.erase(it);
    else
      ++it;
  }
  const Synthesizer synth(ckpt);
  SynthesisRequest req;
  req.tokens = text_to_phonemes(fix.corpus.entries[1].text, fix.lexicon, synth.vocab());
  req.speaker = 1;
  CHECK(synth.synthesize(req).mel.frames > 0);
}

TEST_CASE("pitch override rescales the fused contour") {
  ToyFixture fix("synth_pitch");
  const Checkpoint t2t = run_stage1_t2t(fix.corpus.entries, fix.lexicon, quick_config(3));
  const Checkpoint m2m = run_stage1_m2m(fix.corpus.entries, quick_config(3));
  Stage2Trainer trainer(fix.corpus.entries, fix.lexicon, t2t, m2m, quick_config(3));
  const Checkpoint ckpt = trainer.checkpoint();
  const Synthesizer synth(ckpt);

  SynthesisRequest req;
  req.tokens = text_to_phonemes(fix.corpus.entries[0].text, fix.lexicon, synth.vocab());
  req.speaker = 0;
  req.pitch_override = fix.corpus.true_f0[0];
  const SynthesisResult base = synth.synthesize(req);

  SynthesisRequest scaled = req;
  for (auto& hz : scaled.pitch_override) hz *= 1.2f;
  const SynthesisResult shifted = synth.synthesize(scaled);
  REQUIRE(base.log_f0.size() == shifted.log_f0.size());
  for (size_t f = 0; f < base.log_f0.size(); ++f)
    CHECK(shifted.log_f0[f] == doctest::Approx(base.log_f0[f] + std::log(1.2f)).epsilon(1e-4));
}

TEST_CASE("duration head overfits a small corpus to within one frame per token") {
  ToyFixture fix("dur_overfit", /*utts=*/5, /*speakers=*/1, /*seed=*/31);
  TrainConfig cfg = quick_config(3, 9);
  const Checkpoint t2t = run_stage1_t2t(fix.corpus.entries, fix.lexicon, cfg);
  const Checkpoint m2m = run_stage1_m2m(fix.corpus.entries, cfg);
  TrainConfig cfg2 = quick_config(400, 9);
  cfg2.lr = 5e-3f;
  Stage2Trainer trainer(fix.corpus.entries, fix.lexicon, t2t, m2m, cfg2);
  trainer.train();
  const Checkpoint ckpt = trainer.checkpoint();
  const Synthesizer synth(ckpt);

  double total_err = 0.0;
  int total_tokens = 0;
  for (const auto& e : fix.corpus.entries) {
    SynthesisRequest req;
    req.tokens = text_to_phonemes(e.text, fix.lexicon, synth.vocab());
    req.speaker = e.speaker;
    const SynthesisResult out = synth.synthesize(req);
    REQUIRE(out.durations.size() == e.durations.size());
    for (size_t i = 0; i < e.durations.size(); ++i) {
      total_err += std::fabs(static_cast<double>(out.durations[i]) - e.durations[i]);
      ++total_tokens;
    }
  }
  CHECK(total_err / total_tokens <= 1.0);
}

TEST_CASE("non-finite loss raises a divergence error") {
  CHECK_THROWS_AS(check_finite(std::nanf(""), 3), DivergenceError);
  CHECK_THROWS_AS(check_finite(std::numeric_limits<float>::infinity(), 3), DivergenceError);
  check_finite(1.25f, 3);

  ToyFixture fix("nan_param");
  const Checkpoint t2t = run_stage1_t2t(fix.corpus.entries, fix.lexicon, quick_config(2));
  Checkpoint m2m = run_stage1_m2m(fix.corpus.entries, quick_config(2));
  m2m.params.at("m2m.encoder.conv0.kernel").values[0] = std::nanf("");
  Stage2Trainer trainer(fix.corpus.entries, fix.lexicon, t2t, m2m, quick_config(2));
  CHECK_THROWS_AS(trainer.train(), DivergenceError);
}

TEST_SUITE_END();
