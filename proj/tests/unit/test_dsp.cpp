#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "adapitch/griffin_lim.hpp"
#include "adapitch/mel.hpp"
#include "adapitch/pitch.hpp"
#include "adapitch/text.hpp"
#include "adapitch/wav.hpp"

using namespace adapitch;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("adapitch_test_" + name)).string();
}

Waveform sine(float hz, float seconds = 1.0f, int sr = 22050, float amp = 0.3f) {
  Waveform wave;
  wave.sample_rate = sr;
  wave.samples.resize(static_cast<size_t>(seconds * static_cast<float>(sr)));
  for (size_t i = 0; i < wave.samples.size(); ++i)
    wave.samples[i] =
        amp * std::sin(2.0f * static_cast<float>(M_PI) * hz * static_cast<float>(i) /
                       static_cast<float>(sr));
  return wave;
}

int nearest_center_bin(const MelFilterbank& fb, float hz) {
  int best = 0;
  float best_d = std::fabs(fb.center_hz[0] - hz);
  for (int m = 1; m < fb.n_mels; ++m) {
    const float d = std::fabs(fb.center_hz[static_cast<size_t>(m)] - hz);
    if (d < best_d) {
      best_d = d;
      best = m;
    }
  }
  return best;
}

int frame_argmax(const MelSpectrogram& mel, int frame) {
  int best = 0;
  for (int m = 1; m < mel.bins; ++m)
    if (mel.at(frame, m) > mel.at(frame, best)) best = m;
  return best;
}

}  // namespace

TEST_SUITE_BEGIN("dsp");

TEST_CASE("wav io round trip and scaling convention") {
  const std::string path = temp_path("roundtrip.wav");
  Waveform zeros;
  zeros.sample_rate = 22050;
  zeros.samples.assign(22050, 0.0f);
  save_wav(zeros, path);
  const Waveform loaded = load_wav(path);
  CHECK(loaded.sample_rate == 22050);
  CHECK(loaded.samples.size() == 22050);
  for (float s : loaded.samples) CHECK(s == doctest::Approx(0.0));

  // sample value 16384 -> 0.5 under the 1/32768 convention
  {
    std::ofstream out(temp_path("half.wav"), std::ios::binary);
    auto u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto u16 = [&](uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
    out.write("RIFF", 4);
    u32(36 + 2);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    u32(16);
    u16(1);
    u16(1);
    u32(22050);
    u32(44100);
    u16(2);
    u16(16);
    out.write("data", 4);
    u32(2);
    u16(16384);
  }
  const Waveform half = load_wav(temp_path("half.wav"));
  CHECK(half.samples.size() == 1);
  CHECK(half.samples[0] == doctest::Approx(0.5));

  CHECK_THROWS_AS(load_wav(temp_path("does_not_exist.wav")), IoError);
}

TEST_CASE("stereo input is an unsupported encoding") {
  const std::string path = temp_path("stereo.wav");
  {
    std::ofstream out(path, std::ios::binary);
    auto u32 = [&](uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); };
    auto u16 = [&](uint16_t v) { out.write(reinterpret_cast<const char*>(&v), 2); };
    out.write("RIFF", 4);
    u32(36 + 8);
    out.write("WAVE", 4);
    out.write("fmt ", 4);
    u32(16);
    u16(1);
    u16(2);  // stereo
    u32(22050);
    u32(22050 * 4);
    u16(4);
    u16(16);
    out.write("data", 4);
    u32(8);
    u32(0);
    u32(0);
  }
  CHECK_THROWS_AS(load_wav(path), ContractViolation);
}

TEST_CASE("mel frame count follows 1 + floor(len/hop)") {
  MelConfig cfg;
  Waveform wave;
  wave.sample_rate = cfg.sample_rate;
  wave.samples.assign(1024, 0.0f);
  CHECK(mel_spectrogram(wave, cfg).frames == 5);  // 1 + 1024/256

  wave.samples.assign(1, 0.0f);
  CHECK(mel_spectrogram(wave, cfg).frames == 1);
}

TEST_CASE("silence maps every cell to the log floor") {
  MelConfig cfg;
  Waveform wave;
  wave.sample_rate = cfg.sample_rate;
  wave.samples.assign(4096, 0.0f);
  const MelSpectrogram mel = mel_spectrogram(wave, cfg);
  const float floor_log = std::log(cfg.log_floor);
  for (float v : mel.data) CHECK(v == doctest::Approx(floor_log));
}

TEST_CASE("a 440 Hz tone peaks at the filter centered nearest 440 Hz") {
  MelConfig cfg;
  const MelFilterbank fb = MelFilterbank::build(cfg);
  const int expect = nearest_center_bin(fb, 440.0f);
  const MelSpectrogram mel = mel_spectrogram(sine(440.0f), cfg);
  for (int f = 2; f < mel.frames - 2; ++f) CHECK(frame_argmax(mel, f) == expect);
}

TEST_CASE("mel energies are monotone under amplitude scaling") {
  MelConfig cfg;
  const Waveform quiet = sine(200.0f, 0.25f, 22050, 0.2f);
  Waveform loud = quiet;
  for (auto& s : loud.samples) s *= 2.0f;
  const MelSpectrogram a = mel_spectrogram(quiet, cfg);
  const MelSpectrogram b = mel_spectrogram(loud, cfg);
  for (size_t i = 0; i < a.data.size(); ++i) CHECK(b.data[i] >= a.data[i] - 1e-6f);
}

TEST_CASE("mel config invariants are enforced") {
  MelConfig cfg;
  cfg.hop = cfg.n_fft + 1;
  CHECK_THROWS_AS(cfg.validate(), ContractViolation);
  cfg = MelConfig{};
  cfg.fmin = 8000.0f;
  CHECK_THROWS_AS(cfg.validate(), ContractViolation);
  cfg = MelConfig{};
  cfg.log_floor = 0.0f;
  CHECK_THROWS_AS(cfg.validate(), ContractViolation);
}

TEST_CASE("mel file round trip") {
  MelConfig cfg;
  const MelSpectrogram mel = mel_spectrogram(sine(330.0f, 0.3f), cfg);
  const std::string path = temp_path("mel.melf");
  save_mel(mel, path);
  const MelSpectrogram loaded = load_mel(path);
  CHECK(loaded.frames == mel.frames);
  CHECK(loaded.bins == mel.bins);
  for (size_t i = 0; i < mel.data.size(); ++i) CHECK(loaded.data[i] == mel.data[i]);
}

TEST_CASE("pitch estimation recovers pure tones within 1 percent") {
  for (float hz : {110.0f, 220.0f, 440.0f}) {
    const PitchConfig cfg;
    const PitchContour contour = estimate_pitch(sine(hz), cfg);
    double err = 0.0;
    int voiced = 0;
    for (int f = 4; f < contour.frames() - 4; ++f) {
      if (!contour.voiced[static_cast<size_t>(f)]) continue;
      err += std::fabs(contour.f0[static_cast<size_t>(f)] - hz) / hz;
      ++voiced;
    }
    INFO("hz=" << hz);
    CHECK(voiced > contour.frames() / 2);
    CHECK(err / voiced <= 0.01);
  }
}

TEST_CASE("digital silence is fully unvoiced") {
  Waveform wave;
  wave.sample_rate = 22050;
  wave.samples.assign(22050 / 2, 0.0f);
  const PitchContour contour = estimate_pitch(wave, PitchConfig{});
  for (int f = 0; f < contour.frames(); ++f) {
    CHECK(contour.voiced[static_cast<size_t>(f)] == 0);
    CHECK(contour.f0[static_cast<size_t>(f)] == 0.0f);
  }
}

TEST_CASE("pitch and mel analyses agree on frame counts") {
  MelConfig mel_cfg;
  PitchConfig pitch_cfg;
  const Waveform wave = sine(172.0f, 0.37f);
  CHECK(mel_spectrogram(wave, mel_cfg).frames == estimate_pitch(wave, pitch_cfg).frames());
}

TEST_CASE("pitch contour shifts by one frame when the signal is delayed one hop") {
  const PitchConfig cfg;
  const Waveform wave = sine(196.0f, 0.5f);
  Waveform delayed;
  delayed.sample_rate = wave.sample_rate;
  delayed.samples.assign(static_cast<size_t>(cfg.hop), 0.0f);
  delayed.samples.insert(delayed.samples.end(), wave.samples.begin(), wave.samples.end());
  const PitchContour a = estimate_pitch(wave, cfg);
  const PitchContour b = estimate_pitch(delayed, cfg);
  for (int f = 6; f < a.frames() - 6; ++f) {
    if (!a.voiced[static_cast<size_t>(f)] || !b.voiced[static_cast<size_t>(f + 1)]) continue;
    CHECK(b.f0[static_cast<size_t>(f + 1)] ==
          doctest::Approx(a.f0[static_cast<size_t>(f)]).epsilon(0.01));
  }
}

TEST_CASE("empty signal is rejected") {
  Waveform wave;
  wave.sample_rate = 22050;
  CHECK_THROWS_AS(estimate_pitch(wave, PitchConfig{}), ContractViolation);
}

TEST_CASE("tokenization follows the lexicon with character fallback") {
  const std::string lex_path = temp_path("lexicon.txt");
  {
    std::ofstream out(lex_path);
    out << "# comment line\n";
    out << "hi\tHH AY\n";
  }
  const Lexicon lexicon = Lexicon::load(lex_path);
  const Vocabulary vocab = Vocabulary::build(lexicon);

  const PhonemeSequence hi = text_to_phonemes("hi", lexicon, vocab);
  REQUIRE(hi.ids.size() == 2);
  CHECK(hi.ids[0] == vocab.id("HH"));
  CHECK(hi.ids[1] == vocab.id("AY"));

  const PhonemeSequence ab = text_to_phonemes("ab", lexicon, vocab);
  REQUIRE(ab.ids.size() == 2);
  CHECK(ab.ids[0] == vocab.id("a"));
  CHECK(ab.ids[1] == vocab.id("b"));

  // unmapped character becomes UNK
  const PhonemeSequence weird = text_to_phonemes("~", lexicon, vocab);
  CHECK(weird.ids[0] == Vocabulary::kUnk);

  CHECK_THROWS_AS(text_to_phonemes("   ", lexicon, vocab), ContractViolation);

  const PhonemeSequence again = text_to_phonemes("hi ab", lexicon, vocab);
  const PhonemeSequence again2 = text_to_phonemes("hi ab", lexicon, vocab);
  CHECK(again.ids == again2.ids);
}

TEST_CASE("griffin-lim silence, length contract and self-consistency") {
  MelConfig cfg;
  MelSpectrogram silent;
  silent.frames = 10;
  silent.bins = cfg.n_mels;
  silent.config = cfg;
  silent.data.assign(static_cast<size_t>(silent.frames) * silent.bins, std::log(cfg.log_floor));
  const Waveform quiet = griffin_lim(silent, 4, 7);
  CHECK(quiet.samples.size() == static_cast<size_t>(10 * cfg.hop));
  float peak = 0.0f;
  for (float s : quiet.samples) peak = std::fmax(peak, std::fabs(s));
  CHECK(peak <= 1e-2f);

  // round trip keeps the dominant mel bin in at least 90% of frames
  const MelSpectrogram ref = mel_spectrogram(sine(330.0f, 0.5f), cfg);
  const Waveform rebuilt = griffin_lim(ref, 50, 7);
  const MelSpectrogram hyp = mel_spectrogram(rebuilt, cfg);
  REQUIRE(hyp.frames == ref.frames);
  int match = 0;
  for (int f = 0; f < ref.frames; ++f)
    if (frame_argmax(ref, f) == frame_argmax(hyp, f)) ++match;
  CHECK(static_cast<double>(match) / ref.frames >= 0.9);

  CHECK_THROWS_AS(griffin_lim(silent, 0, 7), ContractViolation);

  // deterministic for a fixed phase seed
  const Waveform again = griffin_lim(ref, 8, 123);
  const Waveform again2 = griffin_lim(ref, 8, 123);
  CHECK(again.samples == again2.samples);
}

TEST_SUITE_END();
