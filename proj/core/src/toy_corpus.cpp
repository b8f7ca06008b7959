#include "adapitch/toy_corpus.hpp"

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "adapitch/error.hpp"
#include "adapitch/rng.hpp"
#include "adapitch/wav.hpp"

namespace adapitch {

namespace {

constexpr int kMaxHarmonics = 8;

std::string phoneme_symbol(int id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "ph%02d", id);
  return buf;
}

std::string word_symbol(int id) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "w%02d", id);
  return buf;
}

// Deterministic per-phoneme attributes, independent of the corpus RNG stream.
float phoneme_pitch_ratio(int ph) {
  const uint32_t h = static_cast<uint32_t>(ph) * 2654435761u;
  return 0.85f + 0.30f * static_cast<float>(h % 1000u) / 999.0f;
}

std::vector<float> phoneme_harmonic_profile(int ph) {
  Rng rng(1000003ull * static_cast<uint64_t>(ph) + 17);
  std::vector<float> amps(kMaxHarmonics);
  for (auto& a : amps) a = 0.3f + 0.7f * rng.uniform();
  return amps;
}

int phoneme_base_duration(int ph, int min_d, int max_d) {
  const int span = max_d - min_d;  // leave room for jitter of up to +2
  return min_d + static_cast<int>((static_cast<uint32_t>(ph) * 7919u) %
                                  static_cast<uint32_t>(span - 1));
}

float speaker_center_hz(int speaker) { return 130.0f + 35.0f * static_cast<float>(speaker % 8); }
float speaker_tilt(int speaker) { return 0.5f + 0.5f * static_cast<float>(speaker % 4) / 3.0f; }

}  // namespace

void ToyCorpusSpec::validate() const {
  check(num_utterances > 0, "toy corpus: num_utterances must be positive");
  check(num_speakers > 0, "toy corpus: num_speakers must be positive");
  check(phoneme_vocab > 0 && phoneme_vocab <= 100, "toy corpus: phoneme vocab must be in [1,100]");
  check(min_tokens >= 1 && min_tokens <= max_tokens, "toy corpus: bad token range");
  check(min_duration >= 1 && min_duration + 2 < max_duration, "toy corpus: bad duration range");
  mel.validate();
}

ToyCorpus generate_toy_corpus(const ToyCorpusSpec& spec, const std::string& out_dir) {
  spec.validate();
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(fs::path(out_dir) / "wavs", ec);
  fs::create_directories(fs::path(out_dir) / "f0", ec);
  if (ec) throw IoError("toy corpus: cannot create " + out_dir);

  const int sr = spec.mel.sample_rate;
  const int hop = spec.mel.hop;
  Rng rng(spec.seed);

  ToyCorpus corpus;
  for (int u = 0; u < spec.num_utterances; ++u) {
    char name[32];
    std::snprintf(name, sizeof(name), "u%04d", u);
    const int speaker = u % spec.num_speakers;
    const int n_tokens = rng.uniform_int(spec.min_tokens, spec.max_tokens);

    std::vector<int> phonemes(static_cast<size_t>(n_tokens));
    std::vector<int> durations(static_cast<size_t>(n_tokens));
    std::vector<float> f0s(static_cast<size_t>(n_tokens));
    for (int i = 0; i < n_tokens; ++i) {
      const int ph = rng.uniform_int(0, spec.phoneme_vocab - 1);
      phonemes[static_cast<size_t>(i)] = ph;
      durations[static_cast<size_t>(i)] =
          phoneme_base_duration(ph, spec.min_duration, spec.max_duration) + rng.uniform_int(0, 2);
      const float jitter = std::pow(2.0f, rng.uniform(-0.25f, 0.25f) / 12.0f);
      f0s[static_cast<size_t>(i)] = speaker_center_hz(speaker) * phoneme_pitch_ratio(ph) * jitter;
    }

    int total_frames = 0;
    for (int d : durations) total_frames += d;
    const int n_samples = total_frames * hop;

    // Harmonic rendering with per-harmonic phase continuity across segments.
    std::vector<float> samples(static_cast<size_t>(n_samples), 0.0f);
    std::vector<double> phase(kMaxHarmonics, 0.0);
    const float tilt = speaker_tilt(speaker);
    int cursor = 0;
    for (int i = 0; i < n_tokens; ++i) {
      const float f0 = f0s[static_cast<size_t>(i)];
      const auto profile = phoneme_harmonic_profile(phonemes[static_cast<size_t>(i)]);
      std::vector<float> amps(kMaxHarmonics, 0.0f);
      float norm = 0.0f;
      for (int h = 0; h < kMaxHarmonics; ++h) {
        const float fh = f0 * static_cast<float>(h + 1);
        if (fh < 0.45f * static_cast<float>(sr)) {
          amps[static_cast<size_t>(h)] =
              profile[static_cast<size_t>(h)] / std::pow(static_cast<float>(h + 1), tilt);
          norm += amps[static_cast<size_t>(h)];
        }
      }
      const int seg_samples = durations[static_cast<size_t>(i)] * hop;
      for (int s = 0; s < seg_samples; ++s, ++cursor) {
        float v = 0.0f;
        for (int h = 0; h < kMaxHarmonics; ++h) {
          if (amps[static_cast<size_t>(h)] == 0.0f) continue;
          phase[static_cast<size_t>(h)] +=
              2.0 * M_PI * static_cast<double>(f0) * (h + 1) / static_cast<double>(sr);
          v += amps[static_cast<size_t>(h)] / norm *
               static_cast<float>(std::sin(phase[static_cast<size_t>(h)]));
        }
        samples[static_cast<size_t>(cursor)] = 0.35f * v;
      }
    }
    // short edge fades against spectral splatter at the utterance boundary
    const int fade = std::min(128, n_samples / 4);
    for (int s = 0; s < fade; ++s) {
      const float g = static_cast<float>(s) / static_cast<float>(fade);
      samples[static_cast<size_t>(s)] *= g;
      samples[samples.size() - 1 - static_cast<size_t>(s)] *= g;
    }

    Waveform wave;
    wave.sample_rate = sr;
    wave.samples = std::move(samples);
    const std::string wav_path = (fs::path(out_dir) / "wavs" / (std::string(name) + ".wav")).string();
    save_wav(wave, wav_path);

    std::vector<float> contour(static_cast<size_t>(total_frames));
    int frame = 0;
    for (int i = 0; i < n_tokens; ++i)
      for (int d = 0; d < durations[static_cast<size_t>(i)]; ++d, ++frame)
        contour[static_cast<size_t>(frame)] = f0s[static_cast<size_t>(i)];
    const std::string f0_path = (fs::path(out_dir) / "f0" / (std::string(name) + ".f0")).string();
    save_f0_file(contour, f0_path);
    corpus.true_f0.push_back(std::move(contour));

    ManifestEntry entry;
    entry.id = name;
    entry.audio = wav_path;
    entry.speaker = speaker;
    entry.durations = durations;
    std::string text;
    for (int i = 0; i < n_tokens; ++i) {
      if (i) text += ' ';
      text += word_symbol(phonemes[static_cast<size_t>(i)]);
    }
    entry.text = text;
    corpus.entries.push_back(std::move(entry));
  }

  Lexicon lexicon;
  for (int ph = 0; ph < spec.phoneme_vocab; ++ph)
    lexicon.entries[word_symbol(ph)] = {phoneme_symbol(ph)};
  corpus.lexicon_path = (fs::path(out_dir) / "lexicon.txt").string();
  lexicon.save(corpus.lexicon_path);

  corpus.manifest_path = (fs::path(out_dir) / "manifest.jsonl").string();
  save_manifest(corpus.entries, corpus.manifest_path);
  return corpus;
}

std::vector<float> load_f0_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("f0: cannot open " + path);
  std::vector<float> f0;
  float v;
  while (in >> v) f0.push_back(v);
  return f0;
}

void save_f0_file(const std::vector<float>& f0, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("f0: cannot write " + path);
  char buf[40];
  for (float v : f0) {
    std::snprintf(buf, sizeof(buf), "%.4f\n", static_cast<double>(v));
    out << buf;
  }
  if (!out) throw IoError("f0: write failed for " + path);
}

}  // namespace adapitch
