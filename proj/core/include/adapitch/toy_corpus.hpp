#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "adapitch/manifest.hpp"
#include "adapitch/mel.hpp"
#include "adapitch/text.hpp"

namespace adapitch {

// Desk-scale synthetic corpus with exact ground truth. Each utterance is a
// random phoneme sequence rendered as a harmonic tone: the harmonic amplitude
// profile encodes the phoneme identity, the spectral tilt encodes the
// speaker, and the per-phoneme fundamental lies in a speaker-specific range.
// Durations and the f0 contour are known exactly by construction, so every
// downstream stage can be verified against them.
struct ToyCorpusSpec {
  int num_utterances = 32;
  int num_speakers = 2;
  uint64_t seed = 7;
  int phoneme_vocab = 16;
  int min_tokens = 5;
  int max_tokens = 12;
  int min_duration = 5;   // frames per phoneme
  int max_duration = 20;
  MelConfig mel;  // sample rate and hop used for rendering

  void validate() const;
};

struct ToyCorpus {
  std::vector<ManifestEntry> entries;
  std::string manifest_path;
  std::string lexicon_path;
  /// Rendered per-frame f0 in Hz, one contour per utterance (all frames
  /// voiced); frame k covers samples [k*hop, (k+1)*hop).
  std::vector<std::vector<float>> true_f0;
};

/// Writes <out_dir>/wavs/*.wav, <out_dir>/f0/*.f0, manifest.jsonl and
/// lexicon.txt; byte-identical for identical spec.
ToyCorpus generate_toy_corpus(const ToyCorpusSpec& spec, const std::string& out_dir);

/// Plain-text contour file: one "<f0_hz>" line per frame, 0 for unvoiced.
std::vector<float> load_f0_file(const std::string& path);
void save_f0_file(const std::vector<float>& f0, const std::string& path);

}  // namespace adapitch
