#pragma once

#include <cstdint>
#include <vector>

#include "adapitch/wav.hpp"

namespace adapitch {

struct PitchContour {
  std::vector<float> f0;        // Hz; 0 where unvoiced
  std::vector<uint8_t> voiced;  // 1 = voiced
  int hop = 256;

  int frames() const { return static_cast<int>(f0.size()); }
};

struct PitchConfig {
  int sample_rate = 22050;
  int hop = 256;       // matches the mel hop so contours align frame-for-frame
  int window = 1024;   // YIN integration window
  float fmin = 50.0f;
  float fmax = 600.0f;
  // pYin-style candidate thresholds 0.05, 0.10, ..., 0.50 with a Beta(2,18)
  // prior; two-state voicing decode with this self-transition probability.
  float voiced_self_prob = 0.99f;
};

/// YIN cumulative-mean-normalized difference with parabolic interpolation,
/// multi-threshold candidate weighting, and a two-state voiced/unvoiced
/// dynamic-programming smoothing pass. Frame count is 1 + floor(len/hop).
PitchContour estimate_pitch(const Waveform& wave, const PitchConfig& cfg);

}  // namespace adapitch
