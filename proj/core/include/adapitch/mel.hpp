#pragma once

#include <string>
#include <vector>

#include "adapitch/wav.hpp"

namespace adapitch {

struct MelConfig {
  int sample_rate = 22050;
  int n_fft = 1024;  // power of two
  int hop = 256;
  int win_length = 1024;
  int n_mels = 80;
  float fmin = 40.0f;
  float fmax = 7600.0f;
  float log_floor = 1e-5f;

  void validate() const;
};

// Log mel energies, frames x bins, natural log with a floor clamp.
struct MelSpectrogram {
  int frames = 0;
  int bins = 0;
  std::vector<float> data;  // row-major [frames, bins]
  MelConfig config;

  float at(int f, int b) const { return data[static_cast<size_t>(f) * bins + b]; }
  float& at(int f, int b) { return data[static_cast<size_t>(f) * bins + b]; }
  /// Copy of the first `n` frames.
  MelSpectrogram head(int n) const;
};

// Triangular filterbank on the HTK mel scale with unit-peak filters.
struct MelFilterbank {
  int n_mels = 0;
  int n_bins = 0;                // n_fft/2 + 1
  std::vector<float> weights;   // [n_mels, n_bins]
  std::vector<float> center_hz;  // per-filter center frequency

  static MelFilterbank build(const MelConfig& cfg);
};

float hz_to_mel(float hz);
float mel_to_hz(float mel);

/// Magnitude STFT with a periodic Hann window and center reflection padding;
/// frame count is 1 + floor(len/hop).
std::vector<std::vector<float>> stft_magnitude(const std::vector<float>& samples,
                                               const MelConfig& cfg);

MelSpectrogram mel_spectrogram(const Waveform& wave, const MelConfig& cfg);

// Binary mel file: magic "MELF", u32 frames, u32 bins, row-major float32.
void save_mel(const MelSpectrogram& mel, const std::string& path);
MelSpectrogram load_mel(const std::string& path);

}  // namespace adapitch
