#pragma once

#include <string>
#include <vector>

namespace adapitch {

struct Waveform {
  std::vector<float> samples;  // in [-1, 1]
  int sample_rate = 0;

  double duration_seconds() const {
    return sample_rate > 0 ? static_cast<double>(samples.size()) / sample_rate : 0.0;
  }
};

/// Reads a RIFF PCM 16-bit mono file; samples are scaled by 1/32768.
Waveform load_wav(const std::string& path);

/// Writes PCM 16-bit mono; samples are clipped to [-1, 1] before quantizing.
void save_wav(const Waveform& wave, const std::string& path);

}  // namespace adapitch
