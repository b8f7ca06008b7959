#include <benchmark/benchmark.h>

#include <cmath>

#include "adapitch/griffin_lim.hpp"
#include "adapitch/mel.hpp"
#include "adapitch/pitch.hpp"

using namespace adapitch;

namespace {

Waveform one_second_tone(float hz) {
  Waveform wave;
  wave.sample_rate = 22050;
  wave.samples.resize(22050);
  for (size_t i = 0; i < wave.samples.size(); ++i)
    wave.samples[i] =
        0.3f * std::sin(2.0f * static_cast<float>(M_PI) * hz * static_cast<float>(i) / 22050.0f);
  return wave;
}

void BM_MelSpectrogram(benchmark::State& state) {
  const Waveform wave = one_second_tone(220.0f);
  const MelConfig cfg;
  for (auto _ : state) {
    MelSpectrogram mel = mel_spectrogram(wave, cfg);
    benchmark::DoNotOptimize(mel.data.data());
  }
}
BENCHMARK(BM_MelSpectrogram);

void BM_EstimatePitch(benchmark::State& state) {
  const Waveform wave = one_second_tone(220.0f);
  const PitchConfig cfg;
  for (auto _ : state) {
    PitchContour contour = estimate_pitch(wave, cfg);
    benchmark::DoNotOptimize(contour.f0.data());
  }
}
BENCHMARK(BM_EstimatePitch);

void BM_GriffinLim(benchmark::State& state) {
  const Waveform wave = one_second_tone(220.0f);
  const MelConfig cfg;
  const MelSpectrogram mel = mel_spectrogram(wave, cfg);
  for (auto _ : state) {
    Waveform out = griffin_lim(mel, 30, 7);
    benchmark::DoNotOptimize(out.samples.data());
  }
}
BENCHMARK(BM_GriffinLim);

}  // namespace
