#include "adapitch/mel.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "adapitch/error.hpp"
#include "adapitch/fft.hpp"

namespace adapitch {

void MelConfig::validate() const {
  check(sample_rate > 0, "mel config: sample_rate must be positive");
  check(n_fft > 0 && (n_fft & (n_fft - 1)) == 0, "mel config: n_fft must be a power of two");
  check(hop > 0 && hop <= n_fft, "mel config: hop must be in (0, n_fft]");
  check(win_length > 0 && win_length <= n_fft, "mel config: window must be in (0, n_fft]");
  check(n_mels > 0, "mel config: n_mels must be positive");
  check(fmin >= 0.0f && fmin < fmax, "mel config: fmin must be in [0, fmax)");
  check(fmax <= static_cast<float>(sample_rate) / 2.0f,
        "mel config: fmax must not exceed the Nyquist frequency");
  check(log_floor > 0.0f, "mel config: log floor must be positive");
}

MelSpectrogram MelSpectrogram::head(int n) const {
  check(n >= 0 && n <= frames, "mel head: bad frame count");
  MelSpectrogram out;
  out.frames = n;
  out.bins = bins;
  out.config = config;
  out.data.assign(data.begin(), data.begin() + static_cast<size_t>(n) * bins);
  return out;
}

float hz_to_mel(float hz) { return 2595.0f * std::log10(1.0f + hz / 700.0f); }
float mel_to_hz(float mel) { return 700.0f * (std::pow(10.0f, mel / 2595.0f) - 1.0f); }

MelFilterbank MelFilterbank::build(const MelConfig& cfg) {
  cfg.validate();
  MelFilterbank fb;
  fb.n_mels = cfg.n_mels;
  fb.n_bins = cfg.n_fft / 2 + 1;
  fb.weights.assign(static_cast<size_t>(fb.n_mels) * fb.n_bins, 0.0f);
  fb.center_hz.resize(static_cast<size_t>(fb.n_mels));

  // n_mels + 2 breakpoints, equally spaced on the mel scale
  const float mel_lo = hz_to_mel(cfg.fmin);
  const float mel_hi = hz_to_mel(cfg.fmax);
  std::vector<float> edges(static_cast<size_t>(cfg.n_mels) + 2);
  for (size_t i = 0; i < edges.size(); ++i)
    edges[i] = mel_to_hz(mel_lo + (mel_hi - mel_lo) * static_cast<float>(i) /
                                      static_cast<float>(cfg.n_mels + 1));

  const float bin_hz = static_cast<float>(cfg.sample_rate) / static_cast<float>(cfg.n_fft);
  for (int m = 0; m < cfg.n_mels; ++m) {
    const float left = edges[static_cast<size_t>(m)];
    const float center = edges[static_cast<size_t>(m) + 1];
    const float right = edges[static_cast<size_t>(m) + 2];
    fb.center_hz[static_cast<size_t>(m)] = center;
    for (int b = 0; b < fb.n_bins; ++b) {
      const float f = bin_hz * static_cast<float>(b);
      float w = 0.0f;
      if (f > left && f < right)
        w = f <= center ? (f - left) / (center - left) : (right - f) / (right - center);
      fb.weights[static_cast<size_t>(m) * fb.n_bins + b] = w;
    }
  }
  return fb;
}

namespace {

// Mirror an index into [0, n) without repeating the edge sample.
size_t reflect_index(long long i, long long n) {
  if (n == 1) return 0;
  const long long period = 2 * (n - 1);
  long long j = i % period;
  if (j < 0) j += period;
  if (j >= n) j = period - j;
  return static_cast<size_t>(j);
}

std::vector<float> hann_window(int win_length, int n_fft) {
  std::vector<float> w(static_cast<size_t>(n_fft), 0.0f);
  const int off = (n_fft - win_length) / 2;
  for (int i = 0; i < win_length; ++i)
    w[static_cast<size_t>(off + i)] =
        0.5f - 0.5f * std::cos(2.0f * static_cast<float>(M_PI) * static_cast<float>(i) /
                               static_cast<float>(win_length));
  return w;
}

}  // namespace

std::vector<std::vector<float>> stft_magnitude(const std::vector<float>& samples,
                                               const MelConfig& cfg) {
  cfg.validate();
  check(!samples.empty(), "stft: empty signal");
  const int n = static_cast<int>(samples.size());
  const int pad = cfg.n_fft / 2;
  const int frames = 1 + n / cfg.hop;
  const std::vector<float> window = hann_window(cfg.win_length, cfg.n_fft);

  std::vector<std::vector<float>> mags(static_cast<size_t>(frames));
  std::vector<float> buf(static_cast<size_t>(cfg.n_fft));
  for (int f = 0; f < frames; ++f) {
    const long long start = static_cast<long long>(f) * cfg.hop - pad;
    for (int i = 0; i < cfg.n_fft; ++i)
      buf[static_cast<size_t>(i)] =
          samples[reflect_index(start + i, n)] * window[static_cast<size_t>(i)];
    auto spec = rfft(buf);
    auto& row = mags[static_cast<size_t>(f)];
    row.resize(spec.size());
    for (size_t b = 0; b < spec.size(); ++b) row[b] = std::abs(spec[b]);
  }
  return mags;
}

MelSpectrogram mel_spectrogram(const Waveform& wave, const MelConfig& cfg) {
  cfg.validate();
  check(wave.sample_rate == cfg.sample_rate,
        "mel: waveform sample rate " + std::to_string(wave.sample_rate) +
            " does not match config " + std::to_string(cfg.sample_rate));
  const auto mags = stft_magnitude(wave.samples, cfg);
  const MelFilterbank fb = MelFilterbank::build(cfg);

  MelSpectrogram mel;
  mel.frames = static_cast<int>(mags.size());
  mel.bins = cfg.n_mels;
  mel.config = cfg;
  mel.data.assign(static_cast<size_t>(mel.frames) * mel.bins, 0.0f);
  for (int f = 0; f < mel.frames; ++f) {
    const auto& mag = mags[static_cast<size_t>(f)];
    for (int m = 0; m < cfg.n_mels; ++m) {
      const float* w = fb.weights.data() + static_cast<size_t>(m) * fb.n_bins;
      float acc = 0.0f;
      for (int b = 0; b < fb.n_bins; ++b) acc += w[b] * mag[static_cast<size_t>(b)];
      mel.at(f, m) = std::log(std::fmax(cfg.log_floor, acc));
    }
  }
  return mel;
}

void save_mel(const MelSpectrogram& mel, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("mel: cannot write " + path);
  out.write("MELF", 4);
  const uint32_t fr = static_cast<uint32_t>(mel.frames);
  const uint32_t bn = static_cast<uint32_t>(mel.bins);
  out.write(reinterpret_cast<const char*>(&fr), 4);
  out.write(reinterpret_cast<const char*>(&bn), 4);
  out.write(reinterpret_cast<const char*>(mel.data.data()),
            static_cast<std::streamsize>(mel.data.size() * sizeof(float)));
  if (!out) throw IoError("mel: write failed for " + path);
}

MelSpectrogram load_mel(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("mel: cannot open " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "MELF", 4) != 0)
    throw ContractViolation("mel: not a MELF file: " + path);
  uint32_t fr = 0, bn = 0;
  in.read(reinterpret_cast<char*>(&fr), 4);
  in.read(reinterpret_cast<char*>(&bn), 4);
  if (!in) throw IoError("mel: truncated header in " + path);
  MelSpectrogram mel;
  mel.frames = static_cast<int>(fr);
  mel.bins = static_cast<int>(bn);
  mel.config.n_mels = mel.bins;
  mel.data.resize(static_cast<size_t>(fr) * bn);
  in.read(reinterpret_cast<char*>(mel.data.data()),
          static_cast<std::streamsize>(mel.data.size() * sizeof(float)));
  if (!in) throw IoError("mel: truncated data in " + path);
  return mel;
}

}  // namespace adapitch
