#include "adapitch/griffin_lim.hpp"

#include <cmath>
#include <complex>

#include "adapitch/error.hpp"
#include "adapitch/fft.hpp"
#include "adapitch/rng.hpp"

namespace adapitch {

namespace {

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

using Spectro = std::vector<std::vector<std::complex<float>>>;  // [frames][bins]

Spectro stft_complex(const std::vector<float>& x, const MelConfig& cfg, int frames) {
  const int pad = cfg.n_fft / 2;
  const long long n = static_cast<long long>(x.size());
  const auto window = hann_window(cfg.win_length, cfg.n_fft);
  Spectro out(static_cast<size_t>(frames));
  std::vector<float> buf(static_cast<size_t>(cfg.n_fft));
  for (int f = 0; f < frames; ++f) {
    const long long start = static_cast<long long>(f) * cfg.hop - pad;
    for (int i = 0; i < cfg.n_fft; ++i)
      buf[static_cast<size_t>(i)] = x[reflect_index(start + i, n)] * window[static_cast<size_t>(i)];
    out[static_cast<size_t>(f)] = rfft(buf);
  }
  return out;
}

// Weighted overlap-add; returns frames*hop samples (the center-padded region).
std::vector<float> istft(const Spectro& spec, const MelConfig& cfg) {
  const int frames = static_cast<int>(spec.size());
  const int pad = cfg.n_fft / 2;
  const auto window = hann_window(cfg.win_length, cfg.n_fft);
  const int padded_len = (frames - 1) * cfg.hop + cfg.n_fft;
  std::vector<float> acc(static_cast<size_t>(padded_len), 0.0f);
  std::vector<float> norm(static_cast<size_t>(padded_len), 0.0f);
  for (int f = 0; f < frames; ++f) {
    const auto frame = irfft(spec[static_cast<size_t>(f)], cfg.n_fft);
    const int base = f * cfg.hop;
    for (int i = 0; i < cfg.n_fft; ++i) {
      acc[static_cast<size_t>(base + i)] += frame[static_cast<size_t>(i)] * window[static_cast<size_t>(i)];
      norm[static_cast<size_t>(base + i)] += window[static_cast<size_t>(i)] * window[static_cast<size_t>(i)];
    }
  }
  std::vector<float> out(static_cast<size_t>(frames) * cfg.hop, 0.0f);
  for (size_t t = 0; t < out.size(); ++t) {
    const size_t q = t + static_cast<size_t>(pad);
    if (q < acc.size() && norm[q] > 1e-9f) out[t] = acc[q] / norm[q];
  }
  return out;
}

// Right pseudo-inverse of the filterbank: P = M^T (M M^T + ridge I)^-1.
std::vector<float> filterbank_pinv(const MelFilterbank& fb) {
  const int m = fb.n_mels, nb = fb.n_bins;
  std::vector<double> gram(static_cast<size_t>(m) * m, 0.0);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      double acc = 0.0;
      for (int b = 0; b < nb; ++b)
        acc += static_cast<double>(fb.weights[static_cast<size_t>(i) * nb + b]) *
               static_cast<double>(fb.weights[static_cast<size_t>(j) * nb + b]);
      gram[static_cast<size_t>(i) * m + j] = acc;
    }
  for (int i = 0; i < m; ++i) gram[static_cast<size_t>(i) * m + i] += 1e-8;

  // Solve gram * X = M with Gaussian elimination (partial pivoting);
  // X is [m, nb], the pseudo-inverse is X^T.
  std::vector<double> rhs(static_cast<size_t>(m) * nb);
  for (int i = 0; i < m; ++i)
    for (int b = 0; b < nb; ++b)
      rhs[static_cast<size_t>(i) * nb + b] = fb.weights[static_cast<size_t>(i) * nb + b];
  for (int col = 0; col < m; ++col) {
    int piv = col;
    for (int r = col + 1; r < m; ++r)
      if (std::fabs(gram[static_cast<size_t>(r) * m + col]) >
          std::fabs(gram[static_cast<size_t>(piv) * m + col]))
        piv = r;
    if (piv != col) {
      for (int c = 0; c < m; ++c)
        std::swap(gram[static_cast<size_t>(col) * m + c], gram[static_cast<size_t>(piv) * m + c]);
      for (int b = 0; b < nb; ++b)
        std::swap(rhs[static_cast<size_t>(col) * nb + b], rhs[static_cast<size_t>(piv) * nb + b]);
    }
    const double d = gram[static_cast<size_t>(col) * m + col];
    check(std::fabs(d) > 1e-14, "griffin_lim: singular filterbank gram matrix");
    for (int r = 0; r < m; ++r) {
      if (r == col) continue;
      const double factor = gram[static_cast<size_t>(r) * m + col] / d;
      if (factor == 0.0) continue;
      for (int c = col; c < m; ++c)
        gram[static_cast<size_t>(r) * m + c] -= factor * gram[static_cast<size_t>(col) * m + c];
      for (int b = 0; b < nb; ++b)
        rhs[static_cast<size_t>(r) * nb + b] -= factor * rhs[static_cast<size_t>(col) * nb + b];
    }
  }
  std::vector<float> pinv(static_cast<size_t>(nb) * m);  // [nb, m]
  for (int i = 0; i < m; ++i) {
    const double d = gram[static_cast<size_t>(i) * m + i];
    for (int b = 0; b < nb; ++b)
      pinv[static_cast<size_t>(b) * m + i] = static_cast<float>(rhs[static_cast<size_t>(i) * nb + b] / d);
  }
  return pinv;
}

}  // namespace

Waveform griffin_lim(const MelSpectrogram& mel, int iterations, uint64_t seed) {
  check(iterations >= 1, "griffin_lim: iterations must be >= 1");
  check(mel.frames > 0 && mel.bins == mel.config.n_mels,
        "griffin_lim: mel matrix does not match its config");
  const MelConfig& cfg = mel.config;
  const MelFilterbank fb = MelFilterbank::build(cfg);
  const auto pinv = filterbank_pinv(fb);
  const int nb = fb.n_bins;

  // log mel -> linear mel -> linear magnitude (clamped to be non-negative)
  std::vector<float> mag(static_cast<size_t>(mel.frames) * nb, 0.0f);
  std::vector<float> linear_mel(static_cast<size_t>(mel.bins));
  for (int f = 0; f < mel.frames; ++f) {
    for (int m = 0; m < mel.bins; ++m) linear_mel[static_cast<size_t>(m)] = std::exp(mel.at(f, m));
    for (int b = 0; b < nb; ++b) {
      float acc = 0.0f;
      const float* prow = pinv.data() + static_cast<size_t>(b) * mel.bins;
      for (int m = 0; m < mel.bins; ++m) acc += prow[m] * linear_mel[static_cast<size_t>(m)];
      mag[static_cast<size_t>(f) * nb + b] = std::fmax(0.0f, acc);
    }
  }

  Rng rng(seed ^ 0x47726c6dULL);
  Spectro spec(static_cast<size_t>(mel.frames));
  for (int f = 0; f < mel.frames; ++f) {
    spec[static_cast<size_t>(f)].resize(static_cast<size_t>(nb));
    for (int b = 0; b < nb; ++b) {
      const float phase = rng.uniform(-static_cast<float>(M_PI), static_cast<float>(M_PI));
      const float a = mag[static_cast<size_t>(f) * nb + b];
      spec[static_cast<size_t>(f)][static_cast<size_t>(b)] =
          std::polar(a, phase);
    }
  }

  std::vector<float> x;
  for (int it = 0; it < iterations; ++it) {
    x = istft(spec, cfg);
    const Spectro est = stft_complex(x, cfg, mel.frames);
    for (int f = 0; f < mel.frames; ++f)
      for (int b = 0; b < nb; ++b) {
        const auto c = est[static_cast<size_t>(f)][static_cast<size_t>(b)];
        const float a = mag[static_cast<size_t>(f) * nb + b];
        const float norm = std::abs(c);
        spec[static_cast<size_t>(f)][static_cast<size_t>(b)] =
            norm > 1e-12f ? c * (a / norm) : std::complex<float>(a, 0.0f);
      }
  }
  x = istft(spec, cfg);

  Waveform wave;
  wave.sample_rate = cfg.sample_rate;
  wave.samples.resize(static_cast<size_t>(mel.frames) * cfg.hop);
  for (size_t i = 0; i < wave.samples.size(); ++i)
    wave.samples[i] = std::fmax(-1.0f, std::fmin(1.0f, x[i]));
  return wave;
}

}  // namespace adapitch
