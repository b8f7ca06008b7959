#include "adapitch/pitch.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "adapitch/error.hpp"

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

struct FrameEstimate {
  float voiced_prob = 0.0f;
  float f0 = 0.0f;  // Hz; valid when voiced_prob > 0
};

}  // namespace

PitchContour estimate_pitch(const Waveform& wave, const PitchConfig& cfg) {
  check(!wave.samples.empty(), "estimate_pitch: empty signal");
  check(wave.sample_rate == cfg.sample_rate, "estimate_pitch: sample rate mismatch");
  check(cfg.fmax < static_cast<float>(cfg.sample_rate) / 2.0f,
        "estimate_pitch: fmax must be below the Nyquist frequency");
  check(cfg.fmin > 0.0f && cfg.fmin < cfg.fmax, "estimate_pitch: bad detector range");

  const int sr = cfg.sample_rate;
  const int w = cfg.window;
  const int tau_min = std::max(2, static_cast<int>(std::floor(static_cast<float>(sr) / cfg.fmax)));
  const int tau_max = static_cast<int>(std::ceil(static_cast<float>(sr) / cfg.fmin));
  const int n = static_cast<int>(wave.samples.size());
  const int frames = 1 + n / cfg.hop;

  // Threshold grid and Beta(2,18) prior, normalized over the grid.
  std::vector<float> thresholds, prior;
  for (int k = 1; k <= 10; ++k) thresholds.push_back(0.05f * static_cast<float>(k));
  float prior_sum = 0.0f;
  for (float s : thresholds) {
    const float p = s * std::pow(1.0f - s, 17.0f);
    prior.push_back(p);
    prior_sum += p;
  }
  for (float& p : prior) p /= prior_sum;

  const int pad_left = w / 2;
  std::vector<float> d(static_cast<size_t>(tau_max) + 1);
  std::vector<float> cmnd(static_cast<size_t>(tau_max) + 1);
  std::vector<float> frame(static_cast<size_t>(w + tau_max + 1));
  std::vector<FrameEstimate> est(static_cast<size_t>(frames));

  for (int f = 0; f < frames; ++f) {
    const long long base = static_cast<long long>(f) * cfg.hop - pad_left;
    for (int i = 0; i < w + tau_max + 1; ++i)
      frame[static_cast<size_t>(i)] = wave.samples[reflect_index(base + i, n)];

    // difference function and cumulative-mean normalization
    d[0] = 0.0f;
    cmnd[0] = 1.0f;
    float running = 0.0f;
    for (int tau = 1; tau <= tau_max; ++tau) {
      float acc = 0.0f;
      for (int i = 0; i < w; ++i) {
        const float diff = frame[static_cast<size_t>(i)] - frame[static_cast<size_t>(i + tau)];
        acc += diff * diff;
      }
      d[static_cast<size_t>(tau)] = acc;
      running += acc;
      cmnd[static_cast<size_t>(tau)] =
          running > 1e-12f ? acc * static_cast<float>(tau) / running : 1.0f;
    }

    // Multi-threshold candidate search: first dip under each threshold,
    // descended to its local minimum, then refined parabolically.
    std::map<int, float> weight_by_lag;
    float voiced_prob = 0.0f;
    for (size_t k = 0; k < thresholds.size(); ++k) {
      int tau = -1;
      for (int t = tau_min; t <= tau_max; ++t) {
        if (cmnd[static_cast<size_t>(t)] < thresholds[k]) {
          while (t + 1 <= tau_max &&
                 cmnd[static_cast<size_t>(t + 1)] < cmnd[static_cast<size_t>(t)])
            ++t;
          tau = t;
          break;
        }
      }
      if (tau < 0) continue;
      voiced_prob += prior[k];
      weight_by_lag[tau] += prior[k];
    }
    FrameEstimate& e = est[static_cast<size_t>(f)];
    e.voiced_prob = voiced_prob;
    if (!weight_by_lag.empty()) {
      int best_lag = weight_by_lag.begin()->first;
      float best_w = weight_by_lag.begin()->second;
      for (const auto& [lag, wt] : weight_by_lag)
        if (wt > best_w) {
          best_w = wt;
          best_lag = lag;
        }
      float refined = static_cast<float>(best_lag);
      if (best_lag > tau_min && best_lag < tau_max) {
        const float y0 = cmnd[static_cast<size_t>(best_lag - 1)];
        const float y1 = cmnd[static_cast<size_t>(best_lag)];
        const float y2 = cmnd[static_cast<size_t>(best_lag + 1)];
        const float denom = y0 - 2.0f * y1 + y2;
        if (std::fabs(denom) > 1e-12f) {
          float delta = 0.5f * (y0 - y2) / denom;
          delta = std::fmax(-1.0f, std::fmin(1.0f, delta));
          refined += delta;
        }
      }
      float f0 = static_cast<float>(sr) / refined;
      f0 = std::fmax(cfg.fmin, std::fmin(cfg.fmax, f0));
      e.f0 = f0;
    } else {
      e.voiced_prob = 0.0f;
    }
  }

  // Two-state Viterbi smoothing over voiced/unvoiced.
  const float p_stay = cfg.voiced_self_prob;
  const float log_stay = std::log(p_stay);
  const float log_switch = std::log(1.0f - p_stay);
  auto emis = [](float p) { return std::log(std::fmax(p, 1e-6f)); };
  std::vector<float> dp_u(static_cast<size_t>(frames)), dp_v(static_cast<size_t>(frames));
  std::vector<uint8_t> from_u(static_cast<size_t>(frames)), from_v(static_cast<size_t>(frames));
  dp_u[0] = emis(1.0f - est[0].voiced_prob);
  dp_v[0] = emis(est[0].voiced_prob);
  for (int f = 1; f < frames; ++f) {
    const size_t i = static_cast<size_t>(f);
    const float uu = dp_u[i - 1] + log_stay, vu = dp_v[i - 1] + log_switch;
    from_u[i] = uu >= vu ? 0 : 1;
    dp_u[i] = std::max(uu, vu) + emis(1.0f - est[i].voiced_prob);
    const float uv = dp_u[i - 1] + log_switch, vv = dp_v[i - 1] + log_stay;
    from_v[i] = uv > vv ? 0 : 1;
    dp_v[i] = std::max(uv, vv) + emis(est[i].voiced_prob);
  }

  PitchContour contour;
  contour.hop = cfg.hop;
  contour.f0.assign(static_cast<size_t>(frames), 0.0f);
  contour.voiced.assign(static_cast<size_t>(frames), 0);
  int state = dp_v[static_cast<size_t>(frames - 1)] > dp_u[static_cast<size_t>(frames - 1)] ? 1 : 0;
  for (int f = frames - 1; f >= 0; --f) {
    const size_t i = static_cast<size_t>(f);
    if (state == 1 && est[i].f0 > 0.0f) {
      contour.voiced[i] = 1;
      contour.f0[i] = est[i].f0;
    }
    if (f > 0) state = state == 1 ? from_v[i] : from_u[i];
  }
  return contour;
}

}  // namespace adapitch
