#include "adapitch/metrics.hpp"

#include <cmath>

#include "adapitch/error.hpp"

namespace adapitch {

void PitchComparison::validate() const {
  check(reference.frames() == hypothesis.frames(),
        "pitch comparison: frame counts disagree (" + std::to_string(reference.frames()) +
            " vs " + std::to_string(hypothesis.frames()) + ")");
  check(reference.hop == hypothesis.hop, "pitch comparison: hops disagree");
  check(gpe_threshold > 0.0f, "pitch comparison: threshold must be positive");
}

namespace {

std::vector<int> mutually_voiced(const PitchComparison& cmp) {
  std::vector<int> frames;
  for (int f = 0; f < cmp.reference.frames(); ++f)
    if (cmp.reference.voiced[static_cast<size_t>(f)] &&
        cmp.hypothesis.voiced[static_cast<size_t>(f)])
      frames.push_back(f);
  return frames;
}

}  // namespace

double gpe_percent(const PitchComparison& cmp) {
  cmp.validate();
  const auto frames = mutually_voiced(cmp);
  check(!frames.empty(), "gpe: no mutually voiced frames, metric undefined");
  int gross = 0;
  for (int f : frames) {
    const double ref = cmp.reference.f0[static_cast<size_t>(f)];
    const double hyp = cmp.hypothesis.f0[static_cast<size_t>(f)];
    if (std::fabs(hyp - ref) / ref > static_cast<double>(cmp.gpe_threshold)) ++gross;
  }
  return 100.0 * static_cast<double>(gross) / static_cast<double>(frames.size());
}

double fpe_cents(const PitchComparison& cmp) {
  cmp.validate();
  const auto frames = mutually_voiced(cmp);
  std::vector<double> errors;
  for (int f : frames) {
    const double ref = cmp.reference.f0[static_cast<size_t>(f)];
    const double hyp = cmp.hypothesis.f0[static_cast<size_t>(f)];
    if (std::fabs(hyp - ref) / ref > static_cast<double>(cmp.gpe_threshold)) continue;
    errors.push_back(1200.0 * std::log2(hyp / ref));
  }
  check(!errors.empty(), "fpe: no voiced frames without gross errors, metric undefined");
  double mean = 0.0;
  for (double e : errors) mean += e;
  mean /= static_cast<double>(errors.size());
  double var = 0.0;
  for (double e : errors) var += (e - mean) * (e - mean);
  var /= static_cast<double>(errors.size());  // population standard deviation
  return std::sqrt(var);
}

double pitch_mse_percent(const PitchComparison& cmp) {
  cmp.validate();
  const auto frames = mutually_voiced(cmp);
  check(!frames.empty(), "pitch_mse: no mutually voiced frames, metric undefined");
  double acc = 0.0;
  for (int f : frames) {
    const double ref = cmp.reference.f0[static_cast<size_t>(f)];
    const double hyp = cmp.hypothesis.f0[static_cast<size_t>(f)];
    const double rel = (hyp - ref) / ref;
    acc += rel * rel;
  }
  return 100.0 * acc / static_cast<double>(frames.size());
}

CepstraMatrix mel_cepstra(const MelSpectrogram& mel, int order) {
  check(order >= 1 && order <= mel.bins,
        "mel_cepstra: order must be in [1, " + std::to_string(mel.bins) + "]");
  CepstraMatrix out;
  out.frames = mel.frames;
  out.order = order;
  out.data.assign(static_cast<size_t>(mel.frames) * order, 0.0);
  const int n = mel.bins;
  const double s0 = std::sqrt(1.0 / n);
  const double sk = std::sqrt(2.0 / n);
  for (int f = 0; f < mel.frames; ++f)
    for (int k = 0; k < order; ++k) {
      double acc = 0.0;
      for (int b = 0; b < n; ++b)
        acc += static_cast<double>(mel.at(f, b)) *
               std::cos(M_PI * (2.0 * b + 1.0) * k / (2.0 * n));
      out.data[static_cast<size_t>(f) * order + k] = acc * (k == 0 ? s0 : sk);
    }
  return out;
}

namespace {

double frame_distance(const CepstraMatrix& a, int fa, const CepstraMatrix& b, int fb) {
  double acc = 0.0;
  for (int k = 1; k < a.order; ++k) {
    const double d = a.at(fa, k) - b.at(fb, k);
    acc += d * d;
  }
  return (10.0 / std::log(10.0)) * std::sqrt(2.0 * acc);
}

}  // namespace

double mcd(const CepstraMatrix& ref, const CepstraMatrix& hyp, McdAlign align) {
  check(ref.order == hyp.order, "mcd: cepstral orders disagree");
  check(ref.order >= 2, "mcd: order must be at least 2 (c0 is excluded)");
  check(ref.frames >= 1 && hyp.frames >= 1, "mcd: empty cepstra");

  if (align == McdAlign::kNone) {
    check(ref.frames == hyp.frames,
          "mcd: frame counts disagree (" + std::to_string(ref.frames) + " vs " +
              std::to_string(hyp.frames) + "); use dtw alignment");
    double acc = 0.0;
    for (int f = 0; f < ref.frames; ++f) acc += frame_distance(ref, f, hyp, f);
    return acc / static_cast<double>(ref.frames);
  }

  // DTW with steps (i-1,j-1), (i-1,j), (j-1,i); cost = mean distance over the
  // alignment path, so a perfect alignment of duplicated frames scores 0.
  const int n = ref.frames, m = hyp.frames;
  const double inf = 1e300;
  std::vector<double> cost(static_cast<size_t>(n) * m, inf);
  std::vector<int> len(static_cast<size_t>(n) * m, 0);
  auto idx = [m](int i, int j) { return static_cast<size_t>(i) * m + j; };
  cost[idx(0, 0)] = frame_distance(ref, 0, hyp, 0);
  len[idx(0, 0)] = 1;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) {
      if (i == 0 && j == 0) continue;
      const double d = frame_distance(ref, i, hyp, j);
      double best = inf;
      int blen = 0;
      if (i > 0 && j > 0 && cost[idx(i - 1, j - 1)] < best) {
        best = cost[idx(i - 1, j - 1)];
        blen = len[idx(i - 1, j - 1)];
      }
      if (i > 0 && cost[idx(i - 1, j)] < best) {
        best = cost[idx(i - 1, j)];
        blen = len[idx(i - 1, j)];
      }
      if (j > 0 && cost[idx(i, j - 1)] < best) {
        best = cost[idx(i, j - 1)];
        blen = len[idx(i, j - 1)];
      }
      cost[idx(i, j)] = best + d;
      len[idx(i, j)] = blen + 1;
    }
  return cost[idx(n - 1, m - 1)] / static_cast<double>(len[idx(n - 1, m - 1)]);
}

}  // namespace adapitch
