#pragma once

#include <string>
#include <vector>

#include "adapitch/mel.hpp"
#include "adapitch/pitch.hpp"

namespace adapitch {

struct PitchComparison {
  PitchContour reference;
  PitchContour hypothesis;
  float gpe_threshold = 0.20f;  // relative error above this is a gross error

  void validate() const;  // equal frame counts and hops
};

// Pitch metrics are computed over frames voiced in both contours; metrics in
// double precision so oracle comparisons are meaningful at 1e-9.

/// Percentage of mutually voiced frames with |f_hyp - f_ref| / f_ref above
/// the threshold.
double gpe_percent(const PitchComparison& cmp);

/// Population standard deviation of 1200*log2(f_hyp/f_ref) in cents over the
/// mutually voiced frames without gross errors.
double fpe_cents(const PitchComparison& cmp);

/// Mean of ((f_hyp - f_ref)/f_ref)^2 * 100 over mutually voiced frames.
double pitch_mse_percent(const PitchComparison& cmp);

struct CepstraMatrix {
  int frames = 0;
  int order = 0;
  std::vector<double> data;  // [frames, order]

  double at(int f, int k) const { return data[static_cast<size_t>(f) * order + k]; }
};

/// Orthonormal type-II DCT of each log-mel frame, coefficients 0..order-1.
CepstraMatrix mel_cepstra(const MelSpectrogram& mel, int order = 13);

enum class McdAlign { kNone, kDtw };

/// Mean over aligned frame pairs of (10/ln 10) * sqrt(2 * sum_{d>=1} dc_d^2);
/// coefficient 0 is excluded. kNone requires equal frame counts; kDtw warps
/// with symmetric steps and averages over the alignment path.
double mcd(const CepstraMatrix& ref, const CepstraMatrix& hyp, McdAlign align);

// Per-pair evaluation record; metadata keys document the conventions
// (threshold, population std, excluded c0) in the emitted report.
struct MetricReport {
  double pitch_mse_percent = 0.0;
  double gpe_percent = 0.0;
  double fpe_cents = 0.0;
  double mcd = 0.0;
  int voiced_frames_used = 0;    // mutually voiced frames
  int fpe_frames_used = 0;       // after gross-error removal
  int mcd_frames = 0;
  bool has_pitch_metrics = false;
  bool has_mcd = false;
  float gpe_threshold = 0.20f;
  int mcd_order = 13;
  bool dtw = false;
};

}  // namespace adapitch
