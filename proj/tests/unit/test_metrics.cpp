#include <doctest.h>

#include <cmath>

#include "adapitch/metrics.hpp"
#include "adapitch/rng.hpp"

using namespace adapitch;

namespace {

PitchContour contour_of(const std::vector<float>& f0) {
  PitchContour c;
  c.f0 = f0;
  c.voiced.resize(f0.size());
  for (size_t i = 0; i < f0.size(); ++i) c.voiced[i] = f0[i] > 0.0f ? 1 : 0;
  return c;
}

PitchComparison cmp_of(const std::vector<float>& ref, const std::vector<float>& hyp) {
  PitchComparison cmp;
  cmp.reference = contour_of(ref);
  cmp.hypothesis = contour_of(hyp);
  return cmp;
}

// Independent brute-force implementations, deliberately written in the most
// literal way possible.
struct Brute {
  static double gpe(const PitchComparison& c) {
    int used = 0, gross = 0;
    for (int f = 0; f < c.reference.frames(); ++f) {
      if (!c.reference.voiced[static_cast<size_t>(f)] ||
          !c.hypothesis.voiced[static_cast<size_t>(f)])
        continue;
      ++used;
      const double r = c.reference.f0[static_cast<size_t>(f)];
      const double h = c.hypothesis.f0[static_cast<size_t>(f)];
      if (std::fabs(h - r) / r > c.gpe_threshold) ++gross;
    }
    return 100.0 * gross / used;
  }
  static double fpe(const PitchComparison& c) {
    std::vector<double> cents;
    for (int f = 0; f < c.reference.frames(); ++f) {
      if (!c.reference.voiced[static_cast<size_t>(f)] ||
          !c.hypothesis.voiced[static_cast<size_t>(f)])
        continue;
      const double r = c.reference.f0[static_cast<size_t>(f)];
      const double h = c.hypothesis.f0[static_cast<size_t>(f)];
      if (std::fabs(h - r) / r > c.gpe_threshold) continue;
      cents.push_back(1200.0 * std::log2(h / r));
    }
    double mean = 0.0;
    for (double e : cents) mean += e;
    mean /= static_cast<double>(cents.size());
    double var = 0.0;
    for (double e : cents) var += (e - mean) * (e - mean);
    return std::sqrt(var / static_cast<double>(cents.size()));
  }
  static double pitch_mse(const PitchComparison& c) {
    int used = 0;
    double acc = 0.0;
    for (int f = 0; f < c.reference.frames(); ++f) {
      if (!c.reference.voiced[static_cast<size_t>(f)] ||
          !c.hypothesis.voiced[static_cast<size_t>(f)])
        continue;
      ++used;
      const double r = c.reference.f0[static_cast<size_t>(f)];
      const double h = c.hypothesis.f0[static_cast<size_t>(f)];
      acc += ((h - r) / r) * ((h - r) / r);
    }
    return 100.0 * acc / used;
  }
  static CepstraMatrix cepstra(const MelSpectrogram& mel, int order) {
    CepstraMatrix out;
    out.frames = mel.frames;
    out.order = order;
    out.data.assign(static_cast<size_t>(mel.frames) * order, 0.0);
    for (int f = 0; f < mel.frames; ++f)
      for (int k = 0; k < order; ++k) {
        double acc = 0.0;
        for (int b = 0; b < mel.bins; ++b)
          acc += static_cast<double>(mel.at(f, b)) *
                 std::cos(M_PI * k * (2.0 * b + 1.0) / (2.0 * mel.bins));
        const double s = k == 0 ? std::sqrt(1.0 / mel.bins) : std::sqrt(2.0 / mel.bins);
        out.data[static_cast<size_t>(f) * order + k] = s * acc;
      }
    return out;
  }
  static double mcd_none(const CepstraMatrix& a, const CepstraMatrix& b) {
    double acc = 0.0;
    for (int f = 0; f < a.frames; ++f) {
      double sq = 0.0;
      for (int k = 1; k < a.order; ++k) {
        const double d = a.at(f, k) - b.at(f, k);
        sq += d * d;
      }
      acc += (10.0 / std::log(10.0)) * std::sqrt(2.0 * sq);
    }
    return acc / a.frames;
  }
};

MelSpectrogram random_mel(int frames, int bins, Rng& rng) {
  MelSpectrogram mel;
  mel.frames = frames;
  mel.bins = bins;
  mel.config.n_mels = bins;
  mel.data.resize(static_cast<size_t>(frames) * bins);
  for (auto& v : mel.data) v = rng.uniform(-8.0f, 2.0f);
  return mel;
}

}  // namespace

TEST_SUITE_BEGIN("metrics");

TEST_CASE("gpe hand anchors") {
  CHECK(gpe_percent(cmp_of({100, 100}, {100, 100})) == doctest::Approx(0.0));
  // one of two frames exceeds 20%
  CHECK(gpe_percent(cmp_of({100, 100}, {100, 130})) == doctest::Approx(50.0));
  // 19% stays below threshold
  CHECK(gpe_percent(cmp_of({100}, {119})) == doctest::Approx(0.0));
  // no mutually voiced frames -> undefined
  CHECK_THROWS_AS(gpe_percent(cmp_of({0, 0}, {100, 100})), ContractViolation);
}

TEST_CASE("fpe hand anchors") {
  CHECK(fpe_cents(cmp_of({100, 100}, {100, 100})) == doctest::Approx(0.0));
  // errors [0, 1200*log2(1.01)] cents; population std is half their spread
  const double expect = 600.0 * std::log2(1.01);
  CHECK(fpe_cents(cmp_of({100, 100}, {100, 101})) == doctest::Approx(expect).epsilon(1e-9));
  CHECK(fpe_cents(cmp_of({100, 100}, {100, 101})) == doctest::Approx(8.613).epsilon(1e-4));
  // constant multiplicative offset has zero spread
  CHECK(fpe_cents(cmp_of({100, 150, 200}, {110, 165, 220})) == doctest::Approx(0.0));
}

TEST_CASE("pitch mse hand anchors") {
  CHECK(pitch_mse_percent(cmp_of({100}, {100})) == doctest::Approx(0.0));
  CHECK(pitch_mse_percent(cmp_of({100}, {110})) == doctest::Approx(1.0));
  CHECK(pitch_mse_percent(cmp_of({100, 100}, {110, 90})) == doctest::Approx(1.0));
}

TEST_CASE("pitch metrics are invariant to a common scale") {
  Rng rng(31);
  std::vector<float> ref(40), hyp(40);
  for (size_t i = 0; i < ref.size(); ++i) {
    ref[i] = rng.uniform(80.0f, 300.0f);
    hyp[i] = ref[i] * rng.uniform(0.9f, 1.1f);
  }
  const PitchComparison a = cmp_of(ref, hyp);
  std::vector<float> ref2 = ref, hyp2 = hyp;
  for (auto& v : ref2) v *= 3.0f;
  for (auto& v : hyp2) v *= 3.0f;
  const PitchComparison b = cmp_of(ref2, hyp2);
  CHECK(gpe_percent(a) == doctest::Approx(gpe_percent(b)).epsilon(1e-9));
  CHECK(fpe_cents(a) == doctest::Approx(fpe_cents(b)).epsilon(1e-6));
  CHECK(pitch_mse_percent(a) == doctest::Approx(pitch_mse_percent(b)).epsilon(1e-6));
}

TEST_CASE("mel cepstra: constant frame, shapes, dct oracle") {
  MelSpectrogram mel;
  mel.frames = 1;
  mel.bins = 16;
  mel.config.n_mels = 16;
  mel.data.assign(16, 2.5f);
  const CepstraMatrix c = mel_cepstra(mel, 8);
  CHECK(c.at(0, 0) != doctest::Approx(0.0));
  for (int k = 1; k < 8; ++k) CHECK(c.at(0, k) == doctest::Approx(0.0).epsilon(1e-9));

  Rng rng(32);
  const MelSpectrogram m2 = random_mel(20, 40, rng);
  const CepstraMatrix fast = mel_cepstra(m2, 13);
  CHECK(fast.frames == 20);
  CHECK(fast.order == 13);
  const CepstraMatrix slow = Brute::cepstra(m2, 13);
  for (size_t i = 0; i < fast.data.size(); ++i)
    CHECK(fast.data[i] == doctest::Approx(slow.data[i]).epsilon(1e-6));

  CHECK_THROWS_AS(mel_cepstra(m2, 41), ContractViolation);
}

TEST_CASE("mcd hand anchors") {
  CepstraMatrix a;
  a.frames = 1;
  a.order = 13;
  a.data.assign(13, 0.0);
  CepstraMatrix b = a;
  CHECK(mcd(a, b, McdAlign::kNone) == doctest::Approx(0.0));

  b.data[5] = 1.0;  // one retained coefficient differs by 1
  const double expect = 10.0 * std::sqrt(2.0) / std::log(10.0);
  CHECK(mcd(a, b, McdAlign::kNone) == doctest::Approx(expect).epsilon(1e-12));
  CHECK(mcd(a, b, McdAlign::kNone) == doctest::Approx(6.142).epsilon(1e-4));

  // c0 must be excluded
  CepstraMatrix c = a;
  c.data[0] = 42.0;
  CHECK(mcd(a, c, McdAlign::kNone) == doctest::Approx(0.0));
}

TEST_CASE("mcd dtw properties") {
  Rng rng(33);
  const MelSpectrogram mel = random_mel(12, 20, rng);
  const CepstraMatrix c = mel_cepstra(mel, 8);

  // duplicate one frame: a perfect alignment exists
  MelSpectrogram dup = mel;
  dup.frames = 13;
  dup.data.insert(dup.data.begin() + 5 * 20, mel.data.begin() + 5 * 20,
                  mel.data.begin() + 6 * 20);
  const CepstraMatrix cd = mel_cepstra(dup, 8);
  CHECK(mcd(c, cd, McdAlign::kDtw) == doctest::Approx(0.0).epsilon(1e-9));

  // equal frame counts: dtw never exceeds the unaligned distance
  for (int trial = 0; trial < 10; ++trial) {
    const CepstraMatrix x = mel_cepstra(random_mel(15, 20, rng), 8);
    const CepstraMatrix y = mel_cepstra(random_mel(15, 20, rng), 8);
    CHECK(mcd(x, y, McdAlign::kDtw) <= mcd(x, y, McdAlign::kNone) + 1e-12);
  }

  CepstraMatrix shorter;
  shorter.frames = 5;
  shorter.order = 8;
  shorter.data.assign(40, 0.0);
  CHECK_THROWS_AS(mcd(c, shorter, McdAlign::kNone), ContractViolation);
}

TEST_CASE("all four metrics match brute force on 100 random 50-frame cases") {
  Rng rng(34);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<float> ref(50), hyp(50);
    for (size_t i = 0; i < ref.size(); ++i) {
      const bool rv = rng.uniform() < 0.85f;
      const bool hv = rng.uniform() < 0.85f;
      ref[i] = rv ? rng.uniform(70.0f, 350.0f) : 0.0f;
      hyp[i] = hv ? ref[i] > 0 ? ref[i] * rng.uniform(0.7f, 1.3f) : rng.uniform(70.0f, 350.0f)
                  : 0.0f;
    }
    const PitchComparison cmp = cmp_of(ref, hyp);
    bool any = false, any_fine = false;
    for (size_t i = 0; i < ref.size(); ++i) {
      if (ref[i] > 0 && hyp[i] > 0) {
        any = true;
        if (std::fabs(hyp[i] - ref[i]) / ref[i] <= cmp.gpe_threshold) any_fine = true;
      }
    }
    if (!any || !any_fine) continue;
    CHECK(gpe_percent(cmp) == doctest::Approx(Brute::gpe(cmp)).epsilon(1e-9));
    CHECK(fpe_cents(cmp) == doctest::Approx(Brute::fpe(cmp)).epsilon(1e-9));
    CHECK(pitch_mse_percent(cmp) == doctest::Approx(Brute::pitch_mse(cmp)).epsilon(1e-9));

    const MelSpectrogram ma = random_mel(50, 24, rng);
    const MelSpectrogram mb = random_mel(50, 24, rng);
    CHECK(mcd(mel_cepstra(ma, 13), mel_cepstra(mb, 13), McdAlign::kNone) ==
          doctest::Approx(Brute::mcd_none(Brute::cepstra(ma, 13), Brute::cepstra(mb, 13)))
              .epsilon(1e-9));
  }
}

TEST_SUITE_END();
