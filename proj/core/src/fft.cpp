#include "adapitch/fft.hpp"

#include <cmath>

#include "adapitch/error.hpp"

namespace adapitch {

void fft_inplace(std::vector<std::complex<float>>& a, bool inverse) {
  const size_t n = a.size();
  check(n != 0 && (n & (n - 1)) == 0, "fft: size must be a power of two");

  // bit-reversal permutation
  for (size_t i = 1, j = 0; i < n; ++i) {
    size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  for (size_t len = 2; len <= n; len <<= 1) {
    const double ang = (inverse ? 2.0 : -2.0) * M_PI / static_cast<double>(len);
    const std::complex<double> wlen(std::cos(ang), std::sin(ang));
    for (size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (size_t j = 0; j < len / 2; ++j) {
        const std::complex<double> u(a[i + j]);
        const std::complex<double> v = std::complex<double>(a[i + j + len / 2]) * w;
        a[i + j] = std::complex<float>(u + v);
        a[i + j + len / 2] = std::complex<float>(u - v);
        w *= wlen;
      }
    }
  }
  if (inverse) {
    const float inv_n = 1.0f / static_cast<float>(n);
    for (auto& x : a) x *= inv_n;
  }
}

std::vector<std::complex<float>> rfft(const std::vector<float>& x) {
  std::vector<std::complex<float>> a(x.size());
  for (size_t i = 0; i < x.size(); ++i) a[i] = {x[i], 0.0f};
  fft_inplace(a, false);
  a.resize(x.size() / 2 + 1);
  return a;
}

std::vector<float> irfft(const std::vector<std::complex<float>>& spec, int n) {
  check(static_cast<int>(spec.size()) == n / 2 + 1, "irfft: bin count does not match n");
  std::vector<std::complex<float>> a(static_cast<size_t>(n));
  for (int i = 0; i <= n / 2; ++i) a[static_cast<size_t>(i)] = spec[static_cast<size_t>(i)];
  for (int i = n / 2 + 1; i < n; ++i)
    a[static_cast<size_t>(i)] = std::conj(spec[static_cast<size_t>(n - i)]);
  fft_inplace(a, true);
  std::vector<float> out(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] = a[static_cast<size_t>(i)].real();
  return out;
}

}  // namespace adapitch
