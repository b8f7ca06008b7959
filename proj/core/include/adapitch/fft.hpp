#pragma once

#include <complex>
#include <vector>

namespace adapitch {

/// In-place iterative radix-2 FFT; size must be a power of two.
void fft_inplace(std::vector<std::complex<float>>& a, bool inverse);

/// Real-input FFT returning the n/2+1 non-negative-frequency bins.
std::vector<std::complex<float>> rfft(const std::vector<float>& x);

/// Inverse of rfft for a real signal of length n (n = 2 * (bins - 1)).
std::vector<float> irfft(const std::vector<std::complex<float>>& spec, int n);

}  // namespace adapitch
