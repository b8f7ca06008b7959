#pragma once

#include <cstdint>

#include "adapitch/mel.hpp"
#include "adapitch/wav.hpp"

namespace adapitch {

/// Phase reconstruction from a log mel spectrogram. The mel filterbank is
/// inverted by least squares with a non-negativity clamp, then the classic
/// iterate-STFT scheme recovers a phase. Deterministic for a fixed seed;
/// output length is frames * hop.
Waveform griffin_lim(const MelSpectrogram& mel, int iterations, uint64_t seed = 0);

}  // namespace adapitch
