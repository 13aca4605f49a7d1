#pragma once

#include "m2a/common.hpp"
#include "m2a/matrix.hpp"
#include "m2a/stft.hpp"

#include <vector>

namespace m2a {

inline constexpr std::size_t kChromaClasses = 12;

/// Pitch class of a frequency, C = 0 convention (A440 -> 9).
inline int pitch_class(double hz)
{
  const int pc = static_cast<int>(std::lround(12.0 * std::log2(hz / 440.0))) + 9;
  return ((pc % 12) + 12) % 12;
}

/// Frames x 12 pitch-class energy profile; each frame max-normalized to [0,1],
/// all-zero frames left untouched.
inline Matrix chroma(const Waveform& x, const StftConfig& cfg)
{
  const Matrix power = power_spectrogram(stft(x, cfg));

  // bin -> pitch class map (DC excluded)
  std::vector<int> klass(power.cols(), -1);
  for (std::size_t k = 1; k < power.cols(); ++k) klass[k] = pitch_class(cfg.bin_hz(k));

  Matrix out(power.rows(), kChromaClasses);
  for (std::size_t t = 0; t < power.rows(); ++t) {
    for (std::size_t k = 1; k < power.cols(); ++k)
      out(t, static_cast<std::size_t>(klass[k])) += power(t, k);
    double peak = 0.0;
    for (std::size_t c = 0; c < kChromaClasses; ++c) peak = std::max(peak, out(t, c));
    if (peak > 0.0)
      for (std::size_t c = 0; c < kChromaClasses; ++c) out(t, c) /= peak;
  }
  return out;
}

} // namespace m2a
