#pragma once

#include "m2a/common.hpp"
#include "m2a/matrix.hpp"
#include "m2a/stft.hpp"

namespace m2a {

/// STFT view pairing per-bin amplitude (dB) with instantaneous frequency (Hz)
/// recovered from the frame-to-frame phase advance.
struct Rainbowgram {
  Matrix amplitude_db;
  Matrix inst_freq_hz;
  StftConfig config;
};

inline Rainbowgram rainbowgram(const Waveform& x, const StftConfig& cfg,
                               double magnitude_floor = 1e-5)
{
  if (cfg.hop >= cfg.window_length)
    throw InputError("rainbowgram: hop must be < window_length for phase tracking");
  const ComplexSpectrogram spec = stft(x, cfg);

  Rainbowgram out;
  out.config = cfg;
  out.amplitude_db = Matrix(spec.frames, spec.bins);
  out.inst_freq_hz = Matrix(spec.frames, spec.bins);

  const double nyquist = cfg.sample_rate / 2.0;
  for (std::size_t k = 0; k < spec.bins; ++k) {
    // expected per-hop phase advance for this bin
    const double expected =
        kTwoPi * static_cast<double>(cfg.hop) * static_cast<double>(k) /
        static_cast<double>(cfg.n_fft);
    const double bin_hz = cfg.bin_hz(k);
    double prev_phase = std::arg(spec.at(0, k));
    out.inst_freq_hz(0, k) = bin_hz;
    for (std::size_t t = 1; t < spec.frames; ++t) {
      const double phase = std::arg(spec.at(t, k));
      double dev = phase - prev_phase - expected;
      dev -= kTwoPi * std::round(dev / kTwoPi); // wrap to [-pi, pi]
      const double hz =
          bin_hz + dev * cfg.sample_rate / (kTwoPi * static_cast<double>(cfg.hop));
      out.inst_freq_hz(t, k) = std::clamp(hz, 0.0, nyquist);
      prev_phase = phase;
    }
  }
  for (std::size_t t = 0; t < spec.frames; ++t)
    for (std::size_t k = 0; k < spec.bins; ++k)
      out.amplitude_db(t, k) = 20.0 * std::log10(std::max(std::abs(spec.at(t, k)),
                                                          magnitude_floor));
  return out;
}

} // namespace m2a
