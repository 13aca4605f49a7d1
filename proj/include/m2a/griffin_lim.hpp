#pragma once

#include "m2a/common.hpp"
#include "m2a/stft.hpp"

#include <random>
#include <vector>

namespace m2a {

struct GriffinLimResult {
  Waveform waveform;
  /// Spectral-convergence error ||
  /// |STFT(x_i)| - mag ||_F / ||mag||_F after each iteration.
  std::vector<double> errors;
};

/// Classic alternating-projection phase reconstruction from an STFT magnitude.
/// Starts from seeded random phase unless initial_phase is given (test hook:
/// passing the true phase makes the first iterate a fixed point).
inline GriffinLimResult griffin_lim(const MagnitudeSpectrogram& mag, int iterations,
                                    std::uint32_t seed,
                                    const ComplexSpectrogram* initial_phase = nullptr,
                                    long long out_len = -1)
{
  if (iterations < 0) throw InputError("griffin_lim: iterations must be >= 0");
  const StftConfig& cfg = mag.config;
  cfg.validate();
  const std::size_t frames = mag.values.rows();
  const std::size_t bins = mag.values.cols();
  if (bins != cfg.n_fft / 2 + 1) throw InputError("griffin_lim: bin count mismatch");
  const std::size_t len = out_len >= 0
                              ? static_cast<std::size_t>(out_len)
                              : std::max<std::size_t>((frames > 0 ? frames - 1 : 0) * cfg.hop, 1);

  double mag_norm = 0.0;
  for (double v : mag.values.data()) mag_norm += v * v;
  mag_norm = std::sqrt(mag_norm);

  ComplexSpectrogram current;
  current.frames = frames;
  current.bins = bins;
  current.config = cfg;
  current.data.resize(frames * bins);
  if (initial_phase) {
    if (initial_phase->frames != frames || initial_phase->bins != bins)
      throw InputError("griffin_lim: initial phase shape mismatch");
    for (std::size_t i = 0; i < current.data.size(); ++i) {
      const std::complex<double> z = initial_phase->data[i];
      const double a = std::abs(z);
      current.data[i] = mag.values.data()[i] *
                        (a > 0.0 ? z / a : std::complex<double>(1.0, 0.0));
    }
  } else {
    std::mt19937 rng(seed);
    for (std::size_t i = 0; i < current.data.size(); ++i) {
      const double phi =
          kTwoPi * ((static_cast<double>(rng()) + 0.5) / 4294967296.0) - kPi;
      current.data[i] = std::polar(mag.values.data()[i], phi);
    }
  }

  GriffinLimResult result;
  result.errors.reserve(static_cast<std::size_t>(iterations));
  Waveform x;
  for (int it = 0; it < iterations; ++it) {
    x = istft(current, len);
    const ComplexSpectrogram analyzed = stft(x, cfg);
    double err = 0.0;
    for (std::size_t i = 0; i < analyzed.data.size(); ++i) {
      const double d = std::abs(analyzed.data[i]) - mag.values.data()[i];
      err += d * d;
    }
    result.errors.push_back(mag_norm > 0.0 ? std::sqrt(err) / mag_norm : 0.0);
    // project back onto the magnitude constraint, keeping the new phase
    for (std::size_t i = 0; i < current.data.size(); ++i) {
      const std::complex<double> z = analyzed.data[i];
      const double a = std::abs(z);
      current.data[i] = mag.values.data()[i] *
                        (a > 0.0 ? z / a : std::complex<double>(1.0, 0.0));
    }
  }
  result.waveform = istft(current, len);
  return result;
}

} // namespace m2a
