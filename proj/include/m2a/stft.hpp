#pragma once

#include "m2a/common.hpp"
#include "m2a/fft.hpp"
#include "m2a/matrix.hpp"

#include <complex>
#include <vector>

namespace m2a {

enum class Window { kHann, kRectangular };

struct StftConfig {
  double sample_rate = 24000.0;
  std::size_t window_length = 2048;
  std::size_t hop = 288;
  std::size_t n_fft = 4096;
  Window window = Window::kHann;

  void validate() const
  {
    if (sample_rate <= 0.0) throw InputError("stft: sample_rate must be > 0");
    if (hop < 1) throw InputError("stft: hop must be >= 1");
    if (n_fft < window_length) throw InputError("stft: n_fft must be >= window_length");
    if (hop > window_length) throw InputError("stft: hop must be <= window_length");
    if (!is_power_of_two(n_fft)) throw InputError("stft: n_fft must be a power of two");
  }

  double bin_hz(std::size_t k) const
  {
    return static_cast<double>(k) * sample_rate / static_cast<double>(n_fft);
  }

  bool operator==(const StftConfig&) const = default;
};

/// Frames x (n_fft/2 + 1) complex STFT values.
struct ComplexSpectrogram {
  std::vector<std::complex<double>> data; // row-major
  std::size_t frames = 0;
  std::size_t bins = 0;
  StftConfig config;

  std::complex<double>& at(std::size_t t, std::size_t k) { return data[t * bins + k]; }
  std::complex<double> at(std::size_t t, std::size_t k) const { return data[t * bins + k]; }
};

/// Frames x (n_fft/2 + 1) non-negative magnitudes.
struct MagnitudeSpectrogram {
  Matrix values;
  StftConfig config;
};

namespace detail {

// Periodic Hann, w[j] = 0.5 - 0.5 cos(2 pi j / N).
inline std::vector<double> make_window(const StftConfig& cfg)
{
  std::vector<double> w(cfg.window_length, 1.0);
  if (cfg.window == Window::kHann) {
    for (std::size_t j = 0; j < cfg.window_length; ++j)
      w[j] = 0.5 - 0.5 * std::cos(kTwoPi * static_cast<double>(j) /
                                  static_cast<double>(cfg.window_length));
  }
  return w;
}

// Reflect-padded sample access; bounces at the ends so any pad width is safe.
inline double reflect_at(const Waveform& x, long long i)
{
  const long long n = static_cast<long long>(x.size());
  if (n == 1) return x[0];
  while (i < 0 || i >= n) {
    if (i < 0) i = -i;
    if (i >= n) i = 2 * (n - 1) - i;
  }
  return x[static_cast<std::size_t>(i)];
}

} // namespace detail

inline std::size_t stft_frame_count(std::size_t samples, const StftConfig& cfg)
{
  return 1 + samples / cfg.hop;
}

/// Centered, reflect-padded, windowed STFT; frame t starts at t*hop - window/2.
inline ComplexSpectrogram stft(const Waveform& x, const StftConfig& cfg)
{
  cfg.validate();
  if (x.empty()) throw InputError("stft: empty waveform");

  const auto win = detail::make_window(cfg);
  const long long half = static_cast<long long>(cfg.window_length) / 2;
  const std::size_t frames = stft_frame_count(x.size(), cfg);

  ComplexSpectrogram out;
  out.frames = frames;
  out.bins = cfg.n_fft / 2 + 1;
  out.config = cfg;
  out.data.resize(frames * out.bins);

  std::vector<double> frame(cfg.window_length);
  for (std::size_t t = 0; t < frames; ++t) {
    const long long start = static_cast<long long>(t * cfg.hop) - half;
    for (std::size_t j = 0; j < cfg.window_length; ++j)
      frame[j] = win[j] * detail::reflect_at(x, start + static_cast<long long>(j));
    auto spec = fft::real_forward(frame, cfg.n_fft);
    for (std::size_t k = 0; k < out.bins; ++k) out.at(t, k) = spec[k];
  }
  return out;
}

/// Overlap-add inverse with synthesis-window normalization. Returns out_len
/// samples aligned with the analysis origin.
inline Waveform istft(const ComplexSpectrogram& spec, std::size_t out_len)
{
  const StftConfig& cfg = spec.config;
  cfg.validate();
  const auto win = detail::make_window(cfg);
  const std::size_t half = cfg.window_length / 2;

  const std::size_t padded = out_len + 2 * half;
  std::vector<double> acc(padded, 0.0), den(padded, 0.0);

  std::vector<std::complex<double>> row(spec.bins);
  for (std::size_t t = 0; t < spec.frames; ++t) {
    for (std::size_t k = 0; k < spec.bins; ++k) row[k] = spec.at(t, k);
    const auto time = fft::real_inverse(row, cfg.n_fft);
    const std::size_t base = t * cfg.hop;
    for (std::size_t j = 0; j < cfg.window_length; ++j) {
      if (base + j >= padded) break;
      acc[base + j] += win[j] * time[j];
      den[base + j] += win[j] * win[j];
    }
  }

  Waveform out(out_len, 0.0);
  for (std::size_t i = 0; i < out_len; ++i) {
    const double d = den[half + i];
    out[i] = d > 1e-12 ? acc[half + i] / d : 0.0;
  }
  return out;
}

inline MagnitudeSpectrogram magnitude(const ComplexSpectrogram& spec)
{
  MagnitudeSpectrogram out;
  out.config = spec.config;
  out.values = Matrix(spec.frames, spec.bins);
  for (std::size_t t = 0; t < spec.frames; ++t)
    for (std::size_t k = 0; k < spec.bins; ++k) out.values(t, k) = std::abs(spec.at(t, k));
  return out;
}

inline Matrix power_spectrogram(const ComplexSpectrogram& spec)
{
  Matrix out(spec.frames, spec.bins);
  for (std::size_t t = 0; t < spec.frames; ++t)
    for (std::size_t k = 0; k < spec.bins; ++k) out(t, k) = std::norm(spec.at(t, k));
  return out;
}

} // namespace m2a
