#pragma once

#include "m2a/common.hpp"
#include "m2a/filterbank.hpp"
#include "m2a/stft.hpp"

#include <random>
#include <vector>

namespace m2a {

namespace detail {

/// Largest eigenvalue of A A^T via power iteration on the 128 x 128 Gram
/// matrix of the filterbank rows. Deterministic.
inline double filterbank_gram_norm(const MidiFilterbank& fb)
{
  const std::size_t n = kMidiNotes;
  std::vector<double> gram(n * n, 0.0);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      const auto& ra = fb.rows[a];
      const auto& rb = fb.rows[b];
      const std::size_t lo = std::max(ra.first_bin, rb.first_bin);
      const std::size_t hi = std::min(ra.first_bin + ra.weights.size(),
                                      rb.first_bin + rb.weights.size());
      double dot = 0.0;
      for (std::size_t k = lo; k < hi; ++k)
        dot += ra.weights[k - ra.first_bin] * rb.weights[k - rb.first_bin];
      gram[a * n + b] = gram[b * n + a] = dot;
    }
  }
  std::vector<double> v(n, 1.0), w(n);
  double lambda = 0.0;
  for (int it = 0; it < 100; ++it) {
    for (std::size_t a = 0; a < n; ++a) {
      double s = 0.0;
      for (std::size_t b = 0; b < n; ++b) s += gram[a * n + b] * v[b];
      w[a] = s;
    }
    double norm = 0.0;
    for (double x : w) norm += x * x;
    norm = std::sqrt(norm);
    if (norm == 0.0) return 0.0;
    lambda = norm;
    for (std::size_t a = 0; a < n; ++a) v[a] = w[a] / norm;
  }
  return lambda;
}

} // namespace detail

/// Per-frame non-negative least squares: recover a bin-power envelope x with
/// fb x ~ 10^values, by projected gradient with ridge regularization. Rows in
/// zero_filter_indices are ignored. Returns sqrt(x) as magnitudes.
inline MagnitudeSpectrogram invert_filterbank(const MidiSpectrogram& spec,
                                              const MidiFilterbank& fb, int iterations = 200,
                                              double ridge = 1e-4)
{
  if (spec.values.cols() != kMidiNotes)
    throw InputError("invert_filterbank: spectrogram must have 128 dims");
  if (fb.n_fft != spec.config.n_fft || fb.sample_rate != spec.config.sample_rate)
    throw InputError("invert_filterbank: filterbank built for a different config");

  const std::size_t bins = fb.bins();
  const std::size_t frames = spec.values.rows();

  // step size 1/L with L >= sigma_max(A)^2 + ridge (5% safety margin)
  const double lipschitz = detail::filterbank_gram_norm(fb) * 1.05 + ridge;
  const double step = lipschitz > 0.0 ? 1.0 / lipschitz : 0.0;

  MagnitudeSpectrogram out;
  out.config = spec.config;
  out.values = Matrix(frames, bins);

  std::vector<double> x(bins), grad(bins), residual(kMidiNotes), target(kMidiNotes);
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t m = 0; m < kMidiNotes; ++m)
      target[m] = fb.rows[m].weights.empty() ? 0.0 : std::pow(10.0, spec.values(t, m));
    std::fill(x.begin(), x.end(), 0.0);

    for (int it = 0; it < iterations; ++it) {
      // residual = A x - target (zero rows contribute nothing)
      for (std::size_t m = 0; m < kMidiNotes; ++m) {
        const auto& r = fb.rows[m];
        double acc = 0.0;
        for (std::size_t j = 0; j < r.weights.size(); ++j) acc += r.weights[j] * x[r.first_bin + j];
        residual[m] = acc - target[m];
      }
      // grad = A^T residual + ridge x
      for (std::size_t k = 0; k < bins; ++k) grad[k] = ridge * x[k];
      for (std::size_t m = 0; m < kMidiNotes; ++m) {
        const auto& r = fb.rows[m];
        const double res = residual[m];
        if (res == 0.0) continue;
        for (std::size_t j = 0; j < r.weights.size(); ++j)
          grad[r.first_bin + j] += r.weights[j] * res;
      }
      for (std::size_t k = 0; k < bins; ++k) x[k] = std::max(0.0, x[k] - step * grad[k]);
    }
    for (std::size_t k = 0; k < bins; ++k) out.values(t, k) = std::sqrt(x[k]);
  }
  return out;
}

namespace detail {

/// Standard-normal noise from raw mt19937 output via Box-Muller, so the
/// sample stream is identical on every platform for a given seed.
inline Waveform seeded_noise(std::size_t n, std::uint32_t seed)
{
  std::mt19937 rng(seed);
  auto uniform = [&rng] {
    return (static_cast<double>(rng()) + 0.5) / 4294967296.0; // (0, 1)
  };
  Waveform out(n);
  for (std::size_t i = 0; i < n; i += 2) {
    const double u1 = uniform(), u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    out[i] = r * std::cos(kTwoPi * u2);
    if (i + 1 < n) out[i + 1] = r * std::sin(kTwoPi * u2);
  }
  return out;
}

} // namespace detail

/// Noise-excited source-filter baseline: seeded white noise provides the STFT
/// phases, the envelope recovered from the MIDI spectrogram provides the
/// magnitudes, and the inverse STFT renders the waveform.
inline Waveform source_filter_synth(const MidiSpectrogram& spec, const MidiFilterbank& fb,
                                    const StftConfig& cfg, std::uint32_t seed)
{
  cfg.validate();
  if (cfg.n_fft != spec.config.n_fft || cfg.sample_rate != spec.config.sample_rate ||
      cfg.hop != spec.config.hop)
    throw InputError("source_filter_synth: config does not match the spectrogram");

  const MagnitudeSpectrogram envelope = invert_filterbank(spec, fb);

  const std::size_t frames = spec.values.rows();
  const std::size_t len = std::max<std::size_t>((frames - (frames > 0 ? 1 : 0)) * cfg.hop, 1);
  const Waveform noise = detail::seeded_noise(len, seed);

  ComplexSpectrogram shaped = stft(noise, cfg);
  if (shaped.frames != frames)
    throw InputError("source_filter_synth: frame count mismatch after analysis");
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t k = 0; k < shaped.bins; ++k) {
      const std::complex<double> z = shaped.at(t, k);
      const double mag = std::abs(z);
      const std::complex<double> unit = mag > 0.0 ? z / mag : std::complex<double>(1.0, 0.0);
      shaped.at(t, k) = envelope.values(t, k) * unit;
    }
  }
  return istft(shaped, len);
}

} // namespace m2a
