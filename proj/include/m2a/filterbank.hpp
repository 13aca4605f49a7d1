#pragma once

#include "m2a/common.hpp"
#include "m2a/matrix.hpp"
#include "m2a/stft.hpp"

#include <array>
#include <set>
#include <vector>

namespace m2a {

inline constexpr std::size_t kMidiNotes = 128;

/// 128 triangular filters centered on MIDI note frequencies, evaluated on the
/// one-sided FFT bin grid. Rows are stored sparsely as a contiguous weight run.
struct MidiFilterbank {
  struct Row {
    std::size_t first_bin = 0;
    std::vector<double> weights; // contiguous, strictly positive entries only
  };

  std::array<double, kMidiNotes> center_freqs{};
  std::array<Row, kMidiNotes> rows{};
  double sample_rate = 0.0;
  std::size_t n_fft = 0;

  std::size_t bins() const { return n_fft / 2 + 1; }

  /// Dense weight lookup, zero outside the stored run.
  double weight(std::size_t note, std::size_t bin) const
  {
    const Row& r = rows[note];
    if (bin < r.first_bin || bin >= r.first_bin + r.weights.size()) return 0.0;
    return r.weights[bin - r.first_bin];
  }

  double row_sum(std::size_t note) const
  {
    double s = 0.0;
    for (double w : rows[note].weights) s += w;
    return s;
  }

  /// Filter outputs for one power-spectrum frame.
  void apply(const double* power, double* energies) const
  {
    for (std::size_t m = 0; m < kMidiNotes; ++m) {
      const Row& r = rows[m];
      double acc = 0.0;
      for (std::size_t j = 0; j < r.weights.size(); ++j)
        acc += r.weights[j] * power[r.first_bin + j];
      energies[m] = acc;
    }
  }
};

/// Triangle for note m spans the neighboring note centers; the edge filters
/// extrapolate virtual neighbors one semitone beyond notes 0 and 127.
/// Peak weight is 1.0 at the center.
inline MidiFilterbank build_midi_filterbank(double sample_rate, std::size_t n_fft)
{
  if (sample_rate <= 0.0) throw InputError("filterbank: sample_rate must be > 0");
  if (!is_power_of_two(n_fft)) throw InputError("filterbank: n_fft must be a power of two");

  MidiFilterbank fb;
  fb.sample_rate = sample_rate;
  fb.n_fft = n_fft;
  for (std::size_t m = 0; m < kMidiNotes; ++m)
    fb.center_freqs[m] = midi_note_hz(static_cast<double>(m));

  const double bin_hz = sample_rate / static_cast<double>(n_fft);
  const std::size_t bins = fb.bins();
  for (std::size_t m = 0; m < kMidiNotes; ++m) {
    const double left = midi_note_hz(static_cast<double>(m) - 1.0);
    const double center = fb.center_freqs[m];
    const double right = midi_note_hz(static_cast<double>(m) + 1.0);

    std::size_t first = 0;
    std::vector<double> weights;
    for (std::size_t k = 0; k < bins; ++k) {
      const double f = static_cast<double>(k) * bin_hz;
      if (f <= left || f >= right) {
        if (!weights.empty()) break; // past the triangle
        continue;
      }
      const double w = f <= center ? (f - left) / (center - left) : (right - f) / (right - center);
      if (w <= 0.0) {
        if (!weights.empty()) break;
        continue;
      }
      if (weights.empty()) first = k;
      weights.push_back(w);
    }
    fb.rows[m] = {first, std::move(weights)};
  }
  return fb;
}

/// Indices of filters whose support falls between FFT bins (all-zero rows).
inline std::set<int> zero_filter_indices(const MidiFilterbank& fb)
{
  std::set<int> out;
  for (std::size_t m = 0; m < kMidiNotes; ++m)
    if (fb.rows[m].weights.empty()) out.insert(static_cast<int>(m));
  return out;
}

/// Frames x 128 log10 filterbank energies, floored.
struct MidiSpectrogram {
  Matrix values;
  double floor = 1e-5;
  StftConfig config;
};

inline constexpr double kEnergyFloor = 1e-5;

inline MidiSpectrogram midi_spectrogram_from_power(const Matrix& power, const StftConfig& cfg,
                                                   const MidiFilterbank& fb,
                                                   double floor = kEnergyFloor)
{
  if (fb.n_fft != cfg.n_fft || fb.sample_rate != cfg.sample_rate)
    throw InputError("midi_spectrogram: filterbank built for a different config");
  if (power.cols() != fb.bins())
    throw InputError("midi_spectrogram: power spectrogram bin count mismatch");

  MidiSpectrogram out;
  out.floor = floor;
  out.config = cfg;
  out.values = Matrix(power.rows(), kMidiNotes);
  std::vector<double> energies(kMidiNotes);
  for (std::size_t t = 0; t < power.rows(); ++t) {
    fb.apply(power.row(t), energies.data());
    for (std::size_t m = 0; m < kMidiNotes; ++m)
      out.values(t, m) = std::log10(std::max(energies[m], floor));
  }
  return out;
}

inline MidiSpectrogram midi_spectrogram(const Waveform& x, const StftConfig& cfg,
                                        const MidiFilterbank& fb, double floor = kEnergyFloor)
{
  return midi_spectrogram_from_power(power_spectrogram(stft(x, cfg)), cfg, fb, floor);
}

} // namespace m2a
