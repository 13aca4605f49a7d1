#pragma once

#include "m2a/common.hpp"
#include "m2a/filterbank.hpp"
#include "m2a/matrix.hpp"
#include "m2a/midi.hpp"
#include "m2a/stft.hpp"

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace m2a {

namespace detail {

inline std::size_t aligned_rows(std::size_t a, std::size_t b, const char* what)
{
  const std::size_t lo = std::min(a, b), hi = std::max(a, b);
  if (lo == 0) throw InputError(std::string(what) + ": empty input");
  if (static_cast<double>(hi - lo) > 0.05 * static_cast<double>(hi))
    throw InputError(std::string(what) + ": lengths differ by more than 5%");
  return lo;
}

} // namespace detail

/// Mean squared error over all cells, rows truncated to the shorter input.
inline double feature_mse(const Matrix& a, const Matrix& b)
{
  if (a.cols() != b.cols()) throw InputError("feature_mse: column count mismatch");
  const std::size_t rows = detail::aligned_rows(a.rows(), b.rows(), "feature_mse");
  double acc = 0.0;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < a.cols(); ++c) {
      const double d = a(r, c) - b(r, c);
      acc += d * d;
    }
  return acc / (static_cast<double>(rows) * static_cast<double>(a.cols()));
}

struct StftResolution {
  std::size_t n_fft;
  std::size_t hop;
  std::size_t window;
};

inline const std::vector<StftResolution>& default_stft_resolutions()
{
  static const std::vector<StftResolution> kDefault = {
      {512, 128, 512}, {1024, 256, 1024}, {2048, 512, 2048}};
  return kDefault;
}

/// Mean over resolutions of spectral convergence plus log-magnitude L1, with
/// the reference y in the denominator. Zero iff the magnitudes agree.
inline double multires_stft_loss(const Waveform& x, const Waveform& y,
                                 const std::vector<StftResolution>& resolutions =
                                     default_stft_resolutions())
{
  if (x.empty() || y.empty()) throw InputError("multires_stft_loss: empty input");
  if (resolutions.empty()) throw InputError("multires_stft_loss: no resolutions");
  const std::size_t len = std::min(x.size(), y.size());
  const Waveform xt(x.begin(), x.begin() + static_cast<long long>(len));
  const Waveform yt(y.begin(), y.begin() + static_cast<long long>(len));

  constexpr double kLogFloor = 1e-7;
  double total = 0.0;
  for (const StftResolution& res : resolutions) {
    StftConfig cfg;
    cfg.sample_rate = 1.0; // the loss is sample-rate independent
    cfg.n_fft = res.n_fft;
    cfg.hop = res.hop;
    cfg.window_length = res.window;
    const ComplexSpectrogram sx = stft(xt, cfg);
    const ComplexSpectrogram sy = stft(yt, cfg);

    double num = 0.0, den = 0.0, logsum = 0.0;
    for (std::size_t i = 0; i < sx.data.size(); ++i) {
      const double mx = std::abs(sx.data[i]);
      const double my = std::abs(sy.data[i]);
      num += (my - mx) * (my - mx);
      den += my * my;
      logsum += std::abs(std::log(std::max(my, kLogFloor)) - std::log(std::max(mx, kLogFloor)));
    }
    const double sc = den > 0.0 ? std::sqrt(num) / std::sqrt(den) : 0.0;
    total += sc + logsum / static_cast<double>(sx.data.size());
  }
  return total / static_cast<double>(resolutions.size());
}

/// Per-MIDI-note aggregate with support counts; notes without support are
/// absent.
struct PerNoteMean {
  std::array<std::optional<double>, kMidiNotes> mean{};
  std::array<std::size_t, kMidiNotes> support{};
};

/// Every rating is assigned to every note present in its sample; per-note
/// means are taken over all assigned scores.
inline PerNoteMean note_level_mos(const std::vector<std::pair<std::string, double>>& ratings,
                                  const std::map<std::string, std::set<int>>& presence)
{
  std::array<double, kMidiNotes> sum{};
  PerNoteMean out;
  for (const auto& [sample_id, score] : ratings) {
    const auto it = presence.find(sample_id);
    if (it == presence.end())
      throw InputError("note_level_mos: no note presence for sample " + sample_id);
    for (int note : it->second) {
      if (note < 0 || note >= static_cast<int>(kMidiNotes))
        throw InputError("note_level_mos: note out of range");
      sum[static_cast<std::size_t>(note)] += score;
      ++out.support[static_cast<std::size_t>(note)];
    }
  }
  for (std::size_t n = 0; n < kMidiNotes; ++n)
    if (out.support[n] > 0) out.mean[n] = sum[n] / static_cast<double>(out.support[n]);
  return out;
}

/// Column-wise MSE: element n is the distortion of MIDI-spectrogram dim n.
inline std::array<double, kMidiNotes> note_level_spec_distortion(const MidiSpectrogram& nat,
                                                                 const MidiSpectrogram& syn)
{
  if (nat.values.cols() != kMidiNotes || syn.values.cols() != kMidiNotes)
    throw InputError("note_level_spec_distortion: inputs must have 128 dims");
  const std::size_t rows =
      detail::aligned_rows(nat.values.rows(), syn.values.rows(), "note_level_spec_distortion");
  std::array<double, kMidiNotes> out{};
  for (std::size_t c = 0; c < kMidiNotes; ++c) {
    double acc = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double d = nat.values(r, c) - syn.values(r, c);
      acc += d * d;
    }
    out[c] = acc / static_cast<double>(rows);
  }
  return out;
}

/// Per-frame cross-entropy fanned out to every note active in that frame,
/// then averaged per note over its assigned frames.
inline PerNoteMean note_level_pitch_distortion(const std::vector<double>& frame_ce,
                                               const PianoRoll& roll)
{
  const std::size_t frames =
      detail::aligned_rows(frame_ce.size(), roll.valid_frames, "note_level_pitch_distortion");
  std::array<double, kMidiNotes> sum{};
  PerNoteMean out;
  for (std::size_t t = 0; t < frames; ++t)
    for (std::size_t n = 0; n < kMidiNotes; ++n)
      if (roll.values(t, n) > 0.0) {
        sum[n] += frame_ce[t];
        ++out.support[n];
      }
  for (std::size_t n = 0; n < kMidiNotes; ++n)
    if (out.support[n] > 0) out.mean[n] = sum[n] / static_cast<double>(out.support[n]);
  return out;
}

/// Sample Pearson correlation coefficient.
inline double pearson(const std::vector<double>& xs, const std::vector<double>& ys)
{
  if (xs.size() != ys.size()) throw InputError("pearson: length mismatch");
  if (xs.size() < 3) throw InputError("pearson: need at least 3 points");
  const double n = static_cast<double>(xs.size());
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxy += (xs[i] - mx) * (ys[i] - my);
    sxx += (xs[i] - mx) * (xs[i] - mx);
    syy += (ys[i] - my) * (ys[i] - my);
  }
  if (sxx <= 0.0 || syy <= 0.0) throw InputError("pearson: degenerate variance");
  return sxy / std::sqrt(sxx * syy);
}

/// One Table-style result row for a system.
struct SystemMetrics {
  std::string system_id;
  double pitch_ce = 0.0;
  double chroma_mse = 0.0;
  double spec_mse = 0.0;
  std::optional<double> mos_mean;
};

} // namespace m2a
