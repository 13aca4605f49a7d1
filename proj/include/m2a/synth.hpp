#pragma once

#include "m2a/common.hpp"
#include "m2a/midi.hpp"

#include <algorithm>
#include <vector>

namespace m2a {

struct SynthConfig {
  double sample_rate = 24000.0;
  int harmonics = 20;
  double rolloff_exponent = 1.5; // harmonic k scaled by k^-rolloff
  double attack = 0.010;         // linear ramp, seconds
  double release = 0.100;        // exponential time constant, seconds

  void validate() const
  {
    if (sample_rate <= 0.0) throw InputError("synth: sample_rate must be > 0");
    if (harmonics < 1) throw InputError("synth: harmonics must be >= 1");
    if (rolloff_exponent <= 0.0) throw InputError("synth: rolloff_exponent must be > 0");
    if (attack < 0.0 || release < 0.0) throw InputError("synth: negative envelope time");
  }
};

namespace detail {

struct RollNote {
  std::size_t pitch;
  std::size_t start_frame;
  std::size_t end_frame; // exclusive
  double velocity;       // normalized [0, 1]
};

/// Maximal constant-velocity runs of active frames per pitch.
inline std::vector<RollNote> roll_notes(const PianoRoll& roll)
{
  std::vector<RollNote> notes;
  for (std::size_t p = 0; p < roll.values.cols(); ++p) {
    std::size_t f = 0;
    while (f < roll.valid_frames) {
      const double v = roll.values(f, p);
      if (v <= 0.0) {
        ++f;
        continue;
      }
      std::size_t e = f + 1;
      while (e < roll.valid_frames && roll.values(e, p) == v) ++e;
      notes.push_back({p, f, e, v});
      f = e;
    }
  }
  return notes;
}

} // namespace detail

/// Harmonic oscillator bank over the roll's note runs: linear attack,
/// exponential release tail, harmonics truncated below Nyquist, per-pitch
/// fixed phase offset. Peak-normalizes to 0.9 only if the mix would clip.
inline Waveform additive_synth(const PianoRoll& roll, const SynthConfig& cfg)
{
  cfg.validate();
  roll.frame_spec.validate();
  const double sr = cfg.sample_rate;
  const double tf = static_cast<double>(roll.frame_spec.hop) / roll.frame_spec.sample_rate;
  const auto notes = detail::roll_notes(roll);

  const double tail = 5.0 * cfg.release;
  const std::size_t total =
      static_cast<std::size_t>(std::ceil((static_cast<double>(roll.valid_frames) * tf + tail) * sr));
  Waveform out(total, 0.0);
  if (notes.empty()) return out;

  for (const auto& note : notes) {
    const double f0 = midi_note_hz(static_cast<double>(note.pitch));
    const double onset = static_cast<double>(note.start_frame) * tf;
    const double offset = static_cast<double>(note.end_frame) * tf;
    const double phase = kTwoPi * static_cast<double>(note.pitch) / 128.0;

    std::vector<double> amp;
    for (int k = 1; k <= cfg.harmonics && f0 * k < sr / 2.0; ++k)
      amp.push_back(std::pow(static_cast<double>(k), -cfg.rolloff_exponent));

    const auto s0 = static_cast<std::size_t>(onset * sr);
    const auto s1 = std::min(total, static_cast<std::size_t>((offset + tail) * sr));

    for (std::size_t s = s0; s < s1; ++s) {
      const double t = static_cast<double>(s) / sr;
      double env = 1.0;
      if (cfg.attack > 0.0 && t - onset < cfg.attack) env = (t - onset) / cfg.attack;
      if (t > offset)
        env *= cfg.release > 0.0 ? std::exp(-(t - offset) / cfg.release) : 0.0;
      if (env <= 0.0) continue;

      double sum = 0.0;
      for (std::size_t k = 0; k < amp.size(); ++k)
        sum += amp[k] * std::sin(kTwoPi * f0 * static_cast<double>(k + 1) * (t - onset) + phase);
      out[s] += note.velocity * env * sum;
    }
  }

  double peak = 0.0;
  for (double v : out) peak = std::max(peak, std::abs(v));
  if (peak > 1.0)
    for (double& v : out) v *= 0.9 / peak;
  return out;
}

} // namespace m2a
