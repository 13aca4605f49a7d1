#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace m2a {

/// Mono audio samples; the owning config carries the sample rate.
using Waveform = std::vector<double>;

/// Malformed or inconsistent user input: files, configs, shape mismatches.
/// The CLI maps this to exit code 1; anything else is an internal failure.
class InputError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

/// Center frequency of a MIDI note number, A4 (69) = 440 Hz.
inline double midi_note_hz(double note)
{
  return 440.0 * std::pow(2.0, (note - 69.0) / 12.0);
}

inline bool is_power_of_two(std::size_t n) { return n > 0 && (n & (n - 1)) == 0; }

} // namespace m2a
