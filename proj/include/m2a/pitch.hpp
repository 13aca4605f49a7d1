#pragma once

#include "m2a/common.hpp"
#include "m2a/matrix.hpp"
#include "m2a/stft.hpp"

#include <vector>

namespace m2a {

/// 360-bin, 20-cents-per-bin log-frequency grid starting at C1, six octaves.
struct PitchConfig {
  double sample_rate = 24000.0;
  double f_min = 32.70319566257483; // C1
  std::size_t bins = 360;
  double cents_per_bin = 20.0;
  std::size_t window = 2048; // analysis buffer; lag search spans window/2
  std::size_t hop = 288;
  double smoothing_std_cents = 25.0;
  double silence_rms = 1e-4;

  void validate() const
  {
    if (sample_rate <= 0.0) throw InputError("pitch: sample_rate must be > 0");
    if (static_cast<double>(bins) * cents_per_bin != 7200.0)
      throw InputError("pitch: grid must span six octaves (bins * cents_per_bin = 7200)");
    if (hop < 1 || window < 4) throw InputError("pitch: bad frame geometry");
    if (sample_rate < 2.0 * bin_hz(bins))
      throw InputError("pitch: sample_rate below twice the top of the pitch grid");
  }

  double bin_hz(std::size_t bin) const
  {
    return f_min * std::pow(2.0, static_cast<double>(bin) * cents_per_bin / 1200.0);
  }

  /// Nearest grid bin for a frequency (may fall outside [0, bins)).
  long long nearest_bin(double hz) const
  {
    return std::llround(1200.0 * std::log2(hz / f_min) / cents_per_bin);
  }

  bool operator==(const PitchConfig&) const = default;
};

/// Frames x bins probability rows, each summing to 1.
struct PitchPosterior {
  Matrix probs;
  PitchConfig config;
};

namespace detail {

/// Cumulative-mean-normalized difference function over lags 1..max_lag.
inline std::vector<double> cmndf(const std::vector<double>& buf, std::size_t integration,
                                 std::size_t max_lag)
{
  std::vector<double> d(max_lag + 1, 0.0), out(max_lag + 1, 1.0);
  for (std::size_t tau = 1; tau <= max_lag; ++tau) {
    double acc = 0.0;
    for (std::size_t j = 0; j < integration; ++j) {
      const double diff = buf[j] - buf[j + tau];
      acc += diff * diff;
    }
    d[tau] = acc;
  }
  double cum = 0.0;
  for (std::size_t tau = 1; tau <= max_lag; ++tau) {
    cum += d[tau];
    out[tau] = cum > 0.0 ? d[tau] * static_cast<double>(tau) / cum : 1.0;
  }
  return out;
}

} // namespace detail

/// Deterministic frame-level pitch probabilities: YIN-style CMNDF salience
/// sampled at each grid bin's lag, a mild monotone weight that breaks exact
/// subharmonic ties toward the fundamental, Gaussian smoothing across bins,
/// and per-frame normalization. Silent frames are uniform.
inline PitchPosterior pitch_posterior(const Waveform& x, const PitchConfig& cfg)
{
  cfg.validate();
  if (x.empty()) throw InputError("pitch: empty waveform");

  const std::size_t frames = 1 + x.size() / cfg.hop;
  const std::size_t integration = cfg.window / 2;
  const std::size_t max_lag = cfg.window / 2;
  const long long half = static_cast<long long>(cfg.window) / 2;

  // lag per grid bin; bins whose lag exceeds the search range stay at zero
  std::vector<double> lag(cfg.bins);
  for (std::size_t b = 0; b < cfg.bins; ++b) lag[b] = cfg.sample_rate / cfg.bin_hz(b);

  const double sigma = cfg.smoothing_std_cents / cfg.cents_per_bin;
  const int radius = static_cast<int>(std::ceil(4.0 * sigma));
  std::vector<double> kernel(2 * radius + 1);
  for (int i = -radius; i <= radius; ++i)
    kernel[static_cast<std::size_t>(i + radius)] =
        std::exp(-0.5 * (static_cast<double>(i) / sigma) * (static_cast<double>(i) / sigma));

  PitchPosterior post;
  post.config = cfg;
  post.probs = Matrix(frames, cfg.bins);

  std::vector<double> buf(cfg.window), salience(cfg.bins);
  const double uniform = 1.0 / static_cast<double>(cfg.bins);

  for (std::size_t t = 0; t < frames; ++t) {
    const long long start = static_cast<long long>(t * cfg.hop) - half;
    double energy = 0.0;
    for (std::size_t j = 0; j < cfg.window; ++j) {
      buf[j] = detail::reflect_at(x, start + static_cast<long long>(j));
      energy += buf[j] * buf[j];
    }
    if (std::sqrt(energy / static_cast<double>(cfg.window)) < cfg.silence_rms) {
      for (std::size_t b = 0; b < cfg.bins; ++b) post.probs(t, b) = uniform;
      continue;
    }

    const auto dp = detail::cmndf(buf, integration, max_lag);
    for (std::size_t b = 0; b < cfg.bins; ++b) {
      const double tau = lag[b];
      if (tau >= static_cast<double>(max_lag)) {
        salience[b] = 0.0;
        continue;
      }
      const auto lo = static_cast<std::size_t>(tau);
      const double frac = tau - static_cast<double>(lo);
      const double v = dp[lo] * (1.0 - frac) + dp[lo + 1] * frac;
      double s = std::max(0.0, 1.0 - v);
      s *= 1.0 + 0.01 * static_cast<double>(b) / static_cast<double>(cfg.bins - 1);
      salience[b] = s;
    }

    double sum = 0.0;
    for (std::size_t b = 0; b < cfg.bins; ++b) {
      double acc = 0.0;
      for (int i = -radius; i <= radius; ++i) {
        const long long src = static_cast<long long>(b) + i;
        if (src < 0 || src >= static_cast<long long>(cfg.bins)) continue;
        acc += kernel[static_cast<std::size_t>(i + radius)] *
               salience[static_cast<std::size_t>(src)];
      }
      post.probs(t, b) = acc;
      sum += acc;
    }
    if (sum > 0.0)
      for (std::size_t b = 0; b < cfg.bins; ++b) post.probs(t, b) /= sum;
    else
      for (std::size_t b = 0; b < cfg.bins; ++b) post.probs(t, b) = uniform;
  }
  return post;
}

/// Mean over frames of the cross-entropy -sum_b ref_b ln(max(test_b, 1e-10)),
/// after truncating both posteriors to the shorter frame count. Frame counts
/// differing by more than 5% are rejected.
inline double pitch_cross_entropy(const PitchPosterior& ref, const PitchPosterior& test)
{
  if (ref.probs.cols() != test.probs.cols())
    throw InputError("pitch_cross_entropy: bin count mismatch");
  const std::size_t a = ref.probs.rows(), b = test.probs.rows();
  const std::size_t lo = std::min(a, b), hi = std::max(a, b);
  if (lo == 0) throw InputError("pitch_cross_entropy: empty posterior");
  if (static_cast<double>(hi - lo) > 0.05 * static_cast<double>(hi))
    throw InputError("pitch_cross_entropy: frame counts differ by more than 5%");

  double total = 0.0;
  for (std::size_t t = 0; t < lo; ++t) {
    double ce = 0.0;
    for (std::size_t k = 0; k < ref.probs.cols(); ++k)
      ce -= ref.probs(t, k) * std::log(std::max(test.probs(t, k), 1e-10));
    total += ce;
  }
  return total / static_cast<double>(lo);
}

} // namespace m2a
