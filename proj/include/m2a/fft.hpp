#pragma once

#include "m2a/common.hpp"

#include <complex>
#include <unordered_map>
#include <vector>

namespace m2a::fft {

namespace detail {

// Twiddle factors w[k] = exp(-2*pi*i*k/n), k < n/2. Cached per thread so
// concurrent callers never share mutable state.
inline const std::vector<std::complex<double>>& twiddles(std::size_t n)
{
  thread_local std::unordered_map<std::size_t, std::vector<std::complex<double>>> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    std::vector<std::complex<double>> w(n / 2);
    for (std::size_t k = 0; k < n / 2; ++k)
      w[k] = std::polar(1.0, -kTwoPi * static_cast<double>(k) / static_cast<double>(n));
    it = cache.emplace(n, std::move(w)).first;
  }
  return it->second;
}

} // namespace detail

/// In-place iterative radix-2 FFT. Size must be a power of two.
inline void transform(std::vector<std::complex<double>>& a, bool inverse)
{
  const std::size_t n = a.size();
  if (n <= 1) return;
  if (!is_power_of_two(n)) throw std::invalid_argument("fft size must be a power of two");

  // bit-reversal permutation
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }

  const auto& w = detail::twiddles(n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t stride = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < len / 2; ++k) {
        std::complex<double> tw = w[k * stride];
        if (inverse) tw = std::conj(tw);
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * tw;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
      }
    }
  }

  if (inverse) {
    const double inv = 1.0 / static_cast<double>(n);
    for (auto& x : a) x *= inv;
  }
}

/// One-sided spectrum (bins 0..n_fft/2) of a real frame zero-padded to n_fft.
inline std::vector<std::complex<double>> real_forward(const std::vector<double>& frame,
                                                      std::size_t n_fft)
{
  std::vector<std::complex<double>> buf(n_fft);
  const std::size_t n = frame.size() < n_fft ? frame.size() : n_fft;
  for (std::size_t i = 0; i < n; ++i) buf[i] = frame[i];
  transform(buf, false);
  buf.resize(n_fft / 2 + 1);
  return buf;
}

/// Real time-domain frame from a one-sided spectrum via conjugate symmetry.
inline std::vector<double> real_inverse(const std::vector<std::complex<double>>& half,
                                        std::size_t n_fft)
{
  std::vector<std::complex<double>> buf(n_fft);
  for (std::size_t k = 0; k < half.size() && k < n_fft / 2 + 1; ++k) buf[k] = half[k];
  for (std::size_t k = 1; k < n_fft / 2; ++k) buf[n_fft - k] = std::conj(buf[k]);
  transform(buf, true);
  std::vector<double> out(n_fft);
  for (std::size_t i = 0; i < n_fft; ++i) out[i] = buf[i].real();
  return out;
}

} // namespace m2a::fft
