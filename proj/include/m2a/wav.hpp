#pragma once

#include "m2a/common.hpp"
#include "m2a/matrix.hpp" // little-endian helpers

#include <bit>
#include <cstdint>
#include <fstream>
#include <string>
#include <vector>

namespace m2a {

enum class WavFormat { kPcm16, kFloat32 };

struct WavData {
  Waveform samples;
  double sample_rate = 0.0;
};

namespace detail {

inline void put_u16_le(std::string& out, std::uint32_t v)
{
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

inline std::uint32_t get_u16_le(const unsigned char* p)
{
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8);
}

} // namespace detail

/// Mono RIFF/WAVE writer, PCM 16-bit or IEEE float 32-bit.
inline void write_wav(const std::string& path, const Waveform& samples, double sample_rate,
                      WavFormat format = WavFormat::kPcm16)
{
  const std::uint32_t rate = static_cast<std::uint32_t>(sample_rate);
  const bool pcm = format == WavFormat::kPcm16;
  const std::uint32_t bytes_per_sample = pcm ? 2 : 4;
  const std::uint32_t data_size = static_cast<std::uint32_t>(samples.size()) * bytes_per_sample;

  std::string buf;
  buf.reserve(44 + data_size);
  buf += "RIFF";
  detail::put_u32_le(buf, 36 + data_size);
  buf += "WAVEfmt ";
  detail::put_u32_le(buf, 16);
  detail::put_u16_le(buf, pcm ? 1 : 3); // PCM or IEEE float
  detail::put_u16_le(buf, 1);           // mono
  detail::put_u32_le(buf, rate);
  detail::put_u32_le(buf, rate * bytes_per_sample);
  detail::put_u16_le(buf, bytes_per_sample);
  detail::put_u16_le(buf, bytes_per_sample * 8);
  buf += "data";
  detail::put_u32_le(buf, data_size);
  for (double v : samples) {
    if (pcm) {
      const double clamped = std::max(-1.0, std::min(1.0, v));
      const auto q = static_cast<std::int16_t>(std::lround(clamped * 32767.0));
      detail::put_u16_le(buf, static_cast<std::uint16_t>(q));
    } else {
      detail::put_u32_le(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open for writing: " + path);
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!f) throw std::runtime_error("short write: " + path);
}

/// Mono RIFF/WAVE reader for PCM 16-bit and IEEE float 32-bit files.
inline WavData read_wav(const std::string& path)
{
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open: " + path);
  std::vector<unsigned char> raw((std::istreambuf_iterator<char>(f)),
                                 std::istreambuf_iterator<char>());
  auto fail = [&](const char* why) -> InputError {
    return InputError("wav " + path + ": " + why);
  };
  if (raw.size() < 12 || std::memcmp(raw.data(), "RIFF", 4) != 0 ||
      std::memcmp(raw.data() + 8, "WAVE", 4) != 0)
    throw fail("not a RIFF/WAVE file");

  std::uint32_t fmt_tag = 0, channels = 0, bits = 0, rate = 0;
  std::size_t data_off = 0, data_len = 0;
  std::size_t pos = 12;
  while (pos + 8 <= raw.size()) {
    const std::uint32_t chunk_len = detail::get_u32_le(raw.data() + pos + 4);
    const unsigned char* tag = raw.data() + pos;
    const std::size_t body = pos + 8;
    if (std::memcmp(tag, "fmt ", 4) == 0) {
      if (body + 16 > raw.size()) throw fail("truncated fmt chunk");
      fmt_tag = detail::get_u16_le(raw.data() + body);
      channels = detail::get_u16_le(raw.data() + body + 2);
      rate = detail::get_u32_le(raw.data() + body + 4);
      bits = detail::get_u16_le(raw.data() + body + 14);
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data_off = body;
      data_len = std::min<std::size_t>(chunk_len, raw.size() - body);
    }
    pos = body + chunk_len + (chunk_len & 1); // chunks are word aligned
  }
  if (rate == 0) throw fail("missing fmt chunk");
  if (data_off == 0) throw fail("missing data chunk");
  if (channels != 1) throw fail("only mono input is supported");

  WavData out;
  out.sample_rate = static_cast<double>(rate);
  if (fmt_tag == 1 && bits == 16) {
    out.samples.reserve(data_len / 2);
    for (std::size_t i = 0; i + 2 <= data_len; i += 2) {
      const auto v = static_cast<std::int16_t>(detail::get_u16_le(raw.data() + data_off + i));
      out.samples.push_back(static_cast<double>(v) / 32768.0);
    }
  } else if (fmt_tag == 3 && bits == 32) {
    out.samples.reserve(data_len / 4);
    for (std::size_t i = 0; i + 4 <= data_len; i += 4)
      out.samples.push_back(std::bit_cast<float>(detail::get_u32_le(raw.data() + data_off + i)));
  } else {
    throw fail("unsupported encoding (need PCM16 or float32)");
  }
  return out;
}

} // namespace m2a
