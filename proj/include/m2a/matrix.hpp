#pragma once

#include "m2a/common.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

namespace m2a {

/// Dense row-major matrix of doubles, rows = frames, cols = feature dims.
class Matrix {
public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill)
  {
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  double* row(std::size_t r) { return data_.data() + r * cols_; }
  const double* row(std::size_t r) const { return data_.data() + r * cols_; }

  std::vector<double>& data() { return data_; }
  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix& o) const
  {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v)
{
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline std::uint32_t get_u32_le(const unsigned char* p)
{
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

} // namespace detail

/// Binary matrix file: u32le rows, u32le cols, then row-major f32le values.
inline void save_matrix(const std::string& path, const Matrix& m)
{
  std::string buf;
  buf.reserve(8 + 4 * m.rows() * m.cols());
  detail::put_u32_le(buf, static_cast<std::uint32_t>(m.rows()));
  detail::put_u32_le(buf, static_cast<std::uint32_t>(m.cols()));
  for (double v : m.data())
    detail::put_u32_le(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  std::ofstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open for writing: " + path);
  f.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!f) throw std::runtime_error("short write: " + path);
}

inline Matrix load_matrix(const std::string& path)
{
  std::ifstream f(path, std::ios::binary);
  if (!f) throw InputError("cannot open: " + path);
  unsigned char hdr[8];
  if (!f.read(reinterpret_cast<char*>(hdr), 8))
    throw InputError("truncated matrix header: " + path);
  const std::size_t rows = detail::get_u32_le(hdr);
  const std::size_t cols = detail::get_u32_le(hdr + 4);
  Matrix m(rows, cols);
  std::vector<unsigned char> raw(4 * rows * cols);
  if (!f.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size())))
    throw InputError("truncated matrix payload: " + path);
  for (std::size_t i = 0; i < rows * cols; ++i)
    m.data()[i] = std::bit_cast<float>(detail::get_u32_le(raw.data() + 4 * i));
  return m;
}

} // namespace m2a
