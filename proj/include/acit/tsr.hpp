#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "acit/errors.hpp"
#include "acit/tensor.hpp"

namespace acit {

// TSR tensor file, little-endian and bit-exact across platforms:
//   magic "ACIT" | version u8=1 | dtype u8 (0=f32, 1=f64) | rank u8 |
//   reserved u8=0 | rank x u32 dims | row-major payload
enum class TsrDtype : std::uint8_t { f32 = 0, f64 = 1 };

struct TsrData {
  TsrDtype dtype = TsrDtype::f32;
  Shape shape;
  std::vector<float> f32;
  std::vector<double> f64;

  std::size_t count() const { return shape_numel(shape); }
};

namespace detail {

inline void put_u32_le(std::string& out, std::uint32_t v) {
  out.push_back(char(v & 0xFF));
  out.push_back(char((v >> 8) & 0xFF));
  out.push_back(char((v >> 16) & 0xFF));
  out.push_back(char((v >> 24) & 0xFF));
}

inline void put_u64_le(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(char((v >> (8 * i)) & 0xFF));
}

template <typename Reader>
std::uint32_t get_u32_le(Reader& rd) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= std::uint32_t(rd()) << (8 * i);
  return v;
}

}  // namespace detail

inline void write_tsr(const std::string& path, const Shape& shape,
                      const float* data) {
  std::string bytes;
  bytes.reserve(8 + 4 * shape.size() + 4 * shape_numel(shape));
  bytes += "ACIT";
  bytes.push_back(char(1));                          // version
  bytes.push_back(char(TsrDtype::f32));              // dtype
  bytes.push_back(char(shape.size()));               // rank
  bytes.push_back(char(0));                          // reserved
  for (auto d : shape) detail::put_u32_le(bytes, std::uint32_t(d));
  for (std::size_t i = 0; i < shape_numel(shape); ++i) {
    detail::put_u32_le(bytes, std::bit_cast<std::uint32_t>(data[i]));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(bytes.data(), std::streamsize(bytes.size()));
  if (!f) throw IoError("short write: " + path);
}

inline void write_tsr(const std::string& path, const Shape& shape,
                      const double* data) {
  std::string bytes;
  bytes.reserve(8 + 4 * shape.size() + 8 * shape_numel(shape));
  bytes += "ACIT";
  bytes.push_back(char(1));
  bytes.push_back(char(TsrDtype::f64));
  bytes.push_back(char(shape.size()));
  bytes.push_back(char(0));
  for (auto d : shape) detail::put_u32_le(bytes, std::uint32_t(d));
  for (std::size_t i = 0; i < shape_numel(shape); ++i) {
    detail::put_u64_le(bytes, std::bit_cast<std::uint64_t>(data[i]));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path);
  f.write(bytes.data(), std::streamsize(bytes.size()));
  if (!f) throw IoError("short write: " + path);
}

template <typename T>
void write_tsr(const std::string& path, const Tensor<T>& t) {
  write_tsr(path, t.shape(), t.values().data());
}

// Parses a TSR file; malformed content raises FormatError naming the byte
// offset of the problem.
inline TsrData read_tsr(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for reading: " + path);
  std::string bytes((std::istreambuf_iterator<char>(f)),
                    std::istreambuf_iterator<char>());

  std::size_t pos = 0;
  auto need = [&](std::size_t n, const char* what) {
    if (pos + n > bytes.size()) {
      throw FormatError(path + ": truncated while reading " + what +
                        " at byte offset " + std::to_string(pos));
    }
  };
  auto u8 = [&]() { return std::uint8_t(bytes[pos++]); };

  need(4, "magic");
  if (bytes.compare(0, 4, "ACIT") != 0) {
    throw FormatError(path + ": bad magic at byte offset 0");
  }
  pos = 4;
  need(4, "header");
  const std::uint8_t version = u8();
  if (version != 1) {
    throw FormatError(path + ": unsupported version " +
                      std::to_string(version) + " at byte offset 4");
  }
  const std::uint8_t dtype = u8();
  if (dtype > 1) {
    throw FormatError(path + ": unknown dtype " + std::to_string(dtype) +
                      " at byte offset 5");
  }
  const std::uint8_t rank = u8();
  const std::uint8_t reserved = u8();
  if (reserved != 0) {
    throw FormatError(path + ": nonzero reserved byte at byte offset 7");
  }

  TsrData out;
  out.dtype = TsrDtype(dtype);
  need(std::size_t(rank) * 4, "dims");
  for (int i = 0; i < rank; ++i) {
    out.shape.push_back(detail::get_u32_le(u8));
  }
  const std::size_t n = out.count();
  const std::size_t elem = dtype == 0 ? 4 : 8;
  need(n * elem, "payload");
  if (pos + n * elem != bytes.size()) {
    throw FormatError(path + ": trailing bytes after payload at byte offset " +
                      std::to_string(pos + n * elem));
  }
  if (out.dtype == TsrDtype::f32) {
    out.f32.resize(n);
    std::memcpy(out.f32.data(), bytes.data() + pos, n * 4);
  } else {
    out.f64.resize(n);
    std::memcpy(out.f64.data(), bytes.data() + pos, n * 8);
  }
  return out;
}

// Reads a TSR file into a tensor of scalar type T, casting if the stored
// dtype differs. Round trips are bit-exact when the types match.
template <typename T>
Tensor<T> load_tensor(const std::string& path) {
  TsrData d = read_tsr(path);
  std::vector<T> v(d.count());
  if (d.dtype == TsrDtype::f32) {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = T(d.f32[i]);
  } else {
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = T(d.f64[i]);
  }
  return Tensor<T>::from_data(d.shape, std::move(v));
}

}  // namespace acit
