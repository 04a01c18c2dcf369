#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>

#include "volsr/errors.hpp"

namespace volsr {

// Little-endian scalar packing for the on-disk containers.

inline void put_u32(std::string &buf, std::uint32_t v) {
  buf.push_back(static_cast<char>(v & 0xff));
  buf.push_back(static_cast<char>((v >> 8) & 0xff));
  buf.push_back(static_cast<char>((v >> 16) & 0xff));
  buf.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_f32(std::string &buf, float v) {
  put_u32(buf, std::bit_cast<std::uint32_t>(v));
}

inline std::uint32_t get_u32(const unsigned char *p) {
  return static_cast<std::uint32_t>(p[0]) |
         (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

inline float get_f32(const unsigned char *p) {
  return std::bit_cast<float>(get_u32(p));
}

inline std::string read_file_bytes(const std::string &path) {
  std::ifstream f(path, std::ios::binary);
  if (!f)
    throw io_error("cannot open file: " + path);
  return std::string(std::istreambuf_iterator<char>(f),
                     std::istreambuf_iterator<char>());
}

/// Write-temp-then-rename so readers never observe a partial file.
inline void write_file_atomic(const std::string &path,
                              const std::string &bytes) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f)
      throw io_error("cannot open for writing: " + tmp);
    f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!f)
      throw io_error("short write: " + tmp);
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0)
    throw io_error("cannot move temp file into place: " + path);
}

} // namespace volsr
