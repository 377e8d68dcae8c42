// serkit/png.hpp
//
// Copyright 2026 The serkit authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
//
// Minimal 8-bit RGB PNG writer on top of zlib. Scanlines use filter
// type 0, which keeps the encoder trivial and the files standard.

#ifndef SERKIT_PNG_HPP_
#define SERKIT_PNG_HPP_

#include <zlib.h>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "serkit/error.hpp"

namespace serkit::png {

namespace detail {

inline void put_be32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  out.push_back(static_cast<std::uint8_t>(v >> 24));
  out.push_back(static_cast<std::uint8_t>(v >> 16));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void write_chunk(std::ostream& out, const char type[4],
                        const std::vector<std::uint8_t>& data) {
  std::vector<std::uint8_t> head;
  put_be32(head, static_cast<std::uint32_t>(data.size()));
  out.write(reinterpret_cast<const char*>(head.data()), 4);
  out.write(type, 4);
  if (!data.empty())
    out.write(reinterpret_cast<const char*>(data.data()),
              static_cast<std::streamsize>(data.size()));
  std::uint32_t crc = static_cast<std::uint32_t>(
      ::crc32(0L, reinterpret_cast<const Bytef*>(type), 4));
  if (!data.empty())
    crc = static_cast<std::uint32_t>(
        ::crc32(crc, reinterpret_cast<const Bytef*>(data.data()),
                static_cast<uInt>(data.size())));
  std::vector<std::uint8_t> tail;
  put_be32(tail, crc);
  out.write(reinterpret_cast<const char*>(tail.data()), 4);
}

}  // namespace detail

/// Writes width x height interleaved RGB bytes (3 per pixel) as a PNG.
inline void write_rgb(std::ostream& out, int width, int height,
                      const std::vector<std::uint8_t>& rgb) {
  if (width < 1 || height < 1)
    throw InvalidInputError("png: image dimensions must be positive");
  if (rgb.size() != static_cast<std::size_t>(width) * height * 3)
    throw InvalidInputError("png: pixel buffer does not match the dimensions");

  static const std::uint8_t kSignature[8] = {0x89, 'P',  'N',  'G',
                                             0x0d, 0x0a, 0x1a, 0x0a};
  out.write(reinterpret_cast<const char*>(kSignature), 8);

  std::vector<std::uint8_t> ihdr;
  detail::put_be32(ihdr, static_cast<std::uint32_t>(width));
  detail::put_be32(ihdr, static_cast<std::uint32_t>(height));
  ihdr.push_back(8);   // bit depth
  ihdr.push_back(2);   // color type: truecolor
  ihdr.push_back(0);   // compression
  ihdr.push_back(0);   // filter method
  ihdr.push_back(0);   // no interlace
  detail::write_chunk(out, "IHDR", ihdr);

  // One filter byte (0 = none) ahead of each scanline.
  const std::size_t stride = static_cast<std::size_t>(width) * 3;
  std::vector<std::uint8_t> raw;
  raw.reserve((stride + 1) * static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    raw.push_back(0);
    const auto* row = rgb.data() + static_cast<std::size_t>(y) * stride;
    raw.insert(raw.end(), row, row + stride);
  }

  uLongf bound = ::compressBound(static_cast<uLong>(raw.size()));
  std::vector<std::uint8_t> idat(bound);
  const int rc = ::compress2(idat.data(), &bound, raw.data(),
                             static_cast<uLong>(raw.size()), Z_BEST_COMPRESSION);
  if (rc != Z_OK) throw RunError("png: zlib compression failed");
  idat.resize(bound);
  detail::write_chunk(out, "IDAT", idat);
  detail::write_chunk(out, "IEND", {});
  if (!out) throw DataError("png: short write");
}

inline void write_rgb_file(const std::filesystem::path& path, int width,
                           int height, const std::vector<std::uint8_t>& rgb) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("png: cannot open " + path.string() + " for writing");
  write_rgb(out, width, height, rgb);
}

}  // namespace serkit::png

#endif  // SERKIT_PNG_HPP_
