// serkit/audio.hpp
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

#ifndef SERKIT_AUDIO_HPP_
#define SERKIT_AUDIO_HPP_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include "serkit/error.hpp"

namespace serkit::audio {

inline constexpr int kCanonicalSampleRate = 16000;

struct Wave {
  std::vector<double> samples;  // mono, in [-1, 1]
  int sample_rate = kCanonicalSampleRate;
};

namespace detail {

inline std::uint32_t read_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

inline std::uint16_t read_u16(const unsigned char* p) {
  return static_cast<std::uint16_t>(p[0] | (p[1] << 8));
}

inline void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

inline void put_u16(std::string& out, std::uint16_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
}

}  // namespace detail

/// Linear-interpolation resampler.
inline std::vector<double> resample(const std::vector<double>& in, int from_rate,
                                    int to_rate) {
  if (from_rate == to_rate || in.empty()) return in;
  const double ratio = static_cast<double>(from_rate) / static_cast<double>(to_rate);
  const std::size_t n_out = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(static_cast<double>(in.size()) / ratio)));
  std::vector<double> out(n_out);
  for (std::size_t i = 0; i < n_out; ++i) {
    const double pos = static_cast<double>(i) * ratio;
    const std::size_t i0 = std::min(static_cast<std::size_t>(pos), in.size() - 1);
    const std::size_t i1 = std::min(i0 + 1, in.size() - 1);
    const double frac = pos - static_cast<double>(i0);
    out[i] = in[i0] * (1.0 - frac) + in[i1] * frac;
  }
  return out;
}

/// Reads a 16-bit linear-PCM WAV file. Only single-channel audio is
/// accepted; files at other sample rates are resampled to `target_rate`.
inline Wave read_wav(const std::string& path, int target_rate = kCanonicalSampleRate) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open audio file: " + path);
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(f)),
                                   std::istreambuf_iterator<char>());
  if (bytes.size() < 44 || std::memcmp(bytes.data(), "RIFF", 4) != 0 ||
      std::memcmp(bytes.data() + 8, "WAVE", 4) != 0)
    throw DataError("not a RIFF/WAVE file: " + path);

  int channels = 0, sample_rate = 0, bits = 0, format = 0;
  std::size_t data_offset = 0, data_size = 0;
  std::size_t pos = 12;
  while (pos + 8 <= bytes.size()) {
    const char* tag = reinterpret_cast<const char*>(bytes.data() + pos);
    const std::uint32_t chunk_size = detail::read_u32(bytes.data() + pos + 4);
    const std::size_t body = pos + 8;
    if (std::memcmp(tag, "fmt ", 4) == 0 && body + 16 <= bytes.size()) {
      format = detail::read_u16(bytes.data() + body);
      channels = detail::read_u16(bytes.data() + body + 2);
      sample_rate = static_cast<int>(detail::read_u32(bytes.data() + body + 4));
      bits = detail::read_u16(bytes.data() + body + 14);
    } else if (std::memcmp(tag, "data", 4) == 0) {
      data_offset = body;
      data_size = std::min<std::size_t>(chunk_size, bytes.size() - body);
    }
    pos = body + chunk_size + (chunk_size & 1);  // chunks are word-aligned
  }

  if (format != 1 || bits != 16)
    throw DataError("unsupported WAV encoding in " + path +
                    " (need 16-bit linear PCM, got format " + std::to_string(format) +
                    ", " + std::to_string(bits) + " bits)");
  if (channels != 1)
    throw DataError("audio file is not single-channel: " + path + " has " +
                    std::to_string(channels) + " channels");
  if (data_offset == 0) throw DataError("WAV file has no data chunk: " + path);

  const std::size_t n = data_size / 2;
  std::vector<double> samples(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::int16_t s = static_cast<std::int16_t>(
        detail::read_u16(bytes.data() + data_offset + 2 * i));
    samples[i] = static_cast<double>(s) / 32768.0;
  }
  Wave w;
  w.samples = resample(samples, sample_rate, target_rate);
  w.sample_rate = target_rate;
  return w;
}

/// Writes mono 16-bit linear-PCM WAV. Samples are clamped to [-1, 1].
inline void write_wav(const std::string& path, const std::vector<double>& samples,
                      int sample_rate) {
  std::string out;
  out.reserve(44 + samples.size() * 2);
  const std::uint32_t data_bytes = static_cast<std::uint32_t>(samples.size() * 2);
  out.append("RIFF");
  detail::put_u32(out, 36 + data_bytes);
  out.append("WAVE");
  out.append("fmt ");
  detail::put_u32(out, 16);
  detail::put_u16(out, 1);  // PCM
  detail::put_u16(out, 1);  // mono
  detail::put_u32(out, static_cast<std::uint32_t>(sample_rate));
  detail::put_u32(out, static_cast<std::uint32_t>(sample_rate * 2));
  detail::put_u16(out, 2);
  detail::put_u16(out, 16);
  out.append("data");
  detail::put_u32(out, data_bytes);
  for (double v : samples) {
    // Symmetric 1/32768 step so values already on the decoder grid
    // (s / 32768) are written back to the same integer s.
    const long q = std::lround(std::clamp(v, -1.0, 1.0) * 32768.0);
    const std::int16_t s = static_cast<std::int16_t>(std::clamp(q, -32768L, 32767L));
    detail::put_u16(out, static_cast<std::uint16_t>(s));
  }
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write audio file: " + path);
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw DataError("short write on audio file: " + path);
}

inline double rms(const std::vector<double>& samples) {
  if (samples.empty()) return 0.0;
  double acc = 0.0;
  for (double v : samples) acc += v * v;
  return std::sqrt(acc / static_cast<double>(samples.size()));
}

}  // namespace serkit::audio

#endif  // SERKIT_AUDIO_HPP_
