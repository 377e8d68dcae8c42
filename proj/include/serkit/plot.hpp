// serkit/plot.hpp
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
// Deterministic raster plotting for report artifacts: an RGB canvas, a
// 5x7 bitmap font (lower-case text), and a bar chart good enough for
// layer-importance profiles and improvement summaries.

#ifndef SERKIT_PLOT_HPP_
#define SERKIT_PLOT_HPP_

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <sstream>
#include <string>
#include <vector>

#include "serkit/error.hpp"
#include "serkit/png.hpp"

namespace serkit::plot {

struct Rgb {
  std::uint8_t r = 0, g = 0, b = 0;
};

inline constexpr Rgb kWhite{255, 255, 255};
inline constexpr Rgb kBlack{0, 0, 0};
inline constexpr Rgb kBarBlue{70, 110, 180};
inline constexpr Rgb kBarRed{180, 80, 70};
inline constexpr Rgb kGrid{210, 210, 210};

namespace detail {

/// 5x7 glyphs, one byte per row, low five bits used, MSB-left. Text is
/// folded to lower case before lookup; unknown characters render blank.
struct Glyph {
  char c;
  std::uint8_t rows[7];
};

inline const Glyph* find_glyph(char c) {
  static const Glyph kFont[] = {
      {' ', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00}},
      {'%', {0x19, 0x19, 0x02, 0x04, 0x08, 0x13, 0x13}},
      {'(', {0x02, 0x04, 0x08, 0x08, 0x08, 0x04, 0x02}},
      {')', {0x08, 0x04, 0x02, 0x02, 0x02, 0x04, 0x08}},
      {'+', {0x00, 0x04, 0x04, 0x1F, 0x04, 0x04, 0x00}},
      {',', {0x00, 0x00, 0x00, 0x00, 0x0C, 0x04, 0x08}},
      {'-', {0x00, 0x00, 0x00, 0x1F, 0x00, 0x00, 0x00}},
      {'.', {0x00, 0x00, 0x00, 0x00, 0x00, 0x0C, 0x0C}},
      {'/', {0x01, 0x01, 0x02, 0x04, 0x08, 0x10, 0x10}},
      {'0', {0x0E, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0E}},
      {'1', {0x04, 0x0C, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'2', {0x0E, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1F}},
      {'3', {0x1F, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0E}},
      {'4', {0x02, 0x06, 0x0A, 0x12, 0x1F, 0x02, 0x02}},
      {'5', {0x1F, 0x10, 0x1E, 0x01, 0x01, 0x11, 0x0E}},
      {'6', {0x06, 0x08, 0x10, 0x1E, 0x11, 0x11, 0x0E}},
      {'7', {0x1F, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08}},
      {'8', {0x0E, 0x11, 0x11, 0x0E, 0x11, 0x11, 0x0E}},
      {'9', {0x0E, 0x11, 0x11, 0x0F, 0x01, 0x02, 0x0C}},
      {':', {0x00, 0x0C, 0x0C, 0x00, 0x0C, 0x0C, 0x00}},
      {'=', {0x00, 0x00, 0x1F, 0x00, 0x1F, 0x00, 0x00}},
      {'_', {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x1F}},
      {'a', {0x00, 0x00, 0x0E, 0x01, 0x0F, 0x11, 0x0F}},
      {'b', {0x10, 0x10, 0x1E, 0x11, 0x11, 0x11, 0x1E}},
      {'c', {0x00, 0x00, 0x0E, 0x11, 0x10, 0x11, 0x0E}},
      {'d', {0x01, 0x01, 0x0F, 0x11, 0x11, 0x11, 0x0F}},
      {'e', {0x00, 0x00, 0x0E, 0x11, 0x1F, 0x10, 0x0E}},
      {'f', {0x06, 0x08, 0x1C, 0x08, 0x08, 0x08, 0x08}},
      {'g', {0x00, 0x0F, 0x11, 0x11, 0x0F, 0x01, 0x0E}},
      {'h', {0x10, 0x10, 0x1E, 0x11, 0x11, 0x11, 0x11}},
      {'i', {0x04, 0x00, 0x0C, 0x04, 0x04, 0x04, 0x0E}},
      {'j', {0x02, 0x00, 0x06, 0x02, 0x02, 0x12, 0x0C}},
      {'k', {0x10, 0x10, 0x12, 0x14, 0x18, 0x14, 0x12}},
      {'l', {0x0C, 0x04, 0x04, 0x04, 0x04, 0x04, 0x0E}},
      {'m', {0x00, 0x00, 0x1A, 0x15, 0x15, 0x15, 0x15}},
      {'n', {0x00, 0x00, 0x1E, 0x11, 0x11, 0x11, 0x11}},
      {'o', {0x00, 0x00, 0x0E, 0x11, 0x11, 0x11, 0x0E}},
      {'p', {0x00, 0x1E, 0x11, 0x11, 0x1E, 0x10, 0x10}},
      {'q', {0x00, 0x0F, 0x11, 0x11, 0x0F, 0x01, 0x01}},
      {'r', {0x00, 0x00, 0x16, 0x19, 0x10, 0x10, 0x10}},
      {'s', {0x00, 0x00, 0x0F, 0x10, 0x0E, 0x01, 0x1E}},
      {'t', {0x08, 0x08, 0x1C, 0x08, 0x08, 0x09, 0x06}},
      {'u', {0x00, 0x00, 0x11, 0x11, 0x11, 0x13, 0x0D}},
      {'v', {0x00, 0x00, 0x11, 0x11, 0x11, 0x0A, 0x04}},
      {'w', {0x00, 0x00, 0x15, 0x15, 0x15, 0x15, 0x0A}},
      {'x', {0x00, 0x00, 0x11, 0x0A, 0x04, 0x0A, 0x11}},
      {'y', {0x00, 0x11, 0x11, 0x11, 0x0F, 0x01, 0x0E}},
      {'z', {0x00, 0x00, 0x1F, 0x02, 0x04, 0x08, 0x1F}},
  };
  for (const auto& g : kFont)
    if (g.c == c) return &g;
  return nullptr;
}

}  // namespace detail

class Canvas {
 public:
  Canvas(int width, int height, Rgb background = kWhite)
      : width_(width), height_(height),
        pixels_(static_cast<std::size_t>(width) * height * 3) {
    if (width < 1 || height < 1)
      throw InvalidInputError("canvas dimensions must be positive");
    fill_rect(0, 0, width, height, background);
  }

  int width() const { return width_; }
  int height() const { return height_; }
  const std::vector<std::uint8_t>& pixels() const { return pixels_; }

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= width_ || y >= height_) return;
    const std::size_t i = (static_cast<std::size_t>(y) * width_ + x) * 3;
    pixels_[i] = c.r;
    pixels_[i + 1] = c.g;
    pixels_[i + 2] = c.b;
  }

  void fill_rect(int x, int y, int w, int h, Rgb c) {
    for (int yy = y; yy < y + h; ++yy)
      for (int xx = x; xx < x + w; ++xx) set(xx, yy, c);
  }

  void hline(int x0, int x1, int y, Rgb c) {
    for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set(x, y, c);
  }

  void vline(int x, int y0, int y1, Rgb c) {
    for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y) set(x, y, c);
  }

  /// Draws text folded to lower case; glyphs are 5x7 with a 1px gap.
  void text(int x, int y, const std::string& s, Rgb c = kBlack) {
    int cx = x;
    for (char raw : s) {
      const char ch = static_cast<char>(std::tolower(static_cast<unsigned char>(raw)));
      if (const auto* g = detail::find_glyph(ch)) {
        for (int row = 0; row < 7; ++row)
          for (int bit = 0; bit < 5; ++bit)
            if (g->rows[row] & (1 << (4 - bit))) set(cx + bit, y + row, c);
      }
      cx += 6;
    }
  }

  static int text_width(const std::string& s) {
    return static_cast<int>(s.size()) * 6;
  }

  void save(const std::filesystem::path& path) const {
    png::write_rgb_file(path, width_, height_, pixels_);
  }

 private:
  int width_, height_;
  std::vector<std::uint8_t> pixels_;
};

/// A labelled vertical bar chart. Bars grow from the zero line, so
/// negative values hang downward. Writes a PNG at the given path.
inline void bar_chart(const std::filesystem::path& path,
                      const std::string& title,
                      const std::vector<double>& values,
                      const std::vector<std::string>& labels) {
  if (values.empty()) throw InvalidInputError("bar_chart: no values");
  if (!labels.empty() && labels.size() != values.size())
    throw InvalidInputError("bar_chart: label count does not match values");

  const int n = static_cast<int>(values.size());
  const int slot = 26, bar = 18;
  const int left = 58, right = 16, top = 26, bottom = 30;
  const int plot_h = 160;
  const int width = left + n * slot + right;
  const int height = top + plot_h + bottom;
  Canvas canvas(width, height);

  double lo = 0.0, hi = 0.0;
  for (double v : values) {
    if (!std::isfinite(v)) throw InvalidInputError("bar_chart: non-finite value");
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (hi == lo) hi = lo + 1.0;  // flat zero chart still renders an axis

  const auto y_of = [&](double v) {
    return top + static_cast<int>(std::lround((hi - v) / (hi - lo) * plot_h));
  };

  const auto fmt = [](double v) {
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(2);
    ss << v;
    return ss.str();
  };

  canvas.text(left, 8, title);
  canvas.vline(left - 4, top, top + plot_h, kBlack);
  canvas.hline(left - 4, width - right, y_of(0.0), kBlack);
  canvas.hline(left - 7, left - 4, y_of(hi), kBlack);
  canvas.hline(left - 7, left - 4, y_of(lo), kBlack);
  canvas.text(2, y_of(hi) - 3, fmt(hi));
  if (lo < 0.0) canvas.text(2, y_of(lo) - 3, fmt(lo));

  for (int i = 0; i < n; ++i) {
    const double v = values[static_cast<std::size_t>(i)];
    const int x = left + i * slot + (slot - bar) / 2;
    const int y0 = y_of(0.0), y1 = y_of(v);
    const Rgb color = v < 0.0 ? kBarRed : kBarBlue;
    canvas.fill_rect(x, std::min(y0, y1), bar, std::max(1, std::abs(y1 - y0)), color);
    const std::string label =
        labels.empty() ? std::to_string(i) : labels[static_cast<std::size_t>(i)];
    const int lw = Canvas::text_width(label);
    if (lw <= slot)
      canvas.text(left + i * slot + (slot - lw) / 2, top + plot_h + 8, label);
  }
  canvas.save(path);
}

}  // namespace serkit::plot

#endif  // SERKIT_PLOT_HPP_
