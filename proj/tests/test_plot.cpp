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

#include <catch2/catch_amalgamated.hpp>

#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "png_decode.hpp"
#include "serkit/plot.hpp"

using serkit::InvalidInputError;
using serkit::plot::Canvas;
using serkit::plot::Rgb;
using serkit::testing::decode_png;

namespace {

namespace fs = std::filesystem;

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("serkit-plot-" + std::to_string(Catch::rngSeed()) + "-" +
            std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

bool is_color(const std::array<std::uint8_t, 3>& px, Rgb c) {
  return px[0] == c.r && px[1] == c.g && px[2] == c.b;
}

/// Height in pixels of the tallest same-colored run in column x.
int column_count(const serkit::testing::DecodedPng& img, int x, Rgb c) {
  int n = 0;
  for (int y = 0; y < img.height; ++y)
    if (is_color(img.at(x, y), c)) ++n;
  return n;
}

}  // namespace

TEST_CASE("canvas pixels are clipped to the image bounds") {
  Canvas c(10, 8);
  c.set(-1, 0, serkit::plot::kBlack);
  c.set(0, 8, serkit::plot::kBlack);
  c.set(10, 0, serkit::plot::kBlack);
  for (auto b : c.pixels()) CHECK(int(b) == 255);

  c.fill_rect(8, 6, 10, 10, serkit::plot::kBlack);
  CHECK(c.pixels()[(7 * 10 + 9) * 3] == 0);
}

TEST_CASE("text draws known glyphs and skips unknown ones") {
  Canvas with_text(60, 12);
  with_text.text(1, 2, "abc 0.5");
  int dark = 0;
  for (std::size_t i = 0; i < with_text.pixels().size(); i += 3)
    if (with_text.pixels()[i] == 0) ++dark;
  CHECK(dark > 20);

  Canvas unknown(60, 12);
  unknown.text(1, 2, "\x01\x02");
  for (auto b : unknown.pixels()) CHECK(int(b) == 255);

  CHECK(Canvas::text_width("abcd") == 24);
}

TEST_CASE("png files round-trip pixel-exactly through an independent reader") {
  TempDir dir;
  Canvas c(33, 21);
  c.fill_rect(3, 4, 10, 6, Rgb{10, 200, 30});
  c.text(2, 12, "ccc 0.62");
  const fs::path file = dir.path / "roundtrip.png";
  c.save(file);

  const auto img = decode_png(file);
  REQUIRE(img.width == 33);
  REQUIRE(img.height == 21);
  CHECK(img.rgb == c.pixels());
}

TEST_CASE("bar charts scale bars against the maximum value") {
  TempDir dir;
  const fs::path uniform_file = dir.path / "uniform.png";
  const fs::path onehot_file = dir.path / "onehot.png";
  serkit::plot::bar_chart(uniform_file, "uniform", {0.2, 0.2, 0.2, 0.2, 0.2}, {});
  serkit::plot::bar_chart(onehot_file, "one hot", {0.0, 0.0, 1.0, 0.0, 0.0}, {});

  const auto uniform = decode_png(uniform_file);
  const auto onehot = decode_png(onehot_file);
  REQUIRE(uniform.width == onehot.width);

  int uniform_tall = 0, onehot_tall = 0;
  for (int x = 0; x < uniform.width; ++x) {
    if (column_count(uniform, x, serkit::plot::kBarBlue) > 40) ++uniform_tall;
    if (column_count(onehot, x, serkit::plot::kBarBlue) > 40) ++onehot_tall;
  }
  // Equal values all reach the top of the scale; the one-hot chart has
  // a single full-height bar (18 columns wide).
  CHECK(uniform_tall == 5 * 18);
  CHECK(onehot_tall == 18);
}

TEST_CASE("negative bars render downward in the alternate color") {
  TempDir dir;
  const fs::path file = dir.path / "neg.png";
  serkit::plot::bar_chart(file, "deltas", {0.5, -0.25}, {"up", "down"});
  const auto img = decode_png(file);

  int red = 0, blue = 0;
  for (int x = 0; x < img.width; ++x) {
    red += column_count(img, x, serkit::plot::kBarRed);
    blue += column_count(img, x, serkit::plot::kBarBlue);
  }
  CHECK(blue > 0);
  CHECK(red > 0);
  CHECK(blue > red);  // 0.5 spans twice the pixels of -0.25
}

TEST_CASE("bar chart inputs are validated") {
  TempDir dir;
  const fs::path file = dir.path / "bad.png";
  CHECK_THROWS_AS(serkit::plot::bar_chart(file, "t", {}, {}), InvalidInputError);
  CHECK_THROWS_AS(serkit::plot::bar_chart(file, "t", {1.0, 2.0}, {"only"}),
                  InvalidInputError);
  CHECK_THROWS_AS(
      serkit::plot::bar_chart(file, "t", {std::nan("")}, {"x"}),
      InvalidInputError);
}
