// tests/test_metrics.cpp
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

#include "serkit/metrics.hpp"

#include <catch2/catch_amalgamated.hpp>

#include "serkit/rng.hpp"
#include "oracles.hpp"

using namespace serkit;
using Catch::Matchers::WithinAbs;

TEST_CASE("ccc fixed cases") {
  SECTION("identity is 1") {
    REQUIRE_THAT(metrics::ccc({0.1, 0.5, 0.9}, {0.1, 0.5, 0.9}), WithinAbs(1.0, 1e-15));
  }
  SECTION("hand-derived 6/7") {
    REQUIRE_THAT(metrics::ccc({1, 2, 3}, {1, 2, 4}), WithinAbs(6.0 / 7.0, 1e-12));
  }
  SECTION("constant estimate gives 0") {
    REQUIRE_THAT(metrics::ccc({0, 1}, {0.5, 0.5}), WithinAbs(0.0, 1e-15));
  }
  SECTION("anti-correlated equal-moment pair gives -1") {
    REQUIRE_THAT(metrics::ccc({0, 1}, {1, 0}), WithinAbs(-1.0, 1e-15));
  }
  SECTION("degenerate constant-constant pair guards to 0") {
    REQUIRE(metrics::ccc({0.3, 0.3, 0.3}, {0.3, 0.3, 0.3}) == 0.0);
  }
}

TEST_CASE("ccc input validation") {
  REQUIRE_THROWS_AS(metrics::ccc({1.0}, {1.0}), InvalidInputError);
  REQUIRE_THROWS_AS(metrics::ccc({1.0, 2.0}, {1.0}), InvalidInputError);
  REQUIRE_THROWS_AS(metrics::ccc({1.0, std::nan("")}, {1.0, 2.0}), InvalidInputError);
  REQUIRE_THROWS_AS(
      metrics::ccc({1.0, 2.0}, {1.0, std::numeric_limits<double>::infinity()}),
      InvalidInputError);
}

TEST_CASE("ccc matches the independent oracle on random pairs") {
  Rng rng(20260814);
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t n = 2 + rng.integer(63);
    std::vector<double> y(n), yhat(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.uniform();
      yhat[i] = rng.uniform();
    }
    REQUIRE_THAT(metrics::ccc(y, yhat), WithinAbs(testing::ccc_oracle(y, yhat), 1e-9));
  }
}

TEST_CASE("ccc properties") {
  Rng rng(99);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.integer(30);
    std::vector<double> y(n), yhat(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.uniform(-2, 2);
      yhat[i] = rng.uniform(-2, 2);
    }
    const double base = metrics::ccc(y, yhat);

    // Symmetry in the arguments.
    REQUIRE_THAT(metrics::ccc(yhat, y), WithinAbs(base, 1e-12));

    // Shift invariance: same constant added to both sides.
    const double c = rng.uniform(-5, 5);
    std::vector<double> ys(y), yhs(yhat);
    for (auto& v : ys) v += c;
    for (auto& v : yhs) v += c;
    REQUIRE_THAT(metrics::ccc(ys, yhs), WithinAbs(base, 1e-9));

    // Scale covariance: same positive factor on both sides.
    const double a = rng.uniform(0.1, 4.0);
    std::vector<double> ya(y), yha(yhat);
    for (auto& v : ya) v *= a;
    for (auto& v : yha) v *= a;
    REQUIRE_THAT(metrics::ccc(ya, yha), WithinAbs(base, 1e-9));

    // |ccc| <= |pearson| (the bias penalty only shrinks the score).
    const double rho = testing::pearson(y, yhat);
    if (std::isfinite(rho)) REQUIRE(std::abs(base) <= std::abs(rho) + 1e-12);
  }
}

TEST_CASE("ccc_loss composition") {
  std::vector<EmotionTriple> target = {{0.1, 1, 1}, {0.5, 2, 2}, {0.9, 3, 3}};

  SECTION("perfect estimate gives 0") {
    REQUIRE_THAT(metrics::ccc_loss(target, target), WithinAbs(0.0, 1e-15));
  }
  SECTION("constant estimates give 1") {
    std::vector<EmotionTriple> est = {{0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}, {0.5, 0.5, 0.5}};
    REQUIRE_THAT(metrics::ccc_loss(target, est), WithinAbs(1.0, 1e-15));
  }
  SECTION("per-dimension CCCs (1, 6/7, 1) give 1/21") {
    // Valence column reproduces the hand-derived 6/7 case.
    std::vector<EmotionTriple> est = {{0.1, 1, 1}, {0.5, 2, 2}, {0.9, 4, 3}};
    REQUIRE_THAT(metrics::ccc_loss(target, est), WithinAbs(1.0 / 21.0, 1e-12));
  }
  SECTION("batch size mismatch rejected") {
    std::vector<EmotionTriple> est = {{0, 0, 0}};
    REQUIRE_THROWS_AS(metrics::ccc_loss(target, est), InvalidInputError);
  }
}

TEST_CASE("CccReport mean invariant") {
  auto r = metrics::CccReport::make(Partition::kTest1, 0.622, 0.328, 0.513);
  REQUIRE_THAT(r.mean_ccc, WithinAbs((0.622 + 0.328 + 0.513) / 3.0, 1e-9));
  REQUIRE(r[Dimension::kValence] == 0.328);
}

TEST_CASE("wer fixed cases") {
  SECTION("exact match") {
    auto r = metrics::wer({"the", "cat", "sat"}, {"the", "cat", "sat"});
    REQUIRE(r.edits() == 0);
    REQUIRE(r.wer() == 0.0);
  }
  SECTION("one substitution one deletion") {
    auto r = metrics::wer({"the", "cat", "sat"}, {"the", "bat"});
    REQUIRE(r.substitutions == 1);
    REQUIRE(r.deletions == 1);
    REQUIRE(r.insertions == 0);
    REQUIRE_THAT(r.wer(), WithinAbs(2.0 / 3.0, 1e-15));
  }
  SECTION("wer may exceed 1") {
    auto r = metrics::wer({"a"}, {"a", "b", "c"});
    REQUIRE(r.insertions == 2);
    REQUIRE_THAT(r.wer(), WithinAbs(2.0, 1e-15));
  }
  SECTION("empty hypothesis is all deletions") {
    auto r = metrics::wer({"a", "b"}, {});
    REQUIRE(r.deletions == 2);
    REQUIRE_THAT(r.wer(), WithinAbs(1.0, 1e-15));
  }
  SECTION("empty reference rejected") {
    REQUIRE_THROWS_AS(metrics::wer({}, {"a"}), InvalidInputError);
  }
}

TEST_CASE("wer equals brute-force edit distance on short sequences") {
  // All pairs up to length 4 over a 3-word vocabulary; the acceptance
  // suite extends this to length 6.
  const std::vector<std::string> vocab = {"a", "b", "c"};
  auto sequences = testing::enumerate_sequences(vocab, 4);
  for (const auto& ref : sequences) {
    if (ref.empty()) continue;
    for (const auto& hyp : sequences) {
      auto r = metrics::wer(ref, hyp);
      const std::size_t expected = testing::edit_distance_oracle(ref, hyp);
      REQUIRE(r.edits() == expected);
      REQUIRE(r.wer() == static_cast<double>(expected) / static_cast<double>(ref.size()));
    }
  }
}

TEST_CASE("normalize_text strips punctuation and case") {
  auto tokens = metrics::normalize_text("  Hello, WORLD!  It's 'fine'. ");
  REQUIRE(tokens == std::vector<std::string>{"hello", "world", "it's", "fine"});
  REQUIRE(metrics::normalize_text("...").empty());
}

TEST_CASE("wer_text applies shared normalization to both sides") {
  auto r = metrics::wer_text("The CAT sat.", "the cat, sat");
  REQUIRE(r.edits() == 0);
}
