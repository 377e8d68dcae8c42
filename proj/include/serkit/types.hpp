// serkit/types.hpp
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

#ifndef SERKIT_TYPES_HPP_
#define SERKIT_TYPES_HPP_

#include <array>
#include <cmath>
#include <string>

#include "serkit/error.hpp"

namespace serkit {

/// The three continuous emotion dimensions.
enum class Dimension { kArousal = 0, kValence = 1, kDominance = 2 };

inline constexpr std::array<Dimension, 3> kAllDimensions = {
    Dimension::kArousal, Dimension::kValence, Dimension::kDominance};

inline const char* to_string(Dimension d) {
  switch (d) {
    case Dimension::kArousal: return "arousal";
    case Dimension::kValence: return "valence";
    case Dimension::kDominance: return "dominance";
  }
  return "?";
}

inline Dimension dimension_from_string(const std::string& s) {
  if (s == "arousal") return Dimension::kArousal;
  if (s == "valence") return Dimension::kValence;
  if (s == "dominance") return Dimension::kDominance;
  throw InvalidInputError("unknown emotion dimension: '" + s + "'");
}

/// Normalized (arousal, valence, dominance) scores in [0, 1]. Used both
/// for corpus targets and for model estimates; estimates coming out of a
/// linear regression head may land slightly outside the range.
struct EmotionTriple {
  double arousal = 0.0;
  double valence = 0.0;
  double dominance = 0.0;

  double operator[](Dimension d) const {
    switch (d) {
      case Dimension::kArousal: return arousal;
      case Dimension::kValence: return valence;
      case Dimension::kDominance: return dominance;
    }
    return 0.0;
  }

  double& operator[](Dimension d) {
    switch (d) {
      case Dimension::kArousal: return arousal;
      case Dimension::kValence: return valence;
      default: return dominance;
    }
  }

  bool finite() const {
    return std::isfinite(arousal) && std::isfinite(valence) && std::isfinite(dominance);
  }

  bool in_unit_range() const {
    return arousal >= 0.0 && arousal <= 1.0 && valence >= 0.0 && valence <= 1.0 &&
           dominance >= 0.0 && dominance <= 1.0;
  }
};

/// Corpus partition tags. test1 contains material from sources seen in
/// train/development; test2 is held out entirely ("unseen scenarios").
enum class Partition { kTrain, kDevelopment, kTest1, kTest2 };

inline const char* to_string(Partition p) {
  switch (p) {
    case Partition::kTrain: return "train";
    case Partition::kDevelopment: return "development";
    case Partition::kTest1: return "test1";
    case Partition::kTest2: return "test2";
  }
  return "?";
}

inline Partition partition_from_string(const std::string& s) {
  if (s == "train") return Partition::kTrain;
  if (s == "development" || s == "dev") return Partition::kDevelopment;
  if (s == "test1") return Partition::kTest1;
  if (s == "test2") return Partition::kTest2;
  throw InvalidInputError("unknown partition tag: '" + s + "'");
}

/// Human-readable scenario label used in reports.
inline const char* scenario_label(Partition p) {
  switch (p) {
    case Partition::kTest1: return "Seen Scenarios";
    case Partition::kTest2: return "Unseen Scenarios";
    case Partition::kDevelopment: return "Development";
    case Partition::kTrain: return "Train";
  }
  return "?";
}

}  // namespace serkit

#endif  // SERKIT_TYPES_HPP_
