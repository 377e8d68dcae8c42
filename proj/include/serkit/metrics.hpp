// serkit/metrics.hpp
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

#ifndef SERKIT_METRICS_HPP_
#define SERKIT_METRICS_HPP_

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

#include "serkit/error.hpp"
#include "serkit/types.hpp"

namespace serkit::metrics {

/// Target/estimate score vectors of equal length. All metric entry
/// points validate through this type.
struct ScoreVectorPair {
  std::vector<double> targets;
  std::vector<double> estimates;

  void validate() const {
    if (targets.size() != estimates.size())
      throw InvalidInputError("score vectors differ in length (" +
                              std::to_string(targets.size()) + " vs " +
                              std::to_string(estimates.size()) + ")");
    if (targets.size() < 2)
      throw InvalidInputError("need at least 2 score pairs, got " +
                              std::to_string(targets.size()));
    for (double v : targets)
      if (!std::isfinite(v)) throw InvalidInputError("non-finite target score");
    for (double v : estimates)
      if (!std::isfinite(v)) throw InvalidInputError("non-finite estimate score");
  }
};

namespace detail {

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

}  // namespace detail

/// Denominator guard below which the CCC of two (necessarily constant,
/// equal-mean) vectors is defined as 0.
inline constexpr double kCccDenominatorGuard = 1e-12;

/// Concordance correlation coefficient between targets and estimates,
/// computed with population (divide-by-N) statistics:
///
///   ccc = 2 cov(y, yhat) / (var(y) + var(yhat) + (mean(y) - mean(yhat))^2)
///
/// Ranges over [-1, 1]; 1 is perfect agreement, 0 no concordance.
inline double ccc(const ScoreVectorPair& pair) {
  pair.validate();
  const std::size_t n = pair.targets.size();
  const double mu_t = detail::mean(pair.targets);
  const double mu_e = detail::mean(pair.estimates);
  double var_t = 0.0, var_e = 0.0, cov = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double dt = pair.targets[i] - mu_t;
    const double de = pair.estimates[i] - mu_e;
    var_t += dt * dt;
    var_e += de * de;
    cov += dt * de;
  }
  var_t /= static_cast<double>(n);
  var_e /= static_cast<double>(n);
  cov /= static_cast<double>(n);
  const double mean_diff = mu_t - mu_e;
  const double denom = var_t + var_e + mean_diff * mean_diff;
  if (denom < kCccDenominatorGuard) return 0.0;
  return 2.0 * cov / denom;
}

inline double ccc(const std::vector<double>& targets, const std::vector<double>& estimates) {
  return ccc(ScoreVectorPair{targets, estimates});
}

/// Training objective: 1 minus the CCC averaged over the three emotion
/// dimensions of a batch. Lies in [0, 2].
inline double ccc_loss(const std::vector<EmotionTriple>& targets,
                       const std::vector<EmotionTriple>& estimates) {
  if (targets.size() != estimates.size())
    throw InvalidInputError("target/estimate batch size mismatch");
  double acc = 0.0;
  for (Dimension d : kAllDimensions) {
    std::vector<double> t(targets.size()), e(estimates.size());
    for (std::size_t i = 0; i < targets.size(); ++i) {
      t[i] = targets[i][d];
      e[i] = estimates[i][d];
    }
    acc += ccc(t, e);
  }
  return 1.0 - acc / 3.0;
}

/// Per-dimension CCC scores of one evaluation run on one partition.
struct CccReport {
  Partition partition = Partition::kTest1;
  std::map<Dimension, double> per_dimension;
  double mean_ccc = 0.0;

  static CccReport make(Partition partition, double arousal, double valence,
                        double dominance) {
    CccReport r;
    r.partition = partition;
    r.per_dimension[Dimension::kArousal] = arousal;
    r.per_dimension[Dimension::kValence] = valence;
    r.per_dimension[Dimension::kDominance] = dominance;
    r.mean_ccc = (arousal + valence + dominance) / 3.0;
    return r;
  }

  double operator[](Dimension d) const { return per_dimension.at(d); }
};

// ---------------------------------------------------------------------------
// Word error rate
// ---------------------------------------------------------------------------

/// Alignment counts of one reference/hypothesis pair (or an accumulated
/// corpus). wer = (S + D + I) / reference_words and may exceed 1.
struct WerResult {
  std::size_t substitutions = 0;
  std::size_t deletions = 0;
  std::size_t insertions = 0;
  std::size_t reference_words = 0;

  double wer() const {
    return static_cast<double>(substitutions + deletions + insertions) /
           static_cast<double>(reference_words);
  }

  std::size_t edits() const { return substitutions + deletions + insertions; }

  WerResult& operator+=(const WerResult& other) {
    substitutions += other.substitutions;
    deletions += other.deletions;
    insertions += other.insertions;
    reference_words += other.reference_words;
    return *this;
  }
};

/// Minimum-edit-distance word alignment with unit costs. When several
/// optimal alignments exist the backtrace prefers substitution over
/// deletion over insertion, so the (S, D, I) split is reproducible.
inline WerResult wer(const std::vector<std::string>& reference,
                     const std::vector<std::string>& hypothesis) {
  if (reference.empty())
    throw InvalidInputError("wer: reference word sequence is empty");
  const std::size_t nr = reference.size();
  const std::size_t nh = hypothesis.size();

  // dist[i][j]: edit distance between reference[0..i) and hypothesis[0..j).
  std::vector<std::vector<std::size_t>> dist(nr + 1, std::vector<std::size_t>(nh + 1, 0));
  for (std::size_t i = 0; i <= nr; ++i) dist[i][0] = i;
  for (std::size_t j = 0; j <= nh; ++j) dist[0][j] = j;
  for (std::size_t i = 1; i <= nr; ++i) {
    for (std::size_t j = 1; j <= nh; ++j) {
      const std::size_t sub =
          dist[i - 1][j - 1] + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1);
      const std::size_t del = dist[i - 1][j] + 1;
      const std::size_t ins = dist[i][j - 1] + 1;
      dist[i][j] = std::min({sub, del, ins});
    }
  }

  WerResult result;
  result.reference_words = nr;
  std::size_t i = nr, j = nh;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0 &&
        dist[i][j] == dist[i - 1][j - 1] + (reference[i - 1] == hypothesis[j - 1] ? 0 : 1)) {
      if (reference[i - 1] != hypothesis[j - 1]) ++result.substitutions;
      --i;
      --j;
    } else if (i > 0 && dist[i][j] == dist[i - 1][j] + 1) {
      ++result.deletions;
      --i;
    } else {
      ++result.insertions;
      --j;
    }
  }
  return result;
}

/// Shared WER text normalization: lower-case, strip punctuation (ASCII
/// characters other than letters, digits and intra-word apostrophes),
/// tokenize on whitespace. Applied identically to references and
/// hypotheses everywhere WER is reported.
inline std::vector<std::string> normalize_text(const std::string& text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char ch : text) {
    unsigned char c = static_cast<unsigned char>(ch);
    if (std::isalnum(c) || c == '\'')
      cleaned.push_back(static_cast<char>(std::tolower(c)));
    else
      cleaned.push_back(' ');
  }
  std::vector<std::string> tokens;
  std::size_t pos = 0;
  while (pos < cleaned.size()) {
    while (pos < cleaned.size() && cleaned[pos] == ' ') ++pos;
    std::size_t start = pos;
    while (pos < cleaned.size() && cleaned[pos] != ' ') ++pos;
    if (pos > start) {
      std::string tok = cleaned.substr(start, pos - start);
      // Apostrophes survive only inside words ("don't"), not as quotes.
      std::size_t b = tok.find_first_not_of('\'');
      std::size_t e = tok.find_last_not_of('\'');
      if (b == std::string::npos) continue;
      tokens.push_back(tok.substr(b, e - b + 1));
    }
  }
  return tokens;
}

/// WER of raw strings under the shared normalization.
inline WerResult wer_text(const std::string& reference, const std::string& hypothesis) {
  return wer(normalize_text(reference), normalize_text(hypothesis));
}

}  // namespace serkit::metrics

#endif  // SERKIT_METRICS_HPP_
