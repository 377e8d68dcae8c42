// tests/oracles.hpp
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
// Independent reference implementations used only by the test suites.
// These deliberately take different algebraic routes than the library so
// that agreement is meaningful.

#ifndef SERKIT_TESTS_ORACLES_HPP_
#define SERKIT_TESTS_ORACLES_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace serkit::testing {

inline double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

/// Population standard deviation.
inline double stddev_of(const std::vector<double>& v) {
  const double mu = mean_of(v);
  double acc = 0.0;
  for (double x : v) acc += (x - mu) * (x - mu);
  return std::sqrt(acc / static_cast<double>(v.size()));
}

/// Pearson correlation; NaN for constant vectors.
inline double pearson(const std::vector<double>& y, const std::vector<double>& yhat) {
  const double mu_y = mean_of(y), mu_e = mean_of(yhat);
  double cov = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) cov += (y[i] - mu_y) * (yhat[i] - mu_e);
  cov /= static_cast<double>(y.size());
  return cov / (stddev_of(y) * stddev_of(yhat));
}

/// CCC through the rho * sigma * sigma_hat route (the library uses the
/// covariance form).
inline double ccc_oracle(const std::vector<double>& y, const std::vector<double>& yhat) {
  const double sy = stddev_of(y), se = stddev_of(yhat);
  const double mu_y = mean_of(y), mu_e = mean_of(yhat);
  const double denom = sy * sy + se * se + (mu_y - mu_e) * (mu_y - mu_e);
  if (denom < 1e-12) return 0.0;
  const double rho = pearson(y, yhat);
  const double num = 2.0 * rho * sy * se;
  return (std::isfinite(num) ? num : 0.0) / denom;
}

/// Plain memoized edit distance, no backtrace, no counts.
inline std::size_t edit_distance_oracle(const std::vector<std::string>& ref,
                                        const std::vector<std::string>& hyp) {
  struct Solver {
    const std::vector<std::string>& r;
    const std::vector<std::string>& h;
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    std::size_t solve(std::size_t i, std::size_t j) {
      if (i == 0) return j;
      if (j == 0) return i;
      auto key = std::make_pair(i, j);
      auto it = memo.find(key);
      if (it != memo.end()) return it->second;
      std::size_t best = std::min(
          {solve(i - 1, j - 1) + (r[i - 1] == h[j - 1] ? 0 : 1),
           solve(i - 1, j) + 1, solve(i, j - 1) + 1});
      memo[key] = best;
      return best;
    }
  };
  Solver s{ref, hyp, {}};
  return s.solve(ref.size(), hyp.size());
}

/// Every word sequence over `vocab` of length 0..max_len.
inline std::vector<std::vector<std::string>> enumerate_sequences(
    const std::vector<std::string>& vocab, std::size_t max_len) {
  std::vector<std::vector<std::string>> out = {{}};
  std::vector<std::vector<std::string>> frontier = {{}};
  for (std::size_t len = 1; len <= max_len; ++len) {
    std::vector<std::vector<std::string>> next;
    for (const auto& seq : frontier) {
      for (const auto& w : vocab) {
        auto grown = seq;
        grown.push_back(w);
        next.push_back(grown);
      }
    }
    out.insert(out.end(), next.begin(), next.end());
    frontier = std::move(next);
  }
  return out;
}

}  // namespace serkit::testing

#endif  // SERKIT_TESTS_ORACLES_HPP_
