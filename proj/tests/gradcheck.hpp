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
// Central-difference gradient checking used by the test suite. The
// numeric side never touches the library's backward pass, so it acts
// as an independent oracle for it.

#ifndef SERKIT_TESTS_GRADCHECK_HPP_
#define SERKIT_TESTS_GRADCHECK_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include "serkit/autodiff.hpp"
#include "serkit/rng.hpp"

namespace serkit::testing {

/// Builds a scalar loss from leaf variables handed to it in order.
using GraphBuilder =
    std::function<ad::Var(ad::Tape&, const std::vector<ad::Var>&)>;

inline double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) /
         std::max(1.0, std::abs(analytic) + std::abs(numeric));
}

/// Runs the builder once with trainable leaves to collect analytic
/// gradients, then perturbs every parameter entry (or a sample of
/// them) with central differences. Returns the worst relative error.
inline double max_grad_error(const GraphBuilder& build,
                             std::vector<ad::Matrix> params, double step = 1e-4,
                             std::size_t max_entries_per_param = 0,
                             std::uint64_t sample_seed = 1234) {
  std::vector<ad::Matrix> grads;
  for (const auto& p : params)
    grads.push_back(ad::Matrix::Zero(p.rows(), p.cols()));

  {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (std::size_t i = 0; i < params.size(); ++i)
      vars.push_back(tape.leaf(params[i], &grads[i]));
    tape.backward(build(tape, vars));
  }

  const auto eval = [&](const std::vector<ad::Matrix>& values) {
    ad::Tape tape;
    std::vector<ad::Var> vars;
    for (const auto& v : values) vars.push_back(tape.input(v));
    return tape.value(build(tape, vars))(0, 0);
  };

  Rng rng(sample_seed);
  double worst = 0.0;
  for (std::size_t p = 0; p < params.size(); ++p) {
    std::vector<std::pair<Eigen::Index, Eigen::Index>> entries;
    for (Eigen::Index c = 0; c < params[p].cols(); ++c)
      for (Eigen::Index r = 0; r < params[p].rows(); ++r)
        entries.push_back({r, c});
    if (max_entries_per_param > 0 && entries.size() > max_entries_per_param) {
      rng.shuffle(entries);
      entries.resize(max_entries_per_param);
    }
    for (auto [r, c] : entries) {
      const double saved = params[p](r, c);
      params[p](r, c) = saved + step;
      const double up = eval(params);
      params[p](r, c) = saved - step;
      const double down = eval(params);
      params[p](r, c) = saved;
      const double numeric = (up - down) / (2.0 * step);
      worst = std::max(worst, relative_error(grads[p](r, c), numeric));
    }
  }
  return worst;
}

inline ad::Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng,
                                double lo = -1.0, double hi = 1.0) {
  ad::Matrix m(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) m(r, c) = rng.uniform(lo, hi);
  return m;
}

/// Gradient check against persistent parameters: the builder replays
/// the model onto a fresh tape each call and parameters are perturbed
/// in place. ParamLike needs .value, .grad, and .trainable members.
template <typename ParamLike>
inline double max_grad_error_params(
    const std::function<ad::Var(ad::Tape&)>& build,
    const std::vector<ParamLike*>& params, double step = 1e-4,
    std::size_t max_entries_per_param = 0, std::uint64_t sample_seed = 99) {
  for (auto* p : params) p->grad.setZero();
  std::vector<ad::Matrix> grads;
  {
    ad::Tape tape;
    tape.backward(build(tape));
  }
  for (auto* p : params) grads.push_back(p->grad);

  const auto eval = [&]() {
    ad::Tape tape;
    return tape.value(build(tape))(0, 0);
  };

  Rng rng(sample_seed);
  double worst = 0.0;
  for (std::size_t k = 0; k < params.size(); ++k) {
    if (!params[k]->trainable) continue;
    ad::Matrix& value = params[k]->value;
    std::vector<std::pair<Eigen::Index, Eigen::Index>> entries;
    for (Eigen::Index c = 0; c < value.cols(); ++c)
      for (Eigen::Index r = 0; r < value.rows(); ++r) entries.push_back({r, c});
    if (max_entries_per_param > 0 && entries.size() > max_entries_per_param) {
      rng.shuffle(entries);
      entries.resize(max_entries_per_param);
    }
    for (auto [r, c] : entries) {
      const double saved = value(r, c);
      value(r, c) = saved + step;
      const double up = eval();
      value(r, c) = saved - step;
      const double down = eval();
      value(r, c) = saved;
      const double numeric = (up - down) / (2.0 * step);
      worst = std::max(worst, relative_error(grads[k](r, c), numeric));
    }
    params[k]->grad.setZero();
  }
  return worst;
}

}  // namespace serkit::testing

#endif  // SERKIT_TESTS_GRADCHECK_HPP_
