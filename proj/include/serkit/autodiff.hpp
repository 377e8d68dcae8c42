// serkit/autodiff.hpp
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
// Reverse-mode automatic differentiation over Eigen matrices with a
// define-by-run tape. A Tape lives for one forward/backward pass; leaf
// gradients are flushed into caller-owned sink matrices so parameters
// can persist across tapes.

#ifndef SERKIT_AUTODIFF_HPP_
#define SERKIT_AUTODIFF_HPP_

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <numbers>
#include <utility>
#include <vector>

#include "serkit/error.hpp"
#include "serkit/rng.hpp"

namespace serkit::ad {

using Matrix = Eigen::MatrixXd;

/// Handle to a node on a Tape. Only valid for the tape that made it.
struct Var {
  std::size_t index = static_cast<std::size_t>(-1);
};

class Tape {
 public:
  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Constant leaf; gradients are never tracked through it.
  Var input(Matrix value) { return make(std::move(value), false, nullptr); }

  /// Trainable leaf. After backward(), the accumulated gradient is
  /// added into *grad_sink (which must outlive the tape). A null sink
  /// degrades to a constant leaf.
  Var leaf(const Matrix& value, Matrix* grad_sink) {
    Var v = make(value, grad_sink != nullptr, nullptr);
    nodes_[v.index].sink = grad_sink;
    return v;
  }

  const Matrix& value(Var v) const { return nodes_.at(v.index).value; }

  /// Gradient of the last backward() root with respect to v; zeros if
  /// no gradient reached it.
  Matrix grad_of(Var v) const {
    const Node& n = nodes_.at(v.index);
    if (n.grad.size() == 0) return Matrix::Zero(n.value.rows(), n.value.cols());
    return n.grad;
  }

  std::size_t size() const { return nodes_.size(); }

  // -- elementwise ----------------------------------------------------------

  Var add(Var a, Var b) {
    check_same_shape(a, b, "add");
    return binary(a, b, value(a) + value(b),
                  [](const Matrix& g, const Matrix&, const Matrix&) { return g; },
                  [](const Matrix& g, const Matrix&, const Matrix&) { return g; });
  }

  Var sub(Var a, Var b) {
    check_same_shape(a, b, "sub");
    return binary(a, b, value(a) - value(b),
                  [](const Matrix& g, const Matrix&, const Matrix&) { return g; },
                  [](const Matrix& g, const Matrix&, const Matrix&) -> Matrix {
                    return -g;
                  });
  }

  Var mul(Var a, Var b) {
    check_same_shape(a, b, "mul");
    return binary(a, b, value(a).cwiseProduct(value(b)),
                  [](const Matrix& g, const Matrix&, const Matrix& vb) -> Matrix {
                    return g.cwiseProduct(vb);
                  },
                  [](const Matrix& g, const Matrix& va, const Matrix&) -> Matrix {
                    return g.cwiseProduct(va);
                  });
  }

  Var div(Var a, Var b) {
    check_same_shape(a, b, "div");
    return binary(a, b, value(a).cwiseQuotient(value(b)),
                  [](const Matrix& g, const Matrix&, const Matrix& vb) -> Matrix {
                    return g.cwiseQuotient(vb);
                  },
                  [](const Matrix& g, const Matrix& va, const Matrix& vb) -> Matrix {
                    return -g.cwiseProduct(va).cwiseQuotient(vb.cwiseProduct(vb));
                  });
  }

  Var scale(Var a, double c) {
    return unary(a, value(a) * c, [c](Tape& t, std::size_t ai, const Matrix& g,
                                      const Matrix&, const Matrix&) {
      t.accum(ai, g * c);
    });
  }

  Var add_scalar(Var a, double c) {
    return unary(a, value(a).array() + c,
                 [](Tape& t, std::size_t ai, const Matrix& g, const Matrix&,
                    const Matrix&) { t.accum(ai, g); });
  }

  /// Multiplies a by the scalar held in the 1x1 variable s.
  Var scale_by(Var a, Var s) {
    check_scalar(s, "scale_by");
    const double sv = value(s)(0, 0);
    Matrix out = value(a) * sv;
    const std::size_t ai = a.index, si = s.index;
    return make(std::move(out), needs(a) || needs(s), [ai, si, sv](Tape& t, Node& n) {
      t.accum(ai, n.grad * sv);
      Matrix gs(1, 1);
      gs(0, 0) = n.grad.cwiseProduct(t.nodes_[ai].value).sum();
      t.accum(si, gs);
    });
  }

  Var neg(Var a) { return scale(a, -1.0); }

  Var tanh(Var a) {
    Matrix out = value(a).array().tanh();
    const std::size_t ai = a.index;
    return make(std::move(out), needs(a), [ai](Tape& t, Node& n) {
      t.accum(ai, (n.grad.array() * (1.0 - n.value.array().square())).matrix());
    });
  }

  /// Exact GELU, x * Phi(x) with the Gaussian CDF.
  Var gelu(Var a) {
    Matrix out = value(a).unaryExpr([](double v) { return v * gauss_cdf(v); });
    const std::size_t ai = a.index;
    return make(std::move(out), needs(a), [ai](Tape& t, Node& n) {
      const Matrix deriv = t.nodes_[ai].value.unaryExpr([](double v) {
        const double pdf =
            std::exp(-0.5 * v * v) / std::sqrt(2.0 * std::numbers::pi);
        return gauss_cdf(v) + v * pdf;
      });
      t.accum(ai, n.grad.cwiseProduct(deriv));
    });
  }

  // -- linear algebra --------------------------------------------------------

  Var matmul(Var a, Var b) {
    if (value(a).cols() != value(b).rows())
      throw ContractError("matmul: inner dimensions disagree");
    Matrix out = value(a) * value(b);
    const std::size_t ai = a.index, bi = b.index;
    return make(std::move(out), needs(a) || needs(b), [ai, bi](Tape& t, Node& n) {
      t.accum(ai, n.grad * t.nodes_[bi].value.transpose());
      t.accum(bi, t.nodes_[ai].value.transpose() * n.grad);
    });
  }

  Var transpose(Var a) {
    Matrix out = value(a).transpose();
    const std::size_t ai = a.index;
    return make(std::move(out), needs(a),
                [ai](Tape& t, Node& n) { t.accum(ai, n.grad.transpose()); });
  }

  /// Adds the column vector b to every column of a.
  Var add_col_broadcast(Var a, Var b) {
    if (value(b).cols() != 1 || value(b).rows() != value(a).rows())
      throw ContractError("add_col_broadcast: b must be a column matching a's rows");
    Matrix out = value(a).colwise() + Eigen::VectorXd(value(b).col(0));
    const std::size_t ai = a.index, bi = b.index;
    return make(std::move(out), needs(a) || needs(b), [ai, bi](Tape& t, Node& n) {
      t.accum(ai, n.grad);
      t.accum(bi, n.grad.rowwise().sum());
    });
  }

  Var concat_rows(Var a, Var b) {
    if (value(a).cols() != value(b).cols())
      throw ContractError("concat_rows: column counts disagree");
    Matrix out(value(a).rows() + value(b).rows(), value(a).cols());
    out.topRows(value(a).rows()) = value(a);
    out.bottomRows(value(b).rows()) = value(b);
    const std::size_t ai = a.index, bi = b.index;
    const Eigen::Index ra = value(a).rows(), rb = value(b).rows();
    return make(std::move(out), needs(a) || needs(b), [ai, bi, ra, rb](Tape& t, Node& n) {
      t.accum(ai, n.grad.topRows(ra));
      t.accum(bi, n.grad.bottomRows(rb));
    });
  }

  /// Horizontal concatenation of equally tall matrices.
  Var hstack(const std::vector<Var>& parts) {
    if (parts.empty()) throw ContractError("hstack: no parts");
    Eigen::Index rows = value(parts[0]).rows(), cols = 0;
    for (Var p : parts) {
      if (value(p).rows() != rows) throw ContractError("hstack: row counts disagree");
      cols += value(p).cols();
    }
    Matrix out(rows, cols);
    std::vector<std::size_t> idx;
    std::vector<Eigen::Index> offs, widths;
    bool any = false;
    Eigen::Index at = 0;
    for (Var p : parts) {
      const Eigen::Index w = value(p).cols();
      out.middleCols(at, w) = value(p);
      idx.push_back(p.index);
      offs.push_back(at);
      widths.push_back(w);
      any = any || needs(p);
      at += w;
    }
    return make(std::move(out), any, [idx, offs, widths](Tape& t, Node& n) {
      for (std::size_t k = 0; k < idx.size(); ++k)
        t.accum(idx[k], n.grad.middleCols(offs[k], widths[k]));
    });
  }

  Var slice_rows(Var a, Eigen::Index first, Eigen::Index count) {
    if (first < 0 || count < 1 || first + count > value(a).rows())
      throw ContractError("slice_rows: range outside matrix");
    Matrix out = value(a).middleRows(first, count);
    const std::size_t ai = a.index;
    const Eigen::Index rows = value(a).rows(), cols = value(a).cols();
    return make(std::move(out), needs(a),
                [ai, first, count, rows, cols](Tape& t, Node& n) {
                  Matrix d = Matrix::Zero(rows, cols);
                  d.middleRows(first, count) = n.grad;
                  t.accum(ai, d);
                });
  }

  // -- normalization and attention -------------------------------------------

  /// Softmax along each column (each column sums to one).
  Var softmax_cols(Var a) { return softmax_impl(a, true); }

  /// Softmax along each row (each row sums to one).
  Var softmax_rows(Var a) { return softmax_impl(a, false); }

  /// Per-column layer normalization over the rows (feature axis), with
  /// elementwise gain and bias columns.
  Var layer_norm_cols(Var x, Var gamma, Var beta, double eps = 1e-5) {
    const Matrix& v = value(x);
    if (value(gamma).rows() != v.rows() || value(gamma).cols() != 1 ||
        value(beta).rows() != v.rows() || value(beta).cols() != 1)
      throw ContractError("layer_norm_cols: gain/bias must be feature columns");
    const Eigen::Index d = v.rows();
    Matrix xhat(v.rows(), v.cols());
    Matrix out(v.rows(), v.cols());
    Eigen::VectorXd inv_std(v.cols());
    const auto g_col = value(gamma).col(0).array();
    const auto b_col = value(beta).col(0).array();
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
      const double mu = v.col(j).mean();
      const double var = (v.col(j).array() - mu).square().sum() / d;
      inv_std(j) = 1.0 / std::sqrt(var + eps);
      xhat.col(j) = (v.col(j).array() - mu) * inv_std(j);
      out.col(j) = (xhat.col(j).array() * g_col + b_col).matrix();
    }
    const std::size_t xi = x.index, gi = gamma.index, bi = beta.index;
    auto memo = std::make_shared<std::pair<Matrix, Eigen::VectorXd>>(std::move(xhat),
                                                                     std::move(inv_std));
    return make(std::move(out), needs(x) || needs(gamma) || needs(beta),
                [xi, gi, bi, memo, d](Tape& t, Node& n) {
                  const Matrix& xh = memo->first;
                  const Eigen::VectorXd& inv = memo->second;
                  const auto gamma_col = t.nodes_[gi].value.col(0).array();
                  t.accum(gi, (n.grad.cwiseProduct(xh)).rowwise().sum());
                  t.accum(bi, n.grad.rowwise().sum());
                  if (!t.nodes_[xi].needs_grad) return;
                  Matrix dx(xh.rows(), xh.cols());
                  for (Eigen::Index j = 0; j < xh.cols(); ++j) {
                    Eigen::ArrayXd dxhat = n.grad.col(j).array() * gamma_col;
                    const double m1 = dxhat.mean();
                    const double m2 = (dxhat * xh.col(j).array()).mean();
                    dx.col(j) =
                        ((dxhat - m1 - xh.col(j).array() * m2) * inv(j)).matrix();
                  }
                  t.accum(xi, dx);
                });
  }

  // -- reductions -------------------------------------------------------------

  /// Row-wise mean over the first valid_cols columns; returns d x 1.
  Var mean_cols_valid(Var a, Eigen::Index valid_cols) {
    check_valid_cols(a, valid_cols, "mean_cols_valid");
    Matrix out = value(a).leftCols(valid_cols).rowwise().mean();
    const std::size_t ai = a.index;
    const Eigen::Index rows = value(a).rows(), cols = value(a).cols();
    return make(std::move(out), needs(a),
                [ai, valid_cols, rows, cols](Tape& t, Node& n) {
                  Matrix d = Matrix::Zero(rows, cols);
                  d.leftCols(valid_cols) =
                      (n.grad / static_cast<double>(valid_cols))
                          .replicate(1, valid_cols);
                  t.accum(ai, d);
                });
  }

  /// Row-wise max over the first valid_cols columns; returns d x 1.
  /// Ties route the gradient to the first maximizing column.
  Var max_cols_valid(Var a, Eigen::Index valid_cols) {
    check_valid_cols(a, valid_cols, "max_cols_valid");
    const Matrix& v = value(a);
    Matrix out(v.rows(), 1);
    auto arg = std::make_shared<std::vector<Eigen::Index>>(v.rows());
    for (Eigen::Index r = 0; r < v.rows(); ++r) {
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < valid_cols; ++c)
        if (v(r, c) > v(r, best)) best = c;
      (*arg)[r] = best;
      out(r, 0) = v(r, best);
    }
    const std::size_t ai = a.index;
    const Eigen::Index rows = v.rows(), cols = v.cols();
    return make(std::move(out), needs(a), [ai, arg, rows, cols](Tape& t, Node& n) {
      Matrix d = Matrix::Zero(rows, cols);
      for (Eigen::Index r = 0; r < rows; ++r) d(r, (*arg)[r]) += n.grad(r, 0);
      t.accum(ai, d);
    });
  }

  Var sum_all(Var a) {
    Matrix out(1, 1);
    out(0, 0) = value(a).sum();
    const std::size_t ai = a.index;
    const Eigen::Index rows = value(a).rows(), cols = value(a).cols();
    return make(std::move(out), needs(a), [ai, rows, cols](Tape& t, Node& n) {
      t.accum(ai, Matrix::Constant(rows, cols, n.grad(0, 0)));
    });
  }

  Var mean_all(Var a) { return scale(sum_all(a), 1.0 / value(a).size()); }

  // -- regularization ----------------------------------------------------------

  /// Inverted dropout: kept entries are scaled by 1/(1-rate) so the
  /// expectation is unchanged. rate 0 is the identity.
  Var dropout(Var a, double rate, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0)
      throw ContractError("dropout: rate must lie in [0, 1)");
    if (rate == 0.0) return a;
    const Matrix& v = value(a);
    auto mask = std::make_shared<Matrix>(v.rows(), v.cols());
    const double keep_scale = 1.0 / (1.0 - rate);
    for (Eigen::Index c = 0; c < v.cols(); ++c)
      for (Eigen::Index r = 0; r < v.rows(); ++r)
        (*mask)(r, c) = rng.uniform() < rate ? 0.0 : keep_scale;
    Matrix out = v.cwiseProduct(*mask);
    const std::size_t ai = a.index;
    return make(std::move(out), needs(a), [ai, mask](Tape& t, Node& n) {
      t.accum(ai, n.grad.cwiseProduct(*mask));
    });
  }

  // -- driver -------------------------------------------------------------------

  /// Reverse pass from a scalar root. Single use per tape.
  void backward(Var root) {
    check_scalar(root, "backward");
    if (backward_done_)
      throw ContractError("backward: tape already consumed");
    backward_done_ = true;
    if (!nodes_[root.index].needs_grad) return;
    nodes_[root.index].grad = Matrix::Ones(1, 1);
    for (std::size_t i = root.index + 1; i-- > 0;) {
      Node& n = nodes_[i];
      if (n.grad.size() == 0) continue;
      if (n.backward) n.backward(*this, n);
      if (n.sink) *n.sink += n.grad;
    }
  }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool needs_grad = false;
    std::function<void(Tape&, Node&)> backward;
    Matrix* sink = nullptr;
  };

  template <typename Fn>
  Var make(Matrix value, bool needs_grad, Fn&& backward) {
    Node n;
    n.value = std::move(value);
    n.needs_grad = needs_grad;
    if constexpr (!std::is_same_v<std::decay_t<Fn>, std::nullptr_t>) {
      if (needs_grad) n.backward = std::forward<Fn>(backward);
    }
    nodes_.push_back(std::move(n));
    return Var{nodes_.size() - 1};
  }

  bool needs(Var v) const { return nodes_[v.index].needs_grad; }

  void accum(std::size_t i, const Matrix& delta) {
    Node& n = nodes_[i];
    if (!n.needs_grad) return;
    if (n.grad.size() == 0)
      n.grad = delta;
    else
      n.grad += delta;
  }

  void check_same_shape(Var a, Var b, const char* op) const {
    if (value(a).rows() != value(b).rows() || value(a).cols() != value(b).cols())
      throw ContractError(std::string(op) + ": shapes disagree");
  }

  void check_scalar(Var v, const char* op) const {
    if (value(v).rows() != 1 || value(v).cols() != 1)
      throw ContractError(std::string(op) + ": expected a 1x1 matrix");
  }

  void check_valid_cols(Var a, Eigen::Index valid_cols, const char* op) const {
    if (valid_cols < 1 || valid_cols > value(a).cols())
      throw ContractError(std::string(op) + ": valid_cols outside matrix");
  }

  template <typename Ga, typename Gb>
  Var binary(Var a, Var b, Matrix out, Ga&& ga, Gb&& gb) {
    const std::size_t ai = a.index, bi = b.index;
    return make(std::move(out), needs(a) || needs(b),
                [ai, bi, ga = std::forward<Ga>(ga), gb = std::forward<Gb>(gb)](
                    Tape& t, Node& n) {
                  t.accum(ai, ga(n.grad, t.nodes_[ai].value, t.nodes_[bi].value));
                  t.accum(bi, gb(n.grad, t.nodes_[ai].value, t.nodes_[bi].value));
                });
  }

  template <typename Fn>
  Var unary(Var a, Matrix out, Fn&& fn) {
    const std::size_t ai = a.index;
    return make(std::move(out), needs(a),
                [ai, fn = std::forward<Fn>(fn)](Tape& t, Node& n) {
                  fn(t, ai, n.grad, t.nodes_[ai].value, n.value);
                });
  }

  Var softmax_impl(Var a, bool cols) {
    const Matrix& v = value(a);
    Matrix out(v.rows(), v.cols());
    if (cols) {
      for (Eigen::Index j = 0; j < v.cols(); ++j) {
        Eigen::ArrayXd e = (v.col(j).array() - v.col(j).maxCoeff()).exp();
        out.col(j) = (e / e.sum()).matrix();
      }
    } else {
      for (Eigen::Index i = 0; i < v.rows(); ++i) {
        Eigen::ArrayXd e = (v.row(i).array() - v.row(i).maxCoeff()).exp();
        out.row(i) = (e / e.sum()).matrix().transpose();
      }
    }
    const std::size_t ai = a.index;
    return make(std::move(out), needs(a), [ai, cols](Tape& t, Node& n) {
      const Matrix& s = n.value;
      Matrix d(s.rows(), s.cols());
      if (cols) {
        for (Eigen::Index j = 0; j < s.cols(); ++j) {
          const double dot = (s.col(j).array() * n.grad.col(j).array()).sum();
          d.col(j) = (s.col(j).array() * (n.grad.col(j).array() - dot)).matrix();
        }
      } else {
        for (Eigen::Index i = 0; i < s.rows(); ++i) {
          const double dot = (s.row(i).array() * n.grad.row(i).array()).sum();
          d.row(i) = (s.row(i).array() * (n.grad.row(i).array() - dot)).matrix();
        }
      }
      t.accum(ai, d);
    });
  }

  static double gauss_cdf(double x) {
    return 0.5 * (1.0 + std::erf(x / std::numbers::sqrt2));
  }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

}  // namespace serkit::ad

#endif  // SERKIT_AUTODIFF_HPP_
