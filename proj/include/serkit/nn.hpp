// serkit/nn.hpp
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
// Parameters, the Adam optimizer, and the layer building blocks used
// by the encoders and prediction heads. Modules register named
// parameters in a ParamStore and replay them onto a fresh tape per
// forward pass, so parameter state persists across tapes.

#ifndef SERKIT_NN_HPP_
#define SERKIT_NN_HPP_

#include <cmath>
#include <cstdint>
#include <deque>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "serkit/autodiff.hpp"
#include "serkit/error.hpp"
#include "serkit/rng.hpp"

namespace serkit::nn {

using ad::Matrix;

struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  bool trainable = true;

  /// Registers this parameter on the tape. Frozen parameters enter as
  /// constants, which also prunes their backward subgraphs.
  ad::Var use(ad::Tape& tape) {
    return trainable ? tape.leaf(value, &grad) : tape.input(value);
  }

  std::size_t count() const { return static_cast<std::size_t>(value.size()); }
};

enum class Init { kZeros, kOnes, kNormal };

/// Owns parameters with stable addresses and hierarchical names such
/// as "audio/layer_0/attn/wq". Prefix operations drive freezing,
/// counting, and integrity checks.
class ParamStore {
 public:
  Parameter& create(const std::string& name, Eigen::Index rows, Eigen::Index cols,
                    Init init, Rng& rng, double init_std = 0.05) {
    if (index_.count(name))
      throw ContractError("parameter already exists: " + name);
    Parameter p;
    p.name = name;
    p.value = Matrix(rows, cols);
    switch (init) {
      case Init::kZeros: p.value.setZero(); break;
      case Init::kOnes: p.value.setOnes(); break;
      case Init::kNormal:
        for (Eigen::Index c = 0; c < cols; ++c)
          for (Eigen::Index r = 0; r < rows; ++r)
            p.value(r, c) = rng.normal(0.0, init_std);
        break;
    }
    p.grad = Matrix::Zero(rows, cols);
    params_.push_back(std::move(p));
    index_[name] = params_.size() - 1;
    return params_.back();
  }

  Parameter& at(const std::string& name) {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("no such parameter: " + name);
    return params_[it->second];
  }

  const Parameter& at(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw ContractError("no such parameter: " + name);
    return params_[it->second];
  }

  bool contains(const std::string& name) const { return index_.count(name) > 0; }

  std::vector<Parameter*> all() {
    std::vector<Parameter*> out;
    for (auto& p : params_) out.push_back(&p);
    return out;
  }

  std::vector<Parameter*> matching(const std::string& prefix) {
    std::vector<Parameter*> out;
    for (auto& p : params_)
      if (p.name.rfind(prefix, 0) == 0) out.push_back(&p);
    return out;
  }

  void zero_grads() {
    for (auto& p : params_) p.grad.setZero();
  }

  void set_trainable(const std::string& prefix, bool trainable) {
    for (auto* p : matching(prefix)) p->trainable = trainable;
  }

  std::size_t count_scalars(const std::string& prefix = "") const {
    std::size_t n = 0;
    for (const auto& p : params_)
      if (p.name.rfind(prefix, 0) == 0) n += p.count();
    return n;
  }

  std::size_t count_trainable(const std::string& prefix = "") const {
    std::size_t n = 0;
    for (const auto& p : params_)
      if (p.trainable && p.name.rfind(prefix, 0) == 0) n += p.count();
    return n;
  }

  /// Content hash of parameter values under a prefix; creation order
  /// is deterministic, so equal hashes mean equal values.
  std::uint64_t checksum(const std::string& prefix = "") const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& p : params_) {
      if (p.name.rfind(prefix, 0) != 0) continue;
      h = fnv1a(p.name.data(), p.name.size(), h);
      h = fnv1a(p.value.data(), static_cast<std::size_t>(p.value.size()) *
                                    sizeof(double), h);
    }
    return h;
  }

  std::size_t size() const { return params_.size(); }

  /// Binary serialization: name, shape, trainable flag, raw doubles
  /// (little-endian host layout).
  void save_values(std::ostream& out) const {
    write_u64(out, params_.size());
    for (const auto& p : params_) {
      write_u64(out, p.name.size());
      out.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
      write_u64(out, static_cast<std::uint64_t>(p.value.rows()));
      write_u64(out, static_cast<std::uint64_t>(p.value.cols()));
      out.put(p.trainable ? 1 : 0);
      out.write(reinterpret_cast<const char*>(p.value.data()),
                static_cast<std::streamsize>(p.value.size() * sizeof(double)));
    }
    if (!out) throw DataError("parameter serialization failed");
  }

  /// Loads values into an existing store; every stored parameter must
  /// already exist with the same shape.
  void load_values(std::istream& in) {
    const std::uint64_t n = read_u64(in);
    if (n != params_.size())
      throw DataError("checkpoint holds " + std::to_string(n) +
                      " parameters, model has " + std::to_string(params_.size()));
    for (std::uint64_t i = 0; i < n; ++i) {
      const std::uint64_t name_len = read_u64(in);
      std::string name(name_len, '\0');
      in.read(name.data(), static_cast<std::streamsize>(name_len));
      const auto rows = static_cast<Eigen::Index>(read_u64(in));
      const auto cols = static_cast<Eigen::Index>(read_u64(in));
      const int trainable = in.get();
      if (!in) throw DataError("truncated parameter stream");
      Parameter& p = at(name);
      if (p.value.rows() != rows || p.value.cols() != cols)
        throw DataError("shape mismatch for parameter " + name);
      in.read(reinterpret_cast<char*>(p.value.data()),
              static_cast<std::streamsize>(p.value.size() * sizeof(double)));
      if (!in) throw DataError("truncated parameter stream");
      p.trainable = trainable != 0;
    }
  }

 private:
  static void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  static std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw DataError("truncated parameter stream");
    return v;
  }

  std::deque<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Optimizer
// ---------------------------------------------------------------------------

struct AdamConfig {
  double learning_rate = 1e-5;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool clip_gradients = true;
  double clip_norm = 1.0;
};

/// Adam with optional global-norm gradient clipping across all
/// parameters passed to a step.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : cfg_(config) {}

  const AdamConfig& config() const { return cfg_; }

  /// Applies one update from the accumulated gradients and returns the
  /// pre-clip global gradient norm. Frozen parameters are skipped.
  double step(const std::vector<Parameter*>& params) {
    double sq = 0.0;
    for (const Parameter* p : params)
      if (p->trainable) sq += p->grad.squaredNorm();
    const double norm = std::sqrt(sq);

    double scale = 1.0;
    if (cfg_.clip_gradients && norm > cfg_.clip_norm && norm > 0.0)
      scale = cfg_.clip_norm / norm;

    ++t_;
    const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    for (Parameter* p : params) {
      if (!p->trainable) continue;
      auto& slot = state_[p];
      if (slot.m.size() == 0) {
        slot.m = Matrix::Zero(p->value.rows(), p->value.cols());
        slot.v = Matrix::Zero(p->value.rows(), p->value.cols());
      }
      const Matrix g = p->grad * scale;
      slot.m = cfg_.beta1 * slot.m + (1.0 - cfg_.beta1) * g;
      slot.v = cfg_.beta2 * slot.v + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
      const Matrix mhat = slot.m / bc1;
      const Matrix vhat = slot.v / bc2;
      p->value.array() -=
          cfg_.learning_rate * mhat.array() / (vhat.array().sqrt() + cfg_.epsilon);
    }
    return norm;
  }

  std::int64_t steps_taken() const { return t_; }

 private:
  struct Slot {
    Matrix m, v;
  };
  AdamConfig cfg_;
  std::unordered_map<Parameter*, Slot> state_;
  std::int64_t t_ = 0;
};

// ---------------------------------------------------------------------------
// Layers
// ---------------------------------------------------------------------------

class Linear {
 public:
  Linear() = default;
  Linear(ParamStore& store, const std::string& name, Eigen::Index in,
         Eigen::Index out, Rng& rng, double init_std = 0.05)
      : w_(&store.create(name + "/w", out, in, Init::kNormal, rng, init_std)),
        b_(&store.create(name + "/b", out, 1, Init::kZeros, rng)) {}

  ad::Var forward(ad::Tape& t, ad::Var x) const {
    return t.add_col_broadcast(t.matmul(w_->use(t), x), b_->use(t));
  }

 private:
  Parameter* w_ = nullptr;
  Parameter* b_ = nullptr;
};

class LayerNorm {
 public:
  LayerNorm() = default;
  LayerNorm(ParamStore& store, const std::string& name, Eigen::Index dim, Rng& rng)
      : gamma_(&store.create(name + "/gamma", dim, 1, Init::kOnes, rng)),
        beta_(&store.create(name + "/beta", dim, 1, Init::kZeros, rng)) {}

  ad::Var forward(ad::Tape& t, ad::Var x) const {
    return t.layer_norm_cols(x, gamma_->use(t), beta_->use(t));
  }

 private:
  Parameter* gamma_ = nullptr;
  Parameter* beta_ = nullptr;
};

class MultiHeadSelfAttention {
 public:
  MultiHeadSelfAttention() = default;
  MultiHeadSelfAttention(ParamStore& store, const std::string& name,
                         Eigen::Index dim, Eigen::Index heads, Rng& rng)
      : dim_(dim), heads_(heads) {
    if (heads < 1 || dim % heads != 0)
      throw ContractError("attention heads must divide the hidden size");
    wq_ = Linear(store, name + "/wq", dim, dim, rng);
    wk_ = Linear(store, name + "/wk", dim, dim, rng);
    wv_ = Linear(store, name + "/wv", dim, dim, rng);
    wo_ = Linear(store, name + "/wo", dim, dim, rng);
  }

  ad::Var forward(ad::Tape& t, ad::Var x) const {
    const Eigen::Index dh = dim_ / heads_;
    ad::Var q = wq_.forward(t, x);
    ad::Var k = wk_.forward(t, x);
    ad::Var v = wv_.forward(t, x);
    ad::Var merged{};
    for (Eigen::Index h = 0; h < heads_; ++h) {
      ad::Var qh = t.slice_rows(q, h * dh, dh);
      ad::Var kh = t.slice_rows(k, h * dh, dh);
      ad::Var vh = t.slice_rows(v, h * dh, dh);
      ad::Var scores =
          t.scale(t.matmul(t.transpose(qh), kh), 1.0 / std::sqrt(double(dh)));
      ad::Var attn = t.softmax_rows(scores);
      ad::Var oh = t.matmul(vh, t.transpose(attn));
      merged = h == 0 ? oh : t.concat_rows(merged, oh);
    }
    return wo_.forward(t, merged);
  }

 private:
  Eigen::Index dim_ = 0, heads_ = 0;
  Linear wq_, wk_, wv_, wo_;
};

/// Pre-norm transformer block: x + Attn(LN(x)), then + FFN(LN(.)).
/// No terminal normalization, so amplitude cues survive the residual
/// stream across the whole stack.
class TransformerLayer {
 public:
  TransformerLayer() = default;
  TransformerLayer(ParamStore& store, const std::string& name, Eigen::Index dim,
                   Eigen::Index heads, Eigen::Index ffn_hidden, Rng& rng)
      : ln1_(store, name + "/ln1", dim, rng),
        attn_(store, name + "/attn", dim, heads, rng),
        ln2_(store, name + "/ln2", dim, rng),
        ffn1_(store, name + "/ffn1", dim, ffn_hidden, rng),
        ffn2_(store, name + "/ffn2", ffn_hidden, dim, rng) {}

  /// dropout_rate 0 (evaluation) makes the pass deterministic.
  ad::Var forward(ad::Tape& t, ad::Var x, double dropout_rate, Rng& rng) const {
    ad::Var a = t.add(x, t.dropout(attn_.forward(t, ln1_.forward(t, x)),
                                   dropout_rate, rng));
    ad::Var f = ffn2_.forward(t, t.gelu(ffn1_.forward(t, ln2_.forward(t, a))));
    return t.add(a, t.dropout(f, dropout_rate, rng));
  }

 private:
  LayerNorm ln1_;
  MultiHeadSelfAttention attn_;
  LayerNorm ln2_;
  Linear ffn1_, ffn2_;
};

// ---------------------------------------------------------------------------
// Frontends
// ---------------------------------------------------------------------------

/// Strided 1-D convolution over raw samples, expressed as a matrix
/// product against an im2col matrix. Frames: 1 + (T - kernel)/stride.
class Conv1dFrontend {
 public:
  Conv1dFrontend() = default;
  Conv1dFrontend(ParamStore& store, const std::string& name, Eigen::Index dim,
                 Eigen::Index kernel, Eigen::Index stride, Rng& rng)
      : kernel_(kernel), stride_(stride),
        w_(&store.create(name + "/w", dim, kernel, Init::kNormal, rng,
                         1.0 / std::sqrt(static_cast<double>(kernel)))),
        b_(&store.create(name + "/b", dim, 1, Init::kZeros, rng)) {}

  Eigen::Index frames_for(std::size_t samples) const {
    if (static_cast<Eigen::Index>(samples) < kernel_) return 0;
    return 1 + (static_cast<Eigen::Index>(samples) - kernel_) / stride_;
  }

  ad::Var forward(ad::Tape& t, const std::vector<double>& samples) const {
    const Eigen::Index frames = frames_for(samples.size());
    if (frames < 1)
      throw DataError("audio too short for the convolutional frontend: " +
                      std::to_string(samples.size()) + " samples, kernel " +
                      std::to_string(kernel_));
    Matrix windows(kernel_, frames);
    for (Eigen::Index f = 0; f < frames; ++f)
      for (Eigen::Index i = 0; i < kernel_; ++i)
        windows(i, f) = samples[static_cast<std::size_t>(f * stride_ + i)];
    return t.add_col_broadcast(t.matmul(w_->use(t), t.input(std::move(windows))),
                               b_->use(t));
  }

  Eigen::Index kernel() const { return kernel_; }
  Eigen::Index stride() const { return stride_; }

 private:
  Eigen::Index kernel_ = 0, stride_ = 0;
  Parameter* w_ = nullptr;
  Parameter* b_ = nullptr;
};

/// Token-embedding frontend: a d x V table, applied by one-hot matmul
/// so gradients reach exactly the used columns.
class EmbeddingFrontend {
 public:
  EmbeddingFrontend() = default;
  EmbeddingFrontend(ParamStore& store, const std::string& name, Eigen::Index dim,
                    Eigen::Index vocab, Rng& rng)
      : vocab_(vocab),
        table_(&store.create(name + "/table", dim, vocab, Init::kNormal, rng, 1.0)) {}

  ad::Var forward(ad::Tape& t, const std::vector<Eigen::Index>& tokens) const {
    if (tokens.empty()) throw DataError("empty token sequence");
    Matrix onehots = Matrix::Zero(vocab_, static_cast<Eigen::Index>(tokens.size()));
    for (std::size_t j = 0; j < tokens.size(); ++j) {
      if (tokens[j] < 0 || tokens[j] >= vocab_)
        throw ContractError("token id outside vocabulary");
      onehots(tokens[j], static_cast<Eigen::Index>(j)) = 1.0;
    }
    return t.matmul(table_->use(t), t.input(std::move(onehots)));
  }

  Eigen::Index vocab() const { return vocab_; }

 private:
  Eigen::Index vocab_ = 0;
  Parameter* table_ = nullptr;
};

/// Classic sinusoidal position code, one column per position.
inline Matrix sinusoidal_positions(Eigen::Index dim, Eigen::Index length,
                                   double base = 10000.0) {
  Matrix pe(dim, length);
  for (Eigen::Index pos = 0; pos < length; ++pos) {
    for (Eigen::Index i = 0; i < dim; ++i) {
      const double rate = std::pow(base, -2.0 * double(i / 2) / double(dim));
      const double angle = double(pos) * rate;
      pe(i, pos) = (i % 2 == 0) ? std::sin(angle) : std::cos(angle);
    }
  }
  return pe;
}

}  // namespace serkit::nn

#endif  // SERKIT_NN_HPP_
