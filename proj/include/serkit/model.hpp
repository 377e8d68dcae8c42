// serkit/model.hpp
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
// The regression model: sequence pooling, modality fusion, and the
// two-layer prediction head, composed over one or two encoders. Also
// hosts the differentiable batch objective used by the trainer.

#ifndef SERKIT_MODEL_HPP_
#define SERKIT_MODEL_HPP_

#include <cstdint>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "serkit/autodiff.hpp"
#include "serkit/encoders.hpp"
#include "serkit/error.hpp"
#include "serkit/metrics.hpp"
#include "serkit/nn.hpp"
#include "serkit/types.hpp"
#include "serkit/version.hpp"

namespace serkit::model {

using ad::Matrix;

enum class FeatureSource { kAudio, kText, kFused };

/// How the average- and max-pooled vectors combine. kSum keeps the
/// encoder's feature dimension; kConcat doubles it.
enum class PoolMode { kSum, kConcat };

inline const char* to_string(PoolMode m) {
  return m == PoolMode::kSum ? "sum" : "concat";
}

inline PoolMode pool_mode_from_string(const std::string& s) {
  if (s == "sum") return PoolMode::kSum;
  if (s == "concat") return PoolMode::kConcat;
  throw InvalidInputError("unknown pool mode: '" + s + "'");
}

inline Eigen::Index pooled_rows(Eigen::Index hidden, PoolMode mode) {
  return mode == PoolMode::kConcat ? 2 * hidden : hidden;
}

/// A per-utterance feature vector after sequence pooling, tagged with
/// the branch it came from so fusion can reject miswired inputs.
struct PooledFeature {
  Eigen::VectorXd vector;
  FeatureSource source = FeatureSource::kAudio;

  Eigen::Index size() const { return vector.size(); }
};

// ---------------------------------------------------------------------------
// Pooling and fusion
// ---------------------------------------------------------------------------

/// Pools frame states over the first valid_length frames: elementwise
/// mean plus elementwise max, combined per the mode. Padded frames
/// never enter either statistic.
inline PooledFeature pool(const Matrix& states, Eigen::Index valid_length,
                          FeatureSource source = FeatureSource::kAudio,
                          PoolMode mode = PoolMode::kSum) {
  if (valid_length < 1)
    throw InvalidInputError("pool: valid_length must be at least 1");
  if (valid_length > states.cols())
    throw InvalidInputError("pool: valid_length " + std::to_string(valid_length) +
                            " exceeds the " + std::to_string(states.cols()) +
                            " available frames");
  const Eigen::VectorXd avg = states.leftCols(valid_length).rowwise().mean();
  const Eigen::VectorXd mx = states.leftCols(valid_length).rowwise().maxCoeff();
  PooledFeature out;
  out.source = source;
  if (mode == PoolMode::kSum) {
    out.vector = avg + mx;
  } else {
    out.vector.resize(2 * states.rows());
    out.vector << avg, mx;
  }
  return out;
}

/// Differentiable counterpart of pool for training tapes.
inline ad::Var pool_on_tape(ad::Tape& t, ad::Var states, Eigen::Index valid_length,
                            PoolMode mode) {
  if (valid_length < 1)
    throw InvalidInputError("pool: valid_length must be at least 1");
  ad::Var avg = t.mean_cols_valid(states, valid_length);
  ad::Var mx = t.max_cols_valid(states, valid_length);
  return mode == PoolMode::kSum ? t.add(avg, mx) : t.concat_rows(avg, mx);
}

/// Feature-dimension concatenation, audio block first.
inline PooledFeature fuse(const PooledFeature& audio, const PooledFeature& text) {
  if (audio.source == text.source)
    throw InvalidInputError("fuse: both inputs come from the same branch");
  if (audio.source != FeatureSource::kAudio || text.source != FeatureSource::kText)
    throw InvalidInputError("fuse: expects an (audio, text) feature pair");
  PooledFeature out;
  out.source = FeatureSource::kFused;
  out.vector.resize(audio.size() + text.size());
  out.vector << audio.vector, text.vector;
  return out;
}

// ---------------------------------------------------------------------------
// Prediction head
// ---------------------------------------------------------------------------

struct HeadConfig {
  Eigen::Index input_size = 0;
  /// 0 selects the input size, which keeps head parameter counts in
  /// line with published model-size deltas.
  Eigen::Index hidden_size = 0;
  double dropout = 0.1;

  /// The regression head always emits the three emotion dimensions.
  static constexpr Eigen::Index kOutputSize = 3;

  Eigen::Index hidden() const {
    return hidden_size > 0 ? hidden_size : input_size;
  }
};

/// Two fully-connected layers with a tanh between them; dropout sits
/// after the activation and only fires in train mode. The final layer
/// is linear, so estimates are unsquashed.
class Head {
 public:
  Head() = default;
  Head(nn::ParamStore& store, const std::string& name, HeadConfig config,
       Eigen::Index output_size, Rng& rng)
      : cfg_(config), output_size_(output_size) {
    if (cfg_.input_size < 1)
      throw InvalidInputError("head: input_size must be positive");
    if (cfg_.dropout < 0.0 || cfg_.dropout >= 1.0)
      throw InvalidInputError("head: dropout must lie in [0, 1)");
    if (output_size < 1)
      throw InvalidInputError("head: output_size must be positive");
    fc1_ = nn::Linear(store, name + "/fc1", cfg_.input_size, cfg_.hidden(), rng);
    fc2_ = nn::Linear(store, name + "/fc2", cfg_.hidden(), output_size, rng);
  }

  const HeadConfig& config() const { return cfg_; }
  Eigen::Index output_size() const { return output_size_; }

  /// Columns of pooled are batch items; rows must match input_size.
  ad::Var forward(ad::Tape& t, ad::Var pooled, bool train, Rng& rng) const {
    if (t.value(pooled).rows() != cfg_.input_size)
      throw InvalidInputError("head: got a feature of size " +
                              std::to_string(t.value(pooled).rows()) +
                              ", expected " + std::to_string(cfg_.input_size));
    ad::Var h = t.tanh(fc1_.forward(t, pooled));
    if (train && cfg_.dropout > 0.0) h = t.dropout(h, cfg_.dropout, rng);
    return fc2_.forward(t, h);
  }

  /// Evaluation-mode output for a single pooled feature.
  Eigen::VectorXd evaluate(const PooledFeature& pooled) const {
    ad::Tape t;
    Rng rng(0);
    ad::Var y = forward(t, t.input(pooled.vector), false, rng);
    return t.value(y).col(0);
  }

 private:
  HeadConfig cfg_;
  Eigen::Index output_size_ = HeadConfig::kOutputSize;
  nn::Linear fc1_, fc2_;
};

/// Evaluation-mode emotion estimate from a three-output head.
inline EmotionTriple head_forward(const Head& head, const PooledFeature& pooled) {
  if (head.output_size() != HeadConfig::kOutputSize)
    throw ContractError("head_forward: head does not emit three dimensions");
  const Eigen::VectorXd y = head.evaluate(pooled);
  return {y(0), y(1), y(2)};
}

// ---------------------------------------------------------------------------
// Model
// ---------------------------------------------------------------------------

struct SerModelConfig {
  PoolMode pool_mode = PoolMode::kSum;
  Eigen::Index head_hidden = 0;  // 0 selects the pooled size
  double dropout = 0.1;
};

/// One or two encoders, pooling, optional fusion, and the head. The
/// head input size is fixed against the encoder dimensions at build
/// time. Evaluation-mode prediction is const and reentrant.
class SerModel {
 public:
  SerModel(enc::Encoder audio, SerModelConfig config, std::uint64_t head_seed)
      : cfg_(config), audio_(std::move(audio)) {
    build_head(head_seed);
  }

  SerModel(enc::Encoder audio, enc::Encoder text, SerModelConfig config,
           std::uint64_t head_seed)
      : cfg_(config), audio_(std::move(audio)), text_(std::move(text)) {
    if (audio_.modality() != enc::Modality::kAudio ||
        text_->modality() != enc::Modality::kText)
      throw InvalidInputError("model: fusion expects an audio and a text encoder");
    build_head(head_seed);
  }

  bool has_text() const { return text_.has_value(); }
  const SerModelConfig& config() const { return cfg_; }
  enc::Encoder& audio_encoder() { return audio_; }
  const enc::Encoder& audio_encoder() const { return audio_; }
  enc::Encoder* text_encoder() { return text_ ? &*text_ : nullptr; }
  const enc::Encoder* text_encoder() const { return text_ ? &*text_ : nullptr; }
  nn::ParamStore& head_params() { return head_store_; }
  const nn::ParamStore& head_params() const { return head_store_; }
  const Head& head() const { return head_; }

  Eigen::Index pooled_size() const {
    Eigen::Index d = pooled_rows(audio_.hidden_size(), cfg_.pool_mode);
    if (text_) d += pooled_rows(text_->hidden_size(), cfg_.pool_mode);
    return d;
  }

  /// Every parameter of every component, for optimizers and counting.
  std::vector<nn::Parameter*> parameters() {
    std::vector<nn::Parameter*> out = audio_.params().all();
    if (text_)
      for (auto* p : text_->params().all()) out.push_back(p);
    for (auto* p : head_store_.all()) out.push_back(p);
    return out;
  }

  std::size_t parameter_count() const {
    std::size_t n = audio_.params().count_scalars() + head_store_.count_scalars();
    if (text_) n += text_->params().count_scalars();
    return n;
  }

  std::size_t trainable_parameter_count() const {
    std::size_t n =
        audio_.params().count_trainable() + head_store_.count_trainable();
    if (text_) n += text_->params().count_trainable();
    return n;
  }

  std::uint64_t checksum() const {
    std::uint64_t h = audio_.checksum();
    if (text_) h = h * 1099511628211ULL ^ text_->checksum();
    return h * 1099511628211ULL ^ head_store_.checksum();
  }

  /// Replaces the head with freshly initialized parameters, as when a
  /// second training stage starts from fine-tuned encoders.
  void reset_head(std::uint64_t head_seed) {
    head_store_ = nn::ParamStore();
    build_head(head_seed);
  }

  /// On-tape forward of one utterance at its native length: encode,
  /// pool the final layer, fuse when a text branch exists, then the
  /// head. Returns a 3 x 1 estimate.
  ad::Var forward_item(ad::Tape& t, const corpus::UtteranceRecord& rec,
                       bool train, Rng& rng) const {
    const double rate = train ? cfg_.dropout : 0.0;
    const auto audio_states = audio_.forward_states(t, rec, rate, rng);
    ad::Var pooled =
        pool_on_tape(t, audio_states.back(),
                     t.value(audio_states.back()).cols(), cfg_.pool_mode);
    if (text_) {
      const auto text_states = text_->forward_states(t, rec, rate, rng);
      ad::Var pt = pool_on_tape(t, text_states.back(),
                                t.value(text_states.back()).cols(), cfg_.pool_mode);
      pooled = t.concat_rows(pooled, pt);
    }
    return head_.forward(t, pooled, train, rng);
  }

  /// Evaluation-mode estimates, one per record, order-preserving.
  std::vector<EmotionTriple> predict(
      const std::vector<const corpus::UtteranceRecord*>& batch) const {
    if (batch.empty()) throw InvalidInputError("predict: empty batch");
    std::vector<EmotionTriple> out;
    out.reserve(batch.size());
    Rng rng(0);
    for (const auto* rec : batch) {
      ad::Tape t;
      const Matrix& y = t.value(forward_item(t, *rec, false, rng));
      out.push_back({y(0, 0), y(1, 0), y(2, 0)});
    }
    return out;
  }

  // -- persistence ------------------------------------------------------------

  void save(std::ostream& out) const {
    out.write("SKMD", 4);
    write_u64(out, kCheckpointFormatVersion);
    write_u64(out, text_ ? 1 : 0);
    write_u64(out, cfg_.pool_mode == PoolMode::kSum ? 0 : 1);
    write_u64(out, static_cast<std::uint64_t>(cfg_.head_hidden));
    write_f64(out, cfg_.dropout);
    audio_.save(out);
    if (text_) text_->save(out);
    head_store_.save_values(out);
    if (!out) throw DataError("model serialization failed");
  }

  static SerModel load(std::istream& in) {
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "SKMD")
      throw DataError("not a model checkpoint");
    const std::uint64_t version = read_u64(in);
    if (version != kCheckpointFormatVersion)
      throw DataError("unsupported model checkpoint version " +
                      std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointFormatVersion) + ")");
    const bool with_text = read_u64(in) != 0;
    SerModelConfig cfg;
    cfg.pool_mode = read_u64(in) == 0 ? PoolMode::kSum : PoolMode::kConcat;
    cfg.head_hidden = static_cast<Eigen::Index>(read_u64(in));
    cfg.dropout = read_f64(in);
    enc::Encoder audio = enc::Encoder::load(in);
    if (with_text) {
      enc::Encoder text = enc::Encoder::load(in);
      SerModel m(std::move(audio), std::move(text), cfg, 0);
      m.head_store_.load_values(in);
      return m;
    }
    SerModel m(std::move(audio), cfg, 0);
    m.head_store_.load_values(in);
    return m;
  }

 private:
  void build_head(std::uint64_t seed) {
    HeadConfig hc;
    hc.input_size = pooled_size();
    hc.hidden_size = cfg_.head_hidden;
    hc.dropout = cfg_.dropout;
    Rng rng(seed);
    head_ = Head(head_store_, "head", hc, HeadConfig::kOutputSize, rng);
  }

  static void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  static std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw DataError("truncated model checkpoint");
    return v;
  }
  static void write_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  static double read_f64(std::istream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw DataError("truncated model checkpoint");
    return v;
  }

  SerModelConfig cfg_;
  enc::Encoder audio_;
  std::optional<enc::Encoder> text_;
  nn::ParamStore head_store_;
  Head head_;
};

/// Audio-only mapping over a batch (evaluation mode).
inline std::vector<EmotionTriple> forward_audio(
    const SerModel& model, const std::vector<const corpus::UtteranceRecord*>& batch) {
  if (model.has_text())
    throw InvalidInputError("forward_audio: the model fuses a text branch");
  return model.predict(batch);
}

/// Audio-textual mapping over a batch (evaluation mode).
inline std::vector<EmotionTriple> forward_audiotext(
    const SerModel& model, const std::vector<const corpus::UtteranceRecord*>& batch) {
  if (!model.has_text())
    throw InvalidInputError("forward_audiotext: the model has no text branch");
  return model.predict(batch);
}

// ---------------------------------------------------------------------------
// Differentiable batch objective
// ---------------------------------------------------------------------------

/// Stacks per-item estimates into a 3 x n matrix on the tape.
inline ad::Var forward_batch(ad::Tape& t, const SerModel& model,
                             const std::vector<const corpus::UtteranceRecord*>& batch,
                             bool train, Rng& rng) {
  if (batch.empty()) throw InvalidInputError("forward_batch: empty batch");
  std::vector<ad::Var> cols;
  cols.reserve(batch.size());
  for (const auto* rec : batch) cols.push_back(model.forward_item(t, *rec, train, rng));
  return t.hstack(cols);
}

/// Targets of a batch as a 3 x n matrix, rows ordered (a, v, d).
inline Matrix target_matrix(const std::vector<const corpus::UtteranceRecord*>& batch) {
  Matrix y(3, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const auto& l = batch[i]->labels;
    y.col(static_cast<Eigen::Index>(i)) << l.arousal, l.valence, l.dominance;
  }
  return y;
}

/// Differentiable concordance of a 1 x n estimate row with constant
/// targets, as a 1 x 1 variable. A denominator under the guard yields
/// a constant zero with no gradient, matching the scalar metric.
inline ad::Var ccc_row_on_tape(ad::Tape& t, ad::Var estimates_row,
                               const Eigen::RowVectorXd& targets) {
  const Eigen::Index n = targets.size();
  if (n < 1) throw InvalidInputError("ccc: empty batch");
  if (t.value(estimates_row).rows() != 1 || t.value(estimates_row).cols() != n)
    throw InvalidInputError("ccc: target/estimate batch size mismatch");

  const double mu_y = targets.mean();
  const Eigen::RowVectorXd yc = targets.array() - mu_y;
  const double var_y = yc.squaredNorm() / static_cast<double>(n);

  ad::Var mu_p = t.mean_all(estimates_row);
  ad::Var pc = t.sub(estimates_row, t.scale_by(t.input(Matrix::Ones(1, n)), mu_p));
  ad::Var var_p = t.mean_all(t.mul(pc, pc));
  ad::Var cov = t.mean_all(t.mul(t.input(Matrix(yc)), pc));
  ad::Var mean_diff = t.add_scalar(t.neg(mu_p), mu_y);
  ad::Var denom = t.add(t.add(var_p, t.mul(mean_diff, mean_diff)),
                        t.input(Matrix::Constant(1, 1, var_y)));
  if (t.value(denom)(0, 0) < metrics::kCccDenominatorGuard)
    return t.input(Matrix::Zero(1, 1));
  return t.div(t.scale(cov, 2.0), denom);
}

/// Differentiable 1 - mean concordance over the three dimension rows.
/// Agrees with the scalar metric on identical data.
inline ad::Var ccc_loss_on_tape(ad::Tape& t, ad::Var estimates, const Matrix& targets) {
  if (targets.rows() != 3 || t.value(estimates).rows() != 3)
    throw InvalidInputError("ccc_loss: score matrices need three rows");
  if (targets.cols() < 1) throw InvalidInputError("ccc_loss: empty batch");
  if (t.value(estimates).cols() != targets.cols())
    throw InvalidInputError("ccc_loss: target/estimate batch size mismatch");

  ad::Var sum{};
  for (Eigen::Index d = 0; d < 3; ++d) {
    ad::Var ccc_d =
        ccc_row_on_tape(t, t.slice_rows(estimates, d, 1), targets.row(d));
    sum = d == 0 ? ccc_d : t.add(sum, ccc_d);
  }
  return t.add_scalar(t.scale(sum, -1.0 / 3.0), 1.0);
}

}  // namespace serkit::model

#endif  // SERKIT_MODEL_HPP_
