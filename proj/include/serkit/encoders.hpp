// serkit/encoders.hpp
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
// Uniform interface over speech and text encoders: named presets with
// analytic parameter counts, instantiable tiny random encoders for
// desk-scale runs, layer pruning, freezing, and per-layer hidden-state
// access.

#ifndef SERKIT_ENCODERS_HPP_
#define SERKIT_ENCODERS_HPP_

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "serkit/corpus.hpp"
#include "serkit/error.hpp"
#include "serkit/nn.hpp"
#include "serkit/version.hpp"

namespace serkit::enc {

using ad::Matrix;

enum class Modality { kAudio, kText };
enum class FrontendKind { kConvolutional, kTokenEmbedding };

/// Architecture family used only for analytic parameter counting of
/// the full-scale presets.
enum class CountFamily { kTiny, kWav2vecBase, kWav2vecLarge, kBert };

struct EncoderSpec {
  Modality modality = Modality::kAudio;
  std::string name;
  Eigen::Index num_layers = 1;
  Eigen::Index hidden_size = 1;
  FrontendKind frontend = FrontendKind::kConvolutional;
  std::string checkpoint_ref;  // "random(seed)" or a locator

  Eigen::Index heads = 1;
  Eigen::Index ffn_hidden = 1;
  Eigen::Index conv_kernel = 400;
  Eigen::Index conv_stride = 320;
  /// Layer count of the source model when the preset keeps a prefix
  /// (0 means no pruning at load).
  Eigen::Index source_layers = 0;
  CountFamily family = CountFamily::kTiny;
  /// Tokenizer words for tiny text encoders; id 0 is the unknown token.
  std::vector<std::string> vocabulary;

  Eigen::Index vocab_size() const {
    return static_cast<Eigen::Index>(vocabulary.size()) + 1;
  }
};

/// Per-utterance hidden states padded to a common frame count.
/// layer_states[l][i] is the hidden_size x K matrix of item i at layer
/// l, where index 0 is the frontend output before position codes.
struct EncoderOutput {
  std::vector<std::vector<Matrix>> layer_states;
  std::vector<Eigen::Index> valid_lengths;
  Eigen::Index padded_length = 0;

  std::size_t batch_size() const { return valid_lengths.size(); }
  std::size_t num_states() const { return layer_states.size(); }
};

struct FreezePolicy {
  bool freeze_frontend = false;
  bool freeze_all = false;
};

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

inline std::vector<std::string> known_presets() {
  return {"distilhubert", "hubert-base", "w2v2-l-robust-p", "tinybert",
          "tiny-audio",   "tiny-audio-deep", "tiny-text"};
}

inline EncoderSpec encoder_preset(const std::string& name) {
  EncoderSpec s;
  s.name = name;
  if (name == "distilhubert") {
    s.modality = Modality::kAudio;
    s.num_layers = 2;
    s.hidden_size = 768;
    s.heads = 12;
    s.ffn_hidden = 3072;
    s.family = CountFamily::kWav2vecBase;
  } else if (name == "hubert-base") {
    s.modality = Modality::kAudio;
    s.num_layers = 12;
    s.hidden_size = 768;
    s.heads = 12;
    s.ffn_hidden = 3072;
    s.family = CountFamily::kWav2vecBase;
  } else if (name == "w2v2-l-robust-p") {
    // Keeps the first 12 of 24 large layers.
    s.modality = Modality::kAudio;
    s.num_layers = 12;
    s.source_layers = 24;
    s.hidden_size = 1024;
    s.heads = 16;
    s.ffn_hidden = 4096;
    s.family = CountFamily::kWav2vecLarge;
  } else if (name == "tinybert") {
    s.modality = Modality::kText;
    s.frontend = FrontendKind::kTokenEmbedding;
    s.num_layers = 4;
    s.hidden_size = 312;
    s.heads = 12;
    s.ffn_hidden = 1200;
    s.family = CountFamily::kBert;
  } else if (name == "tiny-audio") {
    s.modality = Modality::kAudio;
    s.num_layers = 2;
    s.hidden_size = 16;
    s.heads = 2;
    s.ffn_hidden = 32;
    s.family = CountFamily::kTiny;
  } else if (name == "tiny-audio-deep") {
    s.modality = Modality::kAudio;
    s.num_layers = 4;
    s.hidden_size = 32;
    s.heads = 4;
    s.ffn_hidden = 64;
    s.family = CountFamily::kTiny;
  } else if (name == "tiny-text") {
    s.modality = Modality::kText;
    s.frontend = FrontendKind::kTokenEmbedding;
    s.num_layers = 2;
    s.hidden_size = 16;
    s.heads = 2;
    s.ffn_hidden = 32;
    s.family = CountFamily::kTiny;
    s.vocabulary = corpus::synthetic_lexicon().vocabulary();
  } else {
    throw InvalidInputError("unknown encoder preset: " + name);
  }
  return s;
}

// ---------------------------------------------------------------------------
// Analytic parameter counting
// ---------------------------------------------------------------------------

namespace detail {

inline std::size_t transformer_layer_count(std::size_t d, std::size_t ffn) {
  const std::size_t attn = 4 * (d * d + d);
  const std::size_t mlp = d * ffn + ffn + ffn * d + d;
  const std::size_t norms = 2 * 2 * d;
  return attn + mlp + norms;
}

/// wav2vec2-style convolutional waveform extractor: seven strided
/// layers with 512 channels. The base variant uses bias-free
/// convolutions and a single group norm; the large variant adds biases
/// and a layer norm per convolution.
inline std::size_t conv_extractor_count(bool large) {
  const std::size_t weights = 1 * 512 * 10 + 4 * (512 * 512 * 3) + 2 * (512 * 512 * 2);
  if (!large) return weights + 2 * 512;
  return weights + 7 * 512 + 7 * 2 * 512;
}

inline std::size_t audio_fullscale_count(std::size_t d, std::size_t layers,
                                         std::size_t ffn, bool large) {
  const std::size_t extractor = conv_extractor_count(large);
  const std::size_t proj = 2 * 512 + (512 * d + d);
  const std::size_t pos_groups = 16;
  const std::size_t pos_conv = d * (d / pos_groups) * 128 + d;
  const std::size_t stack = layers * transformer_layer_count(d, ffn);
  const std::size_t final_norm = 2 * d;
  return extractor + proj + pos_conv + stack + final_norm;
}

inline std::size_t bert_fullscale_count(std::size_t d, std::size_t layers,
                                        std::size_t ffn) {
  const std::size_t vocab = 30522, positions = 512, segments = 2;
  const std::size_t embeddings = (vocab + positions + segments) * d + 2 * d;
  const std::size_t stack = layers * transformer_layer_count(d, ffn);
  const std::size_t pooler = d * d + d;
  return embeddings + stack + pooler;
}

inline std::size_t tiny_count(const EncoderSpec& s) {
  const auto d = static_cast<std::size_t>(s.hidden_size);
  std::size_t frontend = 0;
  if (s.frontend == FrontendKind::kConvolutional)
    frontend = d * static_cast<std::size_t>(s.conv_kernel) + d;
  else
    frontend = d * static_cast<std::size_t>(s.vocab_size());
  return frontend + static_cast<std::size_t>(s.num_layers) *
                        transformer_layer_count(d, static_cast<std::size_t>(s.ffn_hidden));
}

}  // namespace detail

/// Parameter count of the encoder described by the spec, on the layer
/// budget the spec keeps (pruned presets count kept layers only).
inline std::size_t parameter_count(const EncoderSpec& spec) {
  const auto d = static_cast<std::size_t>(spec.hidden_size);
  const auto layers = static_cast<std::size_t>(spec.num_layers);
  const auto ffn = static_cast<std::size_t>(spec.ffn_hidden);
  switch (spec.family) {
    case CountFamily::kWav2vecBase:
      return detail::audio_fullscale_count(d, layers, ffn, false);
    case CountFamily::kWav2vecLarge:
      return detail::audio_fullscale_count(d, layers, ffn, true);
    case CountFamily::kBert:
      return detail::bert_fullscale_count(d, layers, ffn);
    case CountFamily::kTiny:
      return detail::tiny_count(spec);
  }
  throw ContractError("unreachable count family");
}

// ---------------------------------------------------------------------------
// Tokenizer (tiny text encoders)
// ---------------------------------------------------------------------------

/// Whitespace tokenizer over a fixed vocabulary; id 0 is the unknown
/// token, word i maps to id i+1.
class TinyTokenizer {
 public:
  TinyTokenizer() = default;
  explicit TinyTokenizer(const std::vector<std::string>& words) {
    for (std::size_t i = 0; i < words.size(); ++i)
      ids_[words[i]] = static_cast<Eigen::Index>(i) + 1;
  }

  std::vector<Eigen::Index> tokenize(const std::string& text) const {
    std::vector<Eigen::Index> out;
    std::istringstream ss(text);
    std::string w;
    while (ss >> w) {
      std::transform(w.begin(), w.end(), w.begin(),
                     [](unsigned char c) { return std::tolower(c); });
      auto it = ids_.find(w);
      out.push_back(it == ids_.end() ? 0 : it->second);
    }
    return out;
  }

  std::size_t vocab_size() const { return ids_.size() + 1; }

 private:
  std::unordered_map<std::string, Eigen::Index> ids_;
};

// ---------------------------------------------------------------------------
// Encoder
// ---------------------------------------------------------------------------

class Encoder {
 public:
  Encoder(const Encoder&) = delete;
  Encoder& operator=(const Encoder&) = delete;
  Encoder(Encoder&&) = default;
  Encoder& operator=(Encoder&&) = default;

  /// Builds an encoder with freshly initialized parameters.
  Encoder(EncoderSpec spec, std::uint64_t init_seed)
      : spec_(std::move(spec)), tokenizer_(spec_.vocabulary) {
    if (spec_.num_layers < 1 || spec_.hidden_size < 1)
      throw InvalidInputError("encoder needs at least one layer and one feature");
    Rng rng(init_seed);
    if (spec_.frontend == FrontendKind::kConvolutional) {
      conv_ = nn::Conv1dFrontend(store_, "frontend/conv", spec_.hidden_size,
                                 spec_.conv_kernel, spec_.conv_stride, rng);
    } else {
      emb_ = nn::EmbeddingFrontend(store_, "frontend/emb", spec_.hidden_size,
                                   spec_.vocab_size(), rng);
    }
    for (Eigen::Index l = 0; l < spec_.num_layers; ++l)
      layers_.emplace_back(store_, "layer_" + std::to_string(l), spec_.hidden_size,
                           spec_.heads, spec_.ffn_hidden, rng);
  }

  const EncoderSpec& spec() const { return spec_; }
  Eigen::Index num_layers() const { return spec_.num_layers; }
  Eigen::Index hidden_size() const { return spec_.hidden_size; }
  Modality modality() const { return spec_.modality; }
  nn::ParamStore& params() { return store_; }
  const nn::ParamStore& params() const { return store_; }
  const TinyTokenizer& tokenizer() const { return tokenizer_; }

  /// On-tape forward of a single utterance at its native length.
  /// Returns L+1 states; index 0 is the frontend output before the
  /// position code is added. dropout_rate 0 gives evaluation mode.
  std::vector<ad::Var> forward_states(ad::Tape& t,
                                      const corpus::UtteranceRecord& rec,
                                      double dropout_rate, Rng& rng) const {
    ad::Var state0{};
    if (spec_.frontend == FrontendKind::kConvolutional) {
      if (rec.audio.empty()) throw InvalidInputError("length-0 audio item");
      state0 = t.gelu(conv_.forward(t, rec.audio));
    } else {
      const auto tokens = tokenizer_.tokenize(rec.transcript);
      if (tokens.empty())
        throw InvalidInputError("length-0 text item (empty transcript): id '" +
                                rec.id + "'");
      state0 = emb_.forward(t, tokens);
    }
    std::vector<ad::Var> states;
    states.reserve(static_cast<std::size_t>(spec_.num_layers) + 1);
    states.push_back(state0);
    const Eigen::Index frames = t.value(state0).cols();
    ad::Var x =
        t.add(state0, t.input(nn::sinusoidal_positions(spec_.hidden_size, frames)));
    for (const auto& layer : layers_) {
      x = layer.forward(t, x, dropout_rate, rng);
      states.push_back(x);
    }
    return states;
  }

  /// Evaluation-mode batch encoding with all per-layer states, padded
  /// to the longest item. Padded frames are zero and excluded from any
  /// downstream statistic via valid_lengths.
  EncoderOutput encode(const std::vector<const corpus::UtteranceRecord*>& batch) const {
    if (batch.empty()) throw InvalidInputError("encode: empty batch");
    EncoderOutput out;
    out.layer_states.resize(static_cast<std::size_t>(spec_.num_layers) + 1);
    Rng rng(0);
    std::vector<std::vector<Matrix>> per_item;
    for (const auto* rec : batch) {
      ad::Tape tape;
      const auto states = forward_states(tape, *rec, 0.0, rng);
      std::vector<Matrix> values;
      for (ad::Var s : states) values.push_back(tape.value(s));
      out.valid_lengths.push_back(values[0].cols());
      per_item.push_back(std::move(values));
    }
    out.padded_length =
        *std::max_element(out.valid_lengths.begin(), out.valid_lengths.end());
    for (std::size_t l = 0; l < out.layer_states.size(); ++l) {
      for (std::size_t i = 0; i < per_item.size(); ++i) {
        Matrix padded = Matrix::Zero(spec_.hidden_size, out.padded_length);
        padded.leftCols(per_item[i][l].cols()) = per_item[i][l];
        out.layer_states[l].push_back(std::move(padded));
      }
    }
    return out;
  }

  /// New encoder keeping only the first keep_first layers, parameter
  /// values copied unchanged.
  Encoder pruned(Eigen::Index keep_first) const {
    if (keep_first < 1 || keep_first > spec_.num_layers)
      throw InvalidInputError("prune: keep_first " + std::to_string(keep_first) +
                              " outside 1.." + std::to_string(spec_.num_layers));
    EncoderSpec s = spec_;
    s.num_layers = keep_first;
    s.source_layers = 0;
    Encoder out(s, 0);
    for (auto* p : out.store_.all()) p->value = store_.at(p->name).value;
    return out;
  }

  /// Applies a freeze policy and returns the trainable parameter count.
  std::size_t freeze(FreezePolicy policy) {
    if (policy.freeze_all) {
      store_.set_trainable("", false);
    } else if (policy.freeze_frontend) {
      store_.set_trainable("frontend/", false);
    }
    return trainable_parameter_count();
  }

  std::size_t trainable_parameter_count() const { return store_.count_trainable(); }

  std::uint64_t checksum(const std::string& prefix = "") const {
    return store_.checksum(prefix);
  }

  // -- persistence ------------------------------------------------------------

  void save(std::ostream& out) const {
    out.write("SKEN", 4);
    write_u64(out, kCheckpointFormatVersion);
    write_u64(out, spec_.modality == Modality::kAudio ? 0 : 1);
    write_str(out, spec_.name);
    write_u64(out, static_cast<std::uint64_t>(spec_.num_layers));
    write_u64(out, static_cast<std::uint64_t>(spec_.hidden_size));
    write_u64(out, static_cast<std::uint64_t>(spec_.heads));
    write_u64(out, static_cast<std::uint64_t>(spec_.ffn_hidden));
    write_u64(out, static_cast<std::uint64_t>(spec_.conv_kernel));
    write_u64(out, static_cast<std::uint64_t>(spec_.conv_stride));
    write_u64(out, spec_.vocabulary.size());
    for (const auto& w : spec_.vocabulary) write_str(out, w);
    store_.save_values(out);
  }

  static Encoder load(std::istream& in) {
    char magic[4] = {};
    in.read(magic, 4);
    if (!in || std::string(magic, 4) != "SKEN")
      throw DataError("not an encoder checkpoint");
    const std::uint64_t version = read_u64(in);
    if (version != kCheckpointFormatVersion)
      throw DataError("unsupported encoder checkpoint version " +
                      std::to_string(version) + " (expected " +
                      std::to_string(kCheckpointFormatVersion) + ")");
    EncoderSpec s;
    s.modality = read_u64(in) == 0 ? Modality::kAudio : Modality::kText;
    s.frontend = s.modality == Modality::kAudio ? FrontendKind::kConvolutional
                                                : FrontendKind::kTokenEmbedding;
    s.name = read_str(in);
    s.num_layers = static_cast<Eigen::Index>(read_u64(in));
    s.hidden_size = static_cast<Eigen::Index>(read_u64(in));
    s.heads = static_cast<Eigen::Index>(read_u64(in));
    s.ffn_hidden = static_cast<Eigen::Index>(read_u64(in));
    s.conv_kernel = static_cast<Eigen::Index>(read_u64(in));
    s.conv_stride = static_cast<Eigen::Index>(read_u64(in));
    const std::uint64_t nwords = read_u64(in);
    for (std::uint64_t i = 0; i < nwords; ++i) s.vocabulary.push_back(read_str(in));
    Encoder e(s, 0);
    e.store_.load_values(in);
    return e;
  }

 private:
  static void write_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
  }
  static std::uint64_t read_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    if (!in) throw DataError("truncated encoder checkpoint");
    return v;
  }
  static void write_str(std::ostream& out, const std::string& s) {
    write_u64(out, s.size());
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
  }
  static std::string read_str(std::istream& in) {
    std::string s(read_u64(in), '\0');
    in.read(s.data(), static_cast<std::streamsize>(s.size()));
    if (!in) throw DataError("truncated encoder checkpoint");
    return s;
  }

  EncoderSpec spec_;
  nn::ParamStore store_;
  nn::Conv1dFrontend conv_;
  nn::EmbeddingFrontend emb_;
  std::vector<nn::TransformerLayer> layers_;
  TinyTokenizer tokenizer_;
};

/// Resolves a spec to a live encoder. "random(seed)" builds fresh
/// deterministic parameters; anything else is treated as a checkpoint
/// file, looked up relative to SERKIT_CHECKPOINT_DIR when set. Specs
/// with source_layers build the source depth first, then keep the
/// prefix.
inline Encoder load_encoder(const EncoderSpec& spec) {
  const std::string& ref = spec.checkpoint_ref;
  if (ref.rfind("random(", 0) == 0 && ref.back() == ')') {
    std::uint64_t seed = 0;
    const std::string digits = ref.substr(7, ref.size() - 8);
    if (digits.empty() ||
        digits.find_first_not_of("0123456789") != std::string::npos)
      throw InvalidInputError("malformed random checkpoint ref: " + ref);
    seed = std::stoull(digits);
    if (spec.source_layers > 0) {
      EncoderSpec deep = spec;
      deep.num_layers = spec.source_layers;
      deep.source_layers = 0;
      return Encoder(deep, seed).pruned(spec.num_layers);
    }
    return Encoder(spec, seed);
  }

  std::filesystem::path path(ref);
  if (path.is_relative()) {
    if (const char* dir = std::getenv("SERKIT_CHECKPOINT_DIR"))
      path = std::filesystem::path(dir) / path;
  }
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw DataError("unresolvable checkpoint '" + ref +
                    "' (no such file; set SERKIT_CHECKPOINT_DIR for relative refs)");
  Encoder e = Encoder::load(in);
  if (e.num_layers() != spec.num_layers || e.hidden_size() != spec.hidden_size)
    throw DataError("checkpoint dimensions (" + std::to_string(e.num_layers()) +
                    ", " + std::to_string(e.hidden_size()) +
                    ") do not match spec (" + std::to_string(spec.num_layers) +
                    ", " + std::to_string(spec.hidden_size) + ")");
  return e;
}

}  // namespace serkit::enc

#endif  // SERKIT_ENCODERS_HPP_
