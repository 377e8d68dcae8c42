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
// Synthetic layer-identification task for probe tests. A randomly
// initialised residual stack changes so little per block that every
// layer is a near-affine copy of its neighbours, which leaves nothing
// for a probe to identify. The lab encoder therefore amplifies the
// score and FFN input weights so each block applies a strongly
// nonlinear, layer-specific transform, and the label readout direction
// is chosen to maximise target variance while penalising the part of
// the signal that other layers can explain by linear regression.

#ifndef SERKIT_TESTS_PROBE_LAB_HPP_
#define SERKIT_TESTS_PROBE_LAB_HPP_

#include <Eigen/Dense>

#include <cstdint>
#include <string>
#include <vector>

#include "serkit/encoders.hpp"
#include "serkit/model.hpp"

namespace serkit::testing {

/// Frozen 4-layer audio encoder whose blocks differ sharply from one
/// another: attention scores and FFN pre-activations are scaled out of
/// their quasi-linear regime while the residual stream keeps O(1) size.
inline enc::Encoder lab_encoder(std::uint64_t seed) {
  enc::EncoderSpec spec;
  spec.modality = enc::Modality::kAudio;
  spec.name = "probe-lab";
  spec.num_layers = 4;
  spec.hidden_size = 16;
  spec.heads = 2;
  spec.ffn_hidden = 32;
  spec.checkpoint_ref = "random(" + std::to_string(seed) + ")";
  auto encoder = enc::load_encoder(spec);
  for (auto* p : encoder.params().matching("layer_")) {
    const bool sharpens = p->name.find("/wq/w") != std::string::npos ||
                          p->name.find("/wk/w") != std::string::npos ||
                          p->name.find("/ffn1/w") != std::string::npos;
    if (sharpens) p->value *= 10.0;
  }
  encoder.freeze({.freeze_all = true});
  return encoder;
}

/// Noise utterances with a 3:1 train/development split and varied
/// lengths so batches mix different frame counts.
inline corpus::Records lab_corpus(std::size_t n, std::uint64_t seed) {
  corpus::Records records;
  Rng lens(seed);
  for (std::size_t i = 0; i < n; ++i) {
    corpus::UtteranceRecord r;
    r.id = "lab" + std::to_string(i);
    Rng rng(seed + 10 + i);
    r.audio.resize(static_cast<std::size_t>(lens.uniform(500.0, 2200.0)));
    for (auto& v : r.audio) v = rng.uniform(-0.7, 0.7);
    r.labels = {0.5, 0.5, 0.5};
    r.partition =
        i < (3 * n) / 4 ? Partition::kTrain : Partition::kDevelopment;
    records.push_back(std::move(r));
  }
  return records;
}

/// Pooled per-layer features, one row per record.
inline std::vector<Eigen::MatrixXd> pooled_layer_features(
    const enc::Encoder& encoder, const corpus::Records& records) {
  const std::size_t num_states = encoder.spec().num_layers + 1;
  const auto n = static_cast<Eigen::Index>(records.size());
  std::vector<Eigen::MatrixXd> feats(
      num_states, Eigen::MatrixXd(n, encoder.hidden_size()));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto out = encoder.encode({&records[static_cast<std::size_t>(i)]});
    for (std::size_t l = 0; l < num_states; ++l)
      feats[l].row(i) =
          model::pool(out.layer_states[l][0], out.valid_lengths[0])
              .vector.transpose();
  }
  return feats;
}

/// Linear readout direction of layer k whose projection balances high
/// target variance against low explainability from every other layer:
/// the top eigenvector of B - mu * A, where B is the layer-k feature
/// covariance and A accumulates the energy each other layer's affine
/// regression would capture.
inline Eigen::VectorXd layer_specific_readout(
    std::vector<Eigen::MatrixXd> feats, std::size_t k, double mu = 2.0) {
  const Eigen::Index n = feats[k].rows();
  const Eigen::Index d = feats[k].cols();
  for (auto& f : feats) f.rowwise() -= f.colwise().mean();
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(d, d);
  for (std::size_t l = 0; l < feats.size(); ++l) {
    if (l == k) continue;
    Eigen::MatrixXd design(n, d + 1);
    design.col(0).setOnes();
    design.rightCols(d) = feats[l];
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(design);
    const Eigen::MatrixXd basis =
        qr.householderQ() * Eigen::MatrixXd::Identity(n, d + 1);
    const Eigen::MatrixXd captured = basis.transpose() * feats[k];
    a += captured.transpose() * captured;
  }
  const Eigen::MatrixXd b = feats[k].transpose() * feats[k];
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(b - mu * a);
  return solver.eigenvectors().col(d - 1);
}

/// Stamps one label dimension with the layer-k readout, rescaled to
/// [0, 1] so a one-hot profile at k plus an affine head fits exactly.
inline void assign_layer_readout_labels(const enc::Encoder& encoder,
                                        corpus::Records& records,
                                        std::size_t k, Dimension dimension) {
  const auto feats = pooled_layer_features(encoder, records);
  const Eigen::VectorXd readout = layer_specific_readout(feats, k);
  Eigen::VectorXd t = feats[k] * readout;
  t.array() -= t.mean();
  const double lo = t.minCoeff();
  const double hi = t.maxCoeff();
  for (Eigen::Index i = 0; i < t.size(); ++i) {
    auto& labels = records[static_cast<std::size_t>(i)].labels;
    const double value = (t(i) - lo) / (hi - lo);
    switch (dimension) {
      case Dimension::kArousal: labels.arousal = value; break;
      case Dimension::kValence: labels.valence = value; break;
      case Dimension::kDominance: labels.dominance = value; break;
    }
  }
}

}  // namespace serkit::testing

#endif  // SERKIT_TESTS_PROBE_LAB_HPP_
