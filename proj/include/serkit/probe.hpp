// serkit/probe.hpp
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
// Layer-importance probing over a frozen encoder: softmax-normalized
// weights over the per-layer states feed a single-output head, trained
// per emotion dimension. Profiles export as a table plus a bar chart.

#ifndef SERKIT_PROBE_HPP_
#define SERKIT_PROBE_HPP_

#include <filesystem>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "serkit/corpus.hpp"
#include "serkit/csv.hpp"
#include "serkit/encoders.hpp"
#include "serkit/error.hpp"
#include "serkit/metrics.hpp"
#include "serkit/model.hpp"
#include "serkit/plot.hpp"
#include "serkit/train_config.hpp"
#include "serkit/types.hpp"

namespace serkit::probe {

using ad::Matrix;

inline Eigen::VectorXd softmax(const Eigen::VectorXd& logits) {
  const Eigen::VectorXd shifted = logits.array() - logits.maxCoeff();
  const Eigen::VectorXd e = shifted.array().exp();
  return e / e.sum();
}

/// Learned importance of each encoder state (index 0 = frontend) for
/// one emotion dimension. Weights are the softmax of the logits, so
/// they stay nonnegative and sum to one after every update.
struct ProbeProfile {
  Dimension dimension = Dimension::kArousal;
  Eigen::VectorXd logits;
  Eigen::VectorXd weights;
  double dev_ccc = 0.0;

  Eigen::Index num_states() const { return weights.size(); }
};

inline ProbeProfile uniform_profile(Dimension dimension, Eigen::Index num_states) {
  if (num_states < 1)
    throw InvalidInputError("probe profile needs at least one state");
  ProbeProfile p;
  p.dimension = dimension;
  p.logits = Eigen::VectorXd::Zero(num_states);
  p.weights = softmax(p.logits);
  return p;
}

/// Mixes the per-layer states with the profile weights, pools, and
/// applies a single-output head. One scalar estimate per utterance.
inline std::vector<double> probe_forward(const enc::EncoderOutput& outputs,
                                         const ProbeProfile& profile,
                                         const model::Head& head,
                                         model::PoolMode mode = model::PoolMode::kSum) {
  if (profile.num_states() != static_cast<Eigen::Index>(outputs.num_states()))
    throw InvalidInputError("probe: profile covers " +
                            std::to_string(profile.num_states()) +
                            " states, encoder produced " +
                            std::to_string(outputs.num_states()));
  if (head.output_size() != 1)
    throw InvalidInputError("probe: the probe head must have a single output");
  std::vector<double> estimates;
  estimates.reserve(outputs.batch_size());
  for (std::size_t i = 0; i < outputs.batch_size(); ++i) {
    Matrix mixed = profile.weights(0) * outputs.layer_states[0][i];
    for (Eigen::Index l = 1; l < profile.num_states(); ++l)
      mixed += profile.weights(l) * outputs.layer_states[static_cast<std::size_t>(l)][i];
    const auto pooled =
        model::pool(mixed, outputs.valid_lengths[i], model::FeatureSource::kAudio, mode);
    estimates.push_back(head.evaluate(pooled)(0));
  }
  return estimates;
}

/// Fits logits and a single-output head for one dimension against a
/// frozen encoder. Encoder states are computed once and cached; only
/// the probe parameters receive gradients. on_update fires after every
/// optimizer step with the current profile.
inline ProbeProfile fit_probe(
    const enc::Encoder& encoder, const corpus::Records& records,
    Dimension dimension, const train::TrainConfig& config,
    const std::function<void(const ProbeProfile&)>& on_update = {}) {
  config.validate();
  if (encoder.trainable_parameter_count() != 0)
    throw ContractError("fit_probe: the encoder must be fully frozen");

  const corpus::Records train_set = corpus::filter(records, Partition::kTrain);
  const corpus::Records dev_set = corpus::filter(records, Partition::kDevelopment);
  if (train_set.empty() || dev_set.empty())
    throw InvalidInputError("fit_probe: need non-empty train and development sets");

  struct Cached {
    std::vector<Matrix> states;
    Eigen::Index valid = 0;
    double target = 0.0;
  };
  const auto cache = [&](const corpus::Records& rs) {
    std::vector<Cached> out;
    out.reserve(rs.size());
    for (const auto& rec : rs) {
      const auto enc_out = encoder.encode({&rec});
      Cached c;
      for (const auto& layer : enc_out.layer_states) c.states.push_back(layer[0]);
      c.valid = enc_out.valid_lengths[0];
      c.target = rec.labels[dimension];
      out.push_back(std::move(c));
    }
    return out;
  };
  const std::vector<Cached> train_cache = cache(train_set);
  const std::vector<Cached> dev_cache = cache(dev_set);

  const Eigen::Index num_states = encoder.num_layers() + 1;
  nn::ParamStore store;
  Rng init_rng(config.seed);
  nn::Parameter& logits =
      store.create("probe/logits", num_states, 1, nn::Init::kZeros, init_rng);
  model::HeadConfig head_cfg;
  head_cfg.input_size = encoder.hidden_size();
  head_cfg.dropout = config.dropout;
  const model::Head head(store, "probe/head", head_cfg, 1, init_rng);
  const std::vector<nn::Parameter*> params = store.all();

  nn::Adam optimizer({.learning_rate = config.learning_rate,
                      .clip_gradients = config.clip_gradients,
                      .clip_norm = config.clip_norm});

  ProbeProfile profile;
  profile.dimension = dimension;
  profile.logits = logits.value.col(0);
  profile.weights = softmax(profile.logits);

  const auto dev_score = [&]() {
    const Eigen::VectorXd w = softmax(logits.value.col(0));
    std::vector<double> targets, estimates;
    for (const auto& item : dev_cache) {
      Matrix mixed = w(0) * item.states[0];
      for (Eigen::Index l = 1; l < num_states; ++l)
        mixed += w(l) * item.states[static_cast<std::size_t>(l)];
      const auto pooled = model::pool(mixed, item.valid);
      estimates.push_back(head.evaluate(pooled)(0));
      targets.push_back(item.target);
    }
    return metrics::ccc(targets, estimates);
  };

  double best_ccc = -std::numeric_limits<double>::infinity();
  std::vector<Matrix> best_values;
  std::size_t stall = 0;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    std::vector<std::size_t> order(train_cache.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng epoch_rng(config.seed + 1000003ULL * (epoch + 1));
    epoch_rng.shuffle(order);
    Rng dropout_rng(config.seed + 777ULL + epoch);

    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t stop = std::min(order.size(), start + config.batch_size);
      store.zero_grads();
      ad::Tape t;
      ad::Var w = t.softmax_cols(logits.use(t));
      std::vector<ad::Var> preds;
      Eigen::RowVectorXd targets(static_cast<Eigen::Index>(stop - start));
      for (std::size_t k = start; k < stop; ++k) {
        const Cached& item = train_cache[order[k]];
        ad::Var mixed = t.scale_by(t.input(item.states[0]), t.slice_rows(w, 0, 1));
        for (Eigen::Index l = 1; l < num_states; ++l)
          mixed = t.add(mixed,
                        t.scale_by(t.input(item.states[static_cast<std::size_t>(l)]),
                                   t.slice_rows(w, l, 1)));
        ad::Var pooled = model::pool_on_tape(t, mixed, item.valid, model::PoolMode::kSum);
        preds.push_back(head.forward(t, pooled, true, dropout_rng));
        targets(static_cast<Eigen::Index>(k - start)) = item.target;
      }
      ad::Var ccc = model::ccc_row_on_tape(t, t.hstack(preds), targets);
      t.backward(t.add_scalar(t.neg(ccc), 1.0));
      optimizer.step(params);

      profile.logits = logits.value.col(0);
      profile.weights = softmax(profile.logits);
      if (on_update) on_update(profile);
    }

    const double dev = dev_score();
    if (dev > best_ccc) {
      best_ccc = dev;
      best_values.clear();
      for (const auto* p : params) best_values.push_back(p->value);
      stall = 0;
    } else if (++stall >= config.patience) {
      break;
    }
  }

  if (best_values.size() != params.size())
    throw RunError("fit_probe: no epoch produced a finite development score");
  for (std::size_t i = 0; i < params.size(); ++i) params[i]->value = best_values[i];
  profile.logits = logits.value.col(0);
  profile.weights = softmax(profile.logits);
  profile.dev_ccc = best_ccc;
  return profile;
}

// ---------------------------------------------------------------------------
// Export
// ---------------------------------------------------------------------------

struct ProfileArtifacts {
  std::filesystem::path table_path;
  std::filesystem::path image_path;
};

/// Writes the profile as probe_<dimension>.csv (layer_index, weight)
/// and a bar chart probe_<dimension>.png in the directory.
inline ProfileArtifacts export_profile(const ProbeProfile& profile,
                                       const std::filesystem::path& directory) {
  if (profile.weights.size() < 1)
    throw InvalidInputError("export_profile: empty profile");
  std::filesystem::create_directories(directory);
  const std::string stem = std::string("probe_") + to_string(profile.dimension);
  ProfileArtifacts art{directory / (stem + ".csv"), directory / (stem + ".png")};

  std::vector<std::vector<std::string>> rows{{"layer_index", "weight"}};
  std::vector<double> values;
  std::vector<std::string> labels;
  for (Eigen::Index i = 0; i < profile.weights.size(); ++i) {
    rows.push_back({std::to_string(i), corpus::detail::format_double(profile.weights(i))});
    values.push_back(profile.weights(i));
    labels.push_back(std::to_string(i));
  }
  csv::write_file(art.table_path.string(), rows);
  plot::bar_chart(art.image_path,
                  std::string(to_string(profile.dimension)) + " layer importance",
                  values, labels);
  return art;
}

/// Reads back the weight column of an exported profile table.
inline Eigen::VectorXd load_profile_table(const std::filesystem::path& path) {
  const auto rows = csv::read_file(path.string());
  if (rows.empty() || rows[0] != std::vector<std::string>{"layer_index", "weight"})
    throw DataError("profile table " + path.string() + ": unexpected header");
  Eigen::VectorXd weights(static_cast<Eigen::Index>(rows.size()) - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2 || rows[i][0] != std::to_string(i - 1))
      throw DataError("profile table " + path.string() + ": bad row " +
                      std::to_string(i));
    weights(static_cast<Eigen::Index>(i) - 1) =
        corpus::detail::parse_double(rows[i][1], "profile table row " + std::to_string(i));
  }
  return weights;
}

}  // namespace serkit::probe

#endif  // SERKIT_PROBE_HPP_
