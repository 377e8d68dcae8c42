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
// Fine-tuning loop: concordance loss over bucketed batches, adaptive
// moment updates, early stopping on the development mean concordance,
// and best-epoch model selection. Evaluation is always dataset level:
// a partition is predicted in full and scored once per dimension,
// which in general differs from averaging per-batch scores.

#ifndef SERKIT_TRAINER_HPP_
#define SERKIT_TRAINER_HPP_

#include <json.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "serkit/corpus.hpp"
#include "serkit/metrics.hpp"
#include "serkit/model.hpp"
#include "serkit/train_config.hpp"

namespace serkit::train {

using Matrix = ad::Matrix;

// ---------------------------------------------------------------------------
// Training log
// ---------------------------------------------------------------------------

/// One completed epoch. `epoch` counts from 1 within its stage; plain
/// training has a single stage, the fine-tune-then-freeze recipe logs
/// stage 1 (audio fine-tune) and stage 2 (frozen-encoder head).
struct EpochEntry {
  std::size_t stage = 1;
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double dev_arousal = 0.0;
  double dev_valence = 0.0;
  double dev_dominance = 0.0;
  double dev_mean = 0.0;
};

/// `best_epoch` is the 1-based position in `epochs` whose snapshot the
/// returned model carries; it attains the maximum dev mean concordance
/// within the final stage.
struct TrainLog {
  Regime regime = Regime::kAudioFt;
  std::vector<EpochEntry> epochs;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
};

inline std::string format_train_log(const TrainLog& log) {
  std::ostringstream out;
  for (const auto& e : log.epochs) {
    nlohmann::ordered_json line;
    line["stage"] = e.stage;
    line["epoch"] = e.epoch;
    line["train_loss"] = e.train_loss;
    line["dev_arousal"] = e.dev_arousal;
    line["dev_valence"] = e.dev_valence;
    line["dev_dominance"] = e.dev_dominance;
    line["dev_mean"] = e.dev_mean;
    out << line.dump() << "\n";
  }
  nlohmann::ordered_json summary;
  summary["regime"] = to_string(log.regime);
  summary["best_epoch"] = log.best_epoch;
  summary["stopped_early"] = log.stopped_early;
  out << summary.dump() << "\n";
  return out.str();
}

inline void save_train_log(const TrainLog& log, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot open train log for writing: " + path.string());
  out << format_train_log(log);
  if (!out) throw DataError("short write on train log: " + path.string());
}

inline TrainLog load_train_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open train log: " + path.string());
  TrainLog log;
  bool saw_summary = false;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("malformed train log line: " + std::string(e.what()));
    }
    if (j.contains("best_epoch")) {
      log.regime = regime_from_string(j.at("regime").get<std::string>());
      log.best_epoch = j.at("best_epoch").get<std::size_t>();
      log.stopped_early = j.at("stopped_early").get<bool>();
      saw_summary = true;
    } else {
      EpochEntry e;
      e.stage = j.at("stage").get<std::size_t>();
      e.epoch = j.at("epoch").get<std::size_t>();
      e.train_loss = j.at("train_loss").get<double>();
      e.dev_arousal = j.at("dev_arousal").get<double>();
      e.dev_valence = j.at("dev_valence").get<double>();
      e.dev_dominance = j.at("dev_dominance").get<double>();
      e.dev_mean = j.at("dev_mean").get<double>();
      log.epochs.push_back(e);
    }
  }
  if (!saw_summary) throw DataError("train log has no summary line: " + path.string());
  return log;
}

// ---------------------------------------------------------------------------
// Evaluation
// ---------------------------------------------------------------------------

/// Predicts the full partition in one pass and scores each dimension
/// over the concatenated predictions.
inline metrics::CccReport evaluate(const model::SerModel& m,
                                   const corpus::Records& records,
                                   Partition partition) {
  const corpus::Records subset = corpus::filter(records, partition);
  if (subset.empty())
    throw InvalidInputError(std::string("evaluate: empty partition ") +
                            to_string(partition));
  std::vector<const corpus::UtteranceRecord*> batch;
  batch.reserve(subset.size());
  for (const auto& r : subset) batch.push_back(&r);
  const auto predictions = m.predict(batch);

  std::vector<double> ta, tv, td, pa, pv, pd;
  for (std::size_t i = 0; i < subset.size(); ++i) {
    ta.push_back(subset[i].labels.arousal);
    tv.push_back(subset[i].labels.valence);
    td.push_back(subset[i].labels.dominance);
    pa.push_back(predictions[i].arousal);
    pv.push_back(predictions[i].valence);
    pd.push_back(predictions[i].dominance);
  }
  return metrics::CccReport::make(partition, metrics::ccc(ta, pa),
                                  metrics::ccc(tv, pv), metrics::ccc(td, pd));
}

// ---------------------------------------------------------------------------
// Regimes
// ---------------------------------------------------------------------------

/// Applies a regime's freezing before the first optimizer step. The
/// convolutional audio frontend is never fine-tuned; the freeze-stage
/// regime locks both encoders so only the fused head can move.
inline void apply_regime(model::SerModel& m, Regime regime) {
  switch (regime) {
    case Regime::kAudioFt:
      if (m.has_text())
        throw InvalidInputError("AUDIO_FT expects an audio-only model");
      m.audio_encoder().freeze({.freeze_frontend = true});
      return;
    case Regime::kAudioTextFt:
      if (!m.has_text())
        throw InvalidInputError("AUDIOTEXT_FT expects an audio+text model");
      m.audio_encoder().freeze({.freeze_frontend = true});
      return;
    case Regime::kAudioTextFtFrz:
      if (!m.has_text())
        throw InvalidInputError("AUDIOTEXT_FT_FRZ expects an audio+text model");
      m.audio_encoder().freeze({.freeze_all = true});
      m.text_encoder()->freeze({.freeze_all = true});
      return;
    case Regime::kProbe:
      throw InvalidInputError("PROBE training is performed by fit_probe");
  }
  throw InvalidInputError("unknown regime");
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

struct TrainResult {
  model::SerModel model;
  TrainLog log;
};

namespace detail {

/// Per-dimension target and estimate statistics for abort diagnostics.
inline std::string batch_diagnostics(const Matrix& estimates, const Matrix& targets) {
  std::ostringstream out;
  const char* names[] = {"arousal", "valence", "dominance"};
  out.precision(6);
  for (Eigen::Index d = 0; d < 3; ++d) {
    const Eigen::RowVectorXd y = targets.row(d);
    const Eigen::RowVectorXd p = estimates.row(d);
    Eigen::Index finite = 0;
    for (Eigen::Index i = 0; i < p.size(); ++i)
      if (std::isfinite(p(i))) ++finite;
    out << (d ? "; " : "") << names[d] << ": target mean " << y.mean()
        << " sd " << std::sqrt((y.array() - y.mean()).square().mean())
        << ", estimate finite " << finite << "/" << p.size();
    if (finite == p.size())
      out << " mean " << p.mean() << " sd "
          << std::sqrt((p.array() - p.mean()).square().mean());
  }
  return out.str();
}

/// One early-stopped training stage. The model is trained in place,
/// then replaced by its best-development-epoch snapshot.
inline TrainResult run_stage(model::SerModel m, const corpus::Records& records,
                             Regime regime, const TrainConfig& config,
                             std::size_t stage) {
  config.validate();
  apply_regime(m, regime);

  const corpus::Records train_set = corpus::filter(records, Partition::kTrain);
  const corpus::Records dev_set = corpus::filter(records, Partition::kDevelopment);
  if (train_set.empty() || dev_set.empty())
    throw InvalidInputError("train: need non-empty train and development partitions");

  std::unordered_map<std::string, const corpus::UtteranceRecord*> by_id;
  for (const auto& r : train_set) by_id[r.id] = &r;

  nn::AdamConfig opt_cfg;
  opt_cfg.learning_rate = config.learning_rate;
  opt_cfg.clip_gradients = config.clip_gradients;
  opt_cfg.clip_norm = config.clip_norm;
  nn::Adam optimizer(opt_cfg);
  const std::vector<nn::Parameter*> params = m.parameters();

  TrainLog log;
  log.regime = regime;
  double best_dev = -std::numeric_limits<double>::infinity();
  std::string best_blob;
  std::size_t stall = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    const auto plan = corpus::plan_buckets(train_set, config.batch_size,
                                           config.seed + 1000003ull * epoch);
    Rng dropout_rng(config.seed + 777 + epoch);
    double loss_sum = 0.0;

    for (std::size_t b = 0; b < plan.batches.size(); ++b) {
      std::vector<const corpus::UtteranceRecord*> batch;
      batch.reserve(plan.batches[b].size());
      for (const auto& id : plan.batches[b]) batch.push_back(by_id.at(id));

      for (auto* p : params) p->grad.setZero();
      ad::Tape t;
      ad::Var estimates = model::forward_batch(t, m, batch, true, dropout_rng);
      const Matrix targets = model::target_matrix(batch);
      ad::Var loss = model::ccc_loss_on_tape(t, estimates, targets);
      const double loss_value = t.value(loss)(0, 0);
      if (!std::isfinite(loss_value))
        throw RunError("train: non-finite loss at stage " + std::to_string(stage) +
                       " epoch " + std::to_string(epoch) + " batch " +
                       std::to_string(b) + " (first id '" + batch.front()->id +
                       "'); " + batch_diagnostics(t.value(estimates), targets));
      t.backward(loss);
      optimizer.step(params);
      loss_sum += loss_value;
    }

    const auto report = evaluate(m, records, Partition::kDevelopment);
    EpochEntry e;
    e.stage = stage;
    e.epoch = epoch;
    e.train_loss = loss_sum / static_cast<double>(plan.batches.size());
    e.dev_arousal = report.per_dimension.at(Dimension::kArousal);
    e.dev_valence = report.per_dimension.at(Dimension::kValence);
    e.dev_dominance = report.per_dimension.at(Dimension::kDominance);
    e.dev_mean = report.mean_ccc;
    log.epochs.push_back(e);

    if (report.mean_ccc > best_dev) {
      best_dev = report.mean_ccc;
      log.best_epoch = log.epochs.size();
      stall = 0;
      std::ostringstream blob;
      m.save(blob);
      best_blob = blob.str();
    } else {
      ++stall;
    }
    if (stall >= config.patience) {
      log.stopped_early = true;
      break;
    }
  }

  if (best_blob.empty())
    throw RunError("train: no epoch produced a finite development score");
  std::istringstream in(best_blob);
  return {model::SerModel::load(in), std::move(log)};
}

}  // namespace detail

/// Fine-tunes under a regime and returns the best-development-epoch
/// model with its log. Bit-reproducible for a fixed seed and platform.
inline TrainResult train(model::SerModel m, const corpus::Records& records,
                         Regime regime, const TrainConfig& config) {
  return detail::run_stage(std::move(m), records, regime, config, 1);
}

/// Two-stage recipe: fine-tune the audio model, then freeze its encoder
/// next to the (frozen) text encoder and train a fresh fused head. The
/// log keeps both stages; best_epoch points into stage 2.
inline TrainResult train_ft_frz(model::SerModel audio_model,
                                enc::Encoder text_encoder,
                                const corpus::Records& records,
                                const TrainConfig& config,
                                model::SerModelConfig fused_config = {}) {
  if (audio_model.has_text())
    throw InvalidInputError("train_ft_frz: stage 1 expects an audio-only model");
  if (text_encoder.spec().modality != enc::Modality::kText)
    throw InvalidInputError("train_ft_frz: second encoder must be textual");

  TrainResult stage1 =
      detail::run_stage(std::move(audio_model), records, Regime::kAudioFt, config, 1);

  model::SerModel fused(std::move(stage1.model.audio_encoder()),
                        std::move(text_encoder), fused_config, config.seed);
  TrainResult stage2 = detail::run_stage(std::move(fused), records,
                                         Regime::kAudioTextFtFrz, config, 2);

  TrainLog log;
  log.regime = Regime::kAudioTextFtFrz;
  const std::size_t stage1_epochs = stage1.log.epochs.size();
  log.epochs = std::move(stage1.log.epochs);
  log.epochs.insert(log.epochs.end(), stage2.log.epochs.begin(),
                    stage2.log.epochs.end());
  log.best_epoch = stage1_epochs + stage2.log.best_epoch;
  log.stopped_early = stage2.log.stopped_early;
  return {std::move(stage2.model), std::move(log)};
}

}  // namespace serkit::train

#endif  // SERKIT_TRAINER_HPP_
