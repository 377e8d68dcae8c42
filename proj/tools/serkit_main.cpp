// tools/serkit_main.cpp
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
// Command-line entry points. Exit codes: 0 success, 2 usage error,
// 3 data error, 4 run error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "serkit/asr.hpp"
#include "serkit/probe.hpp"
#include "serkit/report.hpp"
#include "serkit/trainer.hpp"
#include "serkit/version.hpp"

namespace {

namespace fs = std::filesystem;
using serkit::Dimension;
using serkit::Partition;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitRun = 4;

// ---------------------------------------------------------------------------
// Shared plumbing
// ---------------------------------------------------------------------------

/// Corpus loading convention: --manifest names the CSV, audio paths in
/// it resolve against --audio-root (default: a wav/ directory next to
/// the manifest).
struct CorpusFlags {
  std::string manifest;
  std::string audio_root;

  void attach(CLI::App* cmd) {
    cmd->add_option("--manifest", manifest, "corpus manifest CSV")->required();
    cmd->add_option("--audio-root", audio_root,
                    "directory the manifest's audio paths resolve against "
                    "(default: wav/ next to the manifest)");
  }

  serkit::corpus::Records load() const {
    const std::string root =
        audio_root.empty() ? (fs::path(manifest).parent_path() / "wav").string()
                           : audio_root;
    return serkit::corpus::load_manifest(manifest, root);
  }
};

serkit::enc::Encoder make_encoder(const std::string& preset,
                                  const std::string& checkpoint,
                                  std::uint64_t seed) {
  auto spec = serkit::enc::encoder_preset(preset);
  spec.checkpoint_ref =
      checkpoint.empty() ? "random(" + std::to_string(seed) + ")" : checkpoint;
  return serkit::enc::load_encoder(spec);
}

serkit::report::RunManifest begin_manifest(const std::string& command,
                                           const std::string& out) {
  serkit::report::RunManifest m;
  m.command = command;
  m.name = command;
  m.version = serkit::kVersion;
  m.started_at = serkit::report::utc_timestamp();
  m.output_dir = out;
  return m;
}

void finish_manifest(serkit::report::RunManifest& m, const fs::path& out) {
  m.finished_at = serkit::report::utc_timestamp();
  serkit::report::save_run_manifest(m, out / serkit::report::kRunManifestFile);
}

/// Evaluates every partition the corpus actually has and writes one
/// scores row per partition.
std::vector<serkit::metrics::CccReport> score_all_splits(
    const serkit::model::SerModel& model, const serkit::corpus::Records& records) {
  std::vector<serkit::metrics::CccReport> scores;
  for (Partition p : {Partition::kDevelopment, Partition::kTest1, Partition::kTest2}) {
    if (serkit::corpus::filter(records, p).empty()) continue;
    scores.push_back(serkit::train::evaluate(model, records, p));
  }
  return scores;
}

void print_scores(const std::vector<serkit::metrics::CccReport>& scores) {
  for (const auto& s : scores) {
    std::cout << serkit::to_string(s.partition) << ": arousal "
              << s[Dimension::kArousal] << ", valence " << s[Dimension::kValence]
              << ", dominance " << s[Dimension::kDominance] << "\n";
  }
}

serkit::model::SerModel load_model_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw serkit::DataError("cannot open model file: " + path);
  return serkit::model::SerModel::load(in);
}

void save_model_file(const serkit::model::SerModel& model, const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw serkit::DataError("cannot write model file: " + path.string());
  model.save(out);
  if (!out) throw serkit::DataError("short write on model file: " + path.string());
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

struct SynthArgs {
  std::size_t n = 200;
  std::uint64_t seed = 0;
  int sample_rate = 16000;
  std::string out;
};

void cmd_synth(const SynthArgs& a) {
  serkit::report::OutputLock lock(a.out);
  auto manifest = begin_manifest("synth", a.out);
  manifest.seed = a.seed;

  const auto records =
      serkit::corpus::generate_synthetic_corpus(a.n, a.seed, a.sample_rate);
  serkit::corpus::save_manifest(records, (fs::path(a.out) / "manifest.csv").string(),
                                (fs::path(a.out) / "wav").string());
  finish_manifest(manifest, a.out);
  std::cout << "wrote " << records.size() << " utterances to " << a.out << "\n";
}

struct TrainArgs {
  std::string config;
  CorpusFlags corpus;
  std::string regime = "audio_ft";
  std::string encoder;
  std::string text_encoder;
  std::string checkpoint;
  std::string text_checkpoint;
  std::int64_t seed = -1;  // negative: keep the config file's seed
  std::string out;
};

void cmd_train(const TrainArgs& a) {
  auto cfg = serkit::train::load_train_config(a.config);
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  const auto records = a.corpus.load();

  const bool needs_text = a.regime != "audio_ft";
  if (needs_text && a.text_encoder.empty())
    throw serkit::InvalidInputError("regime " + a.regime +
                                    " needs --text-encoder");

  serkit::report::OutputLock lock(a.out);
  auto manifest = begin_manifest("train", a.out);
  manifest.config_path = a.config;
  manifest.seed = cfg.seed;
  manifest.encoder = a.encoder;
  manifest.text_encoder = needs_text ? a.text_encoder : "";
  manifest.name = a.regime + "-" + a.encoder;

  serkit::train::TrainResult result = [&] {
    if (a.regime == "audio_ft") {
      serkit::model::SerModel m(make_encoder(a.encoder, a.checkpoint, cfg.seed), {},
                                cfg.seed);
      return serkit::train::train(std::move(m), records,
                                  serkit::train::Regime::kAudioFt, cfg);
    }
    if (a.regime == "audiotext_ft") {
      serkit::model::SerModel m(
          make_encoder(a.encoder, a.checkpoint, cfg.seed),
          make_encoder(a.text_encoder, a.text_checkpoint, cfg.seed + 1), {}, cfg.seed);
      return serkit::train::train(std::move(m), records,
                                  serkit::train::Regime::kAudioTextFt, cfg);
    }
    if (a.regime == "ft_frz") {
      serkit::model::SerModel m(make_encoder(a.encoder, a.checkpoint, cfg.seed), {},
                                cfg.seed);
      return serkit::train::train_ft_frz(
          std::move(m), make_encoder(a.text_encoder, a.text_checkpoint, cfg.seed + 1),
          records, cfg);
    }
    throw serkit::InvalidInputError("cannot train under regime '" + a.regime +
                                    "'; use audio_ft, audiotext_ft or ft_frz");
  }();

  manifest.regime = serkit::train::to_string(result.log.regime);
  manifest.parameter_count = result.model.parameter_count();
  save_model_file(result.model, fs::path(a.out) / serkit::report::kModelFile);
  serkit::train::save_train_log(result.log,
                                fs::path(a.out) / serkit::report::kTrainLogFile);
  const auto scores = score_all_splits(result.model, records);
  serkit::report::save_scores(scores, fs::path(a.out) / serkit::report::kScoresFile);
  finish_manifest(manifest, a.out);

  std::cout << "best epoch " << result.log.best_epoch << " of "
            << result.log.epochs.size()
            << (result.log.stopped_early ? " (stopped early)" : "") << "\n";
  print_scores(scores);
}

struct EvalArgs {
  std::string model;
  CorpusFlags corpus;
  std::string split = "test1";
  std::string out;
};

void cmd_eval(const EvalArgs& a) {
  const auto model = load_model_file(a.model);
  const auto records = a.corpus.load();
  const auto partition = serkit::partition_from_string(a.split);

  serkit::report::OutputLock lock(a.out);
  auto manifest = begin_manifest("eval", a.out);
  manifest.parameter_count = model.parameter_count();
  manifest.text_encoder = model.has_text() ? "text" : "";
  manifest.name = "eval-" + a.split;

  const std::vector<serkit::metrics::CccReport> scores = {
      serkit::train::evaluate(model, records, partition)};
  serkit::report::save_scores(scores, fs::path(a.out) / serkit::report::kScoresFile);
  finish_manifest(manifest, a.out);
  print_scores(scores);
}

struct ProbeArgs {
  std::string config;
  CorpusFlags corpus;
  std::string encoder;
  std::string checkpoint;
  std::string dimension = "valence";
  std::int64_t seed = -1;
  std::string out;
};

void cmd_probe(const ProbeArgs& a) {
  auto cfg = serkit::train::load_train_config(a.config);
  if (a.seed >= 0) cfg.seed = static_cast<std::uint64_t>(a.seed);
  const auto records = a.corpus.load();
  const auto dimension = serkit::dimension_from_string(a.dimension);

  serkit::report::OutputLock lock(a.out);
  auto manifest = begin_manifest("probe", a.out);
  manifest.config_path = a.config;
  manifest.seed = cfg.seed;
  manifest.encoder = a.encoder;
  manifest.regime = "PROBE";
  manifest.name = "probe-" + a.dimension;

  auto encoder = make_encoder(a.encoder, a.checkpoint, cfg.seed);
  encoder.freeze({.freeze_all = true});
  const auto profile = serkit::probe::fit_probe(encoder, records, dimension, cfg);
  const auto artifacts = serkit::probe::export_profile(profile, a.out);
  finish_manifest(manifest, a.out);

  std::cout << "wrote " << artifacts.table_path.string() << " and "
            << artifacts.image_path.string() << "\n";
}

struct TranscribeArgs {
  CorpusFlags corpus;
  std::string asr;
  std::uint64_t seed = 0;
  std::string out;
};

void cmd_transcribe(const TranscribeArgs& a) {
  const auto records = a.corpus.load();

  // Stub systems keep the artifact runnable offline; cmd:<command>
  // plugs in a real external recognizer.
  const serkit::asr::EchoTranscriber echo(records);
  const serkit::asr::WordDropTranscriber drop(echo);
  const serkit::asr::KeywordShuffleTranscriber shuffle(
      echo, serkit::corpus::synthetic_lexicon().keywords, a.seed);
  std::unique_ptr<serkit::asr::CommandTranscriber> command;
  const serkit::asr::Transcriber* transcriber = nullptr;
  if (a.asr == "identity") {
    transcriber = &echo;
  } else if (a.asr == "drop") {
    transcriber = &drop;
  } else if (a.asr == "shuffle") {
    transcriber = &shuffle;
  } else if (a.asr.rfind("cmd:", 0) == 0) {
    command = std::make_unique<serkit::asr::CommandTranscriber>(a.asr.substr(4));
    transcriber = command.get();
  } else {
    throw serkit::InvalidInputError(
        "unknown --asr '" + a.asr + "'; use identity, drop, shuffle or cmd:<command>");
  }

  serkit::report::OutputLock lock(a.out);
  auto manifest = begin_manifest("transcribe", a.out);
  manifest.seed = a.seed;
  manifest.name = "transcribe-" + a.asr;

  const auto result = serkit::asr::transcribe_corpus(records, *transcriber);
  for (const auto& warning : result.warnings) std::cerr << warning << "\n";
  serkit::asr::save_hypotheses(result.utterances,
                               (fs::path(a.out) / "hypotheses.csv").string());
  serkit::corpus::save_manifest(result.records,
                                (fs::path(a.out) / "manifest.csv").string(),
                                (fs::path(a.out) / "wav").string());
  finish_manifest(manifest, a.out);

  const auto wer = serkit::asr::corpus_wer(result.utterances);
  std::cout << "corpus WER " << wer.wer() << " over " << wer.reference_words
            << " reference words (" << result.warnings.size() << " failures)\n";
}

struct ReportArgs {
  std::vector<std::string> runs;
  std::string out;
};

void cmd_report(const ReportArgs& a) {
  serkit::report::OutputLock lock(a.out);
  auto manifest = begin_manifest("report", a.out);

  std::vector<fs::path> dirs(a.runs.begin(), a.runs.end());
  const auto inputs = serkit::report::collect_runs(dirs);
  serkit::report::write_report(inputs, a.out);
  finish_manifest(manifest, a.out);

  std::cout << "report over " << inputs.runs.size() << " runs ("
            << inputs.missing.size() << " missing) in " << a.out << "\n";
  for (const auto& line : inputs.missing) std::cerr << "missing run: " << line << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"distilled audio-textual speech emotion recognition toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", serkit::kVersion);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic corpus");
  synth_cmd->add_option("--n", synth.n, "number of utterances");
  synth_cmd->add_option("--seed", synth.seed, "corpus seed");
  synth_cmd->add_option("--sample-rate", synth.sample_rate, "audio sample rate");
  synth_cmd->add_option("--out", synth.out, "output directory")->required();
  synth_cmd->callback([&] { cmd_synth(synth); });

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "fine-tune a model");
  train_cmd->add_option("--config", train.config, "train config file")->required();
  train.corpus.attach(train_cmd);
  train_cmd->add_option("--regime", train.regime,
                        "audio_ft, audiotext_ft or ft_frz");
  train_cmd->add_option("--encoder", train.encoder, "audio encoder preset")->required();
  train_cmd->add_option("--text-encoder", train.text_encoder, "text encoder preset");
  train_cmd->add_option("--checkpoint", train.checkpoint, "audio encoder checkpoint");
  train_cmd->add_option("--text-checkpoint", train.text_checkpoint,
                        "text encoder checkpoint");
  train_cmd->add_option("--seed", train.seed, "overrides the config file seed");
  train_cmd->add_option("--out", train.out, "output directory")->required();
  train_cmd->callback([&] { cmd_train(train); });

  EvalArgs eval;
  auto* eval_cmd = app.add_subcommand("eval", "score a saved model on one split");
  eval_cmd->add_option("--model", eval.model, "saved model file")->required();
  eval.corpus.attach(eval_cmd);
  eval_cmd->add_option("--split", eval.split, "dev, test1 or test2");
  eval_cmd->add_option("--out", eval.out, "output directory")->required();
  eval_cmd->callback([&] { cmd_eval(eval); });

  ProbeArgs probe;
  auto* probe_cmd = app.add_subcommand("probe", "fit a layer-weight probe");
  probe_cmd->add_option("--config", probe.config, "train config file")->required();
  probe.corpus.attach(probe_cmd);
  probe_cmd->add_option("--encoder", probe.encoder, "encoder preset")->required();
  probe_cmd->add_option("--checkpoint", probe.checkpoint, "encoder checkpoint");
  probe_cmd->add_option("--dimension", probe.dimension,
                        "arousal, valence or dominance");
  probe_cmd->add_option("--seed", probe.seed, "overrides the config file seed");
  probe_cmd->add_option("--out", probe.out, "output directory")->required();
  probe_cmd->callback([&] { cmd_probe(probe); });

  TranscribeArgs transcribe;
  auto* transcribe_cmd =
      app.add_subcommand("transcribe", "replace transcripts with ASR hypotheses");
  transcribe.corpus.attach(transcribe_cmd);
  transcribe_cmd->add_option("--asr", transcribe.asr,
                             "identity, drop, shuffle or cmd:<command>")
      ->required();
  transcribe_cmd->add_option("--seed", transcribe.seed, "shuffle seed");
  transcribe_cmd->add_option("--out", transcribe.out, "output directory")->required();
  transcribe_cmd->callback([&] { cmd_transcribe(transcribe); });

  ReportArgs report;
  auto* report_cmd = app.add_subcommand("report", "compose a report from stored runs");
  report_cmd->add_option("runs", report.runs, "run directories")->required();
  report_cmd->add_option("--out", report.out, "output directory")->required();
  report_cmd->callback([&] { cmd_report(report); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const serkit::RunError& e) {
    std::cerr << "run error: " << e.what() << "\n";
    return kExitRun;
  } catch (const serkit::Error& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "run error: " << e.what() << "\n";
    return kExitRun;
  }
  return kExitOk;
}
