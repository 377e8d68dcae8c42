// serkit/asr.hpp
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

#ifndef SERKIT_ASR_HPP_
#define SERKIT_ASR_HPP_

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iomanip>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "serkit/audio.hpp"
#include "serkit/corpus.hpp"
#include "serkit/csv.hpp"
#include "serkit/error.hpp"
#include "serkit/metrics.hpp"
#include "serkit/rng.hpp"
#include "serkit/trainer.hpp"
#include "serkit/types.hpp"

namespace serkit::asr {

// ---------------------------------------------------------------------------
// Transcription sources
// ---------------------------------------------------------------------------

/// Where a corpus's transcripts came from. A human source never names a
/// system; an ASR source always does. `params_reported` is the system's
/// published parameter count, informational only.
struct TranscriptionSource {
  enum class Kind { kHuman, kAsr };

  Kind kind = Kind::kHuman;
  std::string system_name;
  std::size_t params_reported = 0;

  static TranscriptionSource human() { return {}; }

  static TranscriptionSource system(std::string name, std::size_t params = 0) {
    TranscriptionSource s;
    s.kind = Kind::kAsr;
    s.system_name = std::move(name);
    s.params_reported = params;
    s.validate();
    return s;
  }

  void validate() const {
    if (kind == Kind::kHuman && !system_name.empty())
      throw InvalidInputError("human transcription source must not name a system");
    if (kind == Kind::kAsr && system_name.empty())
      throw InvalidInputError("asr transcription source needs a system name");
  }

  std::string label() const {
    return kind == Kind::kHuman ? "Human" : system_name;
  }
};

// ---------------------------------------------------------------------------
// Transcriber interface
// ---------------------------------------------------------------------------

/// External ASR contract: (samples, sample_rate) -> hypothesis text.
/// Implementations must be deterministic for a fixed input and safe to
/// call concurrently on distinct utterances. `available()` false means
/// the system cannot serve any request, which fails a whole run; a
/// throw from `transcribe` fails only that utterance.
class Transcriber {
 public:
  virtual ~Transcriber() = default;
  virtual bool available() const { return true; }
  virtual std::string transcribe(const std::vector<double>& samples,
                                 int sample_rate) const = 0;
};

/// Echoes the stored reference transcript of audio it has seen. Keys on
/// the audio content, so it honours the samples-to-text contract while
/// acting as the zero-error identity system.
class EchoTranscriber : public Transcriber {
 public:
  explicit EchoTranscriber(const corpus::Records& records) {
    for (const auto& r : records)
      by_audio_[key(r.audio, r.sample_rate)] = r.transcript;
  }

  std::string transcribe(const std::vector<double>& samples,
                         int sample_rate) const override {
    const auto it = by_audio_.find(key(samples, sample_rate));
    if (it == by_audio_.end())
      throw DataError("echo transcriber: audio not in its reference set");
    return it->second;
  }

 private:
  static std::uint64_t key(const std::vector<double>& samples, int rate) {
    return fnv1a(&rate, sizeof(rate), fnv1a(samples));
  }

  std::unordered_map<std::uint64_t, std::string> by_audio_;
};

/// Keeps the first, third, fifth ... word of the inner hypothesis and
/// drops every second one.
class WordDropTranscriber : public Transcriber {
 public:
  explicit WordDropTranscriber(const Transcriber& inner) : inner_(&inner) {}

  bool available() const override { return inner_->available(); }

  std::string transcribe(const std::vector<double>& samples,
                         int sample_rate) const override {
    std::istringstream ss(inner_->transcribe(samples, sample_rate));
    std::string word, out;
    std::size_t index = 0;
    while (ss >> word) {
      if (index++ % 2 == 0) {
        if (!out.empty()) out += ' ';
        out += word;
      }
    }
    return out;
  }

 private:
  const Transcriber* inner_;
};

/// Permutes the filler words of the inner hypothesis among their own
/// positions; any word listed in `keywords` stays exactly where it is.
/// The permutation is keyed on the audio content, so results do not
/// depend on call order or thread scheduling.
class KeywordShuffleTranscriber : public Transcriber {
 public:
  KeywordShuffleTranscriber(const Transcriber& inner,
                            std::vector<std::string> keywords,
                            std::uint64_t seed)
      : inner_(&inner), keywords_(std::move(keywords)), seed_(seed) {}

  bool available() const override { return inner_->available(); }

  std::string transcribe(const std::vector<double>& samples,
                         int sample_rate) const override {
    std::istringstream ss(inner_->transcribe(samples, sample_rate));
    std::vector<std::string> words;
    std::string w;
    while (ss >> w) words.push_back(w);

    std::vector<std::size_t> filler;
    for (std::size_t i = 0; i < words.size(); ++i) {
      if (std::find(keywords_.begin(), keywords_.end(), words[i]) ==
          keywords_.end())
        filler.push_back(i);
    }
    Rng rng(seed_ ^ fnv1a(samples));
    for (std::size_t i = filler.size(); i > 1; --i) {
      const auto j = static_cast<std::size_t>(rng.integer(i));
      std::swap(words[filler[i - 1]], words[filler[j]]);
    }

    std::string out;
    for (const auto& word : words) {
      if (!out.empty()) out += ' ';
      out += word;
    }
    return out;
  }

 private:
  const Transcriber* inner_;
  std::vector<std::string> keywords_;
  std::uint64_t seed_;
};

/// Shells out to an external ASR command. Each call writes the audio to
/// a temporary WAV file, runs `command <path>` and takes standard
/// output as the hypothesis. This is where published systems plug in,
/// e.g. a wrapper script around a speech-to-text CLI.
class CommandTranscriber : public Transcriber {
 public:
  explicit CommandTranscriber(std::string command) : command_(std::move(command)) {
    if (command_.empty())
      throw InvalidInputError("command transcriber needs a non-empty command");
  }

  /// True when the command's executable resolves (absolute/relative
  /// path exists, or a PATH entry contains it).
  bool available() const override {
    const std::string exe = command_.substr(0, command_.find(' '));
    if (exe.find('/') != std::string::npos)
      return std::filesystem::exists(exe);
    const char* path = std::getenv("PATH");
    if (path == nullptr) return false;
    std::istringstream dirs(path);
    std::string dir;
    while (std::getline(dirs, dir, ':')) {
      if (!dir.empty() && std::filesystem::exists(std::filesystem::path(dir) / exe))
        return true;
    }
    return false;
  }

  std::string transcribe(const std::vector<double>& samples,
                         int sample_rate) const override {
    static std::atomic<std::uint64_t> counter{0};
    const auto wav =
        std::filesystem::temp_directory_path() /
        ("serkit-asr-" + std::to_string(counter.fetch_add(1)) + "-" +
         std::to_string(fnv1a(samples)) + ".wav");
    audio::write_wav(wav.string(), samples, sample_rate);

    const std::string cmd = command_ + " '" + wav.string() + "'";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (pipe == nullptr) {
      std::filesystem::remove(wav);
      throw RunError("cannot start asr command: " + command_);
    }
    std::string text;
    char buf[4096];
    std::size_t got = 0;
    while ((got = std::fread(buf, 1, sizeof(buf), pipe)) > 0)
      text.append(buf, got);
    const int status = ::pclose(pipe);
    std::filesystem::remove(wav);
    if (status != 0)
      throw RunError("asr command failed (status " + std::to_string(status) +
                     "): " + command_);
    while (!text.empty() && (text.back() == '\n' || text.back() == '\r' ||
                             text.back() == ' ' || text.back() == '\t'))
      text.pop_back();
    return text;
  }

 private:
  std::string command_;
};

// ---------------------------------------------------------------------------
// Corpus transcription
// ---------------------------------------------------------------------------

/// One utterance's outcome. The reference keeps the human transcript
/// for WER scoring after the record's transcript has been replaced.
struct Hypothesis {
  std::string id;
  std::string reference;
  std::string hypothesis;
  bool failed = false;
};

struct TranscriptionResult {
  corpus::Records records;             // transcripts replaced, rest untouched
  std::vector<Hypothesis> utterances;  // input order, one per record
  std::vector<std::string> warnings;   // one line per failed utterance
};

/// Replaces every transcript with the transcriber's hypothesis. Audio,
/// labels and splits are never touched. Distinct utterances run in
/// parallel; assembly follows the input order, so the result is
/// deterministic for a deterministic transcriber. A throw from the
/// transcriber leaves that utterance's hypothesis empty and records a
/// warning instead of aborting the run.
inline TranscriptionResult transcribe_corpus(const corpus::Records& records,
                                             const Transcriber& transcriber) {
  if (!transcriber.available())
    throw RunError("transcribe_corpus: transcriber unavailable");

  TranscriptionResult result;
  result.records = records;
  result.utterances.resize(records.size());
  std::vector<std::string> failures(records.size());
  corpus::detail::parallel_for(records.size(), [&](std::size_t i) {
    Hypothesis& h = result.utterances[i];
    h.id = records[i].id;
    h.reference = records[i].transcript;
    try {
      h.hypothesis =
          transcriber.transcribe(records[i].audio, records[i].sample_rate);
    } catch (const std::exception& e) {
      h.hypothesis.clear();
      h.failed = true;
      failures[i] = e.what();
    }
    result.records[i].transcript = h.hypothesis;
  });
  for (std::size_t i = 0; i < records.size(); ++i) {
    if (result.utterances[i].failed)
      result.warnings.push_back("transcription failed for '" + records[i].id +
                                "', hypothesis left empty: " + failures[i]);
  }
  return result;
}

/// Corpus-level WER: alignment counts summed over all utterances, one
/// ratio at the end. A failed (empty) hypothesis counts as deleting the
/// whole reference.
inline metrics::WerResult corpus_wer(const std::vector<Hypothesis>& utterances) {
  metrics::WerResult total;
  for (const auto& h : utterances)
    total += metrics::wer_text(h.reference, h.hypothesis);
  if (total.reference_words == 0)
    throw InvalidInputError("corpus_wer: no utterances to score");
  return total;
}

// ---------------------------------------------------------------------------
// Hypotheses file
// ---------------------------------------------------------------------------

inline constexpr const char* kHypothesesHeader = "id,hypothesis";

inline void save_hypotheses(const std::vector<Hypothesis>& utterances,
                            const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  rows.reserve(utterances.size() + 1);
  rows.push_back({"id", "hypothesis"});
  for (const auto& h : utterances) rows.push_back({h.id, h.hypothesis});
  csv::write_file(path, rows);
}

inline std::vector<std::pair<std::string, std::string>> load_hypotheses(
    const std::string& path) {
  const auto rows = csv::read_file(path);
  if (rows.empty() || rows.front() != std::vector<std::string>{"id", "hypothesis"})
    throw DataError("hypotheses file needs an id,hypothesis header: " + path);
  std::vector<std::pair<std::string, std::string>> out;
  out.reserve(rows.size() - 1);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 2)
      throw DataError("hypotheses row " + std::to_string(i) + " needs 2 fields, got " +
                      std::to_string(rows[i].size()) + ": " + path);
    out.emplace_back(rows[i][0], rows[i][1]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Transcript quality study
// ---------------------------------------------------------------------------

/// One study row: where the transcripts came from, the corpus WER on
/// the evaluated partition (human rows have none) and the per-dimension
/// concordance of a model fine-tuned on those transcripts.
struct StudyRow {
  TranscriptionSource source;
  bool has_wer = false;
  double wer = 0.0;
  double arousal = 0.0;
  double valence = 0.0;
  double dominance = 0.0;
};

struct StudyReport {
  Partition partition = Partition::kTest1;
  std::vector<StudyRow> rows;
};

/// A study input: the source descriptor plus the transcriber realizing
/// it. Human rows use the stored transcripts and take no transcriber.
struct StudySource {
  TranscriptionSource source;
  const Transcriber* transcriber = nullptr;
};

/// Fine-tunes one fused model per transcription source, identical seed
/// and configuration throughout, and scores each on `partition`. WER is
/// measured on the same partition against the stored human transcripts.
/// `make_model` must build the same fresh model on every call.
template <typename ModelFactory>
inline StudyReport transcript_study(ModelFactory&& make_model,
                                    const corpus::Records& records,
                                    const std::vector<StudySource>& sources,
                                    const train::TrainConfig& config,
                                    Partition partition = Partition::kTest1) {
  StudyReport report;
  report.partition = partition;
  for (const auto& s : sources) {
    s.source.validate();
    const bool human = s.source.kind == TranscriptionSource::Kind::kHuman;
    if (human != (s.transcriber == nullptr))
      throw InvalidInputError(
          "transcript_study: human rows take no transcriber, asr rows need one");

    StudyRow row;
    row.source = s.source;
    corpus::Records run_records;
    if (human) {
      run_records = records;
    } else {
      auto transcription = transcribe_corpus(records, *s.transcriber);
      metrics::WerResult total;
      for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].partition != partition) continue;
        total += metrics::wer_text(transcription.utterances[i].reference,
                                   transcription.utterances[i].hypothesis);
      }
      if (total.reference_words == 0)
        throw InvalidInputError(std::string("transcript_study: no utterances in ") +
                                to_string(partition));
      row.wer = total.wer();
      row.has_wer = true;
      run_records = std::move(transcription.records);
    }

    auto trained = train::train(make_model(), run_records,
                                train::Regime::kAudioTextFt, config);
    const auto scores = train::evaluate(trained.model, run_records, partition);
    row.arousal = scores[Dimension::kArousal];
    row.valence = scores[Dimension::kValence];
    row.dominance = scores[Dimension::kDominance];
    report.rows.push_back(std::move(row));
  }
  return report;
}

/// Markdown table in the published layout: one row per source, WER as a
/// percentage (a dash for human rows), concordance to three decimals.
inline std::string format_study(const StudyReport& report) {
  std::ostringstream out;
  out << "Transcript quality study on " << to_string(report.partition) << ":\n\n";
  out << "| Transcription method | WER | Arousal | Valence | Dominance |\n";
  out << "|---|---|---|---|---|\n";
  for (const auto& row : report.rows) {
    out << "| " << row.source.label();
    if (row.source.kind == TranscriptionSource::Kind::kAsr &&
        row.source.params_reported > 0)
      out << " (" << row.source.params_reported << " params)";
    out << " | ";
    if (row.has_wer)
      out << std::fixed << std::setprecision(1) << 100.0 * row.wer << "%";
    else
      out << "—";
    out << std::fixed << std::setprecision(3);
    out << " | " << row.arousal << " | " << row.valence << " | "
        << row.dominance << " |\n";
  }
  return out.str();
}

}  // namespace serkit::asr

#endif  // SERKIT_ASR_HPP_
