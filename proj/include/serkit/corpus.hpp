// serkit/corpus.hpp
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

#ifndef SERKIT_CORPUS_HPP_
#define SERKIT_CORPUS_HPP_

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iomanip>
#include <numbers>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "serkit/audio.hpp"
#include "serkit/csv.hpp"
#include "serkit/error.hpp"
#include "serkit/rng.hpp"
#include "serkit/types.hpp"

namespace serkit::corpus {

/// One corpus item: mono audio, transcript, normalized labels, split tag.
struct UtteranceRecord {
  std::string id;
  std::vector<double> audio;
  int sample_rate = audio::kCanonicalSampleRate;
  std::string transcript;
  EmotionTriple labels;
  Partition partition = Partition::kTrain;

  /// Content checksum; the transcript can be excluded so transcript
  /// replacement can be shown to leave everything else untouched.
  std::uint64_t checksum(bool include_transcript = true) const {
    std::uint64_t h = fnv1a(id.data(), id.size());
    h = fnv1a(audio, h);
    h = fnv1a(&sample_rate, sizeof(sample_rate), h);
    if (include_transcript) h = fnv1a(transcript.data(), transcript.size(), h);
    h = fnv1a(&labels, sizeof(labels), h);
    auto p = static_cast<int>(partition);
    return fnv1a(&p, sizeof(p), h);
  }
};

using Records = std::vector<UtteranceRecord>;

/// Maps a raw corpus label on the 1..7 scale to [0, 1]: (raw - 1) / 6.
inline double normalize_label(double raw) {
  if (!(raw >= 1.0 && raw <= 7.0))
    throw InvalidInputError("raw label " + std::to_string(raw) +
                            " outside the 1..7 corpus scale");
  return (raw - 1.0) / 6.0;
}

namespace detail {

inline double parse_double(const std::string& s, const std::string& context) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), value);
  if (ec != std::errc() || ptr != s.data() + s.size())
    throw DataError("cannot parse number '" + s + "' in " + context);
  return value;
}

inline std::string format_double(double v) {
  std::ostringstream ss;
  ss.precision(17);
  ss << v;
  return ss.str();
}

/// Serializing a normalized label back to the raw 1..7 scale must
/// reload to the bit-identical normalized value. The straight inverse
/// 6y + 1 can land one ulp off, so search the neighbouring raw values
/// for an exact preimage of y under normalize_label.
inline double denormalize_label(double y) {
  const double guess = y * 6.0 + 1.0;
  double candidate = guess;
  for (int k = 0; k <= 8; ++k) {
    double up = candidate, down = candidate;
    for (int s = 0; s < k; ++s) {
      up = std::nextafter(up, 8.0);
      down = std::nextafter(down, 0.0);
    }
    for (double r : {up, down}) {
      if (r >= 1.0 && r <= 7.0 && (r - 1.0) / 6.0 == y) return r;
    }
  }
  return std::clamp(guess, 1.0, 7.0);
}

template <typename Fn>
inline void parallel_for(std::size_t n, Fn&& fn) {
  const std::size_t workers =
      std::min<std::size_t>(std::max(1u, std::thread::hardware_concurrency()), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& t : pool) t.join();
}

}  // namespace detail

inline constexpr const char* kManifestHeader =
    "id,audio_path,transcript,arousal,valence,dominance,split";

/// Loads a manifest CSV and the audio it references. Audio files are
/// read in parallel; the returned order always follows the manifest.
/// Raw labels on the 1..7 scale are normalized to [0, 1].
inline Records load_manifest(const std::string& manifest_path,
                             const std::string& audio_root) {
  auto rows = csv::read_file(manifest_path);
  if (rows.empty()) throw DataError("manifest is empty: " + manifest_path);

  const std::vector<std::string> expected = {"id",      "audio_path", "transcript",
                                             "arousal", "valence",    "dominance",
                                             "split"};
  if (rows[0] != expected)
    throw DataError("manifest header mismatch in " + manifest_path + " (expected '" +
                    std::string(kManifestHeader) + "')");

  const std::size_t n = rows.size() - 1;
  Records records(n);
  std::vector<std::string> errors(n);

  detail::parallel_for(n, [&](std::size_t i) {
    const auto& row = rows[i + 1];
    const std::string context =
        "manifest row " + std::to_string(i + 2) +
        (row.empty() ? "" : " (id '" + row[0] + "')");
    try {
      if (row.size() != 7)
        throw DataError("malformed " + context + ": expected 7 fields, got " +
                        std::to_string(row.size()));
      UtteranceRecord rec;
      rec.id = row[0];
      rec.transcript = row[2];
      try {
        rec.labels.arousal = normalize_label(detail::parse_double(row[3], context));
        rec.labels.valence = normalize_label(detail::parse_double(row[4], context));
        rec.labels.dominance = normalize_label(detail::parse_double(row[5], context));
      } catch (const InvalidInputError& e) {
        throw DataError(std::string(e.what()) + " in " + context);
      }
      rec.partition = partition_from_string(row[6]);
      const std::filesystem::path audio_path =
          std::filesystem::path(audio_root) / row[1];
      audio::Wave wave = audio::read_wav(audio_path.string());
      if (wave.samples.empty())
        throw DataError("audio file has no samples in " + context);
      rec.audio = std::move(wave.samples);
      rec.sample_rate = wave.sample_rate;
      records[i] = std::move(rec);
    } catch (const Error& e) {
      errors[i] = e.what();
    } catch (const std::exception& e) {
      errors[i] = context + ": " + e.what();
    }
  });

  for (const auto& err : errors)
    if (!err.empty()) throw DataError(err);

  return records;
}

/// Writes records as manifest CSV plus one WAV per record under
/// `audio_root`. Loading the result reproduces the records bit-exactly.
inline void save_manifest(const Records& records, const std::string& manifest_path,
                          const std::string& audio_root) {
  std::filesystem::create_directories(audio_root);
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"id", "audio_path", "transcript", "arousal", "valence", "dominance",
                  "split"});
  for (const auto& rec : records) {
    const std::string wav_name = rec.id + ".wav";
    audio::write_wav((std::filesystem::path(audio_root) / wav_name).string(), rec.audio,
                     rec.sample_rate);
    rows.push_back({rec.id, wav_name, rec.transcript,
                    detail::format_double(detail::denormalize_label(rec.labels.arousal)),
                    detail::format_double(detail::denormalize_label(rec.labels.valence)),
                    detail::format_double(detail::denormalize_label(rec.labels.dominance)),
                    to_string(rec.partition)});
  }
  csv::write_file(manifest_path, rows);
}

inline Records filter(const Records& records, Partition partition) {
  Records out;
  for (const auto& r : records)
    if (r.partition == partition) out.push_back(r);
  return out;
}

// ---------------------------------------------------------------------------
// Length-bucketed batching
// ---------------------------------------------------------------------------

/// An ordered batching of record ids. All batches except possibly the
/// last hold exactly batch_size items.
struct BucketPlan {
  std::vector<std::vector<std::string>> batches;
  std::size_t batch_size = 0;
  double padding_ratio = 0.0;
};

namespace detail {

inline double padding_ratio_of(const std::vector<std::vector<std::size_t>>& batches_len) {
  double total = 0.0, padded = 0.0;
  for (const auto& batch : batches_len) {
    const std::size_t max_len = *std::max_element(batch.begin(), batch.end());
    for (std::size_t len : batch) {
      total += static_cast<double>(len);
      padded += static_cast<double>(max_len);
    }
  }
  return padded <= 0.0 ? 0.0 : 1.0 - total / padded;
}

inline BucketPlan plan_from_order(const Records& records, std::vector<std::size_t> order,
                                  std::size_t batch_size) {
  BucketPlan plan;
  plan.batch_size = batch_size;
  std::vector<std::vector<std::size_t>> lens;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(start + batch_size, order.size());
    std::vector<std::string> ids;
    std::vector<std::size_t> batch_lens;
    for (std::size_t k = start; k < end; ++k) {
      ids.push_back(records[order[k]].id);
      batch_lens.push_back(records[order[k]].audio.size());
    }
    plan.batches.push_back(std::move(ids));
    lens.push_back(std::move(batch_lens));
  }
  plan.padding_ratio = padding_ratio_of(lens);
  return plan;
}

}  // namespace detail

/// Sorts records by audio length, slices consecutive batches, then
/// shuffles the batch order with `seed`. Composition inside each batch
/// stays fixed, which is what keeps padding low.
inline BucketPlan plan_buckets(const Records& records, std::size_t batch_size,
                               std::uint64_t seed) {
  if (records.empty()) throw InvalidInputError("plan_buckets: empty record collection");
  if (batch_size < 2)
    throw InvalidInputError("plan_buckets: batch_size must be at least 2 (CCC needs "
                            "two items), got " + std::to_string(batch_size));
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (records[a].audio.size() != records[b].audio.size())
      return records[a].audio.size() < records[b].audio.size();
    return records[a].id < records[b].id;
  });

  // Slice on the sorted order, then shuffle whole batches.
  BucketPlan plan = detail::plan_from_order(records, order, batch_size);
  Rng rng(seed);
  rng.shuffle(plan.batches);
  return plan;
}

/// Baseline batching with no length sorting; used to quantify what the
/// bucketing saves.
inline BucketPlan plan_random_groups(const Records& records, std::size_t batch_size,
                                     std::uint64_t seed) {
  if (records.empty())
    throw InvalidInputError("plan_random_groups: empty record collection");
  if (batch_size < 2)
    throw InvalidInputError("plan_random_groups: batch_size must be at least 2");
  std::vector<std::size_t> order(records.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(seed);
  rng.shuffle(order);
  return detail::plan_from_order(records, order, batch_size);
}

// ---------------------------------------------------------------------------
// Synthetic desk-scale corpus
// ---------------------------------------------------------------------------

/// Sentence material for the synthetic corpus. Each template has one
/// slot for a sentiment keyword; the keyword's position in `keywords`
/// is its polarity index. test2 uses the held-out templates only.
struct SyntheticLexicon {
  std::vector<std::string> keywords;   // polarity 0 (worst) .. 4 (best)
  std::vector<std::string> templates_shared;
  std::vector<std::string> templates_heldout;

  std::vector<std::string> vocabulary() const {
    std::vector<std::string> words = keywords;
    auto harvest = [&](const std::string& tmpl) {
      std::istringstream ss(tmpl);
      std::string w;
      while (ss >> w)
        if (w != "{}") words.push_back(w);
    };
    for (const auto& t : templates_shared) harvest(t);
    for (const auto& t : templates_heldout) harvest(t);
    std::sort(words.begin(), words.end());
    words.erase(std::unique(words.begin(), words.end()), words.end());
    return words;
  }
};

inline const SyntheticLexicon& synthetic_lexicon() {
  static const SyntheticLexicon lex = {
      {"dreadful", "poor", "ordinary", "pleasant", "delightful"},
      {
          "i feel {} about the news today",
          "that meeting left me feeling {} honestly",
          "the weather around here has been {} all week",
          "she said the whole trip was {} overall",
          "what a {} day this has turned out to be",
          "the show we watched last night was really {}",
          "my week at work has felt {} so far",
          "he kept saying the game was {} again and again",
      },
      {
          "my neighbor called the concert {} yesterday evening",
          "frankly the food at that place tasted {} tonight",
      },
  };
  return lex;
}

/// Valence quantized to the five keyword polarity levels.
inline int valence_polarity_index(double valence) {
  return std::min(4, static_cast<int>(std::floor(valence * 5.0)));
}

namespace detail {

inline std::string instantiate_template(const std::string& tmpl,
                                        const std::string& keyword) {
  const auto pos = tmpl.find("{}");
  return tmpl.substr(0, pos) + keyword + tmpl.substr(pos + 2);
}

/// Snaps a sample to the 16-bit grid used by the WAV writer so that a
/// save/load cycle reproduces audio bit-exactly.
inline double quantize_sample(double v) {
  const double clamped = std::clamp(v, -1.0, 1.0);
  const long q = std::lround(clamped * 32768.0);
  return static_cast<double>(std::clamp(q, -32768L, 32767L)) / 32768.0;
}

}  // namespace detail

/// Generates a deterministic synthetic corpus with the signal placed so
/// that each label is recoverable from exactly one modality:
///   - arousal: the RMS amplitude of the (sine + noise) audio,
///   - dominance: the sine's fundamental frequency (affine in the label),
///   - valence: a sentiment keyword in the transcript; it never touches
///     the audio, whose amplitude and frequency are drawn independently.
/// Split 70/10/10/10 over train/development/test1/test2; test2
/// transcripts come from held-out sentence templates.
inline Records generate_synthetic_corpus(std::size_t n, std::uint64_t seed,
                                         int sample_rate = audio::kCanonicalSampleRate) {
  if (n < 40)
    throw InvalidInputError("synthetic corpus needs n >= 40 to split, got " +
                            std::to_string(n));
  const auto& lex = synthetic_lexicon();
  Rng rng(seed);

  const std::size_t n_dev = n / 10, n_test1 = n / 10, n_test2 = n / 10;
  const std::size_t n_train = n - n_dev - n_test1 - n_test2;

  Records records(n);
  for (std::size_t i = 0; i < n; ++i) {
    UtteranceRecord rec;
    {
      std::ostringstream id;
      id << "synth-" << std::setw(6) << std::setfill('0') << i;
      rec.id = id.str();
    }
    if (i < n_train) rec.partition = Partition::kTrain;
    else if (i < n_train + n_dev) rec.partition = Partition::kDevelopment;
    else if (i < n_train + n_dev + n_test1) rec.partition = Partition::kTest1;
    else rec.partition = Partition::kTest2;

    // Labels are drawn on the raw 1..7 scale first so that saved
    // manifests round-trip bit-exactly through normalize_label.
    const double arousal_target = normalize_label(rng.uniform(1.0, 7.0));
    rec.labels.valence = normalize_label(rng.uniform(1.0, 7.0));
    rec.labels.dominance = normalize_label(rng.uniform(1.0, 7.0));

    // Transcript: keyword polarity encodes the quantized valence.
    const auto& pool = rec.partition == Partition::kTest2 ? lex.templates_heldout
                                                          : lex.templates_shared;
    const std::string& tmpl = pool[rng.integer(pool.size())];
    const std::string& keyword = lex.keywords[valence_polarity_index(rec.labels.valence)];
    rec.transcript = detail::instantiate_template(tmpl, keyword);

    // Audio: sine at f0(dominance) plus white noise, scaled toward the
    // target RMS, then snapped to the 16-bit grid (loud records may
    // clip at +-1). The stored arousal label is the RMS the finished
    // audio actually has, so RMS == arousal holds exactly and survives
    // a WAV save/load cycle.
    const double duration = rng.uniform(0.25, 0.6);
    const std::size_t n_samples =
        static_cast<std::size_t>(std::lround(duration * sample_rate));
    const double f0 = 80.0 + 220.0 * rec.labels.dominance;
    const double tau = 2.0 * std::numbers::pi;
    const double phase = rng.uniform(0.0, tau);
    std::vector<double> raw(n_samples);
    const double sine_amp = std::sqrt(2.0 * 0.7);
    const double noise_std = std::sqrt(0.3);
    for (std::size_t t = 0; t < n_samples; ++t) {
      const double x = sine_amp * std::sin(tau * f0 * t / sample_rate + phase) +
                       noise_std * rng.normal();
      raw[t] = x;
    }
    const double raw_rms = audio::rms(raw);
    const double scale = raw_rms > 0.0 ? arousal_target / raw_rms : 0.0;
    rec.audio.resize(n_samples);
    for (std::size_t t = 0; t < n_samples; ++t)
      rec.audio[t] = detail::quantize_sample(raw[t] * scale);
    rec.sample_rate = sample_rate;
    // Snap the achieved RMS onto the representable image of
    // normalize_label so the manifest's raw scale reproduces it.
    rec.labels.arousal = (detail::denormalize_label(audio::rms(rec.audio)) - 1.0) / 6.0;

    records[i] = std::move(rec);
  }
  return records;
}

}  // namespace serkit::corpus

#endif  // SERKIT_CORPUS_HPP_
