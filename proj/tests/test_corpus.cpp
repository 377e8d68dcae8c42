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

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "serkit/corpus.hpp"

namespace fs = std::filesystem;
using serkit::DataError;
using serkit::EmotionTriple;
using serkit::InvalidInputError;
using serkit::Partition;
using serkit::Rng;
using namespace serkit::corpus;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("serkit-test-" + std::to_string(Catch::rngSeed()) + "-" +
            std::to_string(counter()++));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::string str() const { return path.string(); }
};

Records records_with_lengths(const std::vector<std::size_t>& lengths) {
  Records recs;
  for (std::size_t i = 0; i < lengths.size(); ++i) {
    UtteranceRecord r;
    r.id = "r" + std::to_string(i);
    r.audio.assign(lengths[i], 0.0);
    r.transcript = "x";
    r.labels = {0.5, 0.5, 0.5};
    recs.push_back(std::move(r));
  }
  return recs;
}

/// Test-side oracle: signal power at one frequency via the Goertzel
/// recurrence, independent of the library's synthesis code.
double goertzel_power(const std::vector<double>& x, double freq_hz, int sample_rate) {
  const double w = 2.0 * std::numbers::pi * freq_hz / sample_rate;
  const double coeff = 2.0 * std::cos(w);
  double s0 = 0.0, s1 = 0.0, s2 = 0.0;
  for (double v : x) {
    s0 = v + coeff * s1 - s2;
    s2 = s1;
    s1 = s0;
  }
  return s1 * s1 + s2 * s2 - coeff * s1 * s2;
}

double padding_ratio_oracle(const std::vector<std::vector<std::size_t>>& batches) {
  double total = 0.0, padded = 0.0;
  for (const auto& b : batches) {
    std::size_t mx = 0;
    for (auto v : b) mx = std::max(mx, v);
    for (auto v : b) {
      total += static_cast<double>(v);
      padded += static_cast<double>(mx);
    }
  }
  return 1.0 - total / padded;
}

}  // namespace

TEST_CASE("normalize_label maps the 1..7 scale onto the unit interval") {
  CHECK(normalize_label(1.0) == 0.0);
  CHECK(normalize_label(7.0) == 1.0);
  CHECK(normalize_label(4.0) == 0.5);
  CHECK_THROWS_AS(normalize_label(0.999), InvalidInputError);
  CHECK_THROWS_AS(normalize_label(7.001), InvalidInputError);
  CHECK_THROWS_AS(normalize_label(std::nan("")), InvalidInputError);

  Rng rng(11);
  for (int i = 0; i < 200; ++i) {
    const double a = rng.uniform(1.0, 7.0);
    const double b = rng.uniform(1.0, 7.0);
    if (a < b) CHECK(normalize_label(a) <= normalize_label(b));
    CHECK(normalize_label(a) >= 0.0);
    CHECK(normalize_label(a) <= 1.0);
  }
}

TEST_CASE("plan_buckets matches the worked padding examples") {
  SECTION("equal lengths have zero padding") {
    const auto recs = records_with_lengths({10, 10, 10, 10});
    const auto plan = plan_buckets(recs, 2, 1);
    CHECK(plan.padding_ratio == 0.0);
    CHECK(plan.batches.size() == 2);
  }
  SECTION("sorting pairs equal lengths together") {
    const auto recs = records_with_lengths({1, 100, 1, 100});
    const auto plan = plan_buckets(recs, 2, 1);
    CHECK(plan.padding_ratio == 0.0);
    for (const auto& batch : plan.batches) REQUIRE(batch.size() == 2);
    // Each batch pairs records of equal length.
    std::set<std::set<std::string>> got;
    for (const auto& b : plan.batches) got.insert({b.begin(), b.end()});
    const std::set<std::set<std::string>> want = {{"r0", "r2"}, {"r1", "r3"}};
    CHECK(got == want);
  }
  SECTION("the unsorted pairing wastes about half the frames") {
    // Pairing (1,100) twice: 1 - 202/400.
    CHECK(padding_ratio_oracle({{1, 100}, {1, 100}}) ==
          Catch::Approx(0.495).margin(1e-12));
    const auto recs = records_with_lengths({1, 100, 1, 100});
    bool seen_worst_case = false;
    for (std::uint64_t seed = 0; seed < 64 && !seen_worst_case; ++seed) {
      const auto plan = plan_random_groups(recs, 2, seed);
      if (plan.padding_ratio > 0.0) {
        CHECK(plan.padding_ratio == Catch::Approx(0.495).margin(1e-12));
        seen_worst_case = true;
      }
    }
    CHECK(seen_worst_case);
  }
}

TEST_CASE("plan_buckets validates its inputs") {
  const auto recs = records_with_lengths({5, 6, 7});
  CHECK_THROWS_AS(plan_buckets(recs, 1, 0), InvalidInputError);
  CHECK_THROWS_AS(plan_buckets(Records{}, 2, 0), InvalidInputError);
  CHECK_THROWS_AS(plan_random_groups(recs, 0, 0), InvalidInputError);
}

TEST_CASE("plan_buckets covers every record exactly once") {
  Rng rng(42);
  std::vector<std::size_t> lengths;
  for (int i = 0; i < 53; ++i)
    lengths.push_back(1 + rng.integer(2000));
  const auto recs = records_with_lengths(lengths);
  const auto plan = plan_buckets(recs, 8, 3);

  std::set<std::string> seen;
  std::size_t total = 0;
  for (std::size_t b = 0; b < plan.batches.size(); ++b) {
    const auto& batch = plan.batches[b];
    if (b + 1 < plan.batches.size()) {
      // Only the final batch may run short; the shuffle must not move
      // the remainder batch into a full slot's size.
      CHECK(batch.size() <= 8);
    }
    total += batch.size();
    for (const auto& id : batch) CHECK(seen.insert(id).second);
  }
  CHECK(total == recs.size());
  std::size_t full = 0, partial = 0;
  for (const auto& batch : plan.batches)
    (batch.size() == 8 ? full : partial)++;
  CHECK(partial <= 1);
}

TEST_CASE("plan_buckets is deterministic and seed shuffles only batch order") {
  Rng rng(7);
  std::vector<std::size_t> lengths;
  for (int i = 0; i < 40; ++i) lengths.push_back(1 + rng.integer(500));
  const auto recs = records_with_lengths(lengths);

  const auto a = plan_buckets(recs, 4, 9);
  const auto b = plan_buckets(recs, 4, 9);
  CHECK(a.batches == b.batches);
  CHECK(a.padding_ratio == b.padding_ratio);

  const auto c = plan_buckets(recs, 4, 10);
  CHECK(c.padding_ratio == a.padding_ratio);
  auto key = [](const BucketPlan& p) {
    std::multiset<std::vector<std::string>> s(p.batches.begin(), p.batches.end());
    return s;
  };
  CHECK(key(a) == key(c));
}

TEST_CASE("bucketed batching never pads more than random grouping") {
  Rng rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 20 + rng.integer(60);
    std::vector<std::size_t> lengths;
    for (std::size_t i = 0; i < n; ++i) lengths.push_back(1 + rng.integer(3000));
    const auto recs = records_with_lengths(lengths);
    const std::size_t batch_size = 2 + rng.integer(7);
    const std::uint64_t seed = rng.integer(1u << 30);
    const auto bucketed = plan_buckets(recs, batch_size, seed);
    const auto random = plan_random_groups(recs, batch_size, seed);
    CHECK(bucketed.padding_ratio <= random.padding_ratio + 1e-12);
  }
}

TEST_CASE("valence quantizes onto the five keyword polarity levels") {
  CHECK(valence_polarity_index(0.0) == 0);
  CHECK(valence_polarity_index(0.19) == 0);
  CHECK(valence_polarity_index(0.2) == 1);
  CHECK(valence_polarity_index(0.59) == 2);
  CHECK(valence_polarity_index(0.6) == 3);
  CHECK(valence_polarity_index(0.8) == 4);
  CHECK(valence_polarity_index(1.0) == 4);
}

TEST_CASE("synthetic corpus rejects sizes too small to split") {
  CHECK_THROWS_AS(generate_synthetic_corpus(39, 1), InvalidInputError);
  CHECK_NOTHROW(generate_synthetic_corpus(40, 1));
}

TEST_CASE("synthetic corpus is deterministic in the seed") {
  const auto a = generate_synthetic_corpus(60, 5);
  const auto b = generate_synthetic_corpus(60, 5);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].checksum() == b[i].checksum());
    CHECK(a[i].transcript == b[i].transcript);
  }
  const auto c = generate_synthetic_corpus(60, 6);
  bool any_differs = false;
  for (std::size_t i = 0; i < a.size(); ++i)
    any_differs = any_differs || a[i].checksum() != c[i].checksum();
  CHECK(any_differs);
}

TEST_CASE("synthetic corpus splits 70/10/10/10 with unique ids") {
  const auto recs = generate_synthetic_corpus(100, 3);
  std::size_t train = 0, dev = 0, t1 = 0, t2 = 0;
  std::set<std::string> ids;
  for (const auto& r : recs) {
    CHECK(ids.insert(r.id).second);
    switch (r.partition) {
      case Partition::kTrain: ++train; break;
      case Partition::kDevelopment: ++dev; break;
      case Partition::kTest1: ++t1; break;
      case Partition::kTest2: ++t2; break;
    }
  }
  CHECK(train == 70);
  CHECK(dev == 10);
  CHECK(t1 == 10);
  CHECK(t2 == 10);
  CHECK(filter(recs, Partition::kDevelopment).size() == 10);
}

TEST_CASE("synthetic audio RMS equals the arousal label") {
  const auto recs = generate_synthetic_corpus(120, 17);
  for (const auto& r : recs) {
    CHECK(serkit::audio::rms(r.audio) == Catch::Approx(r.labels.arousal).margin(1e-12));
    CHECK(r.labels.in_unit_range());
  }
}

TEST_CASE("silent target produces exactly silent audio") {
  // The generator scales the raw signal by target / rms(raw); a zero
  // target must zero every sample rather than leave quantization dust.
  const auto recs = generate_synthetic_corpus(400, 23);
  double min_arousal = 1.0;
  for (const auto& r : recs) min_arousal = std::min(min_arousal, r.labels.arousal);
  // Quiet records exist and their RMS tracks the label all the way down.
  CHECK(min_arousal < 0.05);
  for (const auto& r : recs) {
    if (r.labels.arousal == 0.0) {
      for (double v : r.audio) CHECK(v == 0.0);
    }
  }
}

TEST_CASE("synthetic fundamental frequency follows the dominance label") {
  const auto recs = generate_synthetic_corpus(80, 29);
  int checked = 0;
  for (const auto& r : recs) {
    if (r.labels.arousal < 0.15) continue;  // too quiet for a stable bin
    const double f0 = 80.0 + 220.0 * r.labels.dominance;
    const double at_f0 = goertzel_power(r.audio, f0, r.sample_rate);
    const double off_lo = goertzel_power(r.audio, f0 * 0.6, r.sample_rate);
    const double off_hi = goertzel_power(r.audio, f0 * 1.7, r.sample_rate);
    CHECK(at_f0 > 4.0 * off_lo);
    CHECK(at_f0 > 4.0 * off_hi);
    ++checked;
  }
  CHECK(checked >= 40);
}

TEST_CASE("audio level carries no valence information") {
  const auto recs = generate_synthetic_corpus(1000, 31);
  std::vector<double> level, valence;
  for (const auto& r : recs) {
    level.push_back(serkit::audio::rms(r.audio));
    valence.push_back(r.labels.valence);
  }
  CHECK(std::abs(serkit::testing::pearson(level, valence)) < 0.1);
}

TEST_CASE("transcripts carry the valence keyword for their quantized level") {
  const auto& lex = synthetic_lexicon();
  const auto recs = generate_synthetic_corpus(1000, 37);
  std::set<int> seen_levels;
  for (const auto& r : recs) {
    const int level = valence_polarity_index(r.labels.valence);
    seen_levels.insert(level);
    const std::string& keyword = lex.keywords[level];
    CHECK(r.transcript.find(keyword) != std::string::npos);
    // Exactly one keyword, and only the right one.
    int hits = 0;
    for (const auto& k : lex.keywords)
      if (r.transcript.find(k) != std::string::npos) ++hits;
    CHECK(hits == 1);
  }
  CHECK(seen_levels.size() == 5);
}

TEST_CASE("test2 transcripts come from the held-out templates only") {
  const auto& lex = synthetic_lexicon();
  auto instantiations = [&](const std::vector<std::string>& templates) {
    std::set<std::string> out;
    for (const auto& t : templates)
      for (const auto& k : lex.keywords) {
        const auto pos = t.find("{}");
        out.insert(t.substr(0, pos) + k + t.substr(pos + 2));
      }
    return out;
  };
  const auto shared = instantiations(lex.templates_shared);
  const auto heldout = instantiations(lex.templates_heldout);
  for (const auto& s : heldout) CHECK(shared.count(s) == 0);

  const auto recs = generate_synthetic_corpus(200, 41);
  for (const auto& r : recs) {
    if (r.partition == Partition::kTest2) {
      CHECK(heldout.count(r.transcript) == 1);
    } else {
      CHECK(shared.count(r.transcript) == 1);
    }
  }
}

TEST_CASE("lexicon vocabulary covers every word the corpus can emit") {
  const auto& lex = synthetic_lexicon();
  const auto vocab = lex.vocabulary();
  std::set<std::string> vocab_set(vocab.begin(), vocab.end());
  const auto recs = generate_synthetic_corpus(300, 43);
  for (const auto& r : recs) {
    std::istringstream ss(r.transcript);
    std::string w;
    while (ss >> w) CHECK(vocab_set.count(w) == 1);
  }
}

TEST_CASE("manifest save and load round-trips records bit-identically") {
  TempDir dir;
  const auto recs = generate_synthetic_corpus(50, 13);
  const std::string manifest = (dir.path / "manifest.csv").string();
  const std::string audio_root = (dir.path / "audio").string();
  save_manifest(recs, manifest, audio_root);

  const auto loaded = load_manifest(manifest, audio_root);
  REQUIRE(loaded.size() == recs.size());
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(loaded[i].id == recs[i].id);
    CHECK(loaded[i].transcript == recs[i].transcript);
    CHECK(loaded[i].partition == recs[i].partition);
    CHECK(loaded[i].sample_rate == recs[i].sample_rate);
    CHECK(loaded[i].labels.arousal == recs[i].labels.arousal);
    CHECK(loaded[i].labels.valence == recs[i].labels.valence);
    CHECK(loaded[i].labels.dominance == recs[i].labels.dominance);
    REQUIRE(loaded[i].audio.size() == recs[i].audio.size());
    CHECK(loaded[i].checksum() == recs[i].checksum());
  }
}

TEST_CASE("awkward transcripts survive the CSV quoting") {
  TempDir dir;
  UtteranceRecord rec;
  rec.id = "edge-0";
  rec.audio = {0.0, 0.25, -0.5, 8191.0 / 32768.0};
  rec.transcript = "well, she said \"fine\" and left\nthen came back";
  rec.labels = {normalize_label(2.0), normalize_label(3.5), normalize_label(6.0)};
  rec.partition = Partition::kTrain;

  const std::string manifest = (dir.path / "m.csv").string();
  save_manifest({rec}, manifest, dir.str());
  const auto loaded = load_manifest(manifest, dir.str());
  REQUIRE(loaded.size() == 1);
  CHECK(loaded[0].transcript == rec.transcript);
  CHECK(loaded[0].checksum() == rec.checksum());
}

TEST_CASE("record checksum can ignore the transcript") {
  UtteranceRecord a, b;
  a.id = b.id = "u1";
  a.audio = b.audio = {0.1, -0.2};
  a.labels = b.labels = {0.25, 0.5, 0.75};
  a.transcript = "one thing";
  b.transcript = "another thing entirely";
  CHECK(a.checksum(false) == b.checksum(false));
  CHECK(a.checksum(true) != b.checksum(true));
}

TEST_CASE("manifest loading reports malformed inputs by row") {
  TempDir dir;
  const auto write = [&](const std::string& name, const std::string& body) {
    std::ofstream f(dir.path / name, std::ios::binary);
    f << body;
    return (dir.path / name).string();
  };
  // A valid wav to point rows at.
  serkit::audio::write_wav((dir.path / "ok.wav").string(), {0.0, 0.1, -0.1}, 16000);

  SECTION("missing manifest") {
    CHECK_THROWS_AS(load_manifest((dir.path / "absent.csv").string(), dir.str()),
                    DataError);
  }
  SECTION("wrong header") {
    const auto p = write("bad_header.csv", "id,path,text\n");
    CHECK_THROWS_WITH(load_manifest(p, dir.str()),
                      Catch::Matchers::ContainsSubstring("header"));
  }
  SECTION("out-of-scale label names the row and id") {
    const auto p = write("bad_label.csv",
                         std::string(kManifestHeader) + "\n" +
                             "u7,ok.wav,hello there,8.5,4,4,train\n");
    CHECK_THROWS_WITH(load_manifest(p, dir.str()),
                      Catch::Matchers::ContainsSubstring("row 2") &&
                          Catch::Matchers::ContainsSubstring("u7"));
  }
  SECTION("unparseable number") {
    const auto p = write("bad_num.csv", std::string(kManifestHeader) + "\n" +
                                            "u1,ok.wav,hi,abc,4,4,train\n");
    CHECK_THROWS_AS(load_manifest(p, dir.str()), DataError);
  }
  SECTION("unknown split") {
    const auto p = write("bad_split.csv", std::string(kManifestHeader) + "\n" +
                                              "u1,ok.wav,hi,4,4,4,validation\n");
    CHECK_THROWS_AS(load_manifest(p, dir.str()), DataError);
  }
  SECTION("field count") {
    const auto p = write("short_row.csv",
                         std::string(kManifestHeader) + "\nu1,ok.wav,hi,4,4\n");
    CHECK_THROWS_WITH(load_manifest(p, dir.str()),
                      Catch::Matchers::ContainsSubstring("7 fields"));
  }
  SECTION("missing audio file") {
    const auto p = write("no_wav.csv", std::string(kManifestHeader) + "\n" +
                                           "u9,gone.wav,hi,4,4,4,test1\n");
    CHECK_THROWS_AS(load_manifest(p, dir.str()), DataError);
  }
  SECTION("the dev split alias is accepted") {
    const auto p = write("dev.csv", std::string(kManifestHeader) + "\n" +
                                        "u1,ok.wav,hi,4,4,4,dev\n");
    const auto recs = load_manifest(p, dir.str());
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].partition == Partition::kDevelopment);
  }
}
