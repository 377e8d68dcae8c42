// serkit/report.hpp
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

#ifndef SERKIT_REPORT_HPP_
#define SERKIT_REPORT_HPP_

#include <fcntl.h>
#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "serkit/corpus.hpp"
#include "serkit/csv.hpp"
#include "serkit/error.hpp"
#include "serkit/metrics.hpp"
#include "serkit/plot.hpp"
#include "serkit/types.hpp"
#include "serkit/version.hpp"

namespace serkit::report {

inline constexpr const char* kRunManifestFile = "run_manifest.json";
inline constexpr const char* kScoresFile = "scores.csv";
inline constexpr const char* kTrainLogFile = "train_log.jsonl";
inline constexpr const char* kModelFile = "model.bin";
inline constexpr const char* kLockFile = "serkit.lock";
inline constexpr const char* kReportFile = "report.md";

// ---------------------------------------------------------------------------
// Run manifest
// ---------------------------------------------------------------------------

/// Provenance of one command invocation. Every run writes exactly one
/// manifest into its output directory; reports are composed purely from
/// such stored artifacts.
struct RunManifest {
  std::string command;
  std::string name;          // display name used in report tables
  std::string config_path;   // as given on the command line, may be empty
  std::uint64_t seed = 0;
  std::string version;       // library version that produced the artifacts
  std::string started_at;    // ISO-8601 UTC
  std::string finished_at;   // ISO-8601 UTC, set when the run completed
  std::string output_dir;
  std::string regime;        // training regime tag, empty when not a run
  std::string encoder;       // audio encoder preset
  std::string text_encoder;  // text encoder preset, empty for audio-only
  std::size_t parameter_count = 0;

  bool fused() const { return !text_encoder.empty(); }
  std::string modality() const { return fused() ? "audio+text" : "audio"; }
};

inline std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  ::gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

inline std::string format_run_manifest(const RunManifest& m) {
  nlohmann::ordered_json j;
  j["command"] = m.command;
  j["name"] = m.name;
  j["config_path"] = m.config_path;
  j["seed"] = m.seed;
  j["version"] = m.version;
  j["started_at"] = m.started_at;
  j["finished_at"] = m.finished_at;
  j["output_dir"] = m.output_dir;
  j["regime"] = m.regime;
  j["encoder"] = m.encoder;
  j["text_encoder"] = m.text_encoder;
  j["parameter_count"] = m.parameter_count;
  return j.dump(2) + "\n";
}

inline void save_run_manifest(const RunManifest& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write run manifest: " + path.string());
  out << format_run_manifest(m);
  if (!out) throw DataError("short write on run manifest: " + path.string());
}

inline RunManifest load_run_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open run manifest: " + path.string());
  nlohmann::json j;
  try {
    in >> j;
    RunManifest m;
    m.command = j.at("command").get<std::string>();
    m.name = j.at("name").get<std::string>();
    m.config_path = j.at("config_path").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.version = j.at("version").get<std::string>();
    m.started_at = j.at("started_at").get<std::string>();
    m.finished_at = j.at("finished_at").get<std::string>();
    m.output_dir = j.at("output_dir").get<std::string>();
    m.regime = j.at("regime").get<std::string>();
    m.encoder = j.at("encoder").get<std::string>();
    m.text_encoder = j.at("text_encoder").get<std::string>();
    m.parameter_count = j.at("parameter_count").get<std::size_t>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw DataError("malformed run manifest " + path.string() + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Output directory lock
// ---------------------------------------------------------------------------

/// Exclusive lock on an output directory, one running command at a
/// time. The lock file is created atomically and removed when the
/// holder is destroyed; a stale or concurrent lock fails the run.
class OutputLock {
 public:
  explicit OutputLock(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);
    path_ = dir / kLockFile;
    fd_ = ::open(path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
    if (fd_ < 0)
      throw RunError("output directory is locked by another run: " + path_.string());
  }

  OutputLock(OutputLock&& other) noexcept
      : path_(std::move(other.path_)), fd_(other.fd_) {
    other.fd_ = -1;
  }
  OutputLock& operator=(OutputLock&&) = delete;
  OutputLock(const OutputLock&) = delete;
  OutputLock& operator=(const OutputLock&) = delete;

  ~OutputLock() {
    if (fd_ >= 0) {
      ::close(fd_);
      std::error_code ec;
      std::filesystem::remove(path_, ec);
    }
  }

 private:
  std::filesystem::path path_;
  int fd_ = -1;
};

// ---------------------------------------------------------------------------
// Relative improvement
// ---------------------------------------------------------------------------

/// Percentage change of `variant` over `base`: 100 (variant - base) /
/// base. Defined only for a positive base.
inline double relative_improvement(double base, double variant) {
  if (!(base > 0.0))
    throw InvalidInputError("relative improvement needs a positive base, got " +
                            std::to_string(base));
  return 100.0 * (variant - base) / base;
}

/// "+58.2%", "-10.0%", "0.0%"; a base at or below zero is undefined and
/// reported as "n/a".
inline std::string format_relative_improvement(double base, double variant) {
  if (!(base > 0.0)) return "n/a";
  const double pct = relative_improvement(base, variant);
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(1);
  if (pct > 0.0) out << '+';
  out << pct << '%';
  return out.str();
}

// ---------------------------------------------------------------------------
// Score tables
// ---------------------------------------------------------------------------

/// Writes per-partition concordance rows. Values are serialized with
/// enough digits to reload bit-identically.
inline void save_scores(const std::vector<metrics::CccReport>& reports,
                        const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"split", "arousal", "valence", "dominance"});
  for (const auto& r : reports) {
    rows.push_back({to_string(r.partition),
                    corpus::detail::format_double(r[Dimension::kArousal]),
                    corpus::detail::format_double(r[Dimension::kValence]),
                    corpus::detail::format_double(r[Dimension::kDominance])});
  }
  csv::write_file(path.string(), rows);
}

inline std::vector<metrics::CccReport> load_scores(const std::filesystem::path& path) {
  const auto rows = csv::read_file(path.string());
  if (rows.empty() ||
      rows.front() != std::vector<std::string>{"split", "arousal", "valence", "dominance"})
    throw DataError("scores file needs a split,arousal,valence,dominance header: " +
                    path.string());
  std::vector<metrics::CccReport> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 4)
      throw DataError("scores row " + std::to_string(i) + " needs 4 fields: " +
                      path.string());
    const std::string ctx = "scores row " + std::to_string(i);
    out.push_back(metrics::CccReport::make(
        partition_from_string(rows[i][0]), corpus::detail::parse_double(rows[i][1], ctx),
        corpus::detail::parse_double(rows[i][2], ctx),
        corpus::detail::parse_double(rows[i][3], ctx)));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Report composition
// ---------------------------------------------------------------------------

/// One stored run: its manifest plus the scores it reported.
struct RunArtifacts {
  std::filesystem::path dir;
  RunManifest manifest;
  std::vector<metrics::CccReport> scores;

  const metrics::CccReport* on(Partition p) const {
    for (const auto& s : scores)
      if (s.partition == p) return &s;
    return nullptr;
  }
};

struct ReportInputs {
  std::vector<RunArtifacts> runs;
  std::vector<std::string> missing;  // "<dir>: <reason>" per unreadable run
};

/// Loads every run directory that has a manifest; the rest are listed
/// as missing instead of failing the report. Scores are optional (a
/// probe run only contributes charts), but a present scores file must
/// parse.
inline ReportInputs collect_runs(const std::vector<std::filesystem::path>& dirs) {
  ReportInputs inputs;
  for (const auto& dir : dirs) {
    try {
      RunArtifacts run;
      run.dir = dir;
      run.manifest = load_run_manifest(dir / kRunManifestFile);
      if (std::filesystem::exists(dir / kScoresFile))
        run.scores = load_scores(dir / kScoresFile);
      inputs.runs.push_back(std::move(run));
    } catch (const Error& e) {
      inputs.missing.push_back(dir.string() + ": " + e.what());
    }
  }
  return inputs;
}

/// The long-form machine-readable table behind the report: one row per
/// run and partition, exact doubles.
inline void save_ccc_table(const ReportInputs& inputs, const std::filesystem::path& path) {
  std::vector<std::vector<std::string>> rows;
  rows.push_back({"modality", "run", "parameter_count", "split", "arousal", "valence",
                  "dominance"});
  for (const auto& run : inputs.runs) {
    for (const auto& s : run.scores) {
      rows.push_back({run.manifest.modality(), run.manifest.name,
                      std::to_string(run.manifest.parameter_count),
                      to_string(s.partition),
                      corpus::detail::format_double(s[Dimension::kArousal]),
                      corpus::detail::format_double(s[Dimension::kValence]),
                      corpus::detail::format_double(s[Dimension::kDominance])});
    }
  }
  csv::write_file(path.string(), rows);
}

struct CccTableRow {
  std::string modality;
  std::string run;
  std::size_t parameter_count = 0;
  Partition split = Partition::kTest1;
  double arousal = 0.0;
  double valence = 0.0;
  double dominance = 0.0;
};

inline std::vector<CccTableRow> load_ccc_table(const std::filesystem::path& path) {
  const auto rows = csv::read_file(path.string());
  if (rows.empty() ||
      rows.front() != std::vector<std::string>{"modality", "run", "parameter_count",
                                               "split", "arousal", "valence", "dominance"})
    throw DataError("unexpected ccc table header: " + path.string());
  std::vector<CccTableRow> out;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].size() != 7)
      throw DataError("ccc table row " + std::to_string(i) + " needs 7 fields: " +
                      path.string());
    const std::string ctx = "ccc table row " + std::to_string(i);
    CccTableRow row;
    row.modality = rows[i][0];
    row.run = rows[i][1];
    row.parameter_count = static_cast<std::size_t>(
        corpus::detail::parse_double(rows[i][2], ctx));
    row.split = partition_from_string(rows[i][3]);
    row.arousal = corpus::detail::parse_double(rows[i][4], ctx);
    row.valence = corpus::detail::parse_double(rows[i][5], ctx);
    row.dominance = corpus::detail::parse_double(rows[i][6], ctx);
    out.push_back(std::move(row));
  }
  return out;
}

namespace detail {

inline std::string fixed3(double v) {
  std::ostringstream out;
  out.setf(std::ios::fixed);
  out.precision(3);
  out << v;
  return out.str();
}

/// The audio-only counterpart of a fused run: same audio encoder
/// preset, earliest listed first.
inline const RunArtifacts* baseline_for(const ReportInputs& inputs,
                                        const RunArtifacts& fused) {
  for (const auto& run : inputs.runs) {
    if (!run.manifest.fused() && run.manifest.encoder == fused.manifest.encoder)
      return &run;
  }
  return nullptr;
}

inline void modality_table(std::ostringstream& out, const ReportInputs& inputs,
                           const std::string& modality, Partition partition) {
  bool any = false;
  for (const auto& run : inputs.runs)
    any = any || (run.manifest.modality() == modality && run.on(partition) != nullptr);
  if (!any) return;

  out << "### " << (modality == "audio" ? "Audio-only" : "Audio and text") << "\n\n";
  out << "| Run | Parameters | Arousal | Valence | Dominance |\n";
  out << "|---|---|---|---|---|\n";
  for (const auto& run : inputs.runs) {
    if (run.manifest.modality() != modality) continue;
    const auto* s = run.on(partition);
    if (s == nullptr) continue;
    out << "| " << run.manifest.name << " | " << run.manifest.parameter_count
        << " | " << fixed3((*s)[Dimension::kArousal]) << " | "
        << fixed3((*s)[Dimension::kValence]) << " | "
        << fixed3((*s)[Dimension::kDominance]) << " |\n";
  }
  out << "\n";
}

}  // namespace detail

/// Pure function of the collected artifacts: equal inputs give a byte
/// equal report, and composing never touches the run directories.
inline std::string compose_report(const ReportInputs& inputs) {
  std::ostringstream out;
  out << "# Speech emotion recognition results\n\n";

  for (Partition partition : {Partition::kTest1, Partition::kTest2}) {
    bool any = false;
    for (const auto& run : inputs.runs) any = any || run.on(partition) != nullptr;
    if (!any) continue;
    out << "## " << scenario_label(partition) << " (" << to_string(partition) << ")\n\n";
    detail::modality_table(out, inputs, "audio", partition);
    detail::modality_table(out, inputs, "audio+text", partition);
  }

  // Valence gain of each fused run over its audio-only counterpart.
  std::ostringstream bars;
  bool any_pair = false;
  for (const auto& run : inputs.runs) {
    if (!run.manifest.fused()) continue;
    const auto* base_run = detail::baseline_for(inputs, run);
    if (base_run == nullptr) continue;
    if (!any_pair) {
      bars << "## Relative valence improvement over audio-only\n\n";
      bars << "| Fused run | Baseline | " << scenario_label(Partition::kTest1)
           << " | " << scenario_label(Partition::kTest2) << " |\n";
      bars << "|---|---|---|---|\n";
      any_pair = true;
    }
    bars << "| " << run.manifest.name << " | " << base_run->manifest.name << " |";
    for (Partition partition : {Partition::kTest1, Partition::kTest2}) {
      const auto* v = run.on(partition);
      const auto* b = base_run->on(partition);
      if (v == nullptr || b == nullptr)
        bars << " n/a |";
      else
        bars << " "
             << format_relative_improvement((*b)[Dimension::kValence],
                                            (*v)[Dimension::kValence])
             << " |";
    }
    bars << "\n";
  }
  if (any_pair) out << bars.str() << "\n";

  if (!inputs.missing.empty()) {
    out << "## Missing runs\n\n";
    for (const auto& line : inputs.missing) out << "- " << line << "\n";
    out << "\n";
  }
  return out.str();
}

/// Writes report.md, the exact CSV table and the improvement chart
/// under `out_dir`. Probe charts found in the run directories are
/// copied next to them so the report is self-contained.
inline void write_report(const ReportInputs& inputs, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir / "tables");
  std::filesystem::create_directories(out_dir / "plots");
  save_ccc_table(inputs, out_dir / "tables" / "ccc.csv");

  std::vector<double> gains;
  std::vector<std::string> labels;
  for (const auto& run : inputs.runs) {
    if (!run.manifest.fused()) continue;
    const auto* base_run = detail::baseline_for(inputs, run);
    if (base_run == nullptr) continue;
    const auto* v = run.on(Partition::kTest1);
    const auto* b = base_run->on(Partition::kTest1);
    if (v == nullptr || b == nullptr || !((*b)[Dimension::kValence] > 0.0)) continue;
    gains.push_back(relative_improvement((*b)[Dimension::kValence],
                                         (*v)[Dimension::kValence]));
    labels.push_back(run.manifest.name);
  }
  std::string report = compose_report(inputs);
  if (!gains.empty()) {
    plot::bar_chart(out_dir / "plots" / "valence_improvement.png",
                    "relative valence improvement, percent", gains, labels);
    report += "![relative valence improvement](plots/valence_improvement.png)\n";
  }

  for (const auto& run : inputs.runs) {
    std::vector<std::string> charts;
    for (const auto& entry : std::filesystem::directory_iterator(run.dir)) {
      const auto name = entry.path().filename().string();
      if (name.rfind("probe_", 0) == 0 && entry.path().extension() == ".png")
        charts.push_back(name);
    }
    std::sort(charts.begin(), charts.end());
    for (const auto& name : charts) {
      std::filesystem::copy_file(run.dir / name, out_dir / "plots" / name,
                                 std::filesystem::copy_options::overwrite_existing);
      report += "![" + name + "](plots/" + name + ")\n";
    }
  }

  std::ofstream out(out_dir / kReportFile, std::ios::binary);
  if (!out) throw DataError("cannot write report: " + (out_dir / kReportFile).string());
  out << report;
  if (!out) throw DataError("short write on report: " + (out_dir / kReportFile).string());
}

}  // namespace serkit::report

#endif  // SERKIT_REPORT_HPP_
