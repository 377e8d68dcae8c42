// serkit/train_config.hpp
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
// Training hyperparameters, the regime taxonomy, and the flat
// key=value config file format shared by the trainer, the probe
// fitter, and the command line.

#ifndef SERKIT_TRAIN_CONFIG_HPP_
#define SERKIT_TRAIN_CONFIG_HPP_

#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include "serkit/error.hpp"

namespace serkit::train {

struct TrainConfig {
  double learning_rate = 1e-5;
  std::size_t batch_size = 16;
  double dropout = 0.1;
  std::size_t patience = 5;
  std::size_t max_epochs = 100;
  std::uint64_t seed = 0;
  bool clip_gradients = true;
  double clip_norm = 1.0;

  void validate() const {
    if (batch_size < 2)
      throw InvalidInputError("train config: batch_size must be at least 2");
    if (dropout < 0.0 || dropout >= 1.0)
      throw InvalidInputError("train config: dropout must lie in [0, 1)");
    if (learning_rate <= 0.0)
      throw InvalidInputError("train config: learning_rate must be positive");
    if (max_epochs < 1)
      throw InvalidInputError("train config: max_epochs must be at least 1");
  }
};

enum class Regime { kAudioFt, kAudioTextFt, kAudioTextFtFrz, kProbe };

inline const char* to_string(Regime r) {
  switch (r) {
    case Regime::kAudioFt: return "AUDIO_FT";
    case Regime::kAudioTextFt: return "AUDIOTEXT_FT";
    case Regime::kAudioTextFtFrz: return "AUDIOTEXT_FT_FRZ";
    case Regime::kProbe: return "PROBE";
  }
  return "?";
}

inline Regime regime_from_string(const std::string& s) {
  if (s == "AUDIO_FT") return Regime::kAudioFt;
  if (s == "AUDIOTEXT_FT") return Regime::kAudioTextFt;
  if (s == "AUDIOTEXT_FT_FRZ") return Regime::kAudioTextFtFrz;
  if (s == "PROBE") return Regime::kProbe;
  throw InvalidInputError("unknown training regime: '" + s + "'");
}

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double to_double(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw InvalidInputError("train config: bad numeric value for " + key +
                            ": '" + v + "'");
  }
}

inline std::uint64_t to_count(const std::string& key, const std::string& v) {
  if (v.empty() || v.find_first_not_of("0123456789") != std::string::npos)
    throw InvalidInputError("train config: bad count value for " + key + ": '" +
                            v + "'");
  return std::stoull(v);
}

inline bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InvalidInputError("train config: bad boolean value for " + key + ": '" +
                          v + "'");
}

}  // namespace detail

/// Parses "key = value" lines; '#' starts a comment, blank lines are
/// skipped, unknown keys are rejected.
inline TrainConfig parse_train_config(const std::string& text) {
  TrainConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = detail::trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InvalidInputError("train config line " + std::to_string(line_no) +
                              ": expected key = value");
    const std::string key = detail::trim(line.substr(0, eq));
    const std::string value = detail::trim(line.substr(eq + 1));
    if (key == "learning_rate") cfg.learning_rate = detail::to_double(key, value);
    else if (key == "batch_size") cfg.batch_size = detail::to_count(key, value);
    else if (key == "dropout") cfg.dropout = detail::to_double(key, value);
    else if (key == "patience") cfg.patience = detail::to_count(key, value);
    else if (key == "max_epochs") cfg.max_epochs = detail::to_count(key, value);
    else if (key == "seed") cfg.seed = detail::to_count(key, value);
    else if (key == "clip_gradients") cfg.clip_gradients = detail::to_bool(key, value);
    else if (key == "clip_norm") cfg.clip_norm = detail::to_double(key, value);
    else
      throw InvalidInputError("train config line " + std::to_string(line_no) +
                              ": unknown key '" + key + "'");
  }
  cfg.validate();
  return cfg;
}

inline TrainConfig load_train_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw DataError("cannot open train config: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_train_config(ss.str());
}

inline std::string format_train_config(const TrainConfig& cfg) {
  std::ostringstream out;
  out.precision(17);
  out << "learning_rate = " << cfg.learning_rate << "\n"
      << "batch_size = " << cfg.batch_size << "\n"
      << "dropout = " << cfg.dropout << "\n"
      << "patience = " << cfg.patience << "\n"
      << "max_epochs = " << cfg.max_epochs << "\n"
      << "seed = " << cfg.seed << "\n"
      << "clip_gradients = " << (cfg.clip_gradients ? "true" : "false") << "\n"
      << "clip_norm = " << cfg.clip_norm << "\n";
  return out.str();
}

}  // namespace serkit::train

#endif  // SERKIT_TRAIN_CONFIG_HPP_
