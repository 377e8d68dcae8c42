// serkit/csv.hpp
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

#ifndef SERKIT_CSV_HPP_
#define SERKIT_CSV_HPP_

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "serkit/error.hpp"

namespace serkit::csv {

/// RFC-4180 style parsing: fields separated by commas, optionally quoted
/// with `"`; quotes inside quoted fields are doubled. Quoted fields may
/// contain commas and newlines.
inline std::vector<std::vector<std::string>> parse(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&] {
    row.push_back(field);
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    rows.push_back(row);
    row.clear();
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"' && field.empty() && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == ',') {
      end_field();
    } else if (c == '\r') {
      // swallow; \r\n handled by the \n branch
    } else if (c == '\n') {
      end_row();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (in_quotes) throw DataError("unterminated quoted CSV field");
  if (field_started || !field.empty() || !row.empty()) end_row();
  return rows;
}

inline std::vector<std::vector<std::string>> read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot open CSV file: " + path);
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

/// Quotes a field if it contains a comma, quote or newline.
inline std::string escape(const std::string& field) {
  if (field.find_first_of(",\"\n\r") == std::string::npos) return field;
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += "\"\"";
    else out.push_back(c);
  }
  out.push_back('"');
  return out;
}

inline std::string format_row(const std::vector<std::string>& fields) {
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line.push_back(',');
    line += escape(fields[i]);
  }
  line.push_back('\n');
  return line;
}

inline void write_file(const std::string& path,
                       const std::vector<std::vector<std::string>>& rows) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("cannot write CSV file: " + path);
  for (const auto& row : rows) f << format_row(row);
  if (!f) throw DataError("short write on CSV file: " + path);
}

}  // namespace serkit::csv

#endif  // SERKIT_CSV_HPP_
