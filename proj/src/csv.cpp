/*
 * Copyright 2026 The AutoFT Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "autoft/csv.hpp"

#include <fstream>
#include <sstream>

#include "autoft/error.hpp"

namespace autoft {

int CsvTable::ColumnIndex(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return static_cast<int>(i);
  }
  return -1;
}

namespace {

// Reads one record. Returns false at end of input.
bool ReadRecord(std::istream& in, std::vector<std::string>& cells, std::size_t& line,
                const std::string& source_name) {
  cells.clear();
  if (in.peek() == std::char_traits<char>::eof()) return false;
  std::string cell;
  bool quoted = false;
  bool after_quote = false;
  const std::size_t start_line = line;
  for (;;) {
    const int ch = in.get();
    if (ch == std::char_traits<char>::eof()) {
      if (quoted) {
        Fail(ErrorKind::kData, source_name + " line " + std::to_string(start_line) +
                                   ": unterminated quoted cell");
      }
      cells.push_back(std::move(cell));
      ++line;
      return true;
    }
    const char c = static_cast<char>(ch);
    if (quoted) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get();
          cell.push_back('"');
        } else {
          quoted = false;
          after_quote = true;
        }
      } else {
        if (c == '\n') ++line;
        cell.push_back(c);
      }
      continue;
    }
    if (c == ',') {
      cells.push_back(std::move(cell));
      cell.clear();
      after_quote = false;
    } else if (c == '\r') {
      if (in.peek() == '\n') in.get();
      cells.push_back(std::move(cell));
      ++line;
      return true;
    } else if (c == '\n') {
      cells.push_back(std::move(cell));
      ++line;
      return true;
    } else if (c == '"' && cell.empty() && !after_quote) {
      quoted = true;
    } else {
      if (after_quote) {
        Fail(ErrorKind::kData, source_name + " line " + std::to_string(line) +
                                   ": characters after closing quote");
      }
      cell.push_back(c);
    }
  }
}

}  // namespace

CsvTable ParseCsv(std::istream& in, const std::string& source_name) {
  CsvTable table;
  std::size_t line = 1;
  std::vector<std::string> cells;
  if (!ReadRecord(in, table.header, line, source_name)) {
    Fail(ErrorKind::kData, source_name + ": missing header row");
  }
  if (!table.header.empty() && table.header[0].rfind("\xEF\xBB\xBF", 0) == 0) {
    table.header[0].erase(0, 3);
  }
  while (ReadRecord(in, cells, line, source_name)) {
    if (cells.size() == 1 && cells[0].empty()) continue;  // blank line
    if (cells.size() != table.header.size()) {
      Fail(ErrorKind::kData, source_name + " line " + std::to_string(line - 1) + ": expected " +
                                 std::to_string(table.header.size()) + " cells, got " +
                                 std::to_string(cells.size()));
    }
    table.rows.push_back(cells);
  }
  return table;
}

CsvTable ReadCsvFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path);
  return ParseCsv(in, path);
}

void WriteCsvRow(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    const std::string& c = cells[i];
    if (c.find_first_of(",\"\r\n") == std::string::npos) {
      out << c;
      continue;
    }
    out << '"';
    for (char ch : c) {
      if (ch == '"') out << '"';
      out << ch;
    }
    out << '"';
  }
  out << '\n';
}

void WriteCsvFile(const std::string& path, const CsvTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path);
  WriteCsvRow(out, table.header);
  for (const auto& row : table.rows) WriteCsvRow(out, row);
  if (!out) Fail(ErrorKind::kIo, "write failed for " + path);
}

}  // namespace autoft
