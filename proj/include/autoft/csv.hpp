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

#pragma once

// Minimal RFC 4180 CSV reader/writer: comma separated, double-quoted cells
// with "" escapes, header row required.

#include <istream>
#include <ostream>
#include <string>
#include <vector>

namespace autoft {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of a header column, or -1.
  int ColumnIndex(const std::string& name) const;
};

CsvTable ParseCsv(std::istream& in, const std::string& source_name = "<stream>");
CsvTable ReadCsvFile(const std::string& path);

void WriteCsvRow(std::ostream& out, const std::vector<std::string>& cells);
void WriteCsvFile(const std::string& path, const CsvTable& table);

}  // namespace autoft
