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

#include <gtest/gtest.h>

#include <sstream>

#include "autoft/error.hpp"
#include "test_util.hpp"

namespace autoft {
namespace {

CsvTable Parse(const std::string& text) {
  std::istringstream in(text);
  return ParseCsv(in, "test.csv");
}

TEST(Csv, QuotedFieldsAndEscapes) {
  const CsvTable t = Parse("a,b,c\n1,\"x,y\",\"he said \"\"hi\"\"\"\n");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.header, (std::vector<std::string>{"a", "b", "c"}));
  EXPECT_EQ(t.rows[0], (std::vector<std::string>{"1", "x,y", "he said \"hi\""}));
  EXPECT_EQ(t.ColumnIndex("c"), 2);
  EXPECT_EQ(t.ColumnIndex("z"), -1);
}

TEST(Csv, CrlfBomAndBlankLines) {
  const CsvTable t = Parse("\xEF\xBB\xBFu,v\r\n1,2\r\n\r\n3,4\r\n");
  EXPECT_EQ(t.header[0], "u");
  ASSERT_EQ(t.rows.size(), 2u);
  EXPECT_EQ(t.rows[1], (std::vector<std::string>{"3", "4"}));
}

TEST(Csv, QuotedNewlineStaysInCell) {
  const CsvTable t = Parse("a,b\n\"line1\nline2\",z\n");
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][0], "line1\nline2");
}

TEST(Csv, RaggedRowReportsLineNumber) {
  try {
    Parse("a,b\n1,2\n3\n");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::kData);
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos) << e.what();
  }
}

TEST(Csv, WriteThenReadRoundTrips) {
  CsvTable t;
  t.header = {"id", "text"};
  t.rows = {{"1", "plain"}, {"2", "has,comma"}, {"3", "has \"quote\""}, {"4", ""}};
  const auto dir = testing::TempDir("csv");
  const std::string path = (dir / "t.csv").string();
  WriteCsvFile(path, t);
  const CsvTable back = ReadCsvFile(path);
  EXPECT_EQ(back.header, t.header);
  EXPECT_EQ(back.rows, t.rows);
}

TEST(Csv, MissingFileIsAnError) {
  EXPECT_THROW(ReadCsvFile("/nonexistent/dir/file.csv"), Error);
}

}  // namespace
}  // namespace autoft
