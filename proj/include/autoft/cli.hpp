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

// Command-line front end.
//
// Exit codes: 0 success, 1 internal error, 2 config error, 3 data error
// (bad rows, schema or I/O), 4 vocabulary mismatch, 5 evaluation error.
// Failures print one line "error: <category>: <message>" to stderr.

#include <string>
#include <vector>

#include "autoft/error.hpp"

namespace autoft::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitInternal = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitData = 3;
inline constexpr int kExitVocabMismatch = 4;
inline constexpr int kExitEvaluation = 5;

int ExitCodeFor(ErrorKind kind);

int Main(int argc, const char* const* argv);
int Main(const std::vector<std::string>& args);

// Files inside a run directory.
inline constexpr const char* kConfigFile = "config.ini";
inline constexpr const char* kMetricsFile = "metrics.jsonl";
inline constexpr const char* kCheckpointFile = "checkpoint.bin";
inline constexpr const char* kRoutesFile = "routes.csv";
inline constexpr const char* kSummaryFile = "summary.json";
inline constexpr const char* kVocabFile = "vocab.json";
inline constexpr const char* kSchemaFile = "schema.ini";

}  // namespace autoft::cli
