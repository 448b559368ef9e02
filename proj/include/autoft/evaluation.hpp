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

// Metrics and reports: AUC, LogLoss, routing fractions and result tables.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "autoft/autoft_policy.hpp"

namespace autoft {

// Probability that a random positive outranks a random negative, ties
// counted as one half (midrank method). O(n log n).
double Auc(std::span<const int> labels, std::span<const double> scores);

// Mean cross entropy with scores clamped into [1e-7, 1 - 1e-7].
double LogLoss(std::span<const int> labels, std::span<const double> scores);

// Route dump: header instance_id,embed_0..,cross_0..,deep_0.. and one row of
// 0/1 bits per instance (1 = pre-trained).
struct RouteDumpRow {
  std::size_t instance_id = 0;
  std::vector<int> embed;
  std::vector<int> cross;
  std::vector<int> deep;
};

struct RouteDump {
  std::size_t num_embed = 0;
  std::size_t num_cross = 0;
  std::size_t num_deep = 0;
  std::vector<RouteDumpRow> rows;
};

RouteDump MakeRouteDump(std::span<const RouteDecision> routes, const ArchConfig& arch);
std::string RouteDumpToCsv(const RouteDump& dump);
RouteDump ParseRouteDump(const std::string& csv_text);
void WriteRouteDump(const std::string& path, const RouteDump& dump);
RouteDump ReadRouteDump(const std::string& path);

struct UnitFraction {
  double pretrained = 0.0;
  double finetuned = 0.0;
};

struct RoutingReport {
  std::size_t instances = 0;
  std::vector<UnitFraction> embed;
  std::vector<UnitFraction> cross;
  std::vector<UnitFraction> deep;

  // Fine-tuned fraction per layer ordered by depth.
  std::vector<double> CrossFinetuneByDepth() const;
  std::vector<double> DeepFinetuneByDepth() const;
};

RoutingReport RoutingFractions(const RouteDump& dump);
// CSV columns: component,unit,pretrained_fraction,finetuned_fraction.
std::string RoutingFractionsCsv(const RoutingReport& report);
std::string RoutingSummaryText(const RoutingReport& report);

// One completed run, as recorded in <run_dir>/summary.json.
struct RunSummary {
  std::string method;
  std::string stage;
  std::uint64_t seed = 0;
  double test_auc = 0.0;
  double test_logloss = 0.0;
  std::size_t test_instances = 0;
};

std::string RunSummaryToJson(const RunSummary& summary);
RunSummary RunSummaryFromJson(const std::string& text, const std::string& source = "<json>");

struct MethodRow {
  std::string method;
  double auc_mean = 0.0;
  double auc_std = 0.0;
  double logloss_mean = 0.0;
  double logloss_std = 0.0;
  std::vector<std::uint64_t> seeds;
  std::size_t instances = 0;
  bool best_auc = false;
  bool best_logloss = false;
};

struct MetricReport {
  std::vector<MethodRow> rows;
};

// Canonical method order; unknown method names sort after these.
const std::vector<std::string>& MethodOrder();

MetricReport BuildResultsTable(std::span<const RunSummary> runs);
// Reads summary.json from each directory; directories without one are
// skipped.
MetricReport ResultsTableFromDirs(std::span<const std::string> run_dirs);
std::string ResultsTableCsv(const MetricReport& report);
std::string ResultsTableText(const MetricReport& report);

// Mean and sample standard deviation (0 for a single value).
std::pair<double, double> MeanStd(std::span<const double> values);

// Shortest round-trip decimal representation.
std::string FormatDouble(double value);

}  // namespace autoft
