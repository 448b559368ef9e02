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

// Synthetic two-domain CTR benchmark with a known logistic ground truth.
//
// Every feature value owns a latent vector shared by both domains. A domain
// scores an instance with first-order terms <u_f, z_f> and pairwise terms
// z_f^T M_fg z_g; labels are Bernoulli(sigmoid(score)). The target weights
// are a renormalised blend of the source weights and independent weights:
//
//   W_T = ((1 - delta) W_S + delta W_I) / sqrt((1 - delta)^2 + delta^2)
//
// so delta = 0 gives identical domains and delta = 1 independent ones.
//
// Fields: user (disjoint between domains unless user_overlap > 0), item (a share of the target item
// pool also appears in the source domain), category (fixed per item),
// context and tags (multi-hot).

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "autoft/csv.hpp"
#include "autoft/feature_pipeline.hpp"

namespace autoft {

struct SynthSpec {
  std::uint64_t seed = 42;
  double delta = 0.5;
  double item_overlap = 0.6;
  // Share of target users that are source users (same id and latent).
  double user_overlap = 0.0;
  std::size_t source_count = 50000;
  std::size_t target_count = 5000;
  std::size_t source_users = 1000;
  std::size_t target_users = 300;
  std::size_t items = 500;  // per domain item pool
  std::size_t categories = 20;
  std::size_t contexts = 8;
  std::size_t tags = 30;
  std::size_t max_tags = 3;
  std::size_t latent_dim = 8;
  // Standard deviation of the logit before the bias is added.
  double signal_std = 3.0;
  double bias = -0.5;

  void Validate() const;
};

inline constexpr std::size_t kSynthFields = 5;

// Tables indexed [domain][split] with Domain and Split as indices.
struct SynthBenchmark {
  std::array<std::array<CsvTable, 3>, 2> tables;
  Schema schema;
  std::string manifest_json;
  // True click probability of every row, same indexing as tables.
  std::array<std::array<std::vector<double>, 3>, 2> truth;
};

SynthBenchmark GenerateSynth(const SynthSpec& spec);

const char* DomainName(Domain domain);
const char* SplitName(Split split);
// "<domain>_<split>.csv", e.g. target_validation.csv.
std::string DataFileName(Domain domain, Split split);

// Writes the six CSVs, schema.ini and manifest.json into `dir`.
void WriteSynth(const SynthBenchmark& bench, const std::string& dir);

}  // namespace autoft
