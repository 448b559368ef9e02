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

// Field schemas, vocabularies and instance encoding for multi-field
// categorical CTR data.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "autoft/csv.hpp"
#include "autoft/numerics.hpp"

namespace autoft {

enum class Arity { kOneHot, kMultiHot };

struct FieldSchema {
  std::string name;
  Arity arity = Arity::kOneHot;
  char delimiter = '|';
  // MultiHot cells keep at most this many trailing (most recent) tokens.
  std::size_t max_length = 50;
};

struct Schema {
  std::vector<FieldSchema> fields;
  std::string label_column = "label";
  // When set, label = (value > threshold); otherwise the cell must be 0 or 1.
  std::optional<double> rating_threshold;

  std::size_t num_fields() const { return fields.size(); }
  void Validate() const;
};

// Schema file format (INI style, one section per field, in field order;
// comments go on their own line):
//
//   [schema]
//   label = click
//   ; optional
//   rating_threshold = 3
//
//   [field:user_id]
//   arity = onehot
//
//   [field:genres]
//   arity = multihot
//   delimiter = |
//   max_length = 50
Schema ParseSchema(const std::string& text);
Schema LoadSchema(const std::string& path);
std::string SerializeSchema(const Schema& schema);

inline constexpr std::uint32_t kOovIndex = 0;

// Per-field feature-string -> index maps. Index 0 is reserved for unknown
// features in every field.
class Vocabulary {
 public:
  Vocabulary() = default;
  explicit Vocabulary(std::size_t num_fields);

  std::size_t num_fields() const { return features_.size(); }
  // n_i, including the OOV slot.
  std::size_t field_size(std::size_t field) const { return features_[field].size() + 1; }
  std::vector<std::size_t> field_sizes() const;

  std::uint32_t Lookup(std::size_t field, const std::string& feature) const;
  // Appends a feature if absent; returns its index.
  std::uint32_t Add(std::size_t field, const std::string& feature);
  // Feature string for index >= 1.
  const std::string& Feature(std::size_t field, std::uint32_t index) const;

  // FNV-1a over the canonical serialization.
  std::uint64_t Hash() const;

  std::string ToJson(const Schema& schema) const;
  static Vocabulary FromJson(const std::string& text);
  void Save(const std::string& path, const Schema& schema) const;
  static Vocabulary Load(const std::string& path);

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) {
    return a.features_ == b.features_;
  }

 private:
  std::vector<std::vector<std::string>> features_;  // features_[f][i-1]
  std::vector<std::unordered_map<std::string, std::uint32_t>> index_;
};

struct EncodedInstance {
  std::vector<std::vector<std::uint32_t>> fields;
  int label = 0;

  friend bool operator==(const EncodedInstance&, const EncodedInstance&) = default;
};

enum class Domain { kSource, kTarget };
enum class Split { kTrain, kValidation, kTest };

struct DomainDataset {
  Domain domain = Domain::kTarget;
  Split split = Split::kTrain;
  std::vector<EncodedInstance> instances;

  std::size_t size() const { return instances.size(); }
  bool empty() const { return instances.empty(); }
};

// Splits a MultiHot cell into tokens and applies the max_length truncation.
std::vector<std::string> SplitMultiHot(const std::string& cell, const FieldSchema& field);

// Builds a shared vocabulary over the given tables. Features seen at least
// min_count times get dense indices 1.. in first-appearance order.
Vocabulary BuildVocab(std::span<const CsvTable* const> tables, const Schema& schema,
                      std::size_t min_count = 1);
Vocabulary BuildVocab(const CsvTable& table, const Schema& schema, std::size_t min_count = 1);

// Encodes row `row_number` (1-based data row) of a table with the given
// column map. Unknown features map to the OOV index.
EncodedInstance EncodeRow(const std::vector<std::string>& row,
                          const std::vector<int>& field_columns, int label_column,
                          const Schema& schema, const Vocabulary& vocab,
                          std::size_t row_number = 0);
EncodedInstance EncodeInstance(const CsvTable& table, std::size_t row_index,
                               const Schema& schema, const Vocabulary& vocab);

DomainDataset EncodeTable(const CsvTable& table, const Schema& schema, const Vocabulary& vocab,
                          Domain domain, Split split);
DomainDataset LoadDataset(const std::string& path, const Schema& schema,
                          const Vocabulary& vocab, Domain domain, Split split);

int ParseLabel(const std::string& cell, const Schema& schema, std::size_t row_number);

// Column positions of the schema fields in a header. Missing columns raise a
// schema error naming the field.
std::vector<int> ResolveFieldColumns(const CsvTable& table, const Schema& schema);

}  // namespace autoft
