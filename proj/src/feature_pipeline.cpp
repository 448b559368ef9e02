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

#include "autoft/feature_pipeline.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <set>
#include <sstream>

#include "autoft/error.hpp"
#include "json.hpp"

namespace autoft {

namespace pt = boost::property_tree;

void Schema::Validate() const {
  if (fields.empty()) Fail(ErrorKind::kSchema, "schema declares no fields");
  std::set<std::string> seen;
  for (const auto& f : fields) {
    if (f.name.empty()) Fail(ErrorKind::kSchema, "field with empty name");
    if (!seen.insert(f.name).second) Fail(ErrorKind::kSchema, "duplicate field name: " + f.name);
    if (f.name == label_column) {
      Fail(ErrorKind::kSchema, "field " + f.name + " is also the label column");
    }
    if (f.arity == Arity::kMultiHot && f.max_length == 0) {
      Fail(ErrorKind::kSchema, "field " + f.name + ": max_length must be positive");
    }
  }
  if (label_column.empty()) Fail(ErrorKind::kSchema, "label column is empty");
}

Schema ParseSchema(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    Fail(ErrorKind::kSchema, std::string("schema parse error: ") + e.what());
  }
  Schema schema;
  for (const auto& [section, body] : tree) {
    if (section == "schema") {
      for (const auto& [key, value] : body) {
        const std::string v = value.get_value<std::string>();
        if (key == "label") {
          schema.label_column = v;
        } else if (key == "rating_threshold") {
          try {
            schema.rating_threshold = std::stod(v);
          } catch (const std::exception&) {
            Fail(ErrorKind::kSchema, "rating_threshold is not a number: " + v);
          }
        } else {
          Fail(ErrorKind::kSchema, "unknown key in [schema]: " + key);
        }
      }
    } else if (section.rfind("field:", 0) == 0) {
      FieldSchema field;
      field.name = section.substr(6);
      for (const auto& [key, value] : body) {
        const std::string v = value.get_value<std::string>();
        if (key == "arity") {
          if (v == "onehot") {
            field.arity = Arity::kOneHot;
          } else if (v == "multihot") {
            field.arity = Arity::kMultiHot;
          } else {
            Fail(ErrorKind::kSchema, "field " + field.name + ": unknown arity " + v);
          }
        } else if (key == "delimiter") {
          if (v.size() != 1) {
            Fail(ErrorKind::kSchema, "field " + field.name + ": delimiter must be one character");
          }
          field.delimiter = v[0];
        } else if (key == "max_length") {
          try {
            field.max_length = std::stoul(v);
          } catch (const std::exception&) {
            Fail(ErrorKind::kSchema, "field " + field.name + ": bad max_length " + v);
          }
        } else {
          Fail(ErrorKind::kSchema, "field " + field.name + ": unknown key " + key);
        }
      }
      schema.fields.push_back(field);
    } else {
      Fail(ErrorKind::kSchema, "unknown schema section [" + section + "]");
    }
  }
  schema.Validate();
  return schema;
}

Schema LoadSchema(const std::string& path) {
  std::ifstream in(path);
  if (!in) Fail(ErrorKind::kIo, "cannot open schema file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseSchema(buf.str());
}

std::string SerializeSchema(const Schema& schema) {
  std::ostringstream os;
  os << "[schema]\nlabel = " << schema.label_column << "\n";
  if (schema.rating_threshold) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), *schema.rating_threshold);
    os << "rating_threshold = " << std::string(buf, res.ptr) << "\n";
  }
  for (const auto& f : schema.fields) {
    os << "\n[field:" << f.name << "]\n";
    os << "arity = " << (f.arity == Arity::kOneHot ? "onehot" : "multihot") << "\n";
    if (f.arity == Arity::kMultiHot) {
      os << "delimiter = " << f.delimiter << "\n";
      os << "max_length = " << f.max_length << "\n";
    }
  }
  return os.str();
}

Vocabulary::Vocabulary(std::size_t num_fields) : features_(num_fields), index_(num_fields) {}

std::vector<std::size_t> Vocabulary::field_sizes() const {
  std::vector<std::size_t> sizes;
  for (std::size_t f = 0; f < num_fields(); ++f) sizes.push_back(field_size(f));
  return sizes;
}

std::uint32_t Vocabulary::Lookup(std::size_t field, const std::string& feature) const {
  const auto& map = index_[field];
  auto it = map.find(feature);
  return it == map.end() ? kOovIndex : it->second;
}

std::uint32_t Vocabulary::Add(std::size_t field, const std::string& feature) {
  auto [it, inserted] =
      index_[field].try_emplace(feature, static_cast<std::uint32_t>(features_[field].size() + 1));
  if (inserted) features_[field].push_back(feature);
  return it->second;
}

const std::string& Vocabulary::Feature(std::size_t field, std::uint32_t index) const {
  if (index == kOovIndex || index > features_[field].size()) {
    Fail(ErrorKind::kInternal, "vocabulary index out of range: " + std::to_string(index));
  }
  return features_[field][index - 1];
}

std::uint64_t Vocabulary::Hash() const {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  auto mix = [&h](const void* data, std::size_t n) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= p[i];
      h *= 0x100000001b3ULL;
    }
  };
  const std::uint64_t nf = features_.size();
  mix(&nf, sizeof(nf));
  for (const auto& field : features_) {
    const std::uint64_t n = field.size();
    mix(&n, sizeof(n));
    for (const auto& s : field) {
      const std::uint64_t len = s.size();
      mix(&len, sizeof(len));
      mix(s.data(), s.size());
    }
  }
  return h;
}

std::string Vocabulary::ToJson(const Schema& schema) const {
  nlohmann::ordered_json doc;
  doc["fields"] = nlohmann::ordered_json::array();
  for (std::size_t f = 0; f < features_.size(); ++f) {
    nlohmann::ordered_json entry;
    entry["name"] = f < schema.fields.size() ? schema.fields[f].name : std::to_string(f);
    entry["features"] = features_[f];
    doc["fields"].push_back(entry);
  }
  return doc.dump(1) + "\n";
}

Vocabulary Vocabulary::FromJson(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kData, std::string("vocabulary parse error: ") + e.what());
  }
  if (!doc.contains("fields") || !doc["fields"].is_array()) {
    Fail(ErrorKind::kData, "vocabulary file lacks a fields array");
  }
  Vocabulary vocab(doc["fields"].size());
  for (std::size_t f = 0; f < doc["fields"].size(); ++f) {
    for (const auto& feat : doc["fields"][f].at("features")) {
      vocab.Add(f, feat.get<std::string>());
    }
  }
  return vocab;
}

void Vocabulary::Save(const std::string& path, const Schema& schema) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) Fail(ErrorKind::kIo, "cannot write vocabulary " + path);
  out << ToJson(schema);
}

Vocabulary Vocabulary::Load(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open vocabulary " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return FromJson(buf.str());
}

std::vector<std::string> SplitMultiHot(const std::string& cell, const FieldSchema& field) {
  std::vector<std::string> tokens;
  std::size_t start = 0;
  for (;;) {
    const std::size_t pos = cell.find(field.delimiter, start);
    tokens.push_back(cell.substr(start, pos == std::string::npos ? std::string::npos : pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  // Empty tokens carry no feature.
  std::erase_if(tokens, [](const std::string& t) { return t.empty(); });
  if (tokens.size() > field.max_length) {
    tokens.erase(tokens.begin(), tokens.end() - static_cast<std::ptrdiff_t>(field.max_length));
  }
  return tokens;
}

std::vector<int> ResolveFieldColumns(const CsvTable& table, const Schema& schema) {
  std::vector<int> cols;
  for (const auto& f : schema.fields) {
    const int c = table.ColumnIndex(f.name);
    if (c < 0) Fail(ErrorKind::kSchema, "missing column for field " + f.name);
    cols.push_back(c);
  }
  return cols;
}

Vocabulary BuildVocab(std::span<const CsvTable* const> tables, const Schema& schema,
                      std::size_t min_count) {
  schema.Validate();
  const std::size_t m = schema.num_fields();
  // First-appearance order with counts.
  std::vector<std::vector<std::string>> order(m);
  std::vector<std::unordered_map<std::string, std::size_t>> counts(m);
  for (const CsvTable* table : tables) {
    const auto cols = ResolveFieldColumns(*table, schema);
    for (const auto& row : table->rows) {
      for (std::size_t f = 0; f < m; ++f) {
        const std::string& cell = row[cols[f]];
        auto count = [&](const std::string& token) {
          auto [it, inserted] = counts[f].try_emplace(token, 0);
          if (inserted) order[f].push_back(token);
          ++it->second;
        };
        if (schema.fields[f].arity == Arity::kMultiHot) {
          for (const auto& t : SplitMultiHot(cell, schema.fields[f])) count(t);
        } else {
          count(cell);
        }
      }
    }
  }
  Vocabulary vocab(m);
  for (std::size_t f = 0; f < m; ++f) {
    for (const auto& token : order[f]) {
      if (counts[f][token] >= min_count) vocab.Add(f, token);
    }
  }
  return vocab;
}

Vocabulary BuildVocab(const CsvTable& table, const Schema& schema, std::size_t min_count) {
  const CsvTable* tables[] = {&table};
  return BuildVocab(tables, schema, min_count);
}

int ParseLabel(const std::string& cell, const Schema& schema, std::size_t row_number) {
  auto bad = [&]() {
    Fail(ErrorKind::kData, "row " + std::to_string(row_number) + ": unparsable label '" + cell + "'");
  };
  if (schema.rating_threshold) {
    double value = 0.0;
    const char* end = cell.data() + cell.size();
    auto res = std::from_chars(cell.data(), end, value);
    if (res.ec != std::errc() || res.ptr != end) bad();
    return value > *schema.rating_threshold ? 1 : 0;
  }
  if (cell == "0") return 0;
  if (cell == "1") return 1;
  bad();
  return 0;
}

EncodedInstance EncodeRow(const std::vector<std::string>& row,
                          const std::vector<int>& field_columns, int label_column,
                          const Schema& schema, const Vocabulary& vocab,
                          std::size_t row_number) {
  EncodedInstance inst;
  inst.fields.resize(schema.num_fields());
  for (std::size_t f = 0; f < schema.num_fields(); ++f) {
    const std::string& cell = row[field_columns[f]];
    auto& out = inst.fields[f];
    if (schema.fields[f].arity == Arity::kMultiHot) {
      for (const auto& t : SplitMultiHot(cell, schema.fields[f])) out.push_back(vocab.Lookup(f, t));
      if (out.empty()) out.push_back(kOovIndex);
    } else {
      out.push_back(vocab.Lookup(f, cell));
    }
  }
  inst.label = ParseLabel(row[label_column], schema, row_number);
  return inst;
}

EncodedInstance EncodeInstance(const CsvTable& table, std::size_t row_index, const Schema& schema,
                               const Vocabulary& vocab) {
  const auto cols = ResolveFieldColumns(table, schema);
  const int label = table.ColumnIndex(schema.label_column);
  if (label < 0) Fail(ErrorKind::kSchema, "missing label column " + schema.label_column);
  return EncodeRow(table.rows.at(row_index), cols, label, schema, vocab, row_index + 1);
}

DomainDataset EncodeTable(const CsvTable& table, const Schema& schema, const Vocabulary& vocab,
                          Domain domain, Split split) {
  if (vocab.num_fields() != schema.num_fields()) {
    Fail(ErrorKind::kVocabMismatch, "vocabulary has " + std::to_string(vocab.num_fields()) +
                                        " fields, schema has " +
                                        std::to_string(schema.num_fields()));
  }
  const auto cols = ResolveFieldColumns(table, schema);
  const int label = table.ColumnIndex(schema.label_column);
  if (label < 0) Fail(ErrorKind::kSchema, "missing label column " + schema.label_column);
  DomainDataset ds;
  ds.domain = domain;
  ds.split = split;
  ds.instances.reserve(table.rows.size());
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    ds.instances.push_back(EncodeRow(table.rows[r], cols, label, schema, vocab, r + 1));
  }
  return ds;
}

DomainDataset LoadDataset(const std::string& path, const Schema& schema, const Vocabulary& vocab,
                          Domain domain, Split split) {
  try {
    return EncodeTable(ReadCsvFile(path), schema, vocab, domain, split);
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::kData || e.kind() == ErrorKind::kSchema) {
      throw Error(e.kind(), path + ": " + e.what());
    }
    throw;
  }
}

}  // namespace autoft
