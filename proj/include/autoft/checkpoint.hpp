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

// Binary checkpoint container.
//
// Layout (all integers little-endian):
//   8 bytes   magic "AUTOFTCK"
//   u32       format version (1)
//   u64       header length, then the header as JSON (sorted keys)
//   u64       tensor count, then per tensor:
//               u32 name length, name bytes, u64 rows, u64 cols,
//               rows*cols IEEE-754 doubles
//
// Saving the same parameters always yields the same bytes, so
// save -> load -> save is byte-identical.

#include <cstdint>
#include <string>
#include <vector>

#include "autoft/dcn_model.hpp"
#include "json.hpp"

namespace autoft {

struct NamedTensor {
  std::string name;
  DenseMatrix value;
};

struct TensorArchive {
  nlohmann::json header;
  std::vector<NamedTensor> tensors;

  const DenseMatrix& Get(const std::string& name) const;
};

std::string SerializeArchive(const TensorArchive& archive);
TensorArchive DeserializeArchive(const std::string& bytes, const std::string& source = "<bytes>");

void WriteFileBytes(const std::string& path, const std::string& bytes);
std::string ReadFileBytes(const std::string& path);

// FNV-1a 64-bit.
std::uint64_t HashBytes(const std::string& bytes);
std::string HexU64(std::uint64_t value);
std::uint64_t ParseHexU64(const std::string& hex);

nlohmann::json ArchToJson(const ArchConfig& arch);
ArchConfig ArchFromJson(const nlohmann::json& j);

// Appends the tensors of a bank under `prefix` and reads them back.
void AppendBank(const DcnParams& params, const std::string& prefix, TensorArchive& archive);
DcnParams ReadBank(const TensorArchive& archive, const ArchConfig& arch,
                   const std::string& prefix);

struct DcnCheckpoint {
  DcnParams params;
  std::uint64_t vocab_hash = 0;
};

std::string SerializeDcnCheckpoint(const DcnCheckpoint& ckpt);
DcnCheckpoint DeserializeDcnCheckpoint(const std::string& bytes,
                                       const std::string& source = "<bytes>");
void SaveDcnCheckpoint(const std::string& path, const DcnCheckpoint& ckpt);
DcnCheckpoint LoadDcnCheckpoint(const std::string& path);

// Byte hash of a bank's canonical serialization.
std::uint64_t BankHash(const DcnParams& params);

}  // namespace autoft
