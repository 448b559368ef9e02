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

#include "autoft/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "autoft/error.hpp"

namespace autoft {

namespace {

constexpr char kMagic[8] = {'A', 'U', 'T', 'O', 'F', 'T', 'C', 'K'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void PutLe(std::string& out, T value) {
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>((static_cast<std::uint64_t>(value) >> (8 * i)) & 0xff));
  }
}

class Reader {
 public:
  Reader(const std::string& bytes, const std::string& source) : bytes_(bytes), source_(source) {}

  template <typename T>
  T Le() {
    Need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }

  std::string Bytes(std::size_t n) {
    Need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  bool AtEnd() const { return pos_ == bytes_.size(); }

 private:
  void Need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) Fail(ErrorKind::kData, source_ + ": truncated checkpoint");
  }

  const std::string& bytes_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

}  // namespace

const DenseMatrix& TensorArchive::Get(const std::string& name) const {
  for (const auto& t : tensors) {
    if (t.name == name) return t.value;
  }
  Fail(ErrorKind::kData, "checkpoint lacks tensor " + name);
}

std::string SerializeArchive(const TensorArchive& archive) {
  std::string out(kMagic, sizeof(kMagic));
  PutLe<std::uint32_t>(out, kVersion);
  const std::string header = archive.header.dump();
  PutLe<std::uint64_t>(out, header.size());
  out += header;
  PutLe<std::uint64_t>(out, archive.tensors.size());
  for (const auto& t : archive.tensors) {
    PutLe<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out += t.name;
    PutLe<std::uint64_t>(out, t.value.rows());
    PutLe<std::uint64_t>(out, t.value.cols());
    for (double v : t.value.values()) PutLe<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
  }
  return out;
}

TensorArchive DeserializeArchive(const std::string& bytes, const std::string& source) {
  Reader r(bytes, source);
  if (r.Bytes(sizeof(kMagic)) != std::string(kMagic, sizeof(kMagic))) {
    Fail(ErrorKind::kData, source + ": not a checkpoint (bad magic)");
  }
  const auto version = r.Le<std::uint32_t>();
  if (version != kVersion) {
    Fail(ErrorKind::kData, source + ": unsupported checkpoint version " + std::to_string(version));
  }
  TensorArchive archive;
  const auto header_len = r.Le<std::uint64_t>();
  try {
    archive.header = nlohmann::json::parse(r.Bytes(header_len));
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kData, source + ": bad checkpoint header: " + e.what());
  }
  const auto count = r.Le<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    NamedTensor t;
    t.name = r.Bytes(r.Le<std::uint32_t>());
    const auto rows = r.Le<std::uint64_t>();
    const auto cols = r.Le<std::uint64_t>();
    std::vector<double> values(rows * cols);
    for (double& v : values) v = std::bit_cast<double>(r.Le<std::uint64_t>());
    t.value = DenseMatrix(rows, cols, std::move(values));
    archive.tensors.push_back(std::move(t));
  }
  if (!r.AtEnd()) Fail(ErrorKind::kData, source + ": trailing bytes after checkpoint");
  return archive;
}

void WriteFileBytes(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) Fail(ErrorKind::kIo, "cannot write " + path);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) Fail(ErrorKind::kIo, "write failed for " + path);
}

std::string ReadFileBytes(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kIo, "cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::uint64_t HashBytes(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string HexU64(std::uint64_t value) {
  static const char* digits = "0123456789abcdef";
  std::string s(16, '0');
  for (int i = 15; i >= 0; --i) {
    s[static_cast<std::size_t>(i)] = digits[value & 0xf];
    value >>= 4;
  }
  return s;
}

nlohmann::json ArchToJson(const ArchConfig& arch) {
  nlohmann::json j;
  j["backbone"] = BackboneName(arch.backbone);
  j["embedding_dim"] = arch.embedding_dim;
  j["cross_layers"] = arch.cross_layers;
  j["deep_layers"] = arch.deep_layers;
  j["field_sizes"] = arch.field_sizes;
  return j;
}

ArchConfig ArchFromJson(const nlohmann::json& j) {
  ArchConfig arch;
  try {
    arch.backbone = ParseBackbone(j.at("backbone").get<std::string>());
    arch.embedding_dim = j.at("embedding_dim").get<std::size_t>();
    arch.cross_layers = j.at("cross_layers").get<std::size_t>();
    arch.deep_layers = j.at("deep_layers").get<std::vector<std::size_t>>();
    arch.field_sizes = j.at("field_sizes").get<std::vector<std::size_t>>();
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kData, std::string("bad architecture header: ") + e.what());
  }
  ValidateArch(arch);
  return arch;
}

void AppendBank(const DcnParams& params, const std::string& prefix, TensorArchive& archive) {
  auto add = [&](const std::string& name, const DenseMatrix& m) {
    archive.tensors.push_back({prefix + name, m});
  };
  auto add_vec = [&](const std::string& name, const Vector& v) {
    archive.tensors.push_back({prefix + name, DenseMatrix(v.size(), 1, v)});
  };
  for (std::size_t f = 0; f < params.embedding.tables.size(); ++f) {
    add("embedding/" + std::to_string(f), params.embedding.tables[f]);
  }
  for (std::size_t l = 0; l < params.cross.size(); ++l) {
    add_vec("cross/" + std::to_string(l) + "/w", params.cross[l].w);
    add_vec("cross/" + std::to_string(l) + "/b", params.cross[l].b);
  }
  for (std::size_t l = 0; l < params.deep.size(); ++l) {
    add("deep/" + std::to_string(l) + "/w", params.deep[l].w);
    add_vec("deep/" + std::to_string(l) + "/b", params.deep[l].b);
  }
  add_vec("prediction/w", params.prediction.w);
  add_vec("prediction/b", Vector{params.prediction.b});
}

DcnParams ReadBank(const TensorArchive& archive, const ArchConfig& arch,
                   const std::string& prefix) {
  // Start from a correctly shaped bank and overwrite every tensor.
  SeededRng rng(0);
  DcnParams p = InitDcnParams(arch, rng);
  auto copy = [&](const std::string& name, std::span<double> dst) {
    const DenseMatrix& src = archive.Get(prefix + name);
    if (src.size() != dst.size()) {
      Fail(ErrorKind::kData, "tensor " + prefix + name + " has " + std::to_string(src.size()) +
                                 " values, expected " + std::to_string(dst.size()));
    }
    std::copy(src.values().begin(), src.values().end(), dst.begin());
  };
  ForEachTensor(p, [&](const std::string& name, ParamGroup, std::span<double> t) {
    copy(name, t);
  });
  return p;
}

std::string SerializeDcnCheckpoint(const DcnCheckpoint& ckpt) {
  TensorArchive archive;
  archive.header["kind"] = "dcn";
  archive.header["arch"] = ArchToJson(ckpt.params.arch);
  archive.header["vocab_hash"] = HexU64(ckpt.vocab_hash);
  AppendBank(ckpt.params, "", archive);
  return SerializeArchive(archive);
}

std::uint64_t ParseHexU64(const std::string& s) {
  std::uint64_t v = 0;
  for (char c : s) {
    v <<= 4;
    if (c >= '0' && c <= '9') v |= static_cast<std::uint64_t>(c - '0');
    else if (c >= 'a' && c <= 'f') v |= static_cast<std::uint64_t>(c - 'a' + 10);
    else Fail(ErrorKind::kData, "bad hex value " + s);
  }
  return v;
}

DcnCheckpoint DeserializeDcnCheckpoint(const std::string& bytes, const std::string& source) {
  TensorArchive archive = DeserializeArchive(bytes, source);
  if (archive.header.value("kind", "") != "dcn") {
    Fail(ErrorKind::kData, source + ": not a DCN checkpoint");
  }
  DcnCheckpoint ckpt;
  ckpt.vocab_hash = ParseHexU64(archive.header.at("vocab_hash").get<std::string>());
  ckpt.params = ReadBank(archive, ArchFromJson(archive.header.at("arch")), "");
  return ckpt;
}

void SaveDcnCheckpoint(const std::string& path, const DcnCheckpoint& ckpt) {
  WriteFileBytes(path, SerializeDcnCheckpoint(ckpt));
}

DcnCheckpoint LoadDcnCheckpoint(const std::string& path) {
  return DeserializeDcnCheckpoint(ReadFileBytes(path), path);
}

std::uint64_t BankHash(const DcnParams& params) {
  TensorArchive archive;
  archive.header["arch"] = ArchToJson(params.arch);
  AppendBank(params, "", archive);
  return HashBytes(SerializeArchive(archive));
}

}  // namespace autoft
