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

#include "autoft/synth.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>

#include "autoft/error.hpp"
#include "json.hpp"

namespace autoft {

namespace {

constexpr std::size_t kUser = 0, kItem = 1, kCategory = 2, kContext = 3, kTags = 4;
constexpr const char* kFieldNames[kSynthFields] = {"user", "item", "category", "context",
                                                   "tags"};

enum StreamTag : std::uint64_t {
  kLatentStream = 1,
  kSourceWeightStream,
  kIndependentWeightStream,
  kOverlapStream,
  kCategoryStream,
  kSampleStream,
};

struct DomainWeights {
  std::vector<Vector> first;   // u_f, one per field
  std::vector<Vector> pair;    // M_fg flattened r x r, f < g in row-major pair order
};

DomainWeights DrawWeights(std::size_t r, SeededRng& rng) {
  DomainWeights w;
  for (std::size_t f = 0; f < kSynthFields; ++f) {
    Vector u(r);
    for (double& v : u) v = rng.NextNormal();
    w.first.push_back(std::move(u));
  }
  for (std::size_t f = 0; f < kSynthFields; ++f) {
    for (std::size_t g = f + 1; g < kSynthFields; ++g) {
      Vector m(r * r);
      for (double& v : m) v = rng.NextNormal();
      w.pair.push_back(std::move(m));
    }
  }
  return w;
}

DomainWeights Blend(const DomainWeights& s, const DomainWeights& ind, double delta) {
  const double a = 1.0 - delta;
  const double norm = std::sqrt(a * a + delta * delta);
  DomainWeights t = s;
  auto mix = [&](std::vector<Vector>& dst, const std::vector<Vector>& src,
                 const std::vector<Vector>& other) {
    for (std::size_t i = 0; i < dst.size(); ++i) {
      for (std::size_t j = 0; j < dst[i].size(); ++j) {
        dst[i][j] = (a * src[i][j] + delta * other[i][j]) / norm;
      }
    }
  };
  mix(t.first, s.first, ind.first);
  mix(t.pair, s.pair, ind.pair);
  return t;
}

std::vector<Vector> DrawLatents(std::size_t count, std::size_t r, SeededRng& rng) {
  std::vector<Vector> out(count, Vector(r));
  const double scale = 1.0 / std::sqrt(static_cast<double>(r));
  for (auto& z : out) {
    for (double& v : z) v = rng.NextNormal() * scale;
  }
  return out;
}

nlohmann::json WeightsJson(const DomainWeights& w) {
  nlohmann::json j;
  j["first_order"] = w.first;
  j["pairwise"] = w.pair;
  return j;
}

}  // namespace

void SynthSpec::Validate() const {
  auto bad = [](const std::string& msg) { Fail(ErrorKind::kConfig, "synth: " + msg); };
  if (!(delta >= 0.0 && delta <= 1.0)) bad("delta must be in [0, 1]");
  if (!(item_overlap >= 0.0 && item_overlap <= 1.0)) bad("item_overlap must be in [0, 1]");
  if (!(user_overlap >= 0.0 && user_overlap <= 1.0)) bad("user_overlap must be in [0, 1]");
  if (source_count == 0 || target_count == 0) bad("instance counts must be >= 1");
  if (source_users == 0 || target_users == 0 || items == 0 || categories == 0 ||
      contexts == 0 || tags == 0 || max_tags == 0 || latent_dim == 0) {
    bad("cardinalities must be >= 1");
  }
  if (!(signal_std >= 0.0) || !std::isfinite(bias)) bad("signal_std must be >= 0");
}

const char* DomainName(Domain domain) { return domain == Domain::kSource ? "source" : "target"; }

const char* SplitName(Split split) {
  switch (split) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    default: return "test";
  }
}

std::string DataFileName(Domain domain, Split split) {
  return std::string(DomainName(domain)) + "_" + SplitName(split) + ".csv";
}

SynthBenchmark GenerateSynth(const SynthSpec& spec) {
  spec.Validate();
  const std::size_t r = spec.latent_dim;

  // Entities. Source items are 0..items-1; the target pool reuses a random
  // subset of them and fills the rest with target-only items.
  const std::size_t shared =
      static_cast<std::size_t>(std::llround(spec.item_overlap * static_cast<double>(spec.items)));
  std::vector<std::size_t> target_items;
  {
    std::vector<std::size_t> perm(spec.items);
    std::iota(perm.begin(), perm.end(), 0);
    SeededRng rng = SeededRng::Substream(spec.seed, kOverlapStream);
    for (std::size_t i = perm.size(); i > 1; --i) std::swap(perm[i - 1], perm[rng.NextBelow(i)]);
    target_items.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(shared));
    for (std::size_t i = shared; i < spec.items; ++i) target_items.push_back(spec.items + i - shared);
  }
  const std::size_t shared_users = static_cast<std::size_t>(
      std::llround(spec.user_overlap * static_cast<double>(spec.target_users)));
  const std::size_t total_items = spec.items + (spec.items - shared);
  std::vector<std::size_t> item_category(total_items);
  {
    SeededRng rng = SeededRng::Substream(spec.seed, kCategoryStream);
    for (auto& c : item_category) c = rng.NextBelow(spec.categories);
  }

  SeededRng latent_rng = SeededRng::Substream(spec.seed, kLatentStream);
  const auto z_user = DrawLatents(spec.source_users + spec.target_users, r, latent_rng);
  const auto z_item = DrawLatents(total_items, r, latent_rng);
  const auto z_cat = DrawLatents(spec.categories, r, latent_rng);
  const auto z_ctx = DrawLatents(spec.contexts, r, latent_rng);
  const auto z_tag = DrawLatents(spec.tags, r, latent_rng);

  SeededRng ws_rng = SeededRng::Substream(spec.seed, kSourceWeightStream);
  SeededRng wi_rng = SeededRng::Substream(spec.seed, kIndependentWeightStream);
  const DomainWeights w_source = DrawWeights(r, ws_rng);
  const DomainWeights w_indep = DrawWeights(r, wi_rng);
  const DomainWeights w_target = Blend(w_source, w_indep, spec.delta);

  // Variance of the raw score is kSynthFields + number of pairs.
  const double pairs = static_cast<double>(kSynthFields * (kSynthFields - 1) / 2);
  const double scale = spec.signal_std / std::sqrt(static_cast<double>(kSynthFields) + pairs);

  SynthBenchmark bench;
  for (std::size_t f = 0; f < kSynthFields; ++f) {
    FieldSchema field;
    field.name = kFieldNames[f];
    if (f == kTags) field.arity = Arity::kMultiHot;
    bench.schema.fields.push_back(field);
  }
  bench.schema.label_column = "label";

  std::vector<std::string> header;
  for (const char* name : kFieldNames) header.emplace_back(name);
  header.emplace_back("label");

  for (int d = 0; d < 2; ++d) {
    const Domain domain = d == 0 ? Domain::kSource : Domain::kTarget;
    const DomainWeights& w = d == 0 ? w_source : w_target;
    const std::size_t count = d == 0 ? spec.source_count : spec.target_count;
    const std::size_t users = d == 0 ? spec.source_users : spec.target_users;
    const std::size_t user_offset = d == 0 ? 0 : spec.source_users;
    SeededRng rng = SeededRng::Substream(spec.seed, kSampleStream, static_cast<std::uint64_t>(d));

    const std::size_t n_train = count * 8 / 10;
    const std::size_t n_valid = count / 10;
    for (int s = 0; s < 3; ++s) bench.tables[d][s].header = header;

    for (std::size_t n = 0; n < count; ++n) {
      const std::size_t user = rng.NextBelow(users);
      // Popularity skew: low pool positions are drawn more often.
      const double u = rng.NextUniform();
      const std::size_t pos = std::min(spec.items - 1, static_cast<std::size_t>(
                                                           u * u * static_cast<double>(spec.items)));
      const std::size_t item = d == 0 ? pos : target_items[pos];
      const std::size_t category = item_category[item];
      const std::size_t context = rng.NextBelow(spec.contexts);
      const std::size_t n_tags = 1 + rng.NextBelow(spec.max_tags);
      std::vector<std::size_t> tag_ids;
      for (std::size_t t = 0; t < n_tags; ++t) tag_ids.push_back(rng.NextBelow(spec.tags));

      std::array<Vector, kSynthFields> z;
      // Target users below the shared count are source users.
      const bool shared_user = d == 1 && user < shared_users;
      const std::size_t user_row = shared_user ? user % spec.source_users : user_offset + user;
      z[kUser] = z_user[user_row];
      z[kItem] = z_item[item];
      z[kCategory] = z_cat[category];
      z[kContext] = z_ctx[context];
      z[kTags] = Vector(r, 0.0);
      for (std::size_t t : tag_ids) {
        for (std::size_t i = 0; i < r; ++i) z[kTags][i] += z_tag[t][i] / static_cast<double>(n_tags);
      }
      double raw = 0.0;
      for (std::size_t f = 0; f < kSynthFields; ++f) raw += Dot(w.first[f], z[f]);
      std::size_t p = 0;
      for (std::size_t f = 0; f < kSynthFields; ++f) {
        for (std::size_t g = f + 1; g < kSynthFields; ++g, ++p) {
          const Vector& m = w.pair[p];
          for (std::size_t i = 0; i < r; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < r; ++j) acc += m[i * r + j] * z[g][j];
            raw += z[f][i] * acc;
          }
        }
      }
      const double prob = Sigmoid(spec.bias + scale * raw);
      const int label = rng.NextUniform() < prob ? 1 : 0;

      std::vector<std::string> row;
      row.push_back(d == 0 || shared_user ? "su" + std::to_string(user_row)
                                          : "tu" + std::to_string(user));
      row.push_back("i" + std::to_string(item));
      row.push_back("c" + std::to_string(category));
      row.push_back("x" + std::to_string(context));
      std::string tags;
      for (std::size_t t = 0; t < tag_ids.size(); ++t) {
        tags += (t ? "|" : "") + std::string("t") + std::to_string(tag_ids[t]);
      }
      row.push_back(tags);
      row.push_back(label ? "1" : "0");

      const int split = n < n_train ? 0 : (n < n_train + n_valid ? 1 : 2);
      bench.tables[d][split].rows.push_back(std::move(row));
      bench.truth[d][split].push_back(prob);
    }
    (void)domain;
  }

  nlohmann::ordered_json manifest;
  manifest["seed"] = spec.seed;
  manifest["delta"] = spec.delta;
  manifest["item_overlap"] = spec.item_overlap;
  manifest["source_count"] = spec.source_count;
  manifest["target_count"] = spec.target_count;
  manifest["source_users"] = spec.source_users;
  manifest["target_users"] = spec.target_users;
  manifest["user_overlap"] = spec.user_overlap;
  manifest["shared_users"] = shared_users;
  manifest["items"] = spec.items;
  manifest["shared_items"] = shared;
  manifest["categories"] = spec.categories;
  manifest["contexts"] = spec.contexts;
  manifest["tags"] = spec.tags;
  manifest["max_tags"] = spec.max_tags;
  manifest["latent_dim"] = spec.latent_dim;
  manifest["signal_std"] = spec.signal_std;
  manifest["bias"] = spec.bias;
  manifest["score_scale"] = scale;
  manifest["fields"] = std::vector<std::string>(std::begin(kFieldNames), std::end(kFieldNames));
  manifest["weights"]["source"] = WeightsJson(w_source);
  manifest["weights"]["target"] = WeightsJson(w_target);
  manifest["latents"]["user"] = z_user;
  manifest["latents"]["item"] = z_item;
  manifest["latents"]["category"] = z_cat;
  manifest["latents"]["context"] = z_ctx;
  manifest["latents"]["tags"] = z_tag;
  bench.manifest_json = manifest.dump(1) + "\n";
  return bench;
}

void WriteSynth(const SynthBenchmark& bench, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) Fail(ErrorKind::kIo, "cannot create directory " + dir + ": " + ec.message());
  for (int d = 0; d < 2; ++d) {
    for (int s = 0; s < 3; ++s) {
      const auto path = fs::path(dir) / DataFileName(static_cast<Domain>(d), static_cast<Split>(s));
      WriteCsvFile(path.string(), bench.tables[d][s]);
    }
  }
  auto write_text = [&](const char* name, const std::string& text) {
    const auto path = (fs::path(dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) Fail(ErrorKind::kIo, "cannot write " + path);
    out << text;
  };
  write_text("schema.ini", SerializeSchema(bench.schema));
  write_text("manifest.json", bench.manifest_json);
}

}  // namespace autoft
