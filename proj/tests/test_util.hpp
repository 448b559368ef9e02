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

// Small models, instances and parameter plumbing shared by the tests.

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "autoft/autoft_policy.hpp"
#include "autoft/dcn_model.hpp"
#include "autoft/feature_pipeline.hpp"

namespace autoft::testing {

inline ArchConfig ToyArch(Backbone backbone = Backbone::kDcn) {
  ArchConfig arch;
  arch.backbone = backbone;
  arch.embedding_dim = 4;
  arch.cross_layers = 2;
  arch.deep_layers = {6, 5};
  arch.field_sizes = {5, 7};
  return arch;
}

// Field 0 one-hot, field 1 multi-hot with 1..3 active indices.
inline EncodedInstance RandomInstance(const ArchConfig& arch, SeededRng& rng) {
  EncodedInstance inst;
  for (std::size_t f = 0; f < arch.num_fields(); ++f) {
    std::vector<std::uint32_t> idx;
    const std::size_t count = f == 0 ? 1 : 1 + rng.NextBelow(3);
    for (std::size_t i = 0; i < count; ++i) {
      idx.push_back(static_cast<std::uint32_t>(rng.NextBelow(arch.field_sizes[f])));
    }
    inst.fields.push_back(idx);
  }
  inst.label = static_cast<int>(rng.NextBelow(2));
  return inst;
}

// Copy of `params` with every tensor perturbed by U[-scale, scale].
template <typename Params>
Params Perturbed(Params params, double scale, SeededRng& rng) {
  ForEachTensor(params, [&](const std::string&, ParamGroup, std::span<double> t) {
    for (double& v : t) v += rng.NextUniform(-scale, scale);
  });
  return params;
}

// Fresh empty directory under the system temp dir.
inline std::filesystem::path TempDir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("autoft_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace autoft::testing

#include <map>

#include "autoft/numerics.hpp"

namespace autoft::testing {

// Finite-difference relative error of every tensor listed by `visit`.
// `visit(obj, fn)` must call fn(name, group, span) for the trainable tensors
// of both the model and the gradient object; `loss(model)` evaluates the
// scalar objective.
template <typename Model, typename Grads, typename Visit, typename LossFn>
std::map<std::string, double> FiniteDifferenceErrors(const Model& model, Grads grads, Visit visit,
                                                     LossFn loss, double h = 1e-5) {
  std::map<std::string, Vector> analytic;
  visit(grads, [&](const std::string& name, ParamGroup, std::span<double> t) {
    analytic[name] = Vector(t.begin(), t.end());
  });
  std::map<std::string, double> errors;
  Model base = model;
  std::vector<std::pair<std::string, Vector>> points;
  visit(base, [&](const std::string& name, ParamGroup, std::span<double> t) {
    points.emplace_back(name, Vector(t.begin(), t.end()));
  });
  for (const auto& [name, point] : points) {
    auto f = [&, name = name](std::span<const double> x) {
      Model m = model;
      visit(m, [&](const std::string& n, ParamGroup, std::span<double> t) {
        if (n == name) std::copy(x.begin(), x.end(), t.begin());
      });
      return loss(m);
    };
    errors[name] = FiniteDifferenceCheck(f, point, analytic.at(name), h);
  }
  return errors;
}

}  // namespace autoft::testing

#include "autoft/synth.hpp"

namespace autoft::testing {

// Encoded splits of a synthetic benchmark with a vocabulary built over both
// training tables.
struct EncodedBenchmark {
  SynthBenchmark raw;
  Vocabulary vocab;
  std::array<std::array<DomainDataset, 3>, 2> data;

  const DomainDataset& get(Domain d, Split s) const {
    return data[static_cast<int>(d)][static_cast<int>(s)];
  }
};

inline EncodedBenchmark EncodeBenchmark(const SynthSpec& spec) {
  EncodedBenchmark b;
  b.raw = GenerateSynth(spec);
  const CsvTable* tables[] = {&b.raw.tables[0][0], &b.raw.tables[1][0]};
  b.vocab = BuildVocab(tables, b.raw.schema);
  for (int d = 0; d < 2; ++d) {
    for (int s = 0; s < 3; ++s) {
      b.data[d][s] = EncodeTable(b.raw.tables[d][s], b.raw.schema, b.vocab,
                                 static_cast<Domain>(d), static_cast<Split>(s));
    }
  }
  return b;
}

inline SynthSpec SmallSpec(std::uint64_t seed = 42) {
  SynthSpec spec;
  spec.seed = seed;
  spec.source_count = 6000;
  spec.target_count = 1500;
  spec.source_users = 200;
  spec.target_users = 60;
  spec.items = 150;
  return spec;
}

}  // namespace autoft::testing
