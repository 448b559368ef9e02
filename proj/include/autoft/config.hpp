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

// Run configuration files.
//
// A config file has three sections of key=value lines:
//
//   [run]     stage, seed, epochs, batch_size, learning_rate, lambda,
//             l2_scope (weights|all), l2_include_policies, patience,
//             tau_start, tau_end, pretrain_data (source|all)
//   [arch]    backbone (dcn|dnn), embedding_dim, cross_layers,
//             deep_layers (comma-separated widths, may be empty)
//   [policy]  hidden, output_relu, pretrained_bias, init_scale
//
// Missing keys keep their defaults. Overrides use "section.key=value" and
// are applied after the file, so command-line values win.

#include <string>
#include <vector>

#include "autoft/training.hpp"

namespace autoft {

// Canonical text form; parsing it yields an equal config.
std::string SerializeRunConfig(const RunConfig& config);
RunConfig ParseRunConfig(const std::string& text, const std::string& source = "<config>");
RunConfig LoadRunConfig(const std::string& path);

// Sets one "section.key" entry.
void ApplyConfigValue(RunConfig& config, const std::string& key, const std::string& value);
// Applies "section.key=value" strings in order.
void ApplyOverrides(RunConfig& config, const std::vector<std::string>& overrides);

const char* PretrainDataName(PretrainData data);
const char* L2ScopeName(L2Scope scope);

}  // namespace autoft
