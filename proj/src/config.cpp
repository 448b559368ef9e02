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

#include "autoft/config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <sstream>

#include "autoft/error.hpp"
#include "autoft/evaluation.hpp"

namespace autoft {

namespace pt = boost::property_tree;

namespace {

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

[[noreturn]] void BadValue(const std::string& key, const std::string& value,
                           const std::string& expected) {
  Fail(ErrorKind::kConfig, "config key " + key + ": '" + value + "' is not " + expected);
}

double ToDouble(const std::string& key, const std::string& value) {
  double out = 0.0;
  const std::string v = Trim(value);
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    BadValue(key, value, "a number");
  }
  return out;
}

std::uint64_t ToUnsigned(const std::string& key, const std::string& value) {
  std::uint64_t out = 0;
  const std::string v = Trim(value);
  auto res = std::from_chars(v.data(), v.data() + v.size(), out);
  if (v.empty() || res.ec != std::errc() || res.ptr != v.data() + v.size()) {
    BadValue(key, value, "a non-negative integer");
  }
  return out;
}

bool ToBool(const std::string& key, const std::string& value) {
  const std::string v = Trim(value);
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  BadValue(key, value, "a boolean");
}

std::vector<std::size_t> ToWidths(const std::string& key, const std::string& value) {
  std::vector<std::size_t> out;
  const std::string v = Trim(value);
  if (v.empty()) return out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(ToUnsigned(key, item));
  return out;
}

const char* Bool(bool b) { return b ? "true" : "false"; }

}  // namespace

const char* PretrainDataName(PretrainData data) {
  return data == PretrainData::kSource ? "source" : "all";
}

const char* L2ScopeName(L2Scope scope) { return scope == L2Scope::kAll ? "all" : "weights"; }

void ApplyConfigValue(RunConfig& c, const std::string& key, const std::string& raw) {
  const std::string value = Trim(raw);
  if (key == "run.stage") {
    c.stage = ParseStage(value);
  } else if (key == "run.seed") {
    c.seed = ToUnsigned(key, value);
  } else if (key == "run.epochs") {
    c.epochs = ToUnsigned(key, value);
  } else if (key == "run.batch_size") {
    c.batch_size = ToUnsigned(key, value);
  } else if (key == "run.learning_rate") {
    c.learning_rate = ToDouble(key, value);
  } else if (key == "run.lambda") {
    c.lambda = ToDouble(key, value);
  } else if (key == "run.l2_scope") {
    if (value == "weights") {
      c.l2_scope = L2Scope::kWeights;
    } else if (value == "all") {
      c.l2_scope = L2Scope::kAll;
    } else {
      BadValue(key, value, "weights or all");
    }
  } else if (key == "run.l2_include_policies") {
    c.l2_include_policies = ToBool(key, value);
  } else if (key == "run.patience") {
    c.patience = ToUnsigned(key, value);
  } else if (key == "run.tau_start") {
    c.tau_start = ToDouble(key, value);
  } else if (key == "run.tau_end") {
    c.tau_end = ToDouble(key, value);
  } else if (key == "run.pretrain_data") {
    if (value == "source") {
      c.pretrain_data = PretrainData::kSource;
    } else if (value == "all") {
      c.pretrain_data = PretrainData::kAll;
    } else {
      BadValue(key, value, "source or all");
    }
  } else if (key == "arch.backbone") {
    c.backbone = ParseBackbone(value);
  } else if (key == "arch.embedding_dim") {
    c.embedding_dim = ToUnsigned(key, value);
  } else if (key == "arch.cross_layers") {
    c.cross_layers = ToUnsigned(key, value);
  } else if (key == "arch.deep_layers") {
    c.deep_layers = ToWidths(key, value);
  } else if (key == "policy.hidden") {
    c.policy.hidden = ToUnsigned(key, value);
  } else if (key == "policy.output_relu") {
    c.policy.output_relu = ToBool(key, value);
  } else if (key == "policy.pretrained_bias") {
    c.policy.pretrained_bias = ToDouble(key, value);
  } else if (key == "policy.init_scale") {
    c.policy.init_scale = ToDouble(key, value);
  } else if (key == "policy.lr_scale") {
    c.policy.lr_scale = ToDouble(key, value);
  } else {
    Fail(ErrorKind::kConfig, "unknown config key " + key);
  }
}

void ApplyOverrides(RunConfig& config, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) {
      Fail(ErrorKind::kConfig, "override '" + o + "' is not section.key=value");
    }
    ApplyConfigValue(config, Trim(o.substr(0, eq)), o.substr(eq + 1));
  }
}

std::string SerializeRunConfig(const RunConfig& c) {
  std::ostringstream os;
  os << "[run]\n";
  os << "stage=" << StageName(c.stage) << "\n";
  os << "seed=" << c.seed << "\n";
  os << "epochs=" << c.epochs << "\n";
  os << "batch_size=" << c.batch_size << "\n";
  os << "learning_rate=" << FormatDouble(c.learning_rate) << "\n";
  os << "lambda=" << FormatDouble(c.lambda) << "\n";
  os << "l2_scope=" << L2ScopeName(c.l2_scope) << "\n";
  os << "l2_include_policies=" << Bool(c.l2_include_policies) << "\n";
  os << "patience=" << c.patience << "\n";
  os << "tau_start=" << FormatDouble(c.tau_start) << "\n";
  os << "tau_end=" << FormatDouble(c.tau_end) << "\n";
  os << "pretrain_data=" << PretrainDataName(c.pretrain_data) << "\n";
  os << "\n[arch]\n";
  os << "backbone=" << BackboneName(c.backbone) << "\n";
  os << "embedding_dim=" << c.embedding_dim << "\n";
  os << "cross_layers=" << c.cross_layers << "\n";
  os << "deep_layers=";
  for (std::size_t i = 0; i < c.deep_layers.size(); ++i) {
    os << (i ? "," : "") << c.deep_layers[i];
  }
  os << "\n";
  os << "\n[policy]\n";
  os << "hidden=" << c.policy.hidden << "\n";
  os << "output_relu=" << Bool(c.policy.output_relu) << "\n";
  os << "pretrained_bias=" << FormatDouble(c.policy.pretrained_bias) << "\n";
  os << "init_scale=" << FormatDouble(c.policy.init_scale) << "\n";
  os << "lr_scale=" << FormatDouble(c.policy.lr_scale) << "\n";
  return os.str();
}

RunConfig ParseRunConfig(const std::string& text, const std::string& source) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    Fail(ErrorKind::kConfig, source + ": line " + std::to_string(e.line()) + ": " + e.message());
  }
  RunConfig config;
  for (const auto& [section, body] : tree) {
    if (section != "run" && section != "arch" && section != "policy") {
      Fail(ErrorKind::kConfig, source + ": unknown section [" + section + "]");
    }
    for (const auto& [key, node] : body) {
      try {
        ApplyConfigValue(config, section + "." + key, node.data());
      } catch (const Error& e) {
        throw Error(e.kind(), source + ": " + e.what());
      }
    }
  }
  return config;
}

RunConfig LoadRunConfig(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) Fail(ErrorKind::kConfig, "cannot open config file " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return ParseRunConfig(buf.str(), path);
}

}  // namespace autoft
