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

#include "autoft/dcn_model.hpp"

#include <algorithm>
#include <cmath>

#include "autoft/error.hpp"

namespace autoft {

const char* BackboneName(Backbone backbone) {
  return backbone == Backbone::kDcn ? "dcn" : "dnn";
}

Backbone ParseBackbone(const std::string& name) {
  if (name == "dcn") return Backbone::kDcn;
  if (name == "dnn") return Backbone::kDnn;
  Fail(ErrorKind::kConfig, "unknown backbone: " + name);
}

bool IsWeightGroup(ParamGroup group) {
  return group == ParamGroup::kCrossWeight || group == ParamGroup::kDeepWeight ||
         group == ParamGroup::kPredictionWeight || group == ParamGroup::kPolicyWeight;
}

bool InL2Scope(ParamGroup group, L2Scope scope) {
  return scope == L2Scope::kAll || IsWeightGroup(group);
}

void ValidateArch(const ArchConfig& arch) {
  if (arch.field_sizes.empty()) Fail(ErrorKind::kConfig, "architecture has no fields");
  if (arch.embedding_dim == 0) Fail(ErrorKind::kConfig, "embedding_dim must be positive");
  for (std::size_t n : arch.field_sizes) {
    if (n == 0) Fail(ErrorKind::kConfig, "field vocabulary size must be at least 1 (OOV)");
  }
  for (std::size_t w : arch.deep_layers) {
    if (w == 0) Fail(ErrorKind::kConfig, "deep layer widths must be positive");
  }
}

namespace {

void FillUniform(std::span<double> values, double scale, SeededRng& rng) {
  for (double& v : values) v = rng.NextUniform(-scale, scale);
}

}  // namespace

DcnParams InitDcnParams(const ArchConfig& arch, SeededRng& rng) {
  ValidateArch(arch);
  DcnParams p;
  p.arch = arch;
  const std::size_t k = arch.embedding_dim;
  const std::size_t d = arch.input_dim();
  p.embedding.dim = k;
  for (std::size_t n : arch.field_sizes) {
    DenseMatrix table(n, k);
    FillUniform(table.values(), 1.0 / std::sqrt(static_cast<double>(k)), rng);
    p.embedding.tables.push_back(std::move(table));
  }
  for (std::size_t l = 0; l < arch.num_cross(); ++l) {
    CrossLayerParams layer{Vector(d), Vector(d, 0.0)};
    FillUniform(layer.w, 1.0 / std::sqrt(static_cast<double>(d)), rng);
    p.cross.push_back(std::move(layer));
  }
  std::size_t in = d;
  for (std::size_t out : arch.deep_layers) {
    DeepLayerParams layer{DenseMatrix(out, in), Vector(out, 0.0)};
    FillUniform(layer.w.values(), std::sqrt(6.0 / static_cast<double>(in)), rng);
    p.deep.push_back(std::move(layer));
    in = out;
  }
  const std::size_t pd = arch.prediction_dim();
  p.prediction.w.assign(pd, 0.0);
  FillUniform(p.prediction.w, 1.0 / std::sqrt(static_cast<double>(pd)), rng);
  p.prediction.b = 0.0;
  return p;
}

void SetZero(DcnParams& params) {
  ForEachTensor(params, [](const std::string&, ParamGroup, std::span<double> t) {
    std::fill(t.begin(), t.end(), 0.0);
  });
}

DcnParams ZerosLike(const DcnParams& params) {
  DcnParams z = params;
  SetZero(z);
  return z;
}

void CheckSameShape(const DcnParams& a, const DcnParams& b) {
  std::vector<std::size_t> sa, sb;
  ForEachTensor(a, [&](const std::string&, ParamGroup, std::span<const double> t) {
    sa.push_back(t.size());
  });
  ForEachTensor(b, [&](const std::string&, ParamGroup, std::span<const double> t) {
    sb.push_back(t.size());
  });
  if (sa != sb || !(a.arch == b.arch)) {
    Fail(ErrorKind::kShape, "parameter banks have different shapes");
  }
}

void EmbedField(const DenseMatrix& table, std::span<const std::uint32_t> indices,
                std::span<double> out) {
  std::fill(out.begin(), out.end(), 0.0);
  if (indices.empty()) Fail(ErrorKind::kInternal, "field with no active index");
  for (std::uint32_t idx : indices) {
    if (idx >= table.rows()) {
      Fail(ErrorKind::kInternal, "embedding index " + std::to_string(idx) +
                                     " out of range for table with " +
                                     std::to_string(table.rows()) + " rows");
    }
    auto row = table.row(idx);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += row[j];
  }
  if (indices.size() > 1) {
    const double inv = 1.0 / static_cast<double>(indices.size());
    for (double& v : out) v *= inv;
  }
}

Vector EmbedLookup(const EmbeddingTable& tables, const EncodedInstance& inst) {
  if (inst.fields.size() != tables.tables.size()) {
    Fail(ErrorKind::kInternal, "instance has " + std::to_string(inst.fields.size()) +
                                   " fields, embedding has " +
                                   std::to_string(tables.tables.size()));
  }
  const std::size_t k = tables.dim;
  Vector out(tables.tables.size() * k);
  for (std::size_t f = 0; f < tables.tables.size(); ++f) {
    EmbedField(tables.tables[f], inst.fields[f], std::span(out).subspan(f * k, k));
  }
  return out;
}

void AccumulateEmbeddingGrad(DenseMatrix& table_grad, std::span<const std::uint32_t> indices,
                             std::span<const double> grad, double weight) {
  const double scale = weight / static_cast<double>(indices.size());
  for (std::uint32_t idx : indices) {
    auto row = table_grad.row(idx);
    for (std::size_t j = 0; j < grad.size(); ++j) row[j] += scale * grad[j];
  }
}

namespace {

void CheckLen(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    Fail(ErrorKind::kShape, std::string(what) + " length " + std::to_string(got) +
                                " does not match " + std::to_string(want));
  }
}

}  // namespace

Vector CrossLayerForward(std::span<const double> x0, std::span<const double> xl,
                         std::span<const double> w, std::span<const double> b) {
  const std::size_t d = x0.size();
  CheckLen(xl.size(), d, "cross input");
  CheckLen(w.size(), d, "cross weight");
  CheckLen(b.size(), d, "cross bias");
  const double s = Dot(xl, w);
  Vector out(d);
  for (std::size_t i = 0; i < d; ++i) out[i] = x0[i] * s + b[i] + xl[i];
  return out;
}

void CrossLayerBackward(std::span<const double> x0, std::span<const double> xl,
                        std::span<const double> w, std::span<const double> g_out,
                        double weight, std::span<double> gw, std::span<double> gb,
                        std::span<double> g_xl, std::span<double> g_x0) {
  const std::size_t d = x0.size();
  const double s = Dot(xl, w);
  const double gs = Dot(g_out, x0);  // dL/d<xl, w>
  for (std::size_t i = 0; i < d; ++i) {
    if (!gw.empty()) gw[i] += weight * gs * xl[i];
    if (!gb.empty()) gb[i] += weight * g_out[i];
    g_xl[i] += g_out[i] + gs * w[i];
    g_x0[i] += g_out[i] * s;
  }
}

Vector DeepLayerForward(std::span<const double> h, const DenseMatrix& w,
                        std::span<const double> b) {
  return Relu(Affine(w, h, b));
}

void DeepLayerBackward(std::span<const double> h, std::span<const double> z,
                       const DenseMatrix& w, std::span<const double> g_out, double weight,
                       DenseMatrix* gw, std::span<double> gb, std::span<double> g_h) {
  for (std::size_t r = 0; r < w.rows(); ++r) {
    if (z[r] <= 0.0) continue;
    const double gz = g_out[r];
    if (gz == 0.0) continue;
    if (gw != nullptr) {
      auto gw_row = gw->row(r);
      const double scaled = weight * gz;
      for (std::size_t c = 0; c < h.size(); ++c) gw_row[c] += scaled * h[c];
    }
    if (!gb.empty()) gb[r] += weight * gz;
    auto w_row = w.row(r);
    for (std::size_t c = 0; c < h.size(); ++c) g_h[c] += gz * w_row[c];
  }
}

double Predict(std::span<const double> x_cross, std::span<const double> h_deep,
               const PredictionParams& p) {
  CheckLen(x_cross.size() + h_deep.size(), p.w.size(), "prediction input");
  const double logit = Dot(std::span(p.w).first(x_cross.size()), x_cross) +
                       Dot(std::span(p.w).subspan(x_cross.size()), h_deep) + p.b;
  return Sigmoid(logit);
}

double CrossEntropy(int y, double yhat) {
  const double p = std::clamp(yhat, kProbClamp, 1.0 - kProbClamp);
  return y ? -std::log(p) : -std::log(1.0 - p);
}

double L2Penalty(const DcnParams& params, L2Scope scope) {
  double total = 0.0;
  ForEachTensor(params, [&](const std::string&, ParamGroup g, std::span<const double> t) {
    if (!InL2Scope(g, scope)) return;
    for (double v : t) total += v * v;
  });
  return total;
}

double Loss(int y, double yhat, double lambda, const DcnParams& params, L2Scope scope) {
  double loss = CrossEntropy(y, yhat);
  if (lambda != 0.0) loss += lambda * L2Penalty(params, scope);
  return loss;
}

void AddL2Gradient(const DcnParams& params, double lambda, L2Scope scope, double weight,
                   DcnParams& grads) {
  if (lambda == 0.0) return;
  std::vector<std::span<const double>> src;
  ForEachTensor(params, [&](const std::string&, ParamGroup, std::span<const double> t) {
    src.push_back(t);
  });
  std::size_t i = 0;
  ForEachTensor(grads, [&](const std::string&, ParamGroup g, std::span<double> t) {
    const auto s = src[i++];
    if (!InL2Scope(g, scope)) return;
    for (std::size_t j = 0; j < t.size(); ++j) t[j] += weight * 2.0 * lambda * s[j];
  });
}

double Forward(const EncodedInstance& inst, const DcnParams& params, ForwardTape& tape) {
  const ArchConfig& arch = params.arch;
  Vector x0 = EmbedLookup(params.embedding, inst);
  tape.cross.clear();
  tape.deep.clear();
  tape.deep_pre.clear();
  if (arch.backbone == Backbone::kDcn) {
    tape.cross.push_back(x0);
    for (const auto& layer : params.cross) {
      tape.cross.push_back(CrossLayerForward(x0, tape.cross.back(), layer.w, layer.b));
    }
  }
  tape.deep.push_back(std::move(x0));
  for (const auto& layer : params.deep) {
    Vector z = Affine(layer.w, tape.deep.back(), layer.b);
    tape.deep.push_back(Relu(z));
    tape.deep_pre.push_back(std::move(z));
  }
  tape.concat.clear();
  if (arch.backbone == Backbone::kDcn) {
    tape.concat.insert(tape.concat.end(), tape.cross.back().begin(), tape.cross.back().end());
  }
  tape.concat.insert(tape.concat.end(), tape.deep.back().begin(), tape.deep.back().end());
  CheckLen(tape.concat.size(), params.prediction.w.size(), "prediction input");
  tape.logit = Dot(params.prediction.w, tape.concat) + params.prediction.b;
  tape.yhat = Sigmoid(tape.logit);
  return tape.yhat;
}

double Forward(const EncodedInstance& inst, const DcnParams& params) {
  ForwardTape tape;
  return Forward(inst, params, tape);
}

void Backward(const EncodedInstance& inst, const DcnParams& params, const ForwardTape& tape,
              int y, double lambda, DcnParams& grads, double weight, L2Scope scope) {
  const ArchConfig& arch = params.arch;
  const std::size_t d = arch.input_dim();
  const std::size_t k = arch.embedding_dim;
  // d(cross entropy)/d(logit) for the unclamped sigmoid output.
  const double g_logit = tape.yhat - static_cast<double>(y);

  for (std::size_t i = 0; i < tape.concat.size(); ++i) {
    grads.prediction.w[i] += weight * g_logit * tape.concat[i];
  }
  grads.prediction.b += weight * g_logit;

  const std::size_t cross_len = arch.backbone == Backbone::kDcn ? d : 0;
  Vector g_x0(d, 0.0);

  // Deep tower, top down.
  Vector g_h(params.prediction.w.begin() + static_cast<std::ptrdiff_t>(cross_len),
             params.prediction.w.end());
  for (double& v : g_h) v *= g_logit;
  for (std::size_t l = params.deep.size(); l-- > 0;) {
    Vector g_below(tape.deep[l].size(), 0.0);
    DeepLayerBackward(tape.deep[l], tape.deep_pre[l], params.deep[l].w, g_h, weight,
                      &grads.deep[l].w, grads.deep[l].b, g_below);
    g_h = std::move(g_below);
  }
  for (std::size_t i = 0; i < d; ++i) g_x0[i] += g_h[i];

  // Cross tower, top down.
  if (cross_len > 0) {
    Vector g_x(params.prediction.w.begin(),
               params.prediction.w.begin() + static_cast<std::ptrdiff_t>(cross_len));
    for (double& v : g_x) v *= g_logit;
    const Vector& x0 = tape.cross[0];
    for (std::size_t l = params.cross.size(); l-- > 0;) {
      Vector g_below(d, 0.0);
      CrossLayerBackward(x0, tape.cross[l], params.cross[l].w, g_x, weight, grads.cross[l].w,
                         grads.cross[l].b, g_below, g_x0);
      g_x = std::move(g_below);
    }
    for (std::size_t i = 0; i < d; ++i) g_x0[i] += g_x[i];
  }

  for (std::size_t f = 0; f < inst.fields.size(); ++f) {
    AccumulateEmbeddingGrad(grads.embedding.tables[f], inst.fields[f],
                            std::span(g_x0).subspan(f * k, k), weight);
  }
  AddL2Gradient(params, lambda, scope, weight, grads);
}

DcnParams Backward(const EncodedInstance& inst, const DcnParams& params, const ForwardTape& tape,
                   int y, double lambda, L2Scope scope) {
  DcnParams grads = ZerosLike(params);
  Backward(inst, params, tape, y, lambda, grads, 1.0, scope);
  return grads;
}

}  // namespace autoft
