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

#include "autoft/autoft_policy.hpp"

#include <algorithm>
#include <cmath>

#include "autoft/error.hpp"

namespace autoft {

PolicyNetwork InitPolicyNetwork(std::size_t input_dim, std::size_t decision_count,
                                const PolicyConfig& config, SeededRng& rng) {
  PolicyNetwork net;
  net.decision_count = decision_count;
  net.output_relu = config.output_relu;
  if (decision_count == 0) return net;
  if (input_dim == 0 || config.hidden == 0) {
    Fail(ErrorKind::kConfig, "policy network needs positive input and hidden sizes");
  }
  net.w1 = DenseMatrix(config.hidden, input_dim);
  net.b1.assign(config.hidden, 0.0);
  net.w2 = DenseMatrix(2 * decision_count, config.hidden);
  net.b2.assign(2 * decision_count, 0.0);
  const double s1 = config.init_scale / std::sqrt(static_cast<double>(input_dim));
  const double s2 = config.init_scale / std::sqrt(static_cast<double>(config.hidden));
  for (double& v : net.w1.values()) v = rng.NextUniform(-s1, s1);
  for (double& v : net.w2.values()) v = rng.NextUniform(-s2, s2);
  for (std::size_t u = 0; u < decision_count; ++u) net.b2[2 * u] = config.pretrained_bias;
  return net;
}

PolicyNetwork& PolicySet::get(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kEmbed: return embed;
    case PolicyKind::kCross: return cross;
    case PolicyKind::kDeep: return deep;
  }
  return deep;
}

const PolicyNetwork& PolicySet::get(PolicyKind kind) const {
  return const_cast<PolicySet*>(this)->get(kind);
}

bool PolicyMask::enabled(PolicyKind kind) const {
  switch (kind) {
    case PolicyKind::kEmbed: return embed;
    case PolicyKind::kCross: return cross;
    case PolicyKind::kDeep: return deep;
  }
  return false;
}

RouteSlice& RouteDecision::get(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kEmbed: return embed;
    case PolicyKind::kCross: return cross;
    case PolicyKind::kDeep: return deep;
  }
  return deep;
}

const RouteSlice& RouteDecision::get(PolicyKind kind) const {
  return const_cast<RouteDecision*>(this)->get(kind);
}

AutoftModel MakeAutoftModel(const DcnParams& pretrained, const PolicyConfig& config,
                            const PolicyMask& mask, SeededRng& rng) {
  AutoftModel model;
  model.source = pretrained;
  model.target = pretrained;
  model.mask = mask;
  model.policy_config = config;
  const ArchConfig& arch = pretrained.arch;
  const std::size_t d = arch.input_dim();
  model.policies.embed = InitPolicyNetwork(d, arch.num_fields(), config, rng);
  model.policies.cross = InitPolicyNetwork(d, arch.num_cross(), config, rng);
  model.policies.deep = InitPolicyNetwork(d, arch.deep_layers.size(), config, rng);
  return model;
}

GumbelNoise DrawNoise(const ArchConfig& arch, SeededRng& rng) {
  GumbelNoise noise;
  noise.embed.resize(2 * arch.num_fields());
  noise.cross.resize(2 * arch.num_cross());
  noise.deep.resize(2 * arch.deep_layers.size());
  for (double& g : noise.embed) g = SampleGumbel(rng);
  for (double& g : noise.cross) g = SampleGumbel(rng);
  for (double& g : noise.deep) g = SampleGumbel(rng);
  return noise;
}

PolicyOutput PolicyLogits(const PolicyNetwork& net, std::span<const double> input) {
  PolicyOutput out;
  if (net.empty()) return out;
  if (input.size() != net.input_dim()) {
    Fail(ErrorKind::kShape, "policy input length " + std::to_string(input.size()) +
                                " does not match " + std::to_string(net.input_dim()));
  }
  out.hidden_pre = Affine(net.w1, input, net.b1);
  const Vector hidden = Relu(out.hidden_pre);
  out.out_pre = Affine(net.w2, hidden, net.b2);
  out.logits = net.output_relu ? Relu(out.out_pre) : out.out_pre;
  return out;
}

double RelaxedPretrainedWeight(double logit_pre, double logit_fine, double g_pre, double g_fine,
                               double tau) {
  // log alpha_i = logit_i - logsumexp(logits); the shared constant cancels
  // inside the two-way softmax.
  return Sigmoid(((logit_pre + g_pre) - (logit_fine + g_fine)) / tau);
}

RouteSlice PolicyForward(const PolicyNetwork& net, std::span<const double> input, double tau,
                         std::span<const double> noise, RouteMode mode) {
  if (!(tau > 0.0)) {
    Fail(ErrorKind::kParameter, "temperature must be positive, got " + std::to_string(tau));
  }
  RouteSlice slice;
  PolicyOutput out = PolicyLogits(net, input);
  const std::size_t n = net.decision_count;
  slice.hard.resize(n);
  slice.soft.resize(n);
  slice.mix.resize(n);
  slice.grad_mix.resize(n);
  if (mode != RouteMode::kInfer && noise.size() != 2 * n) {
    Fail(ErrorKind::kShape, "expected " + std::to_string(2 * n) + " Gumbel samples, got " +
                                std::to_string(noise.size()));
  }
  for (std::size_t u = 0; u < n; ++u) {
    const double l0 = out.logits[2 * u];
    const double l1 = out.logits[2 * u + 1];
    if (mode == RouteMode::kInfer) {
      slice.hard[u] = l0 >= l1 ? 1 : 0;
      slice.soft[u] = Sigmoid(l0 - l1);
      slice.mix[u] = slice.grad_mix[u] = slice.hard[u];
      continue;
    }
    const double g0 = noise[2 * u];
    const double g1 = noise[2 * u + 1];
    slice.hard[u] = (l0 + g0) >= (l1 + g1) ? 1 : 0;
    slice.soft[u] = RelaxedPretrainedWeight(l0, l1, g0, g1, tau);
    slice.grad_mix[u] = slice.soft[u];
    slice.mix[u] = mode == RouteMode::kTrain ? slice.hard[u] : slice.soft[u];
  }
  if (mode != RouteMode::kInfer) slice.noise.assign(noise.begin(), noise.end());
  slice.logits = std::move(out.logits);
  slice.hidden_pre = std::move(out.hidden_pre);
  slice.out_pre = std::move(out.out_pre);
  return slice;
}

RouteSlice PolicyForward(const PolicyNetwork& net, std::span<const double> input, double tau,
                         SeededRng& rng, RouteMode mode) {
  Vector noise;
  if (mode != RouteMode::kInfer) {
    noise.resize(2 * net.decision_count);
    for (double& g : noise) g = SampleGumbel(rng);
  }
  return PolicyForward(net, input, tau, noise, mode);
}

Vector MixFieldEmbeddings(std::span<const double> p_e, const EmbeddingTable& src,
                          const EmbeddingTable& tgt, const EncodedInstance& inst) {
  if (p_e.size() != inst.fields.size() || src.tables.size() != tgt.tables.size() ||
      src.dim != tgt.dim) {
    Fail(ErrorKind::kShape, "field mixing shape mismatch");
  }
  const Vector xs = EmbedLookup(src, inst);
  const Vector xt = EmbedLookup(tgt, inst);
  const std::size_t k = src.dim;
  Vector out(xs.size());
  for (std::size_t f = 0; f < p_e.size(); ++f) {
    for (std::size_t j = f * k; j < (f + 1) * k; ++j) {
      out[j] = p_e[f] * xs[j] + (1.0 - p_e[f]) * xt[j];
    }
  }
  return out;
}

Vector RoutedCrossForward(std::span<const double> x0, std::span<const double> xl, double p,
                          const CrossLayerParams& src, const CrossLayerParams& tgt) {
  const Vector a = CrossLayerForward(x0, xl, src.w, src.b);
  const Vector b = CrossLayerForward(x0, xl, tgt.w, tgt.b);
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = p * a[i] + (1.0 - p) * b[i];
  return out;
}

Vector RoutedDeepForward(std::span<const double> hl, double p, const DeepLayerParams& src,
                         const DeepLayerParams& tgt) {
  const Vector a = DeepLayerForward(hl, src.w, src.b);
  const Vector b = DeepLayerForward(hl, tgt.w, tgt.b);
  if (a.size() != b.size()) Fail(ErrorKind::kShape, "deep branches differ in width");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = p * a[i] + (1.0 - p) * b[i];
  return out;
}

namespace {

RouteSlice ForcedSlice(std::span<const double> values, std::size_t expected, const char* what) {
  if (values.size() != expected) {
    Fail(ErrorKind::kShape, std::string("forced ") + what + " route has " +
                                std::to_string(values.size()) + " entries, expected " +
                                std::to_string(expected));
  }
  RouteSlice slice;
  slice.forced = true;
  slice.mix.assign(values.begin(), values.end());
  slice.grad_mix = slice.mix;
  slice.soft = slice.mix;
  for (double v : values) slice.hard.push_back(v >= 0.5 ? 1 : 0);
  return slice;
}

RouteSlice DecideSlice(const AutoftModel& model, PolicyKind kind, const std::optional<Vector>& forced,
                       std::size_t units, std::span<const double> input,
                       const AutoftOptions& options, std::span<const double> noise,
                       const char* what) {
  if (forced) return ForcedSlice(*forced, units, what);
  if (!model.mask.enabled(kind) || units == 0) {
    return ForcedSlice(Vector(units, 0.0), units, what);
  }
  return PolicyForward(model.policies.get(kind), input, options.tau, noise, options.mode);
}

// A branch is evaluated when it carries forward weight or when its output is
// needed for the routing gradient.
bool NeedBranch(const RouteSlice& slice, std::size_t unit, bool pretrained, RouteMode mode) {
  const double w = pretrained ? slice.mix[unit] : 1.0 - slice.mix[unit];
  const double gw = pretrained ? slice.grad_mix[unit] : 1.0 - slice.grad_mix[unit];
  if (w != 0.0 || gw != 0.0) return true;
  return !slice.forced && mode != RouteMode::kInfer;
}

}  // namespace

double AutoftForward(const EncodedInstance& inst, const AutoftModel& model,
                     const AutoftOptions& options, const GumbelNoise& noise, AutoftTape& tape) {
  const ArchConfig& arch = model.target.arch;
  const std::size_t m = arch.num_fields();
  const std::size_t k = arch.embedding_dim;
  const std::size_t d = arch.input_dim();
  const std::size_t lc = arch.num_cross();
  const std::size_t ld = arch.deep_layers.size();
  if (!(options.tau > 0.0)) {
    Fail(ErrorKind::kParameter, "temperature must be positive, got " + std::to_string(options.tau));
  }
  tape.tau = options.tau;
  tape.mode = options.mode;

  tape.x_source = EmbedLookup(model.source.embedding, inst);
  tape.x_target = EmbedLookup(model.target.embedding, inst);

  RouteDecision& route = tape.route;
  route.embed = DecideSlice(model, PolicyKind::kEmbed, options.override_route.embed, m,
                            tape.x_source, options, noise.embed, "embedding");
  tape.x_hat.assign(d, 0.0);
  for (std::size_t f = 0; f < m; ++f) {
    const double p = route.embed.mix[f];
    for (std::size_t j = f * k; j < (f + 1) * k; ++j) {
      tape.x_hat[j] = p * tape.x_source[j] + (1.0 - p) * tape.x_target[j];
    }
  }
  route.cross = DecideSlice(model, PolicyKind::kCross, options.override_route.cross, lc,
                            tape.x_hat, options, noise.cross, "cross");
  route.deep = DecideSlice(model, PolicyKind::kDeep, options.override_route.deep, ld, tape.x_hat,
                           options, noise.deep, "deep");

  tape.cross.assign(1, tape.x_hat);
  tape.cross_src.assign(lc, Vector());
  tape.cross_tgt.assign(lc, Vector());
  const Vector& x0 = tape.x_hat;
  for (std::size_t l = 0; l < lc; ++l) {
    const Vector& xl = tape.cross[l];
    const double p = route.cross.mix[l];
    if (NeedBranch(route.cross, l, true, options.mode)) {
      tape.cross_src[l] = CrossLayerForward(x0, xl, model.source.cross[l].w, model.source.cross[l].b);
    }
    if (NeedBranch(route.cross, l, false, options.mode)) {
      tape.cross_tgt[l] = CrossLayerForward(x0, xl, model.target.cross[l].w, model.target.cross[l].b);
    }
    Vector next(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      if (p != 0.0) next[i] += p * tape.cross_src[l][i];
      if (p != 1.0) next[i] += (1.0 - p) * tape.cross_tgt[l][i];
    }
    tape.cross.push_back(std::move(next));
  }

  tape.deep.assign(1, tape.x_hat);
  tape.deep_src_pre.assign(ld, Vector());
  tape.deep_tgt_pre.assign(ld, Vector());
  for (std::size_t l = 0; l < ld; ++l) {
    const Vector& hl = tape.deep[l];
    const double p = route.deep.mix[l];
    if (NeedBranch(route.deep, l, true, options.mode)) {
      tape.deep_src_pre[l] = Affine(model.source.deep[l].w, hl, model.source.deep[l].b);
    }
    if (NeedBranch(route.deep, l, false, options.mode)) {
      tape.deep_tgt_pre[l] = Affine(model.target.deep[l].w, hl, model.target.deep[l].b);
    }
    Vector next(arch.deep_layers[l], 0.0);
    for (std::size_t i = 0; i < next.size(); ++i) {
      if (p != 0.0) next[i] += p * std::max(0.0, tape.deep_src_pre[l][i]);
      if (p != 1.0) next[i] += (1.0 - p) * std::max(0.0, tape.deep_tgt_pre[l][i]);
    }
    tape.deep.push_back(std::move(next));
  }

  tape.concat.clear();
  if (arch.backbone == Backbone::kDcn) {
    tape.concat.insert(tape.concat.end(), tape.cross.back().begin(), tape.cross.back().end());
  }
  tape.concat.insert(tape.concat.end(), tape.deep.back().begin(), tape.deep.back().end());
  tape.logit = Dot(model.target.prediction.w, tape.concat) + model.target.prediction.b;
  tape.yhat = Sigmoid(tape.logit);
  return tape.yhat;
}

double AutoftForward(const EncodedInstance& inst, const AutoftModel& model,
                     const AutoftOptions& options, SeededRng& rng, AutoftTape& tape) {
  GumbelNoise noise;
  if (options.mode != RouteMode::kInfer) noise = DrawNoise(model.target.arch, rng);
  return AutoftForward(inst, model, options, noise, tape);
}

namespace {

PolicyNetwork ZeroPolicy(const PolicyNetwork& net) {
  PolicyNetwork z = net;
  for (double& v : z.w1.values()) v = 0.0;
  std::fill(z.b1.begin(), z.b1.end(), 0.0);
  for (double& v : z.w2.values()) v = 0.0;
  std::fill(z.b2.begin(), z.b2.end(), 0.0);
  return z;
}

// Back-propagates dL/dp (one value per unit) through the relaxation and the
// policy network. Adds dL/d(input) into g_input when it is non-empty.
void PolicyBackward(const PolicyNetwork& net, std::span<const double> input,
                    const RouteSlice& slice, std::span<const double> g_route, double tau,
                    double weight, PolicyNetwork& grads, std::span<double> g_input) {
  const std::size_t n = net.decision_count;
  Vector g_out(2 * n, 0.0);
  bool any = false;
  for (std::size_t u = 0; u < n; ++u) {
    const double y0 = slice.soft[u];
    // dY_0/dlogit_0 = Y_0 Y_1 / tau = -dY_0/dlogit_1.
    const double jac = y0 * (1.0 - y0) / tau;
    g_out[2 * u] = g_route[u] * jac;
    g_out[2 * u + 1] = -g_route[u] * jac;
    if (net.output_relu) {
      if (slice.out_pre[2 * u] <= 0.0) g_out[2 * u] = 0.0;
      if (slice.out_pre[2 * u + 1] <= 0.0) g_out[2 * u + 1] = 0.0;
    }
    any = any || g_out[2 * u] != 0.0 || g_out[2 * u + 1] != 0.0;
  }
  if (!any) return;
  const Vector hidden = Relu(slice.hidden_pre);
  Vector g_hidden(hidden.size(), 0.0);
  for (std::size_t r = 0; r < g_out.size(); ++r) {
    const double g = g_out[r];
    if (g == 0.0) continue;
    auto gw = grads.w2.row(r);
    auto w = net.w2.row(r);
    for (std::size_t c = 0; c < hidden.size(); ++c) {
      gw[c] += weight * g * hidden[c];
      g_hidden[c] += g * w[c];
    }
    grads.b2[r] += weight * g;
  }
  for (std::size_t r = 0; r < hidden.size(); ++r) {
    if (slice.hidden_pre[r] <= 0.0) continue;
    const double g = g_hidden[r];
    if (g == 0.0) continue;
    auto gw = grads.w1.row(r);
    auto w = net.w1.row(r);
    for (std::size_t c = 0; c < input.size(); ++c) {
      gw[c] += weight * g * input[c];
      if (!g_input.empty()) g_input[c] += g * w[c];
    }
    grads.b1[r] += weight * g;
  }
}

void AddScaled(std::span<double> dst, std::span<const double> src, double scale) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
}

}  // namespace

AutoftGradients ZeroGradients(const AutoftModel& model) {
  AutoftGradients g;
  g.target = ZerosLike(model.target);
  g.policies.embed = ZeroPolicy(model.policies.embed);
  g.policies.cross = ZeroPolicy(model.policies.cross);
  g.policies.deep = ZeroPolicy(model.policies.deep);
  return g;
}

void SetZero(AutoftGradients& grads) {
  SetZero(grads.target);
  grads.policies.embed = ZeroPolicy(grads.policies.embed);
  grads.policies.cross = ZeroPolicy(grads.policies.cross);
  grads.policies.deep = ZeroPolicy(grads.policies.deep);
}

void AutoftBackward(const EncodedInstance& inst, const AutoftModel& model,
                    const AutoftTape& tape, int y, AutoftGradients& grads, double weight) {
  const ArchConfig& arch = model.target.arch;
  const std::size_t m = arch.num_fields();
  const std::size_t k = arch.embedding_dim;
  const std::size_t d = arch.input_dim();
  const std::size_t lc = arch.num_cross();
  const std::size_t ld = arch.deep_layers.size();
  const RouteDecision& route = tape.route;
  if (tape.mode == RouteMode::kInfer) {
    Fail(ErrorKind::kInternal, "backward pass needs a Train or Soft mode tape");
  }

  const double g_logit = tape.yhat - static_cast<double>(y);
  AddScaled(grads.target.prediction.w, tape.concat, weight * g_logit);
  grads.target.prediction.b += weight * g_logit;

  const std::size_t cross_len = arch.backbone == Backbone::kDcn ? d : 0;
  const auto& wo = model.target.prediction.w;
  Vector g_xhat(d, 0.0);

  // Deep tower.
  Vector g_route_deep(ld, 0.0);
  Vector g(wo.begin() + static_cast<std::ptrdiff_t>(cross_len), wo.end());
  for (double& v : g) v *= g_logit;
  for (std::size_t l = ld; l-- > 0;) {
    const Vector& hl = tape.deep[l];
    const double c = route.deep.grad_mix[l];
    const Vector& zs = tape.deep_src_pre[l];
    const Vector& zt = tape.deep_tgt_pre[l];
    if (!route.deep.forced) {
      double s = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) {
        s += g[i] * (std::max(0.0, zs[i]) - std::max(0.0, zt[i]));
      }
      g_route_deep[l] = s;
    }
    Vector g_below(hl.size(), 0.0);
    Vector branch(g.size());
    if (c != 0.0) {
      for (std::size_t i = 0; i < g.size(); ++i) branch[i] = c * g[i];
      DeepLayerBackward(hl, zs, model.source.deep[l].w, branch, weight, nullptr, {}, g_below);
    }
    if (c != 1.0) {
      for (std::size_t i = 0; i < g.size(); ++i) branch[i] = (1.0 - c) * g[i];
      DeepLayerBackward(hl, zt, model.target.deep[l].w, branch, weight, &grads.target.deep[l].w,
                        grads.target.deep[l].b, g_below);
    }
    g = std::move(g_below);
  }
  AddScaled(g_xhat, g, 1.0);

  // Cross tower.
  Vector g_route_cross(lc, 0.0);
  if (cross_len > 0) {
    Vector gx(wo.begin(), wo.begin() + static_cast<std::ptrdiff_t>(cross_len));
    for (double& v : gx) v *= g_logit;
    const Vector& x0 = tape.cross[0];
    Vector branch(d);
    for (std::size_t l = lc; l-- > 0;) {
      const Vector& xl = tape.cross[l];
      const double c = route.cross.grad_mix[l];
      if (!route.cross.forced) {
        double s = 0.0;
        for (std::size_t i = 0; i < d; ++i) s += gx[i] * (tape.cross_src[l][i] - tape.cross_tgt[l][i]);
        g_route_cross[l] = s;
      }
      Vector g_below(d, 0.0);
      if (c != 0.0) {
        for (std::size_t i = 0; i < d; ++i) branch[i] = c * gx[i];
        CrossLayerBackward(x0, xl, model.source.cross[l].w, branch, weight, {}, {}, g_below,
                           g_xhat);
      }
      if (c != 1.0) {
        for (std::size_t i = 0; i < d; ++i) branch[i] = (1.0 - c) * gx[i];
        CrossLayerBackward(x0, xl, model.target.cross[l].w, branch, weight,
                           grads.target.cross[l].w, grads.target.cross[l].b, g_below, g_xhat);
      }
      gx = std::move(g_below);
    }
    AddScaled(g_xhat, gx, 1.0);
  }

  // Layer-wise policies read x_hat.
  if (!route.cross.forced && lc > 0) {
    PolicyBackward(model.policies.cross, tape.x_hat, route.cross, g_route_cross, tape.tau, weight,
                   grads.policies.cross, g_xhat);
  }
  if (!route.deep.forced && ld > 0) {
    PolicyBackward(model.policies.deep, tape.x_hat, route.deep, g_route_deep, tape.tau, weight,
                   grads.policies.deep, g_xhat);
  }

  // Field-wise mixing. The source bank is frozen, so only the fine-tuned
  // share of each field gradient reaches an embedding table.
  Vector g_route_embed(m, 0.0);
  Vector g_field(k);
  for (std::size_t f = 0; f < m; ++f) {
    const double c = route.embed.grad_mix[f];
    double s = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      const std::size_t idx = f * k + j;
      s += g_xhat[idx] * (tape.x_source[idx] - tape.x_target[idx]);
      g_field[j] = (1.0 - c) * g_xhat[idx];
    }
    g_route_embed[f] = s;
    if (c != 1.0) {
      AccumulateEmbeddingGrad(grads.target.embedding.tables[f], inst.fields[f], g_field, weight);
    }
  }
  if (!route.embed.forced && m > 0) {
    PolicyBackward(model.policies.embed, tape.x_source, route.embed, g_route_embed, tape.tau,
                   weight, grads.policies.embed, {});
  }
}

double AutoftPenalty(const AutoftModel& model, const AutoftRegularization& reg) {
  double total = L2Penalty(model.target, reg.scope);
  if (reg.include_policies) {
    ForEachPolicyTensor(model.policies, model.mask,
                        [&](const std::string&, ParamGroup g, std::span<const double> t) {
                          if (!InL2Scope(g, reg.scope)) return;
                          for (double v : t) total += v * v;
                        });
  }
  return total;
}

double AutoftLoss(int y, double yhat, const AutoftModel& model, const AutoftRegularization& reg) {
  double loss = CrossEntropy(y, yhat);
  if (reg.lambda != 0.0) loss += reg.lambda * AutoftPenalty(model, reg);
  return loss;
}

void AddAutoftL2Gradient(const AutoftModel& model, const AutoftRegularization& reg, double weight,
                         AutoftGradients& grads) {
  if (reg.lambda == 0.0) return;
  AddL2Gradient(model.target, reg.lambda, reg.scope, weight, grads.target);
  if (!reg.include_policies) return;
  std::vector<std::span<const double>> src;
  ForEachPolicyTensor(model.policies, model.mask,
                      [&](const std::string&, ParamGroup, std::span<const double> t) {
                        src.push_back(t);
                      });
  std::size_t i = 0;
  ForEachPolicyTensor(grads.policies, model.mask,
                      [&](const std::string&, ParamGroup g, std::span<double> t) {
                        const auto s = src[i++];
                        if (!InL2Scope(g, reg.scope)) return;
                        for (std::size_t j = 0; j < t.size(); ++j) {
                          t[j] += weight * 2.0 * reg.lambda * s[j];
                        }
                      });
}

namespace {

const char* PolicyName(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::kEmbed: return "embed";
    case PolicyKind::kCross: return "cross";
    case PolicyKind::kDeep: return "deep";
  }
  return "?";
}

constexpr PolicyKind kAllKinds[] = {PolicyKind::kEmbed, PolicyKind::kCross, PolicyKind::kDeep};

}  // namespace

std::string SerializeAutoftCheckpoint(const AutoftModel& model, std::uint64_t vocab_hash) {
  TensorArchive archive;
  archive.header["kind"] = "autoft";
  archive.header["arch"] = ArchToJson(model.target.arch);
  archive.header["vocab_hash"] = HexU64(vocab_hash);
  archive.header["policy"] = {
      {"hidden", model.policy_config.hidden},
      {"output_relu", model.policy_config.output_relu},
      {"pretrained_bias", model.policy_config.pretrained_bias},
      {"init_scale", model.policy_config.init_scale},
  };
  archive.header["mask"] = {
      {"embed", model.mask.embed}, {"cross", model.mask.cross}, {"deep", model.mask.deep}};
  AppendBank(model.source, "source/", archive);
  AppendBank(model.target, "target/", archive);
  for (PolicyKind kind : kAllKinds) {
    const PolicyNetwork& net = model.policies.get(kind);
    if (net.empty()) continue;
    const std::string base = std::string("policy/") + PolicyName(kind) + "/";
    archive.tensors.push_back({base + "w1", net.w1});
    archive.tensors.push_back({base + "b1", DenseMatrix(net.b1.size(), 1, net.b1)});
    archive.tensors.push_back({base + "w2", net.w2});
    archive.tensors.push_back({base + "b2", DenseMatrix(net.b2.size(), 1, net.b2)});
  }
  return SerializeArchive(archive);
}

AutoftModel DeserializeAutoftCheckpoint(const std::string& bytes, std::uint64_t* vocab_hash,
                                        const std::string& source) {
  TensorArchive archive = DeserializeArchive(bytes, source);
  if (archive.header.value("kind", "") != "autoft") {
    Fail(ErrorKind::kData, source + ": not an AutoFT checkpoint");
  }
  AutoftModel model;
  const ArchConfig arch = ArchFromJson(archive.header.at("arch"));
  try {
    const auto& pc = archive.header.at("policy");
    model.policy_config.hidden = pc.at("hidden").get<std::size_t>();
    model.policy_config.output_relu = pc.at("output_relu").get<bool>();
    model.policy_config.pretrained_bias = pc.at("pretrained_bias").get<double>();
    model.policy_config.init_scale = pc.at("init_scale").get<double>();
    const auto& mk = archive.header.at("mask");
    model.mask = {mk.at("embed").get<bool>(), mk.at("cross").get<bool>(),
                  mk.at("deep").get<bool>()};
    if (vocab_hash) *vocab_hash = ParseHexU64(archive.header.at("vocab_hash").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    Fail(ErrorKind::kData, source + ": bad AutoFT header: " + e.what());
  }
  model.source = ReadBank(archive, arch, "source/");
  model.target = ReadBank(archive, arch, "target/");
  SeededRng rng(0);
  const std::size_t d = arch.input_dim();
  model.policies.embed = InitPolicyNetwork(d, arch.num_fields(), model.policy_config, rng);
  model.policies.cross = InitPolicyNetwork(d, arch.num_cross(), model.policy_config, rng);
  model.policies.deep = InitPolicyNetwork(d, arch.deep_layers.size(), model.policy_config, rng);
  for (PolicyKind kind : kAllKinds) {
    PolicyNetwork& net = model.policies.get(kind);
    if (net.empty()) continue;
    const std::string base = std::string("policy/") + PolicyName(kind) + "/";
    auto load = [&](const std::string& name, std::span<double> dst) {
      const DenseMatrix& src = archive.Get(base + name);
      if (src.size() != dst.size()) Fail(ErrorKind::kData, "policy tensor " + base + name + " has wrong size");
      std::copy(src.values().begin(), src.values().end(), dst.begin());
    };
    load("w1", net.w1.values());
    load("b1", net.b1);
    load("w2", net.w2.values());
    load("b2", net.b2);
  }
  return model;
}

}  // namespace autoft
