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

#include "autoft/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "autoft/error.hpp"

namespace autoft {

const char* ErrorKindName(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kShape: return "shape_error";
    case ErrorKind::kParameter: return "parameter_error";
    case ErrorKind::kSchema: return "schema_error";
    case ErrorKind::kData: return "data_error";
    case ErrorKind::kConfig: return "config_error";
    case ErrorKind::kVocabMismatch: return "vocab_mismatch_error";
    case ErrorKind::kMetricUndefined: return "metric_undefined_error";
    case ErrorKind::kEvaluation: return "evaluation_error";
    case ErrorKind::kIo: return "io_error";
    case ErrorKind::kInternal: return "internal_error";
  }
  return "unknown_error";
}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), values_(rows * cols, fill) {}

DenseMatrix::DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (values_.size() != rows_ * cols_) {
    std::ostringstream os;
    os << "matrix " << rows_ << "x" << cols_ << " needs " << rows_ * cols_
       << " values, got " << values_.size();
    Fail(ErrorKind::kShape, os.str());
  }
}

DenseMatrix DenseMatrix::Identity(std::size_t n) {
  DenseMatrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

std::string DenseMatrix::ShapeString() const {
  return std::to_string(rows_) + "x" + std::to_string(cols_);
}

DenseMatrix Matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    Fail(ErrorKind::kShape,
         "matmul shape mismatch: " + a.ShapeString() + " times " + b.ShapeString());
  }
  DenseMatrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto out_row = out.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      auto b_row = b.row(k);
      for (std::size_t j = 0; j < b.cols(); ++j) out_row[j] += aik * b_row[j];
    }
  }
  return out;
}

DenseMatrix Relu(const DenseMatrix& x) {
  DenseMatrix out = x;
  for (double& v : out.values()) v = std::max(0.0, v);
  return out;
}

Vector Relu(std::span<const double> x) {
  Vector out(x.begin(), x.end());
  for (double& v : out) v = std::max(0.0, v);
  return out;
}

Vector Affine(const DenseMatrix& w, std::span<const double> x, std::span<const double> b) {
  if (w.cols() != x.size() || w.rows() != b.size()) {
    Fail(ErrorKind::kShape, "affine shape mismatch: weight " + w.ShapeString() + ", input " +
                                std::to_string(x.size()) + ", bias " +
                                std::to_string(b.size()));
  }
  Vector out(b.begin(), b.end());
  for (std::size_t r = 0; r < w.rows(); ++r) out[r] += Dot(w.row(r), x);
  return out;
}

void AddTransposeProduct(const DenseMatrix& w, std::span<const double> g, std::span<double> y) {
  for (std::size_t r = 0; r < w.rows(); ++r) {
    const double gr = g[r];
    if (gr == 0.0) continue;
    auto wr = w.row(r);
    for (std::size_t c = 0; c < w.cols(); ++c) y[c] += gr * wr[c];
  }
}

double Dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    Fail(ErrorKind::kShape, "dot length mismatch: " + std::to_string(a.size()) + " vs " +
                                std::to_string(b.size()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double Sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Vector Softmax(std::span<const double> logits, double tau) {
  if (!(tau > 0.0)) {
    Fail(ErrorKind::kParameter, "softmax temperature must be positive, got " + std::to_string(tau));
  }
  Vector out(logits.size());
  if (logits.empty()) return out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double total = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp((logits[i] - mx) / tau);
    total += out[i];
  }
  for (double& v : out) v /= total;
  return out;
}

namespace {

std::uint64_t Mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

}  // namespace

SeededRng SeededRng::Substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = Mix64(seed + kGolden);
  s = Mix64(s ^ (a + 0x632be59bd9b4e019ULL));
  s = Mix64(s ^ (b + 0x85157af5ULL));
  return SeededRng(s);
}

std::uint64_t SeededRng::NextU64() {
  state_ += kGolden;
  return Mix64(state_);
}

double SeededRng::NextUniform() {
  return static_cast<double>(NextU64() >> 11) * 0x1.0p-53;
}

double SeededRng::NextUniform(double lo, double hi) { return lo + (hi - lo) * NextUniform(); }

std::uint64_t SeededRng::NextBelow(std::uint64_t n) {
  if (n == 0) Fail(ErrorKind::kParameter, "NextBelow requires n > 0");
  // Rejection sampling keeps the draw unbiased.
  const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                              std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t x;
  do {
    x = NextU64();
  } while (x >= limit);
  return x % n;
}

double SeededRng::NextNormal() {
  // Box-Muller, one value per call.
  const double u1 = std::clamp(NextUniform(), kUniformClamp, 1.0 - kUniformClamp);
  const double u2 = NextUniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double GumbelFromUniform(double u) {
  u = std::clamp(u, kUniformClamp, 1.0 - kUniformClamp);
  return -std::log(-std::log(u));
}

double SampleGumbel(SeededRng& rng) { return GumbelFromUniform(rng.NextUniform()); }

double FiniteDifferenceCheck(const std::function<double(std::span<const double>)>& f,
                             std::span<const double> point,
                             std::span<const double> analytic_grad, double h) {
  if (point.size() != analytic_grad.size()) {
    Fail(ErrorKind::kShape, "gradient length " + std::to_string(analytic_grad.size()) +
                                " does not match point length " + std::to_string(point.size()));
  }
  Vector x(point.begin(), point.end());
  double worst = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + h;
    const double up = f(x);
    x[i] = saved - h;
    const double down = f(x);
    x[i] = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      Fail(ErrorKind::kEvaluation,
           "non-finite function value at coordinate " + std::to_string(i));
    }
    const double fd = (up - down) / (2.0 * h);
    const double g = analytic_grad[i];
    const double denom = std::max({std::abs(fd), std::abs(g), 1e-8});
    worst = std::max(worst, std::abs(fd - g) / denom);
  }
  return worst;
}

void CheckFinite(std::span<const double> values, const char* what) {
  for (double v : values) {
    if (!std::isfinite(v)) Fail(ErrorKind::kEvaluation, std::string("non-finite value in ") + what);
  }
}

}  // namespace autoft
