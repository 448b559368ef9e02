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

// Dense linear algebra, activations, seeded sampling and a finite-difference
// gradient checker. Everything is 64-bit floating point.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace autoft {

using Vector = std::vector<double>;

// Row-major dense matrix. A column vector is stored as an n x 1 matrix.
class DenseMatrix {
 public:
  DenseMatrix() = default;
  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static DenseMatrix Identity(std::size_t n);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {values_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const {
    return {values_.data() + r * cols_, cols_};
  }

  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  std::string ShapeString() const;

  friend bool operator==(const DenseMatrix&, const DenseMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

DenseMatrix Matmul(const DenseMatrix& a, const DenseMatrix& b);
DenseMatrix Relu(const DenseMatrix& x);
Vector Relu(std::span<const double> x);

// y = w * x + b, where w is out x in.
Vector Affine(const DenseMatrix& w, std::span<const double> x, std::span<const double> b);
// y += w^T * g.
void AddTransposeProduct(const DenseMatrix& w, std::span<const double> g, std::span<double> y);

double Dot(std::span<const double> a, std::span<const double> b);

// Stable in both tails; finite for all finite x.
double Sigmoid(double x);

// exp(l_i / tau) / sum_j exp(l_j / tau), computed with max subtraction.
Vector Softmax(std::span<const double> logits, double tau = 1.0);

// SplitMix64 generator. The output sequence is fixed by the seed alone, so
// streams are reproducible across platforms and compilers.
class SeededRng {
 public:
  explicit SeededRng(std::uint64_t seed) : state_(seed) {}

  // Derives an independent stream from a parent seed and a tuple of counters
  // (for instance epoch and instance index).
  static SeededRng Substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

  std::uint64_t NextU64();
  // Uniform on [0, 1) with 53 random bits.
  double NextUniform();
  // Uniform on [lo, hi).
  double NextUniform(double lo, double hi);
  // Integer in [0, n).
  std::uint64_t NextBelow(std::uint64_t n);
  double NextNormal();

  std::uint64_t state() const { return state_; }

 private:
  std::uint64_t state_;
};

inline constexpr double kUniformClamp = 1e-12;

// Standard Gumbel sample from a given uniform draw; u is clamped into
// [1e-12, 1 - 1e-12] first.
double GumbelFromUniform(double u);
double SampleGumbel(SeededRng& rng);

inline constexpr double kEulerMascheroni = 0.57721566490153286;

// Central-difference check of an analytic gradient. Returns the max over
// coordinates of |fd - g| / max(|fd|, |g|, 1e-8).
double FiniteDifferenceCheck(const std::function<double(std::span<const double>)>& f,
                             std::span<const double> point,
                             std::span<const double> analytic_grad, double h = 1e-5);

void CheckFinite(std::span<const double> values, const char* what);

}  // namespace autoft
