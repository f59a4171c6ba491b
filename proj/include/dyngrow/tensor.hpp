// Copyright 2026 The dyngrow Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DYNGROW_TENSOR_HPP_
#define DYNGROW_TENSOR_HPP_

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <vector>

namespace dyngrow {

using Rng = std::mt19937_64;

// Dense row-major matrix of doubles. Signals flowing through a model are
// stored feature-major: one column per sample.
class Matrix {
 public:
  // Unset 0x0 matrix; only useful as a placeholder before assignment.
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  static Matrix identity(std::size_t n);
  // Column vector from values.
  static Matrix column(std::span<const double> values);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return values_.size(); }
  bool empty() const { return values_.empty(); }

  double& operator()(std::size_t r, std::size_t c) { return values_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return values_[r * cols_ + c]; }

  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }
  std::span<double> values() { return values_; }
  std::span<const double> values() const { return values_; }

  Matrix transposed() const;
  void fill(double v);
  // this += scale * other
  void add_scaled(const Matrix& other, double scale);
  bool all_finite() const;

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

// Process-wide allocator setting for long training runs: keeps large batch
// buffers on the heap so each mini-batch does not map and fault in fresh
// pages. No-op outside glibc. Call once from main().
void tune_allocator();

Matrix matmul(const Matrix& a, const Matrix& b);
// a^T * b
Matrix matmul_at(const Matrix& a, const Matrix& b);
// a * b^T
Matrix matmul_bt(const Matrix& a, const Matrix& b);
// Adds bias (rows x 1) to every column of m.
void add_column_bias(Matrix& m, const Matrix& bias);
// Sum of each row, as a rows x 1 matrix.
Matrix row_sums(const Matrix& m);

// Channel-height-width shape of one sample. Dense signals use (n, 1, 1).
struct Shape {
  std::size_t channels = 1;
  std::size_t height = 1;
  std::size_t width = 1;

  std::size_t size() const { return channels * height * width; }
  bool is_flat() const { return height == 1 && width == 1; }
  friend bool operator==(const Shape&, const Shape&) = default;
};

// NCHW image batch.
class ImageBatch {
 public:
  ImageBatch() = default;
  ImageBatch(std::size_t batch, Shape shape, double fill = 0.0);
  ImageBatch(std::size_t batch, Shape shape, std::vector<double> values);

  std::size_t batch() const { return batch_; }
  const Shape& shape() const { return shape_; }
  std::size_t channels() const { return shape_.channels; }
  std::size_t height() const { return shape_.height; }
  std::size_t width() const { return shape_.width; }

  double& at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) {
    return values_[((n * shape_.channels + c) * shape_.height + h) * shape_.width + w];
  }
  double at(std::size_t n, std::size_t c, std::size_t h, std::size_t w) const {
    return values_[((n * shape_.channels + c) * shape_.height + h) * shape_.width + w];
  }
  std::span<const double> sample(std::size_t n) const {
    return std::span<const double>(values_).subspan(n * shape_.size(), shape_.size());
  }
  std::span<double> sample(std::size_t n) {
    return std::span<double>(values_).subspan(n * shape_.size(), shape_.size());
  }
  std::span<const double> values() const { return values_; }

  // Gathers the listed samples into a feature-major matrix (one column each,
  // row-major CHW flattening).
  Matrix gather_columns(std::span<const std::size_t> indices) const;

 private:
  std::size_t batch_ = 0;
  Shape shape_;
  std::vector<double> values_;
};

enum class Activation { ReLU, Softmax, Linear };

std::string_view to_string(Activation a);

Matrix apply_activation(Activation kind, const Matrix& z);

enum class InitScheme { RandomScaled, Zero, Identity };

std::string_view to_string(InitScheme s);

// Weight matrix in (fan_out x fan_in) layout. RandomScaled draws
// N(0, 2 / cols), so the scale follows the number of inputs feeding each unit.
Matrix init_weights(InitScheme scheme, std::size_t rows, std::size_t cols, Rng& rng);

// 0/1 matrix with Q(i, j) = 1 iff i == floor(j * rows / cols). Right-multiplying
// a length-rows row vector by it yields a length-cols vector.
Matrix quasi_identity(std::size_t rows, std::size_t cols);

// Row index picked for every output position of quasi_identity(from, to).
std::vector<std::size_t> quasi_identity_index(std::size_t from, std::size_t to);

// Resizes the feature dimension of a feature-major signal. Equivalent to
// multiplying every column by quasi_identity(signal.rows(), width).
Matrix project(const Matrix& signal, std::size_t width);

// Adjoint of project(): scatters a gradient of `grad.rows()` features back onto
// `width` source features.
Matrix project_adjoint(const Matrix& grad, std::size_t width);

// 3x3, stride-1, zero-padded ("same") patch lowering. `input` holds one sample
// per column in CHW order; the result has shape.channels * 9 rows and one
// column per (sample, pixel), sample-major.
Matrix im2col_3x3(const Matrix& input, const Shape& shape);

// Adjoint of im2col_3x3.
Matrix col2im_3x3(const Matrix& patches, const Shape& shape, std::size_t batch);

}  // namespace dyngrow

#endif  // DYNGROW_TENSOR_HPP_
