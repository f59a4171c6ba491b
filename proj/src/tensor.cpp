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

#include "dyngrow/tensor.hpp"

#include <cblas.h>
#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dyngrow/errors.hpp"

namespace dyngrow {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("Matrix dimensions must be >= 1");
  }
  values_.assign(rows * cols, fill);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), values_(std::move(values)) {
  if (rows == 0 || cols == 0) {
    throw std::invalid_argument("Matrix dimensions must be >= 1");
  }
  if (values_.size() != rows * cols) {
    throw std::invalid_argument("Matrix value count " + std::to_string(values_.size()) +
                                " does not match " + std::to_string(rows) + "x" +
                                std::to_string(cols));
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::column(std::span<const double> values) {
  return Matrix(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

Matrix Matrix::transposed() const {
  Matrix t(cols_, rows_);
  for (std::size_t r = 0; r < rows_; ++r) {
    for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
  }
  return t;
}

void Matrix::fill(double v) { std::fill(values_.begin(), values_.end(), v); }

void Matrix::add_scaled(const Matrix& other, double scale) {
  if (other.rows_ != rows_ || other.cols_ != cols_) {
    throw NumericError("add_scaled: shape mismatch");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += scale * other.values_[i];
}

bool Matrix::all_finite() const {
  return std::all_of(values_.begin(), values_.end(), [](double v) { return std::isfinite(v); });
}

namespace {

void require(bool ok, const char* what) {
  if (!ok) throw NumericError(what);
}

// out = op(a) * op(b); k is the shared dimension. Row-major throughout.
void gemm(CBLAS_TRANSPOSE ta, CBLAS_TRANSPOSE tb, const Matrix& a, const Matrix& b, Matrix& out,
          std::size_t k) {
  if (out.empty()) return;
  if (k == 0) return;  // out is already zero
  cblas_dgemm(CblasRowMajor, ta, tb, static_cast<int>(out.rows()), static_cast<int>(out.cols()),
              static_cast<int>(k), 1.0, a.data(), static_cast<int>(a.cols()), b.data(),
              static_cast<int>(b.cols()), 0.0, out.data(), static_cast<int>(out.cols()));
}

}  // namespace

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 1 << 30);
  mallopt(M_TRIM_THRESHOLD, 1 << 30);
#endif
}

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul: inner dimensions differ");
  Matrix out(a.rows(), b.cols());
  gemm(CblasNoTrans, CblasNoTrans, a, b, out, a.cols());
  return out;
}

Matrix matmul_at(const Matrix& a, const Matrix& b) {
  require(a.rows() == b.rows(), "matmul_at: row counts differ");
  Matrix out(a.cols(), b.cols());
  gemm(CblasTrans, CblasNoTrans, a, b, out, a.rows());
  return out;
}

Matrix matmul_bt(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.cols(), "matmul_bt: column counts differ");
  Matrix out(a.rows(), b.rows());
  gemm(CblasNoTrans, CblasTrans, a, b, out, a.cols());
  return out;
}

void add_column_bias(Matrix& m, const Matrix& bias) {
  require(bias.rows() == m.rows() && bias.cols() == 1, "add_column_bias: shape mismatch");
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double b = bias(r, 0);
    double* row = m.data() + r * m.cols();
    for (std::size_t c = 0; c < m.cols(); ++c) row[c] += b;
  }
}

Matrix row_sums(const Matrix& m) {
  Matrix out(m.rows(), 1);
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const double* row = m.data() + r * m.cols();
    double s = 0.0;
    for (std::size_t c = 0; c < m.cols(); ++c) s += row[c];
    out(r, 0) = s;
  }
  return out;
}

ImageBatch::ImageBatch(std::size_t batch, Shape shape, double fill)
    : batch_(batch), shape_(shape), values_(batch * shape.size(), fill) {}

ImageBatch::ImageBatch(std::size_t batch, Shape shape, std::vector<double> values)
    : batch_(batch), shape_(shape), values_(std::move(values)) {
  if (values_.size() != batch * shape.size()) {
    throw std::invalid_argument("ImageBatch value count does not match its dimensions");
  }
}

Matrix ImageBatch::gather_columns(std::span<const std::size_t> indices) const {
  const std::size_t features = shape_.size();
  Matrix out(features, indices.size());
  for (std::size_t j = 0; j < indices.size(); ++j) {
    if (indices[j] >= batch_) throw std::out_of_range("ImageBatch sample index out of range");
    const double* src = values_.data() + indices[j] * features;
    for (std::size_t f = 0; f < features; ++f) out(f, j) = src[f];
  }
  return out;
}

std::string_view to_string(Activation a) {
  switch (a) {
    case Activation::ReLU: return "relu";
    case Activation::Softmax: return "softmax";
    case Activation::Linear: return "linear";
  }
  return "?";
}

Matrix apply_activation(Activation kind, const Matrix& z) {
  if (!z.all_finite()) throw NumericError("activation input is not finite");
  Matrix a = z;
  switch (kind) {
    case Activation::Linear:
      break;
    case Activation::ReLU:
      for (double& v : a.values()) v = v > 0.0 ? v : 0.0;
      break;
    case Activation::Softmax:
      for (std::size_t c = 0; c < a.cols(); ++c) {
        double peak = a(0, c);
        for (std::size_t r = 1; r < a.rows(); ++r) peak = std::max(peak, a(r, c));
        double total = 0.0;
        for (std::size_t r = 0; r < a.rows(); ++r) {
          a(r, c) = std::exp(a(r, c) - peak);
          total += a(r, c);
        }
        for (std::size_t r = 0; r < a.rows(); ++r) a(r, c) /= total;
      }
      break;
  }
  return a;
}

std::string_view to_string(InitScheme s) {
  switch (s) {
    case InitScheme::RandomScaled: return "random";
    case InitScheme::Zero: return "zero";
    case InitScheme::Identity: return "identity";
  }
  return "?";
}

Matrix init_weights(InitScheme scheme, std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("init_weights: zero dimension");
  switch (scheme) {
    case InitScheme::Zero:
      return Matrix(rows, cols);
    case InitScheme::Identity:
      if (rows != cols) {
        throw std::invalid_argument("identity init requires a square matrix, got " +
                                    std::to_string(rows) + "x" + std::to_string(cols));
      }
      return Matrix::identity(rows);
    case InitScheme::RandomScaled: {
      std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(cols)));
      Matrix m(rows, cols);
      for (double& v : m.values()) v = dist(rng);
      return m;
    }
  }
  throw std::invalid_argument("init_weights: unknown scheme");
}

Matrix quasi_identity(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0) throw std::invalid_argument("quasi_identity: zero dimension");
  Matrix q(rows, cols);
  const auto index = quasi_identity_index(rows, cols);
  for (std::size_t j = 0; j < cols; ++j) q(index[j], j) = 1.0;
  return q;
}

std::vector<std::size_t> quasi_identity_index(std::size_t from, std::size_t to) {
  if (from == 0 || to == 0) throw std::invalid_argument("quasi_identity: zero dimension");
  std::vector<std::size_t> index(to);
  for (std::size_t j = 0; j < to; ++j) index[j] = j * from / to;
  return index;
}

Matrix project(const Matrix& signal, std::size_t width) {
  if (signal.rows() == width) return signal;
  const auto index = quasi_identity_index(signal.rows(), width);
  Matrix out(width, signal.cols());
  for (std::size_t j = 0; j < width; ++j) {
    std::copy_n(signal.data() + index[j] * signal.cols(), signal.cols(),
                out.data() + j * signal.cols());
  }
  return out;
}

Matrix project_adjoint(const Matrix& grad, std::size_t width) {
  if (grad.rows() == width) return grad;
  const auto index = quasi_identity_index(width, grad.rows());
  Matrix out(width, grad.cols());
  for (std::size_t j = 0; j < grad.rows(); ++j) {
    const double* src = grad.data() + j * grad.cols();
    double* dst = out.data() + index[j] * grad.cols();
    for (std::size_t c = 0; c < grad.cols(); ++c) dst[c] += src[c];
  }
  return out;
}

Matrix im2col_3x3(const Matrix& input, const Shape& shape) {
  require(input.rows() == shape.size(), "im2col: input rows do not match shape");
  const std::size_t batch = input.cols();
  const std::size_t h = shape.height, w = shape.width, pixels = h * w;
  Matrix patches(shape.channels * 9, batch * pixels);
  const std::size_t pcols = patches.cols();
  for (std::size_t c = 0; c < shape.channels; ++c) {
    for (std::size_t k = 0; k < 9; ++k) {
      const long dy = static_cast<long>(k / 3) - 1;
      const long dx = static_cast<long>(k % 3) - 1;
      double* prow = patches.data() + (c * 9 + k) * pcols;
      for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t y = 0; y < h; ++y) {
          const long sy = static_cast<long>(y) + dy;
          if (sy < 0 || sy >= static_cast<long>(h)) continue;
          for (std::size_t x = 0; x < w; ++x) {
            const long sx = static_cast<long>(x) + dx;
            if (sx < 0 || sx >= static_cast<long>(w)) continue;
            const std::size_t src = (c * h + static_cast<std::size_t>(sy)) * w + static_cast<std::size_t>(sx);
            prow[n * pixels + y * w + x] = input(src, n);
          }
        }
      }
    }
  }
  return patches;
}

Matrix col2im_3x3(const Matrix& patches, const Shape& shape, std::size_t batch) {
  const std::size_t h = shape.height, w = shape.width, pixels = h * w;
  require(patches.rows() == shape.channels * 9 && patches.cols() == batch * pixels,
          "col2im: patch matrix does not match shape");
  Matrix out(shape.size(), batch);
  const std::size_t pcols = patches.cols();
  for (std::size_t c = 0; c < shape.channels; ++c) {
    for (std::size_t k = 0; k < 9; ++k) {
      const long dy = static_cast<long>(k / 3) - 1;
      const long dx = static_cast<long>(k % 3) - 1;
      const double* prow = patches.data() + (c * 9 + k) * pcols;
      for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t y = 0; y < h; ++y) {
          const long sy = static_cast<long>(y) + dy;
          if (sy < 0 || sy >= static_cast<long>(h)) continue;
          for (std::size_t x = 0; x < w; ++x) {
            const long sx = static_cast<long>(x) + dx;
            if (sx < 0 || sx >= static_cast<long>(w)) continue;
            const std::size_t dst = (c * h + static_cast<std::size_t>(sy)) * w + static_cast<std::size_t>(sx);
            out(dst, n) += prow[n * pixels + y * w + x];
          }
        }
      }
    }
  }
  return out;
}

}  // namespace dyngrow
