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

#ifndef DYNGROW_DATA_HPP_
#define DYNGROW_DATA_HPP_

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "dyngrow/graph.hpp"
#include "dyngrow/tensor.hpp"

namespace dyngrow {

// Labelled samples. `inputs` has one image batch per graph input (flat data
// uses shape (features, 1, 1)); all batches share the sample count.
struct Dataset {
  std::vector<ImageBatch> inputs;
  std::vector<int> labels;
  std::size_t class_count = 0;

  std::size_t size() const { return labels.size(); }
  // Throws InvalidDatasetError when the invariants do not hold.
  void check() const;
  Dataset subset(std::span<const std::size_t> indices) const;
  // Feature-major matrices, one per input, for the listed samples.
  std::vector<Matrix> batch(std::span<const std::size_t> indices) const;
  std::vector<Matrix> all() const;
  std::vector<std::size_t> class_counts() const;
};

// Equal-length multivariate series: series[sample][dimension][t].
struct MtsDataset {
  std::size_t dims = 0;
  std::size_t length = 0;
  std::size_t class_count = 0;
  std::vector<std::vector<std::vector<double>>> series;
  std::vector<int> labels;

  std::size_t size() const { return labels.size(); }
  void check() const;
};

// Reads an IDX image file (magic 2051) and label file (magic 2049). Gzipped
// files are detected by their header. Pixels are scaled to [0, 1].
Dataset load_idx(const std::filesystem::path& images, const std::filesystem::path& labels);

// Writes a single-channel dataset as IDX (pixels rounded to bytes).
void save_idx(const Dataset& ds, const std::filesystem::path& images,
              const std::filesystem::path& labels);

// R(i, j) = 1 iff |x_i - x_j| <= eps.
Matrix recurrence_plot(std::span<const double> x, double eps);

struct EpsRule {
  enum class Kind { Fixed, Quantile } kind = Kind::Quantile;
  double value = 0.1;

  static EpsRule fixed(double eps) { return {Kind::Fixed, eps}; }
  static EpsRule quantile(double q) { return {Kind::Quantile, q}; }
};

// Lower q-quantile of the pairwise distances |x_i - x_j|, i < j; 0 for a
// single sample.
double pairwise_distance_quantile(std::span<const double> x, double q);

// Zero mean, unit variance; constant series map to zeros.
std::vector<double> z_normalize(std::span<const double> x);

// Mean-pools a binary plot to at most `max_side` per side and thresholds the
// pooled means at 0.5.
Matrix downsample_plot(const Matrix& plot, std::size_t max_side);

struct RecurrenceOptions {
  EpsRule eps = EpsRule::quantile(0.1);
  bool normalize = true;
  std::size_t max_side = 0;  // 0 keeps the full length x length plot
};

// One single-channel image dataset per series dimension, sample order and
// labels preserved.
std::vector<Dataset> mts_to_images(const MtsDataset& ds, const RecurrenceOptions& options = {});

// Joins per-dimension datasets as channels of one input, or as separate inputs.
Dataset stack_as_channels(const std::vector<Dataset>& per_dim);
Dataset stack_as_inputs(const std::vector<Dataset>& per_dim);

// CSV with a header line "dims=<d>,length=<n>,classes=<c>" followed by one row
// per sample: the label, then dims*length values (dimension-major).
MtsDataset load_timeseries_csv(const std::filesystem::path& path);
void save_timeseries_csv(const MtsDataset& ds, const std::filesystem::path& path);

// Input(s) -> one hidden dense layer -> output. With shared_input the series
// enter as channels of one conv input; otherwise each gets its own conv input.
LayerGraph build_mts_model(std::size_t dims, std::size_t image_side, std::size_t classes,
                           bool shared_input, std::size_t def_neu, Rng& rng,
                           std::size_t conv_channels = 4);

}  // namespace dyngrow

#endif  // DYNGROW_DATA_HPP_
