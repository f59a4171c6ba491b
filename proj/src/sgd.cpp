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

#include "dyngrow/sgd.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include "dyngrow/propagation.hpp"

namespace dyngrow {

double lr_at(std::size_t epoch, std::size_t epochs_per_generation, double lr_max, LrMode mode) {
  const std::size_t k = epochs_per_generation;
  if (k == 0 || epoch >= k) throw std::invalid_argument("lr_at: epoch outside the generation");
  if (mode == LrMode::Constant) return lr_max;
  const double floor_lr = lr_max / static_cast<double>(k);
  const std::size_t peak = k / 2;
  if (epoch == peak) return lr_max;
  double t = 1.0;
  if (epoch < peak) {
    t = static_cast<double>(epoch) / static_cast<double>(peak);
  } else if (epoch > peak) {
    t = static_cast<double>(k - 1 - epoch) / static_cast<double>(k - 1 - peak);
  }
  return floor_lr + (lr_max - floor_lr) * t;
}

EpochStats run_epoch(LayerGraph& g, const Dataset& ds, double lr, std::size_t batch_size, Rng& rng) {
  if (ds.size() == 0) throw std::invalid_argument("run_epoch: empty dataset");
  if (batch_size == 0) throw std::invalid_argument("run_epoch: batch size must be >= 1");
  std::vector<std::size_t> order(ds.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);

  double loss_sum = 0.0;
  std::size_t correct = 0;
  for (std::size_t start = 0; start < order.size(); start += batch_size) {
    const std::size_t end = std::min(order.size(), start + batch_size);
    std::span<const std::size_t> idx(order.data() + start, end - start);
    std::vector<int> labels;
    labels.reserve(idx.size());
    for (std::size_t i : idx) labels.push_back(ds.labels[i]);

    const ForwardPass pass = forward(g, ds.batch(idx));
    loss_sum += loss(pass.probs, labels) * static_cast<double>(idx.size());
    correct += count_correct(pass.probs, labels);
    sgd_step(g, backward(g, pass, labels), lr);
  }
  const double n = static_cast<double>(ds.size());
  return {loss_sum / n, static_cast<double>(correct) / n};
}

EpochStats evaluate(const LayerGraph& g, const Dataset& ds, std::size_t batch_size) {
  if (ds.size() == 0) throw std::invalid_argument("evaluate: empty dataset");
  double loss_sum = 0.0;
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < ds.size(); start += batch_size) {
    const std::size_t end = std::min(ds.size(), start + batch_size);
    idx.resize(end - start);
    std::iota(idx.begin(), idx.end(), start);
    std::vector<int> labels(ds.labels.begin() + static_cast<std::ptrdiff_t>(start),
                            ds.labels.begin() + static_cast<std::ptrdiff_t>(end));
    const Matrix probs = forward_probs(g, ds.batch(idx));
    loss_sum += loss(probs, labels) * static_cast<double>(idx.size());
    correct += count_correct(probs, labels);
  }
  const double n = static_cast<double>(ds.size());
  return {loss_sum / n, static_cast<double>(correct) / n};
}

}  // namespace dyngrow
