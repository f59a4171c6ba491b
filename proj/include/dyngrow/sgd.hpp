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

#ifndef DYNGROW_SGD_HPP_
#define DYNGROW_SGD_HPP_

#include <cstddef>

#include "dyngrow/data.hpp"
#include "dyngrow/graph.hpp"

namespace dyngrow {

enum class LrMode { Progressive, Constant };

// Learning rate for epoch `epoch` (0-based) of a K-epoch generation.
// Progressive is a triangular ramp: lr_max / K at epoch 0, lr_max at K / 2,
// back to lr_max / K at epoch K - 1.
double lr_at(std::size_t epoch, std::size_t epochs_per_generation, double lr_max, LrMode mode);

struct EpochStats {
  double loss = 0.0;
  double accuracy = 0.0;
};

// One pass of shuffled mini-batch SGD. Loss and accuracy are averaged over the
// batches as they were seen during the epoch.
EpochStats run_epoch(LayerGraph& g, const Dataset& ds, double lr, std::size_t batch_size, Rng& rng);

// Loss and accuracy without touching the parameters.
EpochStats evaluate(const LayerGraph& g, const Dataset& ds, std::size_t batch_size = 256);

}  // namespace dyngrow

#endif  // DYNGROW_SGD_HPP_
