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

#ifndef DYNGROW_PROPAGATION_HPP_
#define DYNGROW_PROPAGATION_HPP_

#include <map>
#include <span>
#include <vector>

#include "dyngrow/graph.hpp"
#include "dyngrow/tensor.hpp"

namespace dyngrow {

// A payload travelling along one edge, already resized to the receiver's
// input width.
struct Signal {
  Matrix payload;
  LayerId origin;
};

// What a layer saw and produced during one forward pass; backward() reads it.
struct LayerTrace {
  std::size_t fan_in = 0;
  Matrix averaged_input;  // input_width x batch
  Matrix patches;         // conv layers only: im2col of averaged_input
  Matrix pre_activation;  // neurons x batch
  Matrix activation;      // neurons x batch
};

struct ForwardPass {
  std::map<LayerId, LayerTrace> layers;
  Matrix probs;  // classes x batch
  std::size_t batch = 0;
};

// Runs the graph in topological order. Every layer buffers the signals of its
// incoming connections, averages them once all have arrived, applies
// weights, bias and activation, then sends its activation resized to each
// successor's input width. `inputs` holds one feature-major matrix per graph
// input, in graph.inputs() order.
ForwardPass forward(const LayerGraph& g, std::span<const Matrix> inputs);
Matrix forward_probs(const LayerGraph& g, std::span<const Matrix> inputs);

struct ParamGrad {
  Matrix weights;
  Matrix bias;
};

using GradientStore = std::map<LayerId, ParamGrad>;

// Gradients of the mean cross-entropy of `pass.probs` against `labels`.
GradientStore backward(const LayerGraph& g, const ForwardPass& pass, std::span<const int> labels);

// Mean cross-entropy; probabilities are clamped at 1e-12 before the log.
double loss(const Matrix& probs, std::span<const int> labels);

// Fraction of columns whose argmax (first on ties) matches the label.
double accuracy(const Matrix& probs, std::span<const int> labels);
std::size_t count_correct(const Matrix& probs, std::span<const int> labels);

// p <- p - lr * grad for every parameter listed in grads.
void sgd_step(LayerGraph& g, const GradientStore& grads, double lr);

}  // namespace dyngrow

#endif  // DYNGROW_PROPAGATION_HPP_
