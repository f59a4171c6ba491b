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

#include "dyngrow/propagation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "dyngrow/errors.hpp"

namespace dyngrow {

namespace {

// (channels x batch*pixels) -> (channels*pixels x batch)
Matrix fold_channels(const Matrix& m, std::size_t batch, std::size_t pixels) {
  Matrix out(m.rows() * pixels, batch);
  for (std::size_t c = 0; c < m.rows(); ++c) {
    const double* src = m.data() + c * m.cols();
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t p = 0; p < pixels; ++p) out(c * pixels + p, n) = src[n * pixels + p];
    }
  }
  return out;
}

// Inverse of fold_channels.
Matrix unfold_channels(const Matrix& m, std::size_t channels, std::size_t pixels) {
  const std::size_t batch = m.cols();
  Matrix out(channels, batch * pixels);
  for (std::size_t c = 0; c < channels; ++c) {
    double* dst = out.data() + c * out.cols();
    for (std::size_t n = 0; n < batch; ++n) {
      for (std::size_t p = 0; p < pixels; ++p) dst[n * pixels + p] = m(c * pixels + p, n);
    }
  }
  return out;
}

}  // namespace

ForwardPass forward(const LayerGraph& g, std::span<const Matrix> inputs) {
  if (inputs.size() != g.inputs().size()) {
    throw std::invalid_argument("forward: expected " + std::to_string(g.inputs().size()) +
                                " input signals, got " + std::to_string(inputs.size()));
  }
  ForwardPass pass;
  pass.batch = inputs.empty() ? 0 : inputs.front().cols();
  std::map<LayerId, std::vector<Signal>> pending;

  for (LayerId id : g.topological_order()) {
    const Layer& l = g.layer(id);
    LayerTrace trace;
    if (l.kind.is_input()) {
      const auto pos = std::find(g.inputs().begin(), g.inputs().end(), id) - g.inputs().begin();
      const Matrix& x = inputs[static_cast<std::size_t>(pos)];
      if (x.rows() != l.input_width() || x.cols() != pass.batch) {
        throw NumericError("forward: input " + to_string(id) + " expects " +
                           std::to_string(l.input_width()) + " features x " +
                           std::to_string(pass.batch) + " samples");
      }
      trace.fan_in = 1;
      trace.averaged_input = x;
    } else {
      std::vector<Signal>& inbox = pending[id];
      if (inbox.size() < l.incoming.size() || inbox.empty()) {
        throw DeadlockError("forward: " + to_string(id) + " received " +
                            std::to_string(inbox.size()) + " of " +
                            std::to_string(l.incoming.size()) + " signals");
      }
      trace.fan_in = inbox.size();
      Matrix sum = std::move(inbox.front().payload);
      for (std::size_t i = 1; i < inbox.size(); ++i) {
        if (inbox[i].payload.rows() != sum.rows() || inbox[i].payload.cols() != sum.cols()) {
          throw NumericError("forward: signal shapes differ at " + to_string(id));
        }
        sum.add_scaled(inbox[i].payload, 1.0);
      }
      if (inbox.size() > 1) {
        const double inv = 1.0 / static_cast<double>(inbox.size());
        for (double& v : sum.values()) v *= inv;
      }
      if (sum.rows() != l.input_width()) {
        throw NumericError("forward: " + to_string(id) + " expects " +
                           std::to_string(l.input_width()) + " features");
      }
      trace.averaged_input = std::move(sum);
      pending.erase(id);
    }

    if (l.kind.is_conv()) {
      const std::size_t pixels = l.in_shape.height * l.in_shape.width;
      trace.patches = im2col_3x3(trace.averaged_input, l.in_shape);
      Matrix z = matmul(l.weights, trace.patches);
      add_column_bias(z, l.bias);
      trace.pre_activation = fold_channels(z, pass.batch, pixels);
    } else {
      trace.pre_activation = matmul(l.weights, trace.averaged_input);
      add_column_bias(trace.pre_activation, l.bias);
    }
    trace.activation = apply_activation(l.activation, trace.pre_activation);

    for (LayerId next : l.outgoing) {
      pending[next].push_back({project(trace.activation, g.layer(next).input_width()), id});
    }
    if (l.kind.is_output()) pass.probs = trace.activation;
    pass.layers.emplace(id, std::move(trace));
  }
  return pass;
}

Matrix forward_probs(const LayerGraph& g, std::span<const Matrix> inputs) {
  return forward(g, inputs).probs;
}

GradientStore backward(const LayerGraph& g, const ForwardPass& pass, std::span<const int> labels) {
  const Matrix& probs = pass.probs;
  if (labels.size() != probs.cols()) {
    throw std::invalid_argument("backward: " + std::to_string(labels.size()) + " labels for " +
                                std::to_string(probs.cols()) + " samples");
  }
  const std::size_t batch = probs.cols();
  const double inv_batch = 1.0 / static_cast<double>(batch);

  std::map<LayerId, Matrix> upstream;  // dLoss/dActivation
  GradientStore grads;
  const auto order = g.topological_order();
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const LayerId id = *it;
    const Layer& l = g.layer(id);
    const LayerTrace& trace = pass.layers.at(id);

    Matrix dz;
    if (l.kind.is_output()) {
      dz = probs;
      for (std::size_t n = 0; n < batch; ++n) {
        const int y = labels[n];
        if (y < 0 || static_cast<std::size_t>(y) >= probs.rows()) {
          throw std::invalid_argument("backward: label out of range");
        }
        dz(static_cast<std::size_t>(y), n) -= 1.0;
      }
      for (double& v : dz.values()) v *= inv_batch;
    } else {
      auto up = upstream.find(id);
      if (up == upstream.end()) {
        dz = Matrix(trace.pre_activation.rows(), trace.pre_activation.cols());
      } else {
        dz = std::move(up->second);
        upstream.erase(up);
      }
      if (l.activation == Activation::ReLU) {
        // Subgradient 1 at zero so zero-initialised layers can start learning.
        const auto z = trace.pre_activation.values();
        auto d = dz.values();
        for (std::size_t i = 0; i < d.size(); ++i) {
          if (z[i] < 0.0) d[i] = 0.0;
        }
      } else if (l.activation == Activation::Softmax) {
        throw NumericError("backward: softmax is only supported on the output layer");
      }
    }

    Matrix d_input;
    ParamGrad pg;
    if (l.kind.is_conv()) {
      const std::size_t pixels = l.in_shape.height * l.in_shape.width;
      const Matrix dz_rows = unfold_channels(dz, l.out_shape.channels, pixels);
      pg.weights = matmul_bt(dz_rows, trace.patches);
      pg.bias = row_sums(dz_rows);
      if (!l.kind.is_input()) {
        d_input = col2im_3x3(matmul_at(l.weights, dz_rows), l.in_shape, batch);
      }
    } else {
      pg.weights = matmul_bt(dz, trace.averaged_input);
      pg.bias = row_sums(dz);
      if (!l.kind.is_input()) d_input = matmul_at(l.weights, dz);
    }
    grads.emplace(id, std::move(pg));

    if (l.kind.is_input()) continue;
    const double share = 1.0 / static_cast<double>(trace.fan_in);
    for (LayerId from : l.incoming) {
      Matrix back = project_adjoint(d_input, g.layer(from).neurons());
      auto [slot, fresh] = upstream.try_emplace(from);
      if (fresh) {
        if (share != 1.0) {
          for (double& v : back.values()) v *= share;
        }
        slot->second = std::move(back);
      } else {
        slot->second.add_scaled(back, share);
      }
    }
  }
  return grads;
}

double loss(const Matrix& probs, std::span<const int> labels) {
  if (labels.size() != probs.cols()) throw std::invalid_argument("loss: label count mismatch");
  double total = 0.0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    const double p = probs(static_cast<std::size_t>(labels[n]), n);
    total -= std::log(std::max(p, 1e-12));
  }
  return total / static_cast<double>(labels.size());
}

std::size_t count_correct(const Matrix& probs, std::span<const int> labels) {
  if (labels.size() != probs.cols()) throw std::invalid_argument("accuracy: label count mismatch");
  std::size_t hits = 0;
  for (std::size_t n = 0; n < labels.size(); ++n) {
    std::size_t best = 0;
    for (std::size_t r = 1; r < probs.rows(); ++r) {
      if (probs(r, n) > probs(best, n)) best = r;
    }
    if (static_cast<int>(best) == labels[n]) ++hits;
  }
  return hits;
}

double accuracy(const Matrix& probs, std::span<const int> labels) {
  if (labels.empty()) return 0.0;
  return static_cast<double>(count_correct(probs, labels)) / static_cast<double>(labels.size());
}

void sgd_step(LayerGraph& g, const GradientStore& grads, double lr) {
  if (lr < 0.0) throw std::invalid_argument("sgd_step: negative learning rate");
  for (const auto& [id, pg] : grads) {
    Layer& l = g.layer(id);
    l.weights.add_scaled(pg.weights, -lr);
    l.bias.add_scaled(pg.bias, -lr);
  }
}

}  // namespace dyngrow
