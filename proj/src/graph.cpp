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

#include "dyngrow/graph.hpp"

#include <algorithm>
#include <deque>
#include <queue>
#include <stdexcept>

#include "dyngrow/errors.hpp"

namespace dyngrow {

std::string to_string(LayerId id) { return "L" + std::to_string(id.value); }

std::string_view to_string(LayerType t) {
  switch (t) {
    case LayerType::ConvInput: return "conv_input";
    case LayerType::DenseInput: return "dense_input";
    case LayerType::Output: return "output";
    case LayerType::DenseSeq: return "dense_seq";
    case LayerType::DenseRes: return "dense_res";
    case LayerType::ConvSeq: return "conv_seq";
    case LayerType::ConvRes: return "conv_res";
  }
  return "?";
}

LayerGraph::LayerGraph(std::size_t def_neu, std::size_t conv_channels)
    : def_neu_(def_neu), conv_channels_(conv_channels) {
  if (def_neu == 0) throw std::invalid_argument("def_neu must be >= 1");
  if (conv_channels == 0) throw std::invalid_argument("conv_channels must be >= 1");
}

const Layer& LayerGraph::layer(LayerId id) const {
  auto it = layers_.find(id);
  if (it == layers_.end()) throw NotFoundError("no layer " + to_string(id));
  return it->second;
}

Layer& LayerGraph::layer(LayerId id) {
  auto it = layers_.find(id);
  if (it == layers_.end()) throw NotFoundError("no layer " + to_string(id));
  return it->second;
}

std::vector<LayerId> LayerGraph::hidden_layers() const {
  std::vector<LayerId> out;
  for (const auto& [id, l] : layers_) {
    if (l.kind.is_hidden()) out.push_back(id);
  }
  return out;
}

std::size_t LayerGraph::edge_count() const {
  std::size_t n = 0;
  for (const auto& [id, l] : layers_) n += l.outgoing.size();
  return n;
}

std::set<std::pair<LayerId, LayerId>> LayerGraph::edges() const {
  std::set<std::pair<LayerId, LayerId>> out;
  for (const auto& [id, l] : layers_) {
    for (LayerId to : l.outgoing) out.emplace(id, to);
  }
  return out;
}

bool LayerGraph::has_edge(LayerId from, LayerId to) const {
  const auto& out = layer(from).outgoing;
  return std::find(out.begin(), out.end(), to) != out.end();
}

std::set<LayerId> LayerGraph::descendants(LayerId from) const {
  std::set<LayerId> seen;
  std::deque<LayerId> frontier(layer(from).outgoing.begin(), layer(from).outgoing.end());
  while (!frontier.empty()) {
    LayerId cur = frontier.front();
    frontier.pop_front();
    if (!seen.insert(cur).second) continue;
    auto it = layers_.find(cur);
    if (it == layers_.end()) continue;
    for (LayerId next : it->second.outgoing) frontier.push_back(next);
  }
  return seen;
}

bool LayerGraph::has_path(LayerId from, LayerId to) const {
  return descendants(from).contains(to);
}

std::vector<LayerId> LayerGraph::topological_order() const {
  std::map<LayerId, std::size_t> pending;
  std::priority_queue<LayerId, std::vector<LayerId>, std::greater<>> ready;
  for (const auto& [id, l] : layers_) {
    pending[id] = l.incoming.size();
    if (l.incoming.empty()) ready.push(id);
  }
  std::vector<LayerId> order;
  order.reserve(layers_.size());
  while (!ready.empty()) {
    LayerId cur = ready.top();
    ready.pop();
    order.push_back(cur);
    for (LayerId next : layers_.at(cur).outgoing) {
      auto it = pending.find(next);
      if (it != pending.end() && --it->second == 0) ready.push(next);
    }
  }
  if (order.size() != layers_.size()) throw StructuralError("layer graph contains a cycle");
  return order;
}

LayerId LayerGraph::allocate() { return LayerId{next_id_++}; }

LayerId LayerGraph::add_input(const InputSpec& spec, Rng& rng) {
  if (spec.shape.size() == 0) throw std::invalid_argument("input shape must be non-empty");
  Layer l;
  l.id = allocate();
  l.in_shape = spec.shape;
  if (spec.conv) {
    l.kind = {LayerType::ConvInput};
    l.out_shape = {conv_channels_, spec.shape.height, spec.shape.width};
    l.weights = init_weights(InitScheme::RandomScaled, conv_channels_, spec.shape.channels * 9, rng);
    l.bias = Matrix(conv_channels_, 1);
  } else {
    l.kind = {LayerType::DenseInput};
    l.out_shape = {def_neu_, 1, 1};
    l.weights = init_weights(InitScheme::RandomScaled, def_neu_, spec.shape.size(), rng);
    l.bias = Matrix(def_neu_, 1);
  }
  l.activation = Activation::ReLU;
  inputs_.push_back(l.id);
  LayerId id = l.id;
  layers_.emplace(id, std::move(l));
  return id;
}

LayerId LayerGraph::add_output(std::size_t classes, Rng& rng) {
  if (classes < 2) throw std::invalid_argument("output layer needs at least 2 classes");
  if (layers_.contains(output_) && layers_.at(output_).kind.is_output()) {
    throw std::invalid_argument("graph already has an output layer");
  }
  Layer l;
  l.id = allocate();
  l.kind = {LayerType::Output};
  l.in_shape = {def_neu_, 1, 1};
  l.out_shape = {classes, 1, 1};
  l.weights = init_weights(InitScheme::RandomScaled, classes, def_neu_, rng);
  l.bias = Matrix(classes, 1);
  l.activation = Activation::Softmax;
  output_ = l.id;
  layers_.emplace(l.id, std::move(l));
  return output_;
}

LayerId LayerGraph::add_hidden(LayerKind kind, const Shape& in_shape, Rng& rng) {
  if (!kind.is_hidden()) throw std::invalid_argument("add_hidden needs a hidden layer kind");
  Layer l;
  l.id = allocate();
  l.kind = kind;
  l.in_shape = in_shape;
  l.activation = Activation::ReLU;
  if (kind.is_conv()) {
    l.out_shape = {conv_channels_, in_shape.height, in_shape.width};
    l.weights = init_weights(InitScheme::RandomScaled, conv_channels_, in_shape.channels * 9, rng);
    l.bias = Matrix(conv_channels_, 1);
  } else {
    const InitScheme init =
        kind.type == LayerType::DenseRes ? kind.init : InitScheme::RandomScaled;
    l.kind.init = init;
    l.out_shape = {def_neu_, 1, 1};
    l.weights = init_weights(init, def_neu_, in_shape.size(), rng);
    l.bias = Matrix(def_neu_, 1);
  }
  LayerId id = l.id;
  layers_.emplace(id, std::move(l));
  return id;
}

void LayerGraph::connect(LayerId from, LayerId to) {
  layer(from).outgoing.push_back(to);
  layer(to).incoming.push_back(from);
}

void LayerGraph::disconnect(LayerId from, LayerId to) {
  auto& out = layer(from).outgoing;
  auto& in = layer(to).incoming;
  auto oit = std::find(out.begin(), out.end(), to);
  auto iit = std::find(in.begin(), in.end(), from);
  if (oit == out.end() || iit == in.end()) {
    throw StructuralError("no edge " + to_string(from) + "->" + to_string(to));
  }
  out.erase(oit);
  in.erase(iit);
}

void LayerGraph::erase(LayerId id) {
  Layer& l = layer(id);
  for (LayerId p : std::vector<LayerId>(l.incoming)) disconnect(p, id);
  for (LayerId s : std::vector<LayerId>(l.outgoing)) disconnect(id, s);
  layers_.erase(id);
  std::erase(inputs_, id);
}

void LayerGraph::restore(std::map<LayerId, Layer> layers, std::vector<LayerId> inputs,
                         LayerId output, std::uint32_t next_id) {
  layers_ = std::move(layers);
  inputs_ = std::move(inputs);
  output_ = output;
  next_id_ = next_id;
}

LayerGraph new_base_model(const InputSpec& input, std::size_t def_neu, std::size_t classes,
                          Rng& rng, std::size_t conv_channels) {
  if (classes < 2) throw std::invalid_argument("classes must be >= 2");
  LayerGraph g(def_neu, conv_channels);
  LayerId in = g.add_input(input, rng);
  LayerId out = g.add_output(classes, rng);
  g.connect(in, out);
  return g;
}

std::string insertion_violation(const LayerGraph& g, LayerKind kind, LayerId from, LayerId to) {
  if (!g.contains(from)) return "anchor " + to_string(from) + " does not exist";
  if (!g.contains(to)) return "anchor " + to_string(to) + " does not exist";
  if (!kind.is_hidden()) return "only hidden layer kinds can be inserted";
  const Layer& src = g.layer(from);
  const Layer& dst = g.layer(to);
  if (src.kind.is_output()) return "the output layer cannot feed another layer";
  if (dst.kind.is_input()) return "input layers cannot receive connections";
  if (g.has_path(to, from)) return "insertion would create a cycle";
  const bool residual = kind.is_residual();
  if (residual && !g.has_path(from, to)) {
    return "residual layer needs a directed path " + to_string(from) + "->" + to_string(to);
  }
  if (!residual && !g.has_edge(from, to)) {
    return "sequential layer needs an edge " + to_string(from) + "->" + to_string(to);
  }
  if (kind.is_conv() && !src.kind.is_conv()) {
    return "convolution layer can only follow a convolution layer";
  }
  if (!kind.is_conv() && dst.kind.is_conv()) {
    return "dense layer cannot feed a convolution layer";
  }
  if (kind.type == LayerType::DenseRes && kind.init == InitScheme::Identity &&
      src.neurons() != g.def_neu()) {
    return "identity init needs a square weight matrix";
  }
  return {};
}

std::pair<LayerGraph, LayerId> add_layer_with_id(LayerGraph g, LayerKind kind, LayerId from,
                                                 LayerId to, Rng& rng) {
  if (std::string why = insertion_violation(g, kind, from, to); !why.empty()) {
    throw StructuralError(why);
  }
  const Shape in_shape =
      kind.is_conv() ? g.layer(from).out_shape : Shape{g.layer(from).neurons(), 1, 1};
  LayerId id = g.add_hidden(kind, in_shape, rng);
  if (kind.is_residual()) {
    g.connect(from, id);
    g.connect(id, to);
  } else {
    // Splice in place so fan-in order at `to` is preserved.
    std::replace(g.layer(from).outgoing.begin(), g.layer(from).outgoing.end(), to, id);
    std::replace(g.layer(to).incoming.begin(), g.layer(to).incoming.end(), from, id);
    g.layer(id).incoming.push_back(from);
    g.layer(id).outgoing.push_back(to);
  }
  return {std::move(g), id};
}

LayerGraph add_layer(LayerGraph g, LayerKind kind, LayerId from, LayerId to, Rng& rng) {
  return add_layer_with_id(std::move(g), kind, from, to, rng).first;
}

LayerGraph remove_layer(LayerGraph g, LayerId id) {
  if (!g.contains(id)) throw NotFoundError("no layer " + to_string(id));
  const Layer& l = g.layer(id);
  if (!l.kind.is_hidden()) {
    throw ForbiddenRemovalError("input and output layers cannot be removed (" + to_string(id) + ")");
  }
  const std::vector<LayerId> preds = l.incoming;
  const std::vector<LayerId> succs = l.outgoing;
  g.erase(id);
  for (LayerId p : preds) {
    for (LayerId s : succs) {
      if (!g.has_path(p, s)) g.connect(p, s);
    }
  }
  return g;
}

std::vector<Violation> validate(const LayerGraph& g) {
  std::vector<Violation> out;
  auto report = [&](ViolationKind k, std::string msg) { out.push_back({k, std::move(msg)}); };

  if (g.inputs().empty()) report(ViolationKind::Terminals, "graph has no input layer");
  if (!g.contains(g.output()) || !g.layer(g.output()).kind.is_output()) {
    report(ViolationKind::Terminals, "graph has no output layer");
  }
  for (const auto& [id, l] : g.layers()) {
    const bool listed = std::find(g.inputs().begin(), g.inputs().end(), id) != g.inputs().end();
    if (l.kind.is_input() != listed) {
      report(ViolationKind::Terminals, to_string(id) + " input bookkeeping is inconsistent");
    }
    if (l.kind.is_output() && id != g.output()) {
      report(ViolationKind::Terminals, to_string(id) + " is a second output layer");
    }
  }
  if (!out.empty()) return out;

  bool dangling = false;
  for (const auto& [id, l] : g.layers()) {
    for (LayerId to : l.outgoing) {
      if (!g.contains(to)) {
        report(ViolationKind::DanglingEdge, to_string(id) + "->" + to_string(to) + " targets a missing layer");
        dangling = true;
        continue;
      }
      const auto& in = g.layer(to).incoming;
      if (std::count(in.begin(), in.end(), id) != std::count(l.outgoing.begin(), l.outgoing.end(), to)) {
        report(ViolationKind::EdgeMirror, "edge " + to_string(id) + "->" + to_string(to) + " is not mirrored");
      }
      if (std::count(l.outgoing.begin(), l.outgoing.end(), to) > 1) {
        report(ViolationKind::EdgeMirror, "duplicate edge " + to_string(id) + "->" + to_string(to));
      }
    }
    for (LayerId from : l.incoming) {
      if (!g.contains(from)) {
        report(ViolationKind::DanglingEdge, to_string(from) + "->" + to_string(id) + " starts at a missing layer");
        dangling = true;
        continue;
      }
      if (!g.has_edge(from, id)) {
        report(ViolationKind::EdgeMirror, "incoming " + to_string(from) + "->" + to_string(id) + " is not mirrored");
      }
    }
    if (l.kind.is_input() && !l.incoming.empty()) {
      report(ViolationKind::ConvOrdering, to_string(id) + " is an input with incoming edges");
    }
    if (l.kind.is_output() && !l.outgoing.empty()) {
      report(ViolationKind::ConvOrdering, to_string(id) + " is the output with outgoing edges");
    }
    if (l.kind.is_conv() && !l.kind.is_input()) {
      for (LayerId from : l.incoming) {
        if (g.contains(from) && !g.layer(from).kind.is_conv()) {
          report(ViolationKind::ConvOrdering,
                 "convolution " + to_string(id) + " receives from non-convolution " + to_string(from));
        }
      }
    }
  }
  if (dangling) return out;

  try {
    (void)g.topological_order();
  } catch (const StructuralError&) {
    report(ViolationKind::Cycle, "graph contains a directed cycle");
    return out;
  }

  std::set<LayerId> from_inputs;
  for (LayerId in : g.inputs()) {
    from_inputs.insert(in);
    auto d = g.descendants(in);
    from_inputs.insert(d.begin(), d.end());
    if (!d.contains(g.output())) {
      report(ViolationKind::Unreachable, "input " + to_string(in) + " has no path to the output");
    }
  }
  // Reverse reachability from the output.
  std::set<LayerId> to_output{g.output()};
  std::deque<LayerId> frontier{g.output()};
  while (!frontier.empty()) {
    LayerId cur = frontier.front();
    frontier.pop_front();
    for (LayerId p : g.layer(cur).incoming) {
      if (to_output.insert(p).second) frontier.push_back(p);
    }
  }
  for (const auto& [id, l] : g.layers()) {
    if (!from_inputs.contains(id)) {
      report(ViolationKind::Unreachable, to_string(id) + " is not reachable from any input");
    }
    if (!to_output.contains(id)) {
      report(ViolationKind::DeadEnd, to_string(id) + " has no path to the output");
    }
  }
  return out;
}

std::set<std::pair<LayerId, LayerId>> path_pairs(const LayerGraph& g) {
  std::set<std::pair<LayerId, LayerId>> out;
  for (const auto& [id, l] : g.layers()) {
    for (LayerId d : g.descendants(id)) out.emplace(id, d);
  }
  return out;
}

}  // namespace dyngrow
