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

#ifndef DYNGROW_GRAPH_HPP_
#define DYNGROW_GRAPH_HPP_

#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dyngrow/tensor.hpp"

namespace dyngrow {

struct LayerId {
  std::uint32_t value = 0;
  friend auto operator<=>(const LayerId&, const LayerId&) = default;
};

std::string to_string(LayerId id);  // "L<n>"

enum class LayerType : std::uint8_t {
  ConvInput,
  DenseInput,
  Output,
  DenseSeq,
  DenseRes,
  ConvSeq,
  ConvRes,
};

struct LayerKind {
  LayerType type = LayerType::DenseSeq;
  // Only meaningful for DenseRes; every other kind starts from RandomScaled.
  InitScheme init = InitScheme::RandomScaled;

  static LayerKind dense_seq() { return {LayerType::DenseSeq}; }
  static LayerKind dense_res(InitScheme init) { return {LayerType::DenseRes, init}; }
  static LayerKind conv_seq() { return {LayerType::ConvSeq}; }
  static LayerKind conv_res() { return {LayerType::ConvRes}; }

  bool is_input() const { return type == LayerType::ConvInput || type == LayerType::DenseInput; }
  bool is_output() const { return type == LayerType::Output; }
  bool is_hidden() const { return !is_input() && !is_output(); }
  bool is_conv() const {
    return type == LayerType::ConvInput || type == LayerType::ConvSeq || type == LayerType::ConvRes;
  }
  bool is_residual() const { return type == LayerType::DenseRes || type == LayerType::ConvRes; }

  friend bool operator==(const LayerKind&, const LayerKind&) = default;
};

std::string_view to_string(LayerType t);

// One node of the model. Dense layers hold a (neurons x inputs) weight matrix;
// conv layers hold (out_channels x in_channels*9) kernels for a 3x3 same-padded
// convolution. Signals are flattened CHW feature vectors either way.
struct Layer {
  LayerId id;
  LayerKind kind;
  Shape in_shape;
  Shape out_shape;
  Matrix weights;
  Matrix bias;
  Activation activation = Activation::ReLU;
  std::vector<LayerId> incoming;
  std::vector<LayerId> outgoing;

  std::size_t input_width() const { return in_shape.size(); }
  std::size_t neurons() const { return out_shape.size(); }
};

// Shape of the data fed to one graph input.
struct InputSpec {
  bool conv = true;
  Shape shape;

  static InputSpec image(std::size_t channels, std::size_t height, std::size_t width) {
    return {true, {channels, height, width}};
  }
  static InputSpec features(std::size_t count) { return {false, {count, 1, 1}}; }
};

// Directed acyclic graph of layers. Ids are handed out monotonically and never
// reused. The builder methods below do not check the global invariants; use
// validate() for that. The structural operations (add_layer, remove_layer)
// keep them.
class LayerGraph {
 public:
  LayerGraph(std::size_t def_neu, std::size_t conv_channels);

  std::size_t def_neu() const { return def_neu_; }
  std::size_t conv_channels() const { return conv_channels_; }

  bool contains(LayerId id) const { return layers_.contains(id); }
  const Layer& layer(LayerId id) const;
  Layer& layer(LayerId id);
  const std::map<LayerId, Layer>& layers() const { return layers_; }
  std::map<LayerId, Layer>& layers() { return layers_; }
  std::size_t size() const { return layers_.size(); }

  const std::vector<LayerId>& inputs() const { return inputs_; }
  LayerId output() const { return output_; }
  std::vector<LayerId> hidden_layers() const;
  std::size_t edge_count() const;
  std::set<std::pair<LayerId, LayerId>> edges() const;

  bool has_edge(LayerId from, LayerId to) const;
  // Directed path of length >= 1.
  bool has_path(LayerId from, LayerId to) const;
  std::set<LayerId> descendants(LayerId from) const;
  // Kahn order with smallest-id tie breaking; throws StructuralError on a cycle.
  std::vector<LayerId> topological_order() const;

  // Builder primitives.
  LayerId add_input(const InputSpec& spec, Rng& rng);
  LayerId add_output(std::size_t classes, Rng& rng);
  // Creates an unconnected hidden layer reading `in_shape`.
  LayerId add_hidden(LayerKind kind, const Shape& in_shape, Rng& rng);
  void connect(LayerId from, LayerId to);
  void disconnect(LayerId from, LayerId to);
  // Drops the node and all of its edges.
  void erase(LayerId id);

  std::uint32_t next_id() const { return next_id_; }
  // Used by deserialization to restore id bookkeeping.
  void restore(std::map<LayerId, Layer> layers, std::vector<LayerId> inputs, LayerId output,
               std::uint32_t next_id);

 private:
  LayerId allocate();

  std::size_t def_neu_;
  std::size_t conv_channels_;
  std::map<LayerId, Layer> layers_;
  std::vector<LayerId> inputs_;
  LayerId output_{};
  std::uint32_t next_id_ = 0;
};

// Smallest-possible starting model: input -> output with one edge. The output
// layer reads def_neu features and emits `classes` softmax probabilities.
LayerGraph new_base_model(const InputSpec& input, std::size_t def_neu, std::size_t classes,
                          Rng& rng, std::size_t conv_channels = 4);

// Inserts a new hidden layer. Sequential kinds replace the edge from->to;
// residual kinds bridge an existing path from->to and leave it intact.
LayerGraph add_layer(LayerGraph g, LayerKind kind, LayerId from, LayerId to, Rng& rng);
// Same as add_layer but also reports the new layer's id.
std::pair<LayerGraph, LayerId> add_layer_with_id(LayerGraph g, LayerKind kind, LayerId from,
                                                 LayerId to, Rng& rng);

// Removes a hidden layer, reconnecting predecessor -> successor pairs that would
// otherwise lose reachability.
LayerGraph remove_layer(LayerGraph g, LayerId id);

// Why add_layer would refuse (from, to) for `kind`; empty when legal.
std::string insertion_violation(const LayerGraph& g, LayerKind kind, LayerId from, LayerId to);

enum class ViolationKind {
  Cycle,
  EdgeMirror,
  DanglingEdge,
  Unreachable,
  DeadEnd,
  ConvOrdering,
  Terminals,
};

struct Violation {
  ViolationKind kind;
  std::string message;
};

std::vector<Violation> validate(const LayerGraph& g);
inline bool is_valid(const LayerGraph& g) { return validate(g).empty(); }

// All (from, to) with a directed path of length >= 1.
std::set<std::pair<LayerId, LayerId>> path_pairs(const LayerGraph& g);

}  // namespace dyngrow

#endif  // DYNGROW_GRAPH_HPP_
