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

#ifndef DYNGROW_ACTIONS_HPP_
#define DYNGROW_ACTIONS_HPP_

#include <compare>
#include <string>
#include <vector>

#include "dyngrow/graph.hpp"

namespace dyngrow {

enum class ActionType : std::uint8_t {
  AddDenseSeq,
  AddDenseRes,
  AddConvSeq,
  AddConvRes,
  Remove,
};

// One structural mutation. The seven mutation types collapse onto five
// variants: dense residual carries its initialisation (random, zero, identity).
struct Action {
  ActionType type = ActionType::AddDenseSeq;
  LayerId from;  // Remove: the layer to drop
  LayerId to;    // unused by Remove
  InitScheme init = InitScheme::RandomScaled;

  static Action dense_seq(LayerId from, LayerId to) { return {ActionType::AddDenseSeq, from, to}; }
  static Action dense_res(LayerId from, LayerId to, InitScheme init) {
    return {ActionType::AddDenseRes, from, to, init};
  }
  static Action conv_seq(LayerId from, LayerId to) { return {ActionType::AddConvSeq, from, to}; }
  static Action conv_res(LayerId from, LayerId to) { return {ActionType::AddConvRes, from, to}; }
  static Action remove(LayerId id) { return {ActionType::Remove, id, id}; }

  bool is_add() const { return type != ActionType::Remove; }
  LayerKind layer_kind() const;

  friend bool operator==(const Action&, const Action&) = default;
};

// Sort key: (variant, from, to, init).
bool action_less(const Action& a, const Action& b);

// Log form, e.g. "add_dense_res zero L3->L7" or "remove L4".
std::string to_string(const Action& a);
// Inverse of to_string; throws std::invalid_argument.
Action parse_action(const std::string& text);

// Every legal mutation of g in a stable order. Throws StructuralError when g
// does not validate.
std::vector<Action> enumerate_actions(const LayerGraph& g);

// Applies `a` to a copy of g. Throws StaleActionError if an anchor is gone or
// the action no longer fits the graph.
LayerGraph execute(const Action& a, const LayerGraph& g, Rng& rng);

}  // namespace dyngrow

#endif  // DYNGROW_ACTIONS_HPP_
