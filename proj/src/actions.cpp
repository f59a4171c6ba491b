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

#include "dyngrow/actions.hpp"

#include <algorithm>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "dyngrow/errors.hpp"

namespace dyngrow {

LayerKind Action::layer_kind() const {
  switch (type) {
    case ActionType::AddDenseSeq: return LayerKind::dense_seq();
    case ActionType::AddDenseRes: return LayerKind::dense_res(init);
    case ActionType::AddConvSeq: return LayerKind::conv_seq();
    case ActionType::AddConvRes: return LayerKind::conv_res();
    case ActionType::Remove: break;
  }
  throw std::logic_error("remove actions do not create a layer");
}

bool action_less(const Action& a, const Action& b) {
  return std::tuple(a.type, a.from, a.to, a.init) < std::tuple(b.type, b.from, b.to, b.init);
}

std::string to_string(const Action& a) {
  const std::string anchors = to_string(a.from) + "->" + to_string(a.to);
  switch (a.type) {
    case ActionType::AddDenseSeq: return "add_dense_seq " + anchors;
    case ActionType::AddDenseRes:
      return "add_dense_res " + std::string(to_string(a.init)) + " " + anchors;
    case ActionType::AddConvSeq: return "add_conv_seq " + anchors;
    case ActionType::AddConvRes: return "add_conv_res " + anchors;
    case ActionType::Remove: return "remove " + to_string(a.from);
  }
  return "?";
}

namespace {

LayerId parse_id(const std::string& tok) {
  if (tok.size() < 2 || tok[0] != 'L') throw std::invalid_argument("bad layer id: " + tok);
  return LayerId{static_cast<std::uint32_t>(std::stoul(tok.substr(1)))};
}

std::pair<LayerId, LayerId> parse_anchors(const std::string& tok) {
  const auto arrow = tok.find("->");
  if (arrow == std::string::npos) throw std::invalid_argument("bad anchors: " + tok);
  return {parse_id(tok.substr(0, arrow)), parse_id(tok.substr(arrow + 2))};
}

}  // namespace

Action parse_action(const std::string& text) {
  std::istringstream in(text);
  std::string verb, arg1, arg2;
  in >> verb >> arg1 >> arg2;
  if (verb == "remove") return Action::remove(parse_id(arg1));
  if (verb == "add_dense_res") {
    InitScheme init;
    if (arg1 == "random") init = InitScheme::RandomScaled;
    else if (arg1 == "zero") init = InitScheme::Zero;
    else if (arg1 == "identity") init = InitScheme::Identity;
    else throw std::invalid_argument("bad init: " + arg1);
    auto [f, t] = parse_anchors(arg2);
    return Action::dense_res(f, t, init);
  }
  auto [f, t] = parse_anchors(arg1);
  if (verb == "add_dense_seq") return Action::dense_seq(f, t);
  if (verb == "add_conv_seq") return Action::conv_seq(f, t);
  if (verb == "add_conv_res") return Action::conv_res(f, t);
  throw std::invalid_argument("unknown action: " + text);
}

std::vector<Action> enumerate_actions(const LayerGraph& g) {
  if (auto v = validate(g); !v.empty()) {
    throw StructuralError("cannot enumerate actions on an invalid graph: " + v.front().message);
  }
  std::vector<Action> out;
  auto consider = [&](const Action& a) {
    if (insertion_violation(g, a.layer_kind(), a.from, a.to).empty()) out.push_back(a);
  };
  for (const auto& [from, to] : g.edges()) {
    consider(Action::dense_seq(from, to));
    consider(Action::conv_seq(from, to));
  }
  for (const auto& [from, to] : path_pairs(g)) {
    for (InitScheme init : {InitScheme::RandomScaled, InitScheme::Zero, InitScheme::Identity}) {
      consider(Action::dense_res(from, to, init));
    }
    consider(Action::conv_res(from, to));
  }
  for (LayerId id : g.hidden_layers()) out.push_back(Action::remove(id));
  std::sort(out.begin(), out.end(), action_less);
  return out;
}

LayerGraph execute(const Action& a, const LayerGraph& g, Rng& rng) {
  if (a.type == ActionType::Remove) {
    if (!g.contains(a.from) || !g.layer(a.from).kind.is_hidden()) {
      throw StaleActionError("stale action '" + to_string(a) + "': no hidden layer " +
                             to_string(a.from));
    }
    return remove_layer(g, a.from);
  }
  if (std::string why = insertion_violation(g, a.layer_kind(), a.from, a.to); !why.empty()) {
    throw StaleActionError("stale action '" + to_string(a) + "': " + why);
  }
  return add_layer(g, a.layer_kind(), a.from, a.to, rng);
}

}  // namespace dyngrow
