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

#include "dyngrow/mcts.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <stdexcept>

#include "dyngrow/errors.hpp"
#include "dyngrow/propagation.hpp"

namespace dyngrow {

void SearchBudget::check() const {
  if (!(time_limit_s > 0.0)) throw std::invalid_argument("search time limit must be > 0");
  if (exploration < 0.0) throw std::invalid_argument("exploration constant must be >= 0");
  if (sim_batch_size == 0) throw std::invalid_argument("simulation batch size must be >= 1");
  if (sim_lr < 0.0) throw std::invalid_argument("simulation learning rate must be >= 0");
}

double ucb_value(double mean_score, std::size_t parent_visits, std::size_t edge_visits,
                 double exploration) {
  if (edge_visits == 0) return std::numeric_limits<double>::infinity();
  const double n = static_cast<double>(std::max<std::size_t>(parent_visits, 1));
  return mean_score + exploration * std::sqrt(std::log(n) / static_cast<double>(edge_visits));
}

std::size_t ucb_select(const MctsNode& node, double exploration) {
  if (node.edges.empty()) throw TerminalError("ucb_select: node has no actions");
  std::size_t best = 0;
  double best_value = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < node.edges.size(); ++i) {
    const MctsEdge& e = node.edges[i];
    const double v = ucb_value(e.mean_score, node.visits, e.visits, exploration);
    if (v > best_value) {
      best = i;
      best_value = v;
    }
  }
  return best;
}

LayerGraph rollout(LayerGraph g, std::size_t n, Rng& rng) {
  for (std::size_t step = 0; step < n; ++step) {
    const auto actions = enumerate_actions(g);
    if (actions.empty()) break;
    std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
    g = execute(actions[pick(rng)], g, rng);
  }
  return g;
}

double score(const LayerGraph& g, const Dataset& simset, const SearchBudget& budget,
             ScoreMode mode, Rng& rng) {
  if (simset.size() == 0) throw std::invalid_argument("score: empty simulation set");
  LayerGraph trial = g;
  try {
    for (std::size_t e = 0; e < budget.sim_epochs; ++e) {
      const double lr = lr_at(e, budget.sim_epochs, budget.sim_lr, budget.sim_lr_mode);
      run_epoch(trial, simset, lr, budget.sim_batch_size, rng);
    }
    const EpochStats s = evaluate(trial, simset);
    if (mode == ScoreMode::Accuracy) return s.accuracy;
    return std::isfinite(s.loss) ? std::exp(-s.loss) : 0.0;
  } catch (const NumericError&) {
    return 0.0;
  }
}

MctsSearch::MctsSearch(LayerGraph root, const Dataset& simset, SearchBudget budget,
                       ScoreMode mode, Rng rng)
    : root_(std::make_unique<MctsNode>(std::move(root))),
      simset_(simset),
      budget_(budget),
      mode_(mode),
      rng_(rng),
      start_(std::chrono::steady_clock::now()) {
  budget_.check();
  expand(*root_);
  if (root_->edges.empty()) throw TerminalError("search: the model admits no action");
}

void MctsSearch::set_telemetry(std::ostream* out) { telemetry_ = out; }

double MctsSearch::elapsed_s() const {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
}

void MctsSearch::expand(MctsNode& node) {
  for (const Action& a : enumerate_actions(*node.structure)) {
    MctsEdge e;
    e.action = a;
    e.child = std::make_unique<MctsNode>();
    node.edges.push_back(std::move(e));
  }
  node.expanded = true;
}

double MctsSearch::iterate() {
  std::vector<MctsNode*> nodes{root_.get()};
  std::vector<MctsEdge*> path;
  MctsNode* node = root_.get();
  while (true) {
    if (!node->expanded) expand(*node);
    if (node->edges.empty()) break;
    MctsEdge& e = node->edges[ucb_select(*node, budget_.exploration)];
    const bool first_visit = e.visits == 0;
    if (!e.child->structure) e.child->structure = execute(e.action, *node->structure, rng_);
    path.push_back(&e);
    node = e.child.get();
    nodes.push_back(node);
    if (first_visit) break;
  }

  const LayerGraph leaf = rollout(*node->structure, budget_.rollout_depth, rng_);
  const double s = score(leaf, simset_, budget_, mode_, rng_);

  for (std::size_t i = 0; i < path.size(); ++i) {
    nodes[i]->visits += 1;
    MctsEdge& e = *path[i];
    e.visits += 1;
    e.mean_score += (s - e.mean_score) / static_cast<double>(e.visits);
  }
  ++iterations_;

  if (telemetry_ != nullptr) {
    *telemetry_ << iterations_ << ',';
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (i > 0) *telemetry_ << " | ";
      *telemetry_ << to_string(path[i]->action);
    }
    char buf[64];
    std::snprintf(buf, sizeof buf, ",%.17g,%.6f\n", s, elapsed_s());
    *telemetry_ << buf;
  }
  return s;
}

Action MctsSearch::run() {
  do {
    iterate();
  } while (elapsed_s() < budget_.time_limit_s &&
           (budget_.max_iterations == 0 || iterations_ < budget_.max_iterations));
  return best_action();
}

Action MctsSearch::best_action() const {
  const auto& edges = root_->edges;
  std::size_t best = 0;
  for (std::size_t i = 1; i < edges.size(); ++i) {
    const MctsEdge& a = edges[i];
    const MctsEdge& b = edges[best];
    if (a.visits > b.visits || (a.visits == b.visits && a.mean_score > b.mean_score)) best = i;
  }
  return edges[best].action;
}

Action search(const LayerGraph& g, const Dataset& simset, const SearchBudget& budget,
              ScoreMode mode, Rng& rng, std::ostream* telemetry) {
  MctsSearch s(g, simset, budget, mode, Rng(rng()));
  s.set_telemetry(telemetry);
  return s.run();
}

Action greedy_policy(const LayerGraph& g, const Dataset& simset, const SearchBudget& budget,
                     ScoreMode mode, Rng& rng) {
  const auto actions = enumerate_actions(g);
  if (actions.empty()) throw TerminalError("greedy_policy: the model admits no action");
  if (actions.size() == 1) return actions.front();
  std::size_t best = 0;
  double best_score = -1.0;
  for (std::size_t i = 0; i < actions.size(); ++i) {
    const double s = score(execute(actions[i], g, rng), simset, budget, mode, rng);
    if (s > best_score) {
      best = i;
      best_score = s;
    }
  }
  return actions[best];
}

Action random_policy(const LayerGraph& g, Rng& rng) {
  const auto actions = enumerate_actions(g);
  if (actions.empty()) throw TerminalError("random_policy: the model admits no action");
  std::uniform_int_distribution<std::size_t> pick(0, actions.size() - 1);
  return actions[pick(rng)];
}

}  // namespace dyngrow
