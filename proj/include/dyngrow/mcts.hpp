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

#ifndef DYNGROW_MCTS_HPP_
#define DYNGROW_MCTS_HPP_

#include <chrono>
#include <cmath>
#include <cstddef>
#include <memory>
#include <numbers>
#include <optional>
#include <ostream>
#include <vector>

#include "dyngrow/actions.hpp"
#include "dyngrow/data.hpp"
#include "dyngrow/graph.hpp"
#include "dyngrow/sgd.hpp"

namespace dyngrow {

enum class ScoreMode { Accuracy, Loss };

struct SearchBudget {
  double time_limit_s = 10.0;
  std::size_t rollout_depth = 2;
  double exploration = std::numbers::sqrt2;
  std::size_t sim_epochs = 10;
  // Stop after this many iterations even if time remains; 0 means no cap.
  // With a cap that binds before the clock, search is reproducible per seed.
  std::size_t max_iterations = 0;
  // Short training used to score a candidate.
  double sim_lr = 0.05;
  LrMode sim_lr_mode = LrMode::Progressive;
  std::size_t sim_batch_size = 32;

  void check() const;
};

struct MctsNode;

struct MctsEdge {
  Action action;
  std::unique_ptr<MctsNode> child;
  std::size_t visits = 0;   // N(M_s, a)
  double mean_score = 0.0;  // Q(M_s, a)
};

struct MctsNode {
  MctsNode() = default;
  explicit MctsNode(LayerGraph g) : structure(std::move(g)) {}

  // Built on the first descent into the node, so unvisited children of an
  // expanded node do not hold a copy of the model.
  std::optional<LayerGraph> structure;
  // N(s): one for the visit that created the node plus one per descent
  // through it, so visits == 1 + sum of edge visits.
  std::size_t visits = 1;
  bool expanded = false;
  std::vector<MctsEdge> edges;
};

// Q + c * sqrt(ln(N) / n); infinite for n == 0.
double ucb_value(double mean_score, std::size_t parent_visits, std::size_t edge_visits,
                 double exploration);

// Index of the edge maximising ucb_value; ties go to the lowest index, which
// follows the enumeration order. Throws TerminalError on an empty node.
std::size_t ucb_select(const MctsNode& node, double exploration);

// Applies up to n uniformly random legal actions.
LayerGraph rollout(LayerGraph g, std::size_t n, Rng& rng);

// Trains a copy of g on simset for budget.sim_epochs epochs and scores it in
// [0, 1]: accuracy on simset, or exp(-loss). Diverged training scores 0.
double score(const LayerGraph& g, const Dataset& simset, const SearchBudget& budget,
             ScoreMode mode, Rng& rng);

// Time-limited UCT over structural mutations.
class MctsSearch {
 public:
  MctsSearch(LayerGraph root, const Dataset& simset, SearchBudget budget, ScoreMode mode, Rng rng);

  // Selection, expansion, rollout and backpropagation once. Returns the score.
  double iterate();
  // Iterates until the budget is spent (at least once) and returns best_action().
  Action run();
  // Most visited root action; ties prefer higher Q, then enumeration order.
  Action best_action() const;

  const MctsNode& root() const { return *root_; }
  std::size_t iterations() const { return iterations_; }
  double elapsed_s() const;

  // CSV lines "iteration,path,score,elapsed_s" are appended per iteration.
  void set_telemetry(std::ostream* out);

 private:
  void expand(MctsNode& node);

  std::unique_ptr<MctsNode> root_;
  const Dataset& simset_;
  SearchBudget budget_;
  ScoreMode mode_;
  Rng rng_;
  std::size_t iterations_ = 0;
  std::chrono::steady_clock::time_point start_;
  std::ostream* telemetry_ = nullptr;
};

Action search(const LayerGraph& g, const Dataset& simset, const SearchBudget& budget,
              ScoreMode mode, Rng& rng, std::ostream* telemetry = nullptr);

// Scores every action one step ahead and takes the best.
Action greedy_policy(const LayerGraph& g, const Dataset& simset, const SearchBudget& budget,
                     ScoreMode mode, Rng& rng);

Action random_policy(const LayerGraph& g, Rng& rng);

}  // namespace dyngrow

#endif  // DYNGROW_MCTS_HPP_
