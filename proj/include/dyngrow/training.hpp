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

#ifndef DYNGROW_TRAINING_HPP_
#define DYNGROW_TRAINING_HPP_

#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dyngrow/actions.hpp"
#include "dyngrow/data.hpp"
#include "dyngrow/graph.hpp"
#include "dyngrow/mcts.hpp"
#include "dyngrow/sgd.hpp"

namespace dyngrow {

enum class Orchestrator { Constant, ProgressCheck, Overfit };
enum class PolicyKind { Mcts, Greedy, Random };

struct TrainConfig {
  std::size_t generations = 10;
  std::size_t epochs_per_generation = 50;
  double lr_max = 0.05;
  LrMode lr_mode = LrMode::Progressive;
  Orchestrator orchestrator = Orchestrator::ProgressCheck;
  ScoreMode score_mode = ScoreMode::Accuracy;
  PolicyKind policy = PolicyKind::Mcts;
  SearchBudget budget;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  // Train/test accuracy gap that makes the Overfit orchestrator fire.
  double overfit_gap = 0.05;

  void check() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // global, 0-based
  std::size_t generation = 0;
  double lr = 0.0;
  double train_acc = 0.0;
  double train_loss = 0.0;
  double test_acc = 0.0;
};

struct GenerationRecord {
  std::size_t generation = 0;
  double best_test_acc = 0.0;
  double final_train_acc = 0.0;
  double final_test_acc = 0.0;
  bool simulated = false;
  std::optional<Action> action;
  bool valid_after_action = true;
};

struct History {
  std::vector<EpochRecord> epochs;
  std::vector<GenerationRecord> generations;

  std::size_t simulations() const;
  // Header: epoch,generation,lr,train_acc,train_loss,test_acc,action. The
  // action column is filled on the last epoch of a generation that mutated.
  void write_csv(std::ostream& out) const;
};

// Raised by train(); wraps the underlying failure with the generation index.
class TrainingError : public std::runtime_error {
 public:
  TrainingError(std::size_t generation, const std::string& what)
      : std::runtime_error("generation " + std::to_string(generation) + ": " + what),
        generation_(generation) {}
  std::size_t generation() const { return generation_; }

 private:
  std::size_t generation_;
};

// Decides after a completed generation whether to search for a mutation.
bool should_simulate(Orchestrator mode, const History& history, double overfit_gap = 0.05);

// Per-class split. Each class contributes floor(n_c * f) test samples and the
// remainder goes to the classes with the largest fractional parts, so the test
// total is round(n * f).
std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, double test_fraction, Rng& rng);

// Indices of `per_class` samples per class, drawn without replacement.
std::vector<std::size_t> stratified_sample(const Dataset& ds, std::size_t per_class, Rng& rng);
Dataset make_simset(const Dataset& ds, std::size_t per_class, Rng& rng);

struct TrainResult {
  LayerGraph model;
  History history;
};

struct TrainHooks {
  // Called with the model that was trained in each generation.
  std::function<void(std::size_t, const LayerGraph&)> on_generation;
  // Receives MCTS telemetry when the policy is Mcts.
  std::ostream* search_telemetry = nullptr;
};

// Generational training: K SGD epochs, then (except after the last
// generation) an optional structural mutation chosen by the policy.
TrainResult train(LayerGraph model, const Dataset& train_set, const Dataset& test_set,
                  const Dataset& simset, const TrainConfig& cfg, const TrainHooks& hooks = {});

std::string_view to_string(Orchestrator o);
std::string_view to_string(PolicyKind p);
std::string_view to_string(ScoreMode m);
std::string_view to_string(LrMode m);

}  // namespace dyngrow

#endif  // DYNGROW_TRAINING_HPP_
