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

#include "dyngrow/training.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "dyngrow/errors.hpp"

namespace dyngrow {

void TrainConfig::check() const {
  if (generations < 1) throw std::invalid_argument("generations must be >= 1");
  if (epochs_per_generation < 1) throw std::invalid_argument("epochs per generation must be >= 1");
  if (!(lr_max > 0.0)) throw std::invalid_argument("lr_max must be > 0");
  if (batch_size < 1) throw std::invalid_argument("batch size must be >= 1");
  budget.check();
}

std::size_t History::simulations() const {
  return static_cast<std::size_t>(std::count_if(generations.begin(), generations.end(),
                                                [](const GenerationRecord& g) { return g.simulated; }));
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void History::write_csv(std::ostream& out) const {
  out << "epoch,generation,lr,train_acc,train_loss,test_acc,action\n";
  for (std::size_t i = 0; i < epochs.size(); ++i) {
    const EpochRecord& e = epochs[i];
    out << e.epoch << ',' << e.generation << ',' << fmt(e.lr) << ',' << fmt(e.train_acc) << ','
        << fmt(e.train_loss) << ',' << fmt(e.test_acc) << ',';
    const bool last_of_generation = i + 1 == epochs.size() || epochs[i + 1].generation != e.generation;
    if (last_of_generation && e.generation < generations.size() &&
        generations[e.generation].action) {
      out << to_string(*generations[e.generation].action);
    }
    out << '\n';
  }
}

bool should_simulate(Orchestrator mode, const History& history, double overfit_gap) {
  if (mode == Orchestrator::Constant) return true;
  const auto& gens = history.generations;
  if (gens.empty()) return true;
  const bool no_progress =
      gens.size() < 2 || !(gens.back().best_test_acc > gens[gens.size() - 2].best_test_acc);
  if (mode == Orchestrator::ProgressCheck) return no_progress;
  return no_progress || gens.back().final_train_acc - gens.back().final_test_acc > overfit_gap;
}

namespace {

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& ds) {
  std::vector<std::vector<std::size_t>> by_class(ds.class_count);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    by_class.at(static_cast<std::size_t>(ds.labels[i])).push_back(i);
  }
  return by_class;
}

}  // namespace

std::pair<Dataset, Dataset> stratified_split(const Dataset& ds, double test_fraction, Rng& rng) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("test fraction must lie in (0, 1)");
  }
  ds.check();
  auto by_class = indices_by_class(ds);
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    if (by_class[c].empty()) {
      throw InvalidDatasetError("class " + std::to_string(c) + " has no samples");
    }
  }

  const std::size_t classes = by_class.size();
  std::vector<std::size_t> take(classes);
  std::vector<double> remainder(classes);
  std::size_t assigned = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    const double exact = static_cast<double>(by_class[c].size()) * test_fraction;
    take[c] = static_cast<std::size_t>(std::floor(exact));
    remainder[c] = exact - static_cast<double>(take[c]);
    assigned += take[c];
  }
  const auto total = static_cast<std::size_t>(std::llround(static_cast<double>(ds.size()) * test_fraction));
  std::vector<std::size_t> order(classes);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i = 0; assigned < total && i < classes; ++i) {
    if (remainder[order[i]] > 0.0) {
      ++take[order[i]];
      ++assigned;
    }
  }

  std::vector<std::size_t> train_idx, test_idx;
  for (std::size_t c = 0; c < classes; ++c) {
    auto& idx = by_class[c];
    std::shuffle(idx.begin(), idx.end(), rng);
    test_idx.insert(test_idx.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(take[c]));
    train_idx.insert(train_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(take[c]), idx.end());
  }
  std::shuffle(train_idx.begin(), train_idx.end(), rng);
  std::shuffle(test_idx.begin(), test_idx.end(), rng);
  return {ds.subset(train_idx), ds.subset(test_idx)};
}

std::vector<std::size_t> stratified_sample(const Dataset& ds, std::size_t per_class, Rng& rng) {
  auto by_class = indices_by_class(ds);
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < by_class.size(); ++c) {
    auto& idx = by_class[c];
    if (idx.size() < per_class) {
      throw InvalidDatasetError("class " + std::to_string(c) + " has " + std::to_string(idx.size()) +
                                " samples, need " + std::to_string(per_class));
    }
    std::shuffle(idx.begin(), idx.end(), rng);
    out.insert(out.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(per_class));
  }
  return out;
}

Dataset make_simset(const Dataset& ds, std::size_t per_class, Rng& rng) {
  const auto idx = stratified_sample(ds, per_class, rng);
  return ds.subset(idx);
}

TrainResult train(LayerGraph model, const Dataset& train_set, const Dataset& test_set,
                  const Dataset& simset, const TrainConfig& cfg, const TrainHooks& hooks) {
  cfg.check();
  train_set.check();
  test_set.check();
  const std::size_t classes = model.layer(model.output()).neurons();
  if (train_set.class_count > classes || test_set.class_count > classes) {
    throw std::invalid_argument("dataset has more classes than the model outputs");
  }

  Rng rng(cfg.seed);
  History history;
  const std::size_t k = cfg.epochs_per_generation;
  for (std::size_t gen = 0; gen < cfg.generations; ++gen) {
    try {
      GenerationRecord rec;
      rec.generation = gen;
      for (std::size_t e = 0; e < k; ++e) {
        EpochRecord er;
        er.epoch = gen * k + e;
        er.generation = gen;
        er.lr = lr_at(e, k, cfg.lr_max, cfg.lr_mode);
        const EpochStats fit = run_epoch(model, train_set, er.lr, cfg.batch_size, rng);
        er.train_acc = fit.accuracy;
        er.train_loss = fit.loss;
        er.test_acc = evaluate(model, test_set).accuracy;
        rec.best_test_acc = e == 0 ? er.test_acc : std::max(rec.best_test_acc, er.test_acc);
        rec.final_train_acc = er.train_acc;
        rec.final_test_acc = er.test_acc;
        history.epochs.push_back(er);
      }
      history.generations.push_back(rec);
      if (hooks.on_generation) hooks.on_generation(gen, model);

      if (gen + 1 == cfg.generations) break;
      if (!should_simulate(cfg.orchestrator, history, cfg.overfit_gap)) continue;

      Rng policy_rng(rng());
      Action action;
      switch (cfg.policy) {
        case PolicyKind::Mcts:
          action = search(model, simset, cfg.budget, cfg.score_mode, policy_rng, hooks.search_telemetry);
          break;
        case PolicyKind::Greedy:
          action = greedy_policy(model, simset, cfg.budget, cfg.score_mode, policy_rng);
          break;
        case PolicyKind::Random:
          action = random_policy(model, policy_rng);
          break;
      }
      model = execute(action, model, policy_rng);
      GenerationRecord& last = history.generations.back();
      last.simulated = true;
      last.action = action;
      last.valid_after_action = is_valid(model);
    } catch (const TrainingError&) {
      throw;
    } catch (const std::exception& e) {
      throw TrainingError(gen, e.what());
    }
  }
  return {std::move(model), std::move(history)};
}

std::string_view to_string(Orchestrator o) {
  switch (o) {
    case Orchestrator::Constant: return "constant";
    case Orchestrator::ProgressCheck: return "progress_check";
    case Orchestrator::Overfit: return "overfit";
  }
  return "?";
}

std::string_view to_string(PolicyKind p) {
  switch (p) {
    case PolicyKind::Mcts: return "mcts";
    case PolicyKind::Greedy: return "greedy";
    case PolicyKind::Random: return "random";
  }
  return "?";
}

std::string_view to_string(ScoreMode m) {
  return m == ScoreMode::Accuracy ? "accuracy" : "loss";
}

std::string_view to_string(LrMode m) {
  return m == LrMode::Progressive ? "progressive" : "constant";
}

}  // namespace dyngrow
