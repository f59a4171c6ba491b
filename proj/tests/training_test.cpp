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

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "dyngrow/errors.hpp"
#include "test_util.hpp"

namespace dyngrow {
namespace {

TEST(LrSchedule, ProgressiveEndpointsAndPeak) {
  EXPECT_DOUBLE_EQ(lr_at(25, 50, 0.1, LrMode::Progressive), 0.1);
  EXPECT_DOUBLE_EQ(lr_at(0, 50, 0.1, LrMode::Progressive), 0.1 / 50);
  EXPECT_DOUBLE_EQ(lr_at(49, 50, 0.1, LrMode::Progressive), 0.1 / 50);
  for (std::size_t e = 0; e < 50; ++e) EXPECT_EQ(lr_at(e, 50, 0.1, LrMode::Constant), 0.1);
  EXPECT_THROW(lr_at(50, 50, 0.1, LrMode::Progressive), std::invalid_argument);
}

TEST(LrSchedule, PositiveWithSinglePeak) {
  for (std::size_t k = 1; k <= 60; ++k) {
    std::size_t peaks = 0;
    double prev = 0;
    for (std::size_t e = 0; e < k; ++e) {
      const double lr = lr_at(e, k, 0.3, LrMode::Progressive);
      EXPECT_GT(lr, 0.0);
      EXPECT_LE(lr, 0.3);
      peaks += lr == 0.3;
      // Non-decreasing up to the peak, non-increasing after.
      if (e > 0 && e <= k / 2) EXPECT_GE(lr, prev);
      if (e > k / 2) EXPECT_LE(lr, prev);
      prev = lr;
    }
    EXPECT_EQ(peaks, 1u) << k;
  }
}

History with_best(std::initializer_list<double> best) {
  History h;
  std::size_t g = 0;
  for (double b : best) {
    GenerationRecord r;
    r.generation = g++;
    r.best_test_acc = b;
    r.final_test_acc = b;
    r.final_train_acc = b;
    h.generations.push_back(r);
  }
  return h;
}

TEST(Orchestrator, Decisions) {
  EXPECT_TRUE(should_simulate(Orchestrator::Constant, with_best({0.6, 0.7})));
  EXPECT_TRUE(should_simulate(Orchestrator::Constant, with_best({0.7})));
  EXPECT_FALSE(should_simulate(Orchestrator::ProgressCheck, with_best({0.6, 0.7})));
  EXPECT_TRUE(should_simulate(Orchestrator::ProgressCheck, with_best({0.7, 0.65})));
  EXPECT_TRUE(should_simulate(Orchestrator::ProgressCheck, with_best({0.7, 0.7})));
  EXPECT_TRUE(should_simulate(Orchestrator::ProgressCheck, with_best({0.5})));

  History h = with_best({0.6, 0.7});
  EXPECT_FALSE(should_simulate(Orchestrator::Overfit, h));
  h.generations.back().final_train_acc = 0.80;
  EXPECT_TRUE(should_simulate(Orchestrator::Overfit, h));
  EXPECT_FALSE(should_simulate(Orchestrator::Overfit, h, 0.2));
  EXPECT_TRUE(should_simulate(Orchestrator::Overfit, with_best({0.7, 0.6})));
}

// Each sample's single feature is its index, so subsets can be traced back.
Dataset indexed_dataset(const std::vector<std::size_t>& per_class) {
  Dataset ds;
  std::vector<double> values;
  for (std::size_t c = 0; c < per_class.size(); ++c) {
    for (std::size_t i = 0; i < per_class[c]; ++i) {
      values.push_back(static_cast<double>(ds.labels.size()));
      ds.labels.push_back(static_cast<int>(c));
    }
  }
  ds.inputs.emplace_back(ds.labels.size(), Shape{1, 1, 1}, std::move(values));
  ds.class_count = per_class.size();
  return ds;
}

std::vector<std::size_t> ids(const Dataset& ds) {
  std::vector<std::size_t> out;
  for (double v : ds.inputs.front().values()) out.push_back(static_cast<std::size_t>(v));
  return out;
}

TEST(StratifiedSplit, BalancedExact) {
  Rng rng(0);
  const Dataset ds = indexed_dataset(std::vector<std::size_t>(10, 10));
  const auto [train, test] = stratified_split(ds, 0.2, rng);
  EXPECT_EQ(test.size(), 20u);
  EXPECT_EQ(train.size(), 80u);
  for (std::size_t c : test.class_counts()) EXPECT_EQ(c, 2u);
}

TEST(StratifiedSplit, DisjointExhaustiveAndNearProportional) {
  Rng rng(1);
  const std::vector<std::size_t> counts{13, 7, 29, 1, 50};
  const Dataset ds = indexed_dataset(counts);
  for (double f : {0.1, 0.2, 0.33, 0.5, 0.9}) {
    const auto [train, test] = stratified_split(ds, f, rng);
    std::vector<std::size_t> all = ids(train);
    const auto t = ids(test);
    all.insert(all.end(), t.begin(), t.end());
    std::sort(all.begin(), all.end());
    ASSERT_EQ(all.size(), ds.size());
    for (std::size_t i = 0; i < all.size(); ++i) EXPECT_EQ(all[i], i);
    const auto tc = test.class_counts();
    for (std::size_t c = 0; c < counts.size(); ++c)
      EXPECT_LT(std::abs(static_cast<double>(tc[c]) - static_cast<double>(counts[c]) * f), 1.0);
    EXPECT_EQ(test.size(), static_cast<std::size_t>(std::llround(static_cast<double>(ds.size()) * f)));
    // Labels follow their samples.
    for (std::size_t i = 0; i < test.size(); ++i)
      EXPECT_EQ(ds.labels[t[i]], test.labels[i]);
  }
}

TEST(StratifiedSplit, Errors) {
  Rng rng(0);
  Dataset ds = indexed_dataset({5, 5});
  EXPECT_THROW(stratified_split(ds, 0.0, rng), std::invalid_argument);
  EXPECT_THROW(stratified_split(ds, 1.0, rng), std::invalid_argument);
  ds.class_count = 3;
  EXPECT_THROW(stratified_split(ds, 0.2, rng), InvalidDatasetError);
}

TEST(Simset, PerClassCounts) {
  Rng rng(0);
  const Dataset ds = indexed_dataset(std::vector<std::size_t>(10, 30));
  const Dataset s = make_simset(ds, 10, rng);
  EXPECT_EQ(s.size(), 100u);
  for (std::size_t c : s.class_counts()) EXPECT_EQ(c, 10u);
  const auto ones = make_simset(indexed_dataset({4, 2, 9}), 1, rng);
  EXPECT_EQ(ones.size(), 3u);
  EXPECT_EQ(ones.class_counts(), (std::vector<std::size_t>{1, 1, 1}));
  const auto sample_ids = ids(s);
  EXPECT_EQ(std::set<std::size_t>(sample_ids.begin(), sample_ids.end()).size(), 100u);
}

TEST(Simset, ReproducibleAndChecked) {
  const Dataset ds = indexed_dataset({20, 20, 20});
  Rng a(4), b(4);
  EXPECT_EQ(stratified_sample(ds, 5, a), stratified_sample(ds, 5, b));
  EXPECT_THROW(make_simset(indexed_dataset({20, 3}), 5, a), InvalidDatasetError);
}

struct Fixture {
  Dataset train, test, simset;
  LayerGraph model;
};

Fixture small_task(std::uint64_t seed) {
  Rng rng(seed);
  Dataset all = testing::xor_dataset(300, rng);
  auto [train, test] = stratified_split(all, 0.2, rng);
  Dataset simset = make_simset(train, 10, rng);
  LayerGraph model = new_base_model(InputSpec::features(2), 6, 2, rng);
  return {std::move(train), std::move(test), std::move(simset), std::move(model)};
}

TrainConfig quick_config() {
  TrainConfig cfg;
  cfg.generations = 4;
  cfg.epochs_per_generation = 3;
  cfg.lr_max = 0.1;
  cfg.batch_size = 16;
  cfg.budget.sim_epochs = 2;
  cfg.budget.max_iterations = 12;
  cfg.budget.time_limit_s = 30;
  return cfg;
}

TEST(Train, SingleGenerationAccounting) {
  Fixture f = small_task(0);
  TrainConfig cfg = quick_config();
  cfg.generations = 1;
  const TrainResult r = train(f.model, f.train, f.test, f.simset, cfg);
  EXPECT_EQ(r.history.epochs.size(), cfg.epochs_per_generation);
  EXPECT_LE(r.history.simulations(), 1u);
}

TEST(Train, EpochCountIndependentOfOrchestrator) {
  for (Orchestrator o : {Orchestrator::Constant, Orchestrator::ProgressCheck, Orchestrator::Overfit}) {
    Fixture f = small_task(1);
    TrainConfig cfg = quick_config();
    cfg.orchestrator = o;
    cfg.policy = PolicyKind::Random;
    const TrainResult r = train(f.model, f.train, f.test, f.simset, cfg);
    EXPECT_EQ(r.history.epochs.size(), cfg.generations * cfg.epochs_per_generation);
    EXPECT_EQ(r.history.generations.size(), cfg.generations);
    if (o == Orchestrator::Constant) EXPECT_EQ(r.history.simulations(), cfg.generations - 1);
  }
}

TEST(Train, MctsPostActionModelsValidate) {
  Fixture f = small_task(2);
  TrainConfig cfg = quick_config();
  cfg.orchestrator = Orchestrator::Constant;
  std::size_t calls = 0;
  TrainHooks hooks;
  hooks.on_generation = [&](std::size_t gen, const LayerGraph& g) {
    EXPECT_EQ(gen, calls++);
    EXPECT_TRUE(is_valid(g));
  };
  const TrainResult r = train(f.model, f.train, f.test, f.simset, cfg, hooks);
  EXPECT_EQ(calls, cfg.generations);
  for (const auto& g : r.history.generations) {
    EXPECT_TRUE(g.valid_after_action);
    EXPECT_EQ(g.action.has_value(), g.simulated);
  }
  EXPECT_TRUE(is_valid(r.model));
  EXPECT_EQ(r.history.simulations(), cfg.generations - 1);
}

TEST(Train, DeterministicPerSeed) {
  for (PolicyKind p : {PolicyKind::Random, PolicyKind::Greedy, PolicyKind::Mcts}) {
    Fixture f = small_task(3);
    TrainConfig cfg = quick_config();
    cfg.policy = p;
    cfg.orchestrator = Orchestrator::Constant;
    const TrainResult a = train(f.model, f.train, f.test, f.simset, cfg);
    const TrainResult b = train(f.model, f.train, f.test, f.simset, cfg);
    std::ostringstream ca, cb;
    a.history.write_csv(ca);
    b.history.write_csv(cb);
    EXPECT_EQ(ca.str(), cb.str());
    ASSERT_EQ(a.model.edges(), b.model.edges());
    for (const auto& [id, l] : a.model.layers()) {
      EXPECT_EQ(b.model.layer(id).weights, l.weights);
      EXPECT_EQ(b.model.layer(id).bias, l.bias);
    }
  }
}

TEST(Train, ErrorsCarryGeneration) {
  Fixture f = small_task(4);
  f.model.layer(f.model.output()).weights(0, 0) = std::nan("");
  try {
    train(f.model, f.train, f.test, f.simset, quick_config());
    FAIL() << "expected TrainingError";
  } catch (const TrainingError& e) {
    EXPECT_EQ(e.generation(), 0u);
    EXPECT_NE(std::string(e.what()).find("generation 0"), std::string::npos);
  }
}

TEST(History, CsvLayout) {
  Fixture f = small_task(5);
  TrainConfig cfg = quick_config();
  cfg.orchestrator = Orchestrator::Constant;
  cfg.policy = PolicyKind::Random;
  const TrainResult r = train(f.model, f.train, f.test, f.simset, cfg);
  std::ostringstream csv;
  r.history.write_csv(csv);
  std::istringstream in(csv.str());
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "epoch,generation,lr,train_acc,train_loss,test_acc,action");
  std::size_t rows = 0, with_action = 0;
  while (std::getline(in, line)) {
    ++rows;
    EXPECT_EQ(std::count(line.begin(), line.end(), ','), 6);
    with_action += line.back() != ',';
  }
  EXPECT_EQ(rows, cfg.generations * cfg.epochs_per_generation);
  EXPECT_EQ(with_action, cfg.generations - 1);
}

}  // namespace
}  // namespace dyngrow
