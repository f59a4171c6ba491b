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

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "dyngrow/errors.hpp"
#include "dyngrow/propagation.hpp"
#include "dyngrow/sgd.hpp"
#include "test_util.hpp"

namespace dyngrow {
namespace {

MctsNode node_with(const std::vector<double>& q, const std::vector<std::size_t>& n,
                   std::size_t parent) {
  Rng rng(0);
  MctsNode node(new_base_model(InputSpec::features(2), 2, 2, rng));
  for (std::size_t i = 0; i < q.size(); ++i) {
    MctsEdge e;
    e.action = Action::remove(LayerId{static_cast<std::uint32_t>(i)});
    e.mean_score = q[i];
    e.visits = n[i];
    node.edges.push_back(std::move(e));
  }
  node.visits = parent;
  return node;
}

TEST(Ucb, EqualCountsReduceToQ) {
  const MctsNode node = node_with({0.8, 0.5}, {5, 5}, 10);
  EXPECT_EQ(ucb_select(node, std::sqrt(2.0)), 0u);
}

TEST(Ucb, UnvisitedEdgeFirst) {
  const MctsNode node = node_with({0.9, 0.0, 0.99}, {3, 0, 8}, 12);
  EXPECT_EQ(ucb_select(node, 1.0), 1u);
  EXPECT_TRUE(std::isinf(ucb_value(0.0, 12, 0, 1.0)));
}

TEST(Ucb, ExplorationOvertakesLowCount) {
  const MctsNode node = node_with({0.9, 0.1}, {100, 1}, 101);
  const double c = 1.414;
  const double first = 0.9 + c * std::sqrt(std::log(101.0) / 100.0);
  const double second = 0.1 + c * std::sqrt(std::log(101.0) / 1.0);
  EXPECT_NEAR(ucb_value(0.9, 101, 100, c), first, 1e-6);
  EXPECT_NEAR(ucb_value(0.1, 101, 1, c), second, 1e-6);
  EXPECT_NEAR(second, 3.137672, 1e-6);
  EXPECT_NEAR(first, 1.203767, 1e-6);
  EXPECT_EQ(ucb_select(node, c), 1u);
}

TEST(Ucb, TiesGoToEarlierEdge) {
  const MctsNode node = node_with({0.5, 0.5, 0.5}, {2, 2, 2}, 7);
  EXPECT_EQ(ucb_select(node, 1.0), 0u);
  EXPECT_THROW(ucb_select(node_with({}, {}, 1), 1.0), TerminalError);
}

TEST(Rollout, ZeroStepsIsIdentity) {
  Rng rng(0);
  const LayerGraph g = new_base_model(InputSpec::image(1, 4, 4), 6, 3, rng);
  const LayerGraph r = rollout(g, 0, rng);
  EXPECT_EQ(r.edges(), g.edges());
  for (const auto& [id, l] : g.layers()) EXPECT_EQ(r.layer(id).weights, l.weights);
}

TEST(Rollout, ReproducibleAndValid) {
  Rng rng(0);
  const LayerGraph g = new_base_model(InputSpec::image(1, 4, 4), 6, 3, rng);
  Rng a(42), b(42);
  const LayerGraph ra = rollout(g, 3, a);
  const LayerGraph rb = rollout(g, 3, b);
  EXPECT_EQ(ra.edges(), rb.edges());
  for (const auto& [id, l] : ra.layers()) EXPECT_EQ(rb.layer(id).weights, l.weights);
  for (int i = 0; i < 500; ++i) ASSERT_TRUE(is_valid(rollout(g, 1 + i % 5, rng)));
}

TEST(Score, UntrainedUniformModel) {
  Rng rng(0);
  LayerGraph g = new_base_model(InputSpec::features(3), 4, 10, rng);
  for (auto& [id, l] : g.layers()) {
    l.weights.fill(0.0);
    l.bias.fill(0.0);
  }
  const Dataset simset = testing::random_dataset(100, Shape{3, 1, 1}, 10, rng);
  SearchBudget budget;
  budget.sim_epochs = 0;
  EXPECT_DOUBLE_EQ(score(g, simset, budget, ScoreMode::Accuracy, rng), 0.1);
  EXPECT_NEAR(score(g, simset, budget, ScoreMode::Loss, rng), 0.1, 1e-12);
}

TEST(Score, LossModeIsExpOfNegativeLoss) {
  Rng rng(1);
  const LayerGraph g = new_base_model(InputSpec::features(3), 4, 3, rng);
  const Dataset simset = testing::random_dataset(30, Shape{3, 1, 1}, 3, rng);
  SearchBudget budget;
  budget.sim_epochs = 0;
  EXPECT_NEAR(score(g, simset, budget, ScoreMode::Loss, rng), std::exp(-evaluate(g, simset).loss), 1e-15);
}

TEST(Score, DeterministicPerSeed) {
  Rng rng(2);
  const LayerGraph g = new_base_model(InputSpec::image(1, 4, 4), 6, 3, rng);
  const Dataset simset = testing::random_dataset(30, Shape{1, 4, 4}, 3, rng);
  SearchBudget budget;
  budget.sim_epochs = 3;
  for (ScoreMode m : {ScoreMode::Accuracy, ScoreMode::Loss}) {
    Rng a(9), b(9);
    const double sa = score(g, simset, budget, m, a);
    EXPECT_EQ(sa, score(g, simset, budget, m, b));
    EXPECT_GE(sa, 0.0);
    EXPECT_LE(sa, 1.0);
  }
}

TEST(Score, DivergenceScoresZero) {
  Rng rng(3);
  LayerGraph g = new_base_model(InputSpec::features(3), 4, 3, rng);
  g.layer(g.output()).weights(0, 0) = std::numeric_limits<double>::quiet_NaN();
  Dataset simset = testing::random_dataset(30, Shape{3, 1, 1}, 3, rng);
  SearchBudget budget;
  budget.sim_epochs = 2;
  EXPECT_EQ(score(g, simset, budget, ScoreMode::Accuracy, rng), 0.0);
  EXPECT_EQ(score(g, simset, budget, ScoreMode::Loss, rng), 0.0);
}

struct TreeCheck {
  std::map<std::string, std::vector<double>> scores;  // path prefix -> scores
};

void check_edges(const MctsNode& node, const std::string& prefix, const TreeCheck& log,
                 std::size_t& checked) {
  std::size_t visit_sum = 0;
  for (const MctsEdge& e : node.edges) {
    visit_sum += e.visits;
    if (e.visits == 0) continue;
    const std::string key = prefix.empty() ? to_string(e.action) : prefix + " | " + to_string(e.action);
    const auto& s = log.scores.at(key);
    ASSERT_EQ(s.size(), e.visits) << key;
    const double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    EXPECT_NEAR(e.mean_score, mean, 1e-12) << key;
    ++checked;
    check_edges(*e.child, key, log, checked);
  }
  if (node.expanded) {
    EXPECT_EQ(node.visits, 1 + visit_sum);
    const auto actions = enumerate_actions(*node.structure);
    ASSERT_EQ(node.edges.size(), actions.size());
    for (std::size_t i = 0; i < actions.size(); ++i) EXPECT_EQ(node.edges[i].action, actions[i]);
  }
}

TEST(Search, TreeAccountingMatchesTelemetry) {
  Rng rng(4);
  const LayerGraph g = new_base_model(InputSpec::image(1, 4, 4), 4, 3, rng);
  const Dataset simset = testing::random_dataset(30, Shape{1, 4, 4}, 3, rng);
  SearchBudget budget;
  budget.sim_epochs = 1;
  budget.rollout_depth = 1;
  budget.time_limit_s = 60;
  budget.max_iterations = 40;
  MctsSearch search(g, simset, budget, ScoreMode::Accuracy, Rng(1));
  std::ostringstream telemetry;
  search.set_telemetry(&telemetry);
  search.run();
  EXPECT_EQ(search.iterations(), 40u);

  std::size_t root_visits = 0;
  for (const MctsEdge& e : search.root().edges) root_visits += e.visits;
  EXPECT_EQ(root_visits, search.iterations());

  // Every prefix of an iteration's path saw that iteration's score.
  TreeCheck log;
  std::istringstream in(telemetry.str());
  std::string line;
  std::size_t lines = 0;
  while (std::getline(in, line)) {
    ++lines;
    const auto c1 = line.find(',');
    const auto c2 = line.find(',', c1 + 1);
    const auto c3 = line.find(',', c2 + 1);
    const std::string path = line.substr(c1 + 1, c2 - c1 - 1);
    const double s = std::stod(line.substr(c2 + 1, c3 - c2 - 1));
    std::size_t pos = 0;
    while (true) {
      const auto bar = path.find(" | ", pos);
      log.scores[path.substr(0, bar)].push_back(s);
      if (bar == std::string::npos) break;
      pos = bar + 3;
    }
  }
  EXPECT_EQ(lines, 40u);
  std::size_t checked = 0;
  check_edges(search.root(), "", log, checked);
  EXPECT_GT(checked, search.root().edges.size());
}

TEST(Search, ReproducibleWithIterationCap) {
  Rng rng(5);
  const LayerGraph g = new_base_model(InputSpec::image(1, 4, 4), 4, 3, rng);
  const Dataset simset = testing::random_dataset(30, Shape{1, 4, 4}, 3, rng);
  SearchBudget budget;
  budget.sim_epochs = 1;
  budget.time_limit_s = 60;
  budget.max_iterations = 25;
  std::ostringstream ta, tb;
  Rng a(7), b(7);
  const Action x = search(g, simset, budget, ScoreMode::Accuracy, a, &ta);
  const Action y = search(g, simset, budget, ScoreMode::Accuracy, b, &tb);
  EXPECT_EQ(x, y);
  // Elapsed time differs between runs; compare everything before it.
  auto strip = [](const std::string& text) {
    std::istringstream in(text);
    std::string line, out;
    while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
    return out;
  };
  EXPECT_EQ(strip(ta.str()), strip(tb.str()));
}

TEST(Search, CompletesOneIterationOnTinyBudget) {
  Rng rng(6);
  const LayerGraph g = new_base_model(InputSpec::features(3), 4, 3, rng);
  const Dataset simset = testing::random_dataset(30, Shape{3, 1, 1}, 3, rng);
  SearchBudget budget;
  budget.time_limit_s = 1e-9;
  MctsSearch s(g, simset, budget, ScoreMode::Accuracy, Rng(0));
  s.run();
  EXPECT_EQ(s.iterations(), 1u);
}

TEST(Search, RobustChildPrefersVisitsThenQ) {
  Rng rng(0);
  const LayerGraph g = new_base_model(InputSpec::features(3), 4, 3, rng);
  const Dataset simset = testing::random_dataset(30, Shape{3, 1, 1}, 3, rng);
  SearchBudget budget;
  budget.sim_epochs = 1;
  budget.max_iterations = 30;
  MctsSearch s(g, simset, budget, ScoreMode::Accuracy, Rng(0));
  const Action best = s.run();
  std::size_t most = 0;
  for (const MctsEdge& e : s.root().edges) most = std::max(most, e.visits);
  double best_q = -1;
  Action want;
  for (const MctsEdge& e : s.root().edges) {
    if (e.visits == most && e.mean_score > best_q) {
      best_q = e.mean_score;
      want = e.action;
    }
  }
  EXPECT_EQ(best, want);
}

// A trained one-hidden-layer network on a quadrant task. Removing the hidden
// layer discards what was learned; the residual adds keep it.
struct Rigged {
  LayerGraph model;
  Dataset simset;
};

Rigged rigged_task(std::uint64_t seed) {
  Rng rng(seed);
  Dataset train = testing::xor_dataset(400, rng);
  LayerGraph g = new_base_model(InputSpec::features(2), 6, 2, rng);
  g = execute(Action::dense_seq(g.inputs().front(), g.output()), g, rng);
  for (int e = 0; e < 60; ++e) run_epoch(g, train, 0.1, 16, rng);
  return {g, testing::xor_dataset(100, rng)};
}

TEST(Search, RiggedTaskPrefersGrowth) {
  SearchBudget budget;
  budget.time_limit_s = 30;
  budget.max_iterations = 150;
  budget.sim_epochs = 3;
  budget.sim_lr = 0.02;
  int adds = 0, agree = 0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const Rigged r = rigged_task(seed);
    ASSERT_GT(evaluate(r.model, r.simset).accuracy, 0.8) << "seed " << seed;
    Rng rng(seed);
    const Action a = search(r.model, r.simset, budget, ScoreMode::Accuracy, rng);
    adds += a.is_add();
    const Action gr = greedy_policy(r.model, r.simset, budget, ScoreMode::Accuracy, rng);
    agree += gr.is_add() == a.is_add();
  }
  EXPECT_GE(adds, 9);
  EXPECT_GE(agree, 9);
}

TEST(Greedy, DeterministicAndPicksArgmax) {
  Rng rng(1);
  const LayerGraph g = new_base_model(InputSpec::features(3), 4, 3, rng);
  const Dataset simset = testing::random_dataset(30, Shape{3, 1, 1}, 3, rng);
  SearchBudget budget;
  budget.sim_epochs = 2;
  Rng a(3), b(3);
  EXPECT_EQ(greedy_policy(g, simset, budget, ScoreMode::Accuracy, a),
            greedy_policy(g, simset, budget, ScoreMode::Accuracy, b));
}

// Upper 1% point of chi-square with df degrees of freedom (Wilson-Hilferty).
double chi2_critical_99(double df) {
  const double z = 2.326347874;
  const double t = 1.0 - 2.0 / (9.0 * df) + z * std::sqrt(2.0 / (9.0 * df));
  return df * t * t * t;
}

TEST(RandomPolicy, UniformOverActions) {
  Rng rng(3);
  const LayerGraph base = new_base_model(InputSpec::image(1, 4, 4), 5, 3, rng);
  const LayerGraph g = testing::random_graph(base, 4, 4, rng);
  const auto actions = enumerate_actions(g);
  ASSERT_GT(actions.size(), 5u);
  std::map<std::string, int> counts;
  Rng draw(11);
  const int n = 10000;
  for (int i = 0; i < n; ++i) counts[to_string(random_policy(g, draw))]++;
  EXPECT_EQ(counts.size(), actions.size());
  const double expected = static_cast<double>(n) / static_cast<double>(actions.size());
  double chi2 = 0;
  for (const Action& a : actions) {
    const double d = counts[to_string(a)] - expected;
    chi2 += d * d / expected;
  }
  EXPECT_LT(chi2, chi2_critical_99(static_cast<double>(actions.size() - 1)));

  Rng x(5), y(5);
  EXPECT_EQ(random_policy(g, x), random_policy(g, y));
}

}  // namespace
}  // namespace dyngrow
