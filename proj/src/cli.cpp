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

#include "dyngrow/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "dyngrow/data.hpp"
#include "dyngrow/errors.hpp"
#include "dyngrow/model_io.hpp"
#include "dyngrow/training.hpp"

namespace dyngrow {

namespace fs = std::filesystem;

namespace {

struct Settings {
  std::string images;
  std::string labels;
  std::string timeseries;
  std::size_t limit = 0;
  double test_fraction = 0.2;
  std::size_t per_class = 10;
  bool separate_inputs = false;
  double eps = -1.0;  // < 0: use eps_quantile
  double eps_quantile = 0.1;
  std::size_t max_side = 0;

  std::size_t def_neu = 10;
  std::size_t conv_channels = 4;

  std::size_t generations = 10;
  std::size_t epochs = 50;
  double lr = 0.05;
  LrMode lr_mode = LrMode::Progressive;
  Orchestrator orchestrator = Orchestrator::ProgressCheck;
  ScoreMode score_mode = ScoreMode::Accuracy;
  PolicyKind policy = PolicyKind::Mcts;
  std::size_t batch_size = 32;
  std::uint64_t seed = 0;
  double overfit_gap = 0.05;
  double time_limit = 10.0;
  std::size_t rollout_depth = 2;
  double exploration = std::numbers::sqrt2;
  std::size_t sim_epochs = 10;
  std::size_t max_iterations = 0;

  std::string lr_mode_name = "progressive";
  std::string orchestrator_name = "progress_check";
  std::string score_mode_name = "accuracy";
  std::string policy_name = "mcts";

  std::string out = "run";
  std::string model;
  std::string manifest;
  std::string config;
};

const std::map<std::string, LrMode> kLrModes{{"progressive", LrMode::Progressive},
                                             {"constant", LrMode::Constant}};
const std::map<std::string, Orchestrator> kOrchestrators{
    {"constant", Orchestrator::Constant},
    {"progress_check", Orchestrator::ProgressCheck},
    {"progress-check", Orchestrator::ProgressCheck},
    {"overfit", Orchestrator::Overfit}};
const std::map<std::string, ScoreMode> kScoreModes{{"accuracy", ScoreMode::Accuracy},
                                                   {"loss", ScoreMode::Loss}};
const std::map<std::string, PolicyKind> kPolicies{
    {"mcts", PolicyKind::Mcts}, {"greedy", PolicyKind::Greedy}, {"random", PolicyKind::Random}};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// Every key here is also a long flag of `train`.
std::map<std::string, std::string> snapshot(const Settings& s) {
  return {
      {"images", s.images},
      {"labels", s.labels},
      {"timeseries", s.timeseries},
      {"limit", std::to_string(s.limit)},
      {"test-fraction", num(s.test_fraction)},
      {"per-class", std::to_string(s.per_class)},
      {"separate-inputs", s.separate_inputs ? "true" : "false"},
      {"eps", num(s.eps)},
      {"eps-quantile", num(s.eps_quantile)},
      {"max-side", std::to_string(s.max_side)},
      {"def-neu", std::to_string(s.def_neu)},
      {"conv-channels", std::to_string(s.conv_channels)},
      {"generations", std::to_string(s.generations)},
      {"epochs", std::to_string(s.epochs)},
      {"lr", num(s.lr)},
      {"lr-mode", std::string(to_string(s.lr_mode))},
      {"orchestrator", std::string(to_string(s.orchestrator))},
      {"score-mode", std::string(to_string(s.score_mode))},
      {"policy", std::string(to_string(s.policy))},
      {"batch-size", std::to_string(s.batch_size)},
      {"seed", std::to_string(s.seed)},
      {"overfit-gap", num(s.overfit_gap)},
      {"time-limit", num(s.time_limit)},
      {"rollout-depth", std::to_string(s.rollout_depth)},
      {"exploration", num(s.exploration)},
      {"sim-epochs", std::to_string(s.sim_epochs)},
      {"max-iterations", std::to_string(s.max_iterations)},
  };
}

void add_data_options(CLI::App* cmd, Settings& s) {
  cmd->add_option("--images", s.images, "IDX image file (optionally gzipped)");
  cmd->add_option("--labels", s.labels, "IDX label file (optionally gzipped)");
  cmd->add_option("--timeseries", s.timeseries, "multivariate time-series CSV");
  cmd->add_option("--separate-inputs", s.separate_inputs,
                  "time series: one input layer per dimension (true/false)");
  cmd->add_option("--eps", s.eps, "time series: fixed recurrence threshold");
  cmd->add_option("--eps-quantile", s.eps_quantile,
                  "time series: threshold as a quantile of pairwise distances");
  cmd->add_option("--max-side", s.max_side, "time series: downsample plots to this side (0 = off)");
}

void add_train_options(CLI::App* cmd, Settings& s) {
  add_data_options(cmd, s);
  cmd->add_option("--limit", s.limit, "stratified subsample of this many samples (0 = all)");
  cmd->add_option("--test-fraction", s.test_fraction, "held-out test fraction");
  cmd->add_option("--per-class", s.per_class, "simulation-set samples per class");
  cmd->add_option("--def-neu", s.def_neu, "default neurons per dense layer");
  cmd->add_option("--conv-channels", s.conv_channels, "channels per convolution layer");
  cmd->add_option("--generations", s.generations, "number of generations");
  cmd->add_option("--epochs", s.epochs, "epochs per generation");
  cmd->add_option("--lr", s.lr, "peak learning rate");
  cmd->add_option("--lr-mode", s.lr_mode_name, "progressive|constant")
      ->check(CLI::IsMember(kLrModes));
  cmd->add_option("--orchestrator", s.orchestrator_name, "constant|progress_check|overfit")
      ->check(CLI::IsMember(kOrchestrators));
  cmd->add_option("--score-mode", s.score_mode_name, "accuracy|loss")
      ->check(CLI::IsMember(kScoreModes));
  cmd->add_option("--policy", s.policy_name, "mcts|greedy|random")
      ->check(CLI::IsMember(kPolicies));
  cmd->add_option("--batch-size", s.batch_size, "mini-batch size");
  cmd->add_option("--seed", s.seed, "random seed");
  cmd->add_option("--overfit-gap", s.overfit_gap, "train/test gap for the overfit orchestrator");
  cmd->add_option("--time-limit", s.time_limit, "search seconds per generation");
  cmd->add_option("--rollout-depth", s.rollout_depth, "random actions per rollout");
  cmd->add_option("--exploration", s.exploration, "UCB1 exploration constant");
  cmd->add_option("--sim-epochs", s.sim_epochs, "training epochs when scoring a candidate");
  cmd->add_option("--max-iterations", s.max_iterations, "search iteration cap (0 = time only)");
  cmd->add_option("--out", s.out, "output directory");
  cmd->add_option("--manifest", s.manifest, "re-run with the configuration of a manifest");
}

struct LoadedData {
  Dataset dataset;
  std::map<std::string, std::string> fingerprints;
  bool timeseries = false;
  std::size_t dims = 1;
};

std::string fingerprint(const std::string& path) {
  return hex64(fnv1a64(read_file(path)));
}

LoadedData load_data(const Settings& s) {
  LoadedData d;
  if (!s.timeseries.empty()) {
    const MtsDataset mts = load_timeseries_csv(s.timeseries);
    RecurrenceOptions opt;
    opt.eps = s.eps >= 0.0 ? EpsRule::fixed(s.eps) : EpsRule::quantile(s.eps_quantile);
    opt.max_side = s.max_side;
    const auto per_dim = mts_to_images(mts, opt);
    d.dataset = s.separate_inputs ? stack_as_inputs(per_dim) : stack_as_channels(per_dim);
    d.timeseries = true;
    d.dims = mts.dims;
    d.fingerprints["timeseries"] = fingerprint(s.timeseries);
    return d;
  }
  if (s.images.empty() || s.labels.empty()) {
    throw CLI::ValidationError("data", "either --timeseries or both --images and --labels are required");
  }
  d.dataset = load_idx(s.images, s.labels);
  d.fingerprints["images"] = fingerprint(s.images);
  d.fingerprints["labels"] = fingerprint(s.labels);
  return d;
}

// Turns key=value pairs into "--key=value" arguments placed before the user's
// own, so explicit flags win.
std::vector<std::string> with_defaults(const std::vector<std::string>& args,
                                       const std::map<std::string, std::string>& defaults) {
  if (args.empty()) return args;
  std::vector<std::string> out{args.front()};
  for (const auto& [k, v] : defaults) {
    if (!v.empty()) out.push_back("--" + k + "=" + v);
  }
  out.insert(out.end(), args.begin() + 1, args.end());
  return out;
}

std::string flag_value(const std::vector<std::string>& args, const std::string& flag) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == flag && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind(flag + "=", 0) == 0) return args[i].substr(flag.size() + 1);
  }
  return {};
}

std::map<std::string, std::string> manifest_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open manifest " + path);
  nlohmann::json j;
  try {
    in >> j;
    return j.at("config").get<std::map<std::string, std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("bad manifest " + path + ": " + e.what());
  }
}

TrainConfig to_train_config(const Settings& s) {
  TrainConfig cfg;
  cfg.generations = s.generations;
  cfg.epochs_per_generation = s.epochs;
  cfg.lr_max = s.lr;
  cfg.lr_mode = s.lr_mode;
  cfg.orchestrator = s.orchestrator;
  cfg.score_mode = s.score_mode;
  cfg.policy = s.policy;
  cfg.batch_size = s.batch_size;
  cfg.seed = s.seed;
  cfg.overfit_gap = s.overfit_gap;
  cfg.budget.time_limit_s = s.time_limit;
  cfg.budget.rollout_depth = s.rollout_depth;
  cfg.budget.exploration = s.exploration;
  cfg.budget.sim_epochs = s.sim_epochs;
  cfg.budget.max_iterations = s.max_iterations;
  cfg.budget.sim_lr = s.lr;
  cfg.budget.sim_lr_mode = s.lr_mode;
  cfg.budget.sim_batch_size = s.batch_size;
  return cfg;
}

LayerGraph build_model(const Settings& s, const LoadedData& d, Rng& rng) {
  const Dataset& ds = d.dataset;
  if (d.timeseries) {
    const Shape& plane = ds.inputs.front().shape();
    return build_mts_model(d.dims, plane.height, ds.class_count, !s.separate_inputs, s.def_neu, rng,
                           s.conv_channels);
  }
  const Shape& shape = ds.inputs.front().shape();
  return new_base_model(InputSpec::image(shape.channels, shape.height, shape.width), s.def_neu,
                        ds.class_count, rng, s.conv_channels);
}

int cmd_train(const Settings& s, std::ostream& out) {
  LoadedData data = load_data(s);
  // Sampling uses its own stream so the training stream only depends on the seed.
  Rng data_rng(s.seed ^ 0x5eed5eed5eed5eedull);
  Dataset all = std::move(data.dataset);
  if (s.limit > 0 && s.limit < all.size()) {
    all = stratified_split(all, static_cast<double>(s.limit) / static_cast<double>(all.size()), data_rng)
              .second;
  }
  auto [train_set, test_set] = stratified_split(all, s.test_fraction, data_rng);
  const Dataset simset = make_simset(train_set, s.per_class, data_rng);
  data.dataset = train_set;

  Rng model_rng(s.seed);
  LayerGraph model = build_model(s, data, model_rng);
  const TrainConfig cfg = to_train_config(s);

  const fs::path dir(s.out);
  fs::create_directories(dir / "generations");
  std::vector<std::string> dot_files;
  std::ofstream telemetry;
  TrainHooks hooks;
  hooks.on_generation = [&](std::size_t gen, const LayerGraph& g) {
    char name[32];
    std::snprintf(name, sizeof name, "gen_%03zu.dot", gen);
    write_file_atomic(dir / "generations" / name, export_dot(g));
    dot_files.push_back((fs::path("generations") / name).string());
  };
  if (cfg.policy == PolicyKind::Mcts) {
    telemetry.open(dir / "search.csv");
    telemetry << "iteration,path,score,elapsed_s\n";
    hooks.search_telemetry = &telemetry;
  }

  const TrainResult result = train(std::move(model), train_set, test_set, simset, cfg, hooks);

  const auto model_bytes = save_model(result.model);
  write_file_atomic(dir / "model.bin",
                    std::string_view(reinterpret_cast<const char*>(model_bytes.data()), model_bytes.size()));
  std::ostringstream csv;
  result.history.write_csv(csv);
  write_file_atomic(dir / "history.csv", csv.str());

  nlohmann::json manifest;
  manifest["format"] = 1;
  manifest["config"] = snapshot(s);
  manifest["seed"] = s.seed;
  manifest["datasets"] = data.fingerprints;
  manifest["split"] = {{"train", train_set.size()}, {"test", test_set.size()}, {"simset", simset.size()}};
  nlohmann::json actions = nlohmann::json::array();
  for (const auto& g : result.history.generations) {
    if (g.action) actions.push_back({{"generation", g.generation}, {"action", to_string(*g.action)}});
  }
  manifest["actions"] = actions;
  manifest["artifacts"] = {{"model", "model.bin"},
                           {"model_fnv1a64", hex64(fnv1a64(model_bytes))},
                           {"history", "history.csv"},
                           {"dot", dot_files}};
  if (cfg.policy == PolicyKind::Mcts) manifest["artifacts"]["search_log"] = "search.csv";
  write_file_atomic(dir / "manifest.json", manifest.dump(2) + "\n");

  const auto& last = result.history.generations.back();
  out << "generations " << result.history.generations.size() << ", simulations "
      << result.history.simulations() << ", layers " << result.model.size() << "\n";
  out << "final test accuracy " << last.final_test_acc << "\n";
  out << "wrote " << dir.string() << "\n";
  return 0;
}

int cmd_eval(const Settings& s, std::ostream& out) {
  const LayerGraph model = load_model_file(s.model);
  const LoadedData data = load_data(s);
  const EpochStats st = evaluate(model, data.dataset);
  out << "accuracy " << st.accuracy << "\nloss " << st.loss << "\n";
  return 0;
}

int cmd_transform(const Settings& s, std::ostream& out) {
  if (s.timeseries.empty()) throw CLI::ValidationError("--timeseries", "is required");
  const MtsDataset mts = load_timeseries_csv(s.timeseries);
  RecurrenceOptions opt;
  opt.eps = s.eps >= 0.0 ? EpsRule::fixed(s.eps) : EpsRule::quantile(s.eps_quantile);
  opt.max_side = s.max_side;
  const auto per_dim = mts_to_images(mts, opt);
  const fs::path dir(s.out);
  fs::create_directories(dir);
  for (std::size_t d = 0; d < per_dim.size(); ++d) {
    const std::string stem = "dim" + std::to_string(d);
    save_idx(per_dim[d], dir / (stem + "-images-idx3-ubyte"), dir / (stem + "-labels-idx1-ubyte"));
  }
  out << "wrote " << per_dim.size() << " recurrence-plot datasets to " << dir.string() << "\n";
  return 0;
}

int cmd_export_dot(const Settings& s, std::ostream& out) {
  const std::string dot = export_dot(load_model_file(s.model));
  if (s.out.empty() || s.out == "-") {
    out << dot;
  } else {
    write_file_atomic(s.out, dot);
  }
  return 0;
}

}  // namespace

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open config file " + path);
  std::map<std::string, std::string> out;
  std::string line;
  std::size_t row = 0;
  auto trim = [](std::string v) {
    const auto b = v.find_first_not_of(" \t\r");
    const auto e = v.find_last_not_of(" \t\r");
    return b == std::string::npos ? std::string() : v.substr(b, e - b + 1);
  };
  while (std::getline(in, line)) {
    ++row;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw FormatError(path + ": line " + std::to_string(row) + " is not key=value");
    }
    std::string key = trim(line.substr(0, eq));
    if (key.rfind("--", 0) == 0) key.erase(0, 2);
    out[key] = trim(line.substr(eq + 1));
  }
  return out;
}

int run_cli(const std::vector<std::string>& raw_args, std::ostream& out, std::ostream& err) {
  Settings s;
  CLI::App app{"Trains neural networks that grow and shrink under Monte Carlo tree search.", "dyngrow"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  CLI::App* train_cmd = app.add_subcommand("train", "train a model with generational structure search");
  add_train_options(train_cmd, s);
  train_cmd->add_option("--config", s.config, "key=value configuration file");

  CLI::App* eval_cmd = app.add_subcommand("eval", "print the accuracy of a saved model");
  eval_cmd->add_option("--model", s.model, "model file")->required();
  add_data_options(eval_cmd, s);

  CLI::App* ts_cmd = app.add_subcommand("transform-ts", "write recurrence-plot IDX datasets");
  add_data_options(ts_cmd, s);
  ts_cmd->add_option("--out", s.out, "output directory")->required();

  CLI::App* dot_cmd = app.add_subcommand("export-dot", "write a model's graph as DOT");
  dot_cmd->add_option("--model", s.model, "model file")->required();
  dot_cmd->add_option("--out", s.out, "output file ('-' for stdout)");

  std::vector<std::string> args = raw_args;
  try {
    if (!args.empty() && args.front() == "train") {
      std::map<std::string, std::string> defaults;
      if (const std::string m = flag_value(args, "--manifest"); !m.empty()) defaults = manifest_config(m);
      if (const std::string c = flag_value(args, "--config"); !c.empty()) {
        for (auto& [k, v] : read_config_file(c)) defaults[k] = v;
      }
      args = with_defaults(args, defaults);
    }
    if (!args.empty() && args.front() == "export-dot") s.out = "-";
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return 2;
  }

  s.lr_mode = kLrModes.at(s.lr_mode_name);
  s.orchestrator = kOrchestrators.at(s.orchestrator_name);
  s.score_mode = kScoreModes.at(s.score_mode_name);
  s.policy = kPolicies.at(s.policy_name);

  try {
    if (train_cmd->parsed()) return cmd_train(s, out);
    if (eval_cmd->parsed()) return cmd_eval(s, out);
    if (ts_cmd->parsed()) return cmd_transform(s, out);
    if (dot_cmd->parsed()) return cmd_export_dot(s, out);
  } catch (const CLI::ValidationError& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace dyngrow
