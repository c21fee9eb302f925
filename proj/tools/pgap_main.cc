// Copyright 2026 The pgap Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// pgap: train, compare and lab subcommands.
//
//   pgap train   [--config FILE] [overrides]
//   pgap compare [--config FILE] [overrides]
//   pgap lab SUITE [--config FILE] [overrides]
//
// Exit codes: 0 success, 1 run failure or failed lab check, 2 usage or
// configuration error.

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pgap/commands.h"
#include "pgap/config.h"
#include "pgap/errors.h"
#include "pgap/tasks.h"

namespace {

constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

// Flag values start at the built-in defaults so --help shows them; only flags
// actually given on the command line are applied over the config file.
struct Overrides {
  std::string config_path;
  std::vector<std::function<void(pgap::RunConfig&)>> apply;

  template <typename T, typename Fn>
  void Add(CLI::App* app, const std::string& flag, T& storage, const std::string& help,
           Fn setter) {
    CLI::Option* opt = app->add_option(flag, storage, help)->capture_default_str();
    apply.push_back([opt, &storage, setter](pgap::RunConfig& c) {
      if (opt->count() > 0) setter(c, storage);
    });
  }
};

// Applies an optimizer field to the base settings and every per-name table.
template <typename Fn>
void ForEachOptimizer(pgap::RunConfig& c, Fn fn) {
  fn(c.optimizer);
  for (auto& [name, oc] : c.per_optimizer) fn(oc);
}

struct FlagValues {
  pgap::RunConfig defaults;
  std::string optimizer{pgap::OptimizerKindName(defaults.optimizer.kind)};
  std::vector<std::string> compare;
  std::string task = defaults.task.name;
  std::uint64_t seed = defaults.optimizer.seed.value;
  std::uint64_t task_seed = defaults.task.seed.value;
  std::string out = defaults.output.dir;
  std::int64_t steps = defaults.optimizer.steps;
  double target_loss = 0.0;
  std::size_t rank = defaults.optimizer.r;
  std::int64_t window = defaults.optimizer.k;
  std::int64_t probes = defaults.optimizer.h;
  double delta0 = defaults.optimizer.delta0;
  double eta = defaults.optimizer.eta;
  double eps = defaults.optimizer.eps;
  std::size_t batch_size = defaults.optimizer.batch_size;
  std::size_t lora_rank = defaults.task.lora_rank;
  std::uint64_t lab_seed = defaults.lab.seed.value;
  std::uint64_t samples = 0;
  std::size_t trials = defaults.lab.davis_kahan.trials;
  std::vector<std::size_t> q_list = defaults.lab.variance.q_list;
};

void AddCommonFlags(CLI::App* app, FlagValues& v, Overrides& o) {
  app->add_option("--config", o.config_path, "TOML configuration file");
  o.Add(app, "--task", v.task, "Task: quadratic, quad_lowrank, least_squares, logistic, tiny_mlp",
        [](pgap::RunConfig& c, const std::string& x) { c.task.name = x; });
  o.Add(app, "--task-seed", v.task_seed, "Seed for task synthesis",
        [](pgap::RunConfig& c, std::uint64_t x) { c.task.seed = pgap::Seed{x}; });
  o.Add(app, "--lora-rank", v.lora_rank, "Adapter rank; 0 trains the full parameters",
        [](pgap::RunConfig& c, std::size_t x) { c.task.lora_rank = x; });
  o.Add(app, "--seed", v.seed, "Run seed (perturbations, refreshes, batches)",
        [](pgap::RunConfig& c, std::uint64_t x) {
          ForEachOptimizer(c, [x](pgap::OptimizerConfig& oc) { oc.seed = pgap::Seed{x}; });
        });
  o.Add(app, "--out", v.out, "Output directory",
        [](pgap::RunConfig& c, const std::string& x) { c.output.dir = x; });
  o.Add(app, "--steps", v.steps, "Number of optimizer steps T",
        [](pgap::RunConfig& c, std::int64_t x) {
          ForEachOptimizer(c, [x](pgap::OptimizerConfig& oc) { oc.steps = x; });
        });
  o.Add(app, "--target-loss", v.target_loss, "Loss target for steps-to-target (unset by default)",
        [](pgap::RunConfig& c, double x) {
          ForEachOptimizer(c, [x](pgap::OptimizerConfig& oc) { oc.target_loss = x; });
        });
  o.Add(app, "--rank", v.rank, "Subspace rank r",
        [](pgap::RunConfig& c, std::size_t x) {
          ForEachOptimizer(c, [x](pgap::OptimizerConfig& oc) { oc.r = x; });
        });
  o.Add(app, "--window", v.window, "Refresh window k",
        [](pgap::RunConfig& c, std::int64_t x) {
          ForEachOptimizer(c, [x](pgap::OptimizerConfig& oc) { oc.k = x; });
        });
  o.Add(app, "--probes", v.probes, "Probes per refresh h",
        [](pgap::RunConfig& c, std::int64_t x) {
          ForEachOptimizer(c, [x](pgap::OptimizerConfig& oc) { oc.h = x; });
        });
  o.Add(app, "--delta0", v.delta0, "Initial alignment radius",
        [](pgap::RunConfig& c, double x) {
          ForEachOptimizer(c, [x](pgap::OptimizerConfig& oc) { oc.delta0 = x; });
        });
  o.Add(app, "--eta", v.eta, "Base learning rate",
        [](pgap::RunConfig& c, double x) {
          ForEachOptimizer(c, [x](pgap::OptimizerConfig& oc) { oc.eta = x; });
        });
  o.Add(app, "--eps", v.eps, "Perturbation scale",
        [](pgap::RunConfig& c, double x) {
          ForEachOptimizer(c, [x](pgap::OptimizerConfig& oc) { oc.eps = x; });
        });
  o.Add(app, "--batch-size", v.batch_size, "Mini-batch size; 0 uses the full data set",
        [](pgap::RunConfig& c, std::size_t x) {
          ForEachOptimizer(c, [x](pgap::OptimizerConfig& oc) { oc.batch_size = x; });
        });
}

pgap::RunConfig Resolve(const Overrides& o) {
  pgap::RunConfig c;
  if (!o.config_path.empty()) {
    if (!std::filesystem::exists(o.config_path)) {
      throw pgap::ConfigError("config file not found: " + o.config_path);
    }
    c = pgap::LoadConfigFile(o.config_path);
  }
  for (const auto& fn : o.apply) fn(c);
  c.optimizer.Validate();
  for (const auto& [name, oc] : c.per_optimizer) oc.Validate();
  return c;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Zeroth-order fine-tuning with gradient-aligned perturbations"};
  app.require_subcommand(1);
  FlagValues v;

  Overrides train_o;
  CLI::App* train = app.add_subcommand("train", "Run one optimizer and write its artifacts");
  AddCommonFlags(train, v, train_o);
  train_o.Add(train, "--optimizer", v.optimizer, "Optimizer: pgap or mezo",
              [](pgap::RunConfig& c, const std::string& x) {
                c.optimizer.kind = pgap::ParseOptimizerKind(x);
              });

  Overrides compare_o;
  CLI::App* compare =
      app.add_subcommand("compare", "Run several optimizers on common data and report speedups");
  AddCommonFlags(compare, v, compare_o);
  compare_o.Add(compare, "--optimizers", v.compare, "Optimizers to compare, e.g. mezo pgap",
                [](pgap::RunConfig& c, const std::vector<std::string>& x) { c.compare = x; });

  Overrides lab_o;
  std::string suite;
  CLI::App* lab = app.add_subcommand("lab", "Run a Monte-Carlo verification suite");
  lab->add_option("suite", suite,
                  "Suite: variance, moments, angle, bias, probe-mse, davis-kahan, dispersion")
      ->required();
  lab->add_option("--config", lab_o.config_path, "TOML configuration file");
  lab_o.Add(lab, "--out", v.out, "Output directory",
            [](pgap::RunConfig& c, const std::string& x) { c.output.dir = x; });
  lab_o.Add(lab, "--lab-seed", v.lab_seed, "Seed for all lab suites",
            [](pgap::RunConfig& c, std::uint64_t x) { c.lab.seed = pgap::Seed{x}; });
  lab_o.Add(lab, "--samples", v.samples,
            "Monte-Carlo samples per configuration (0 keeps each suite's default)",
            [](pgap::RunConfig& c, std::uint64_t x) {
              if (x == 0) return;
              c.lab.variance.samples = x;
              c.lab.moment_samples = x;
              c.lab.angle_samples = x;
              c.lab.bias.samples = x;
              c.lab.probe_mse.replications = x;
              c.lab.dispersion.samples = x;
            });
  lab_o.Add(lab, "--trials", v.trials, "Davis-Kahan trials",
            [](pgap::RunConfig& c, std::size_t x) { c.lab.davis_kahan.trials = x; });
  lab_o.Add(lab, "--q-list", v.q_list, "Subspace dimensions for the variance suite",
            [](pgap::RunConfig& c, const std::vector<std::size_t>& x) {
              c.lab.variance.q_list = x;
            });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (train->parsed()) {
      pgap::TrainCommand(Resolve(train_o), std::cout);
      return 0;
    }
    if (compare->parsed()) {
      pgap::CompareCommand(Resolve(compare_o), std::cout);
      return 0;
    }
    const auto reports = pgap::LabCommand(suite, Resolve(lab_o), std::cout);
    if (!pgap::AllPass(reports)) {
      std::cerr << "pgap: lab suite '" << suite << "' has failing checks\n";
      return kExitFailure;
    }
    return 0;
  } catch (const pgap::ConfigError& e) {
    std::cerr << "pgap: configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const pgap::ParseError& e) {
    std::cerr << "pgap: configuration error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const pgap::RunAborted& e) {
    std::cerr << "pgap: run aborted: " << e.what() << " (partial runlog written)\n";
    return kExitFailure;
  } catch (const std::exception& e) {
    std::cerr << "pgap: " << e.what() << "\n";
    return kExitFailure;
  }
}
