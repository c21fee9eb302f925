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

// Experiment orchestration behind the command-line tool: train, compare and
// lab suites. Each writes its artifacts plus config.echo.toml into the
// configured output directory; progress lines go to the given stream.

#ifndef PGAP_COMMANDS_H_
#define PGAP_COMMANDS_H_

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "pgap/config.h"
#include "pgap/lab.h"
#include "pgap/optimizer.h"

namespace pgap {

struct TrainOutcome {
  RunResult result;
  double final_loss = 0.0;  // full-data loss at the final parameters
};

// Writes runlog.csv, summary.json, final.ckpt and config.echo.toml. On
// RunAborted the partial runlog is written before the exception propagates.
TrainOutcome TrainCommand(const RunConfig& config, std::ostream& progress);

struct CompareRow {
  std::string optimizer;
  std::optional<std::int64_t> steps_to_target;
  double final_loss = 0.0;
  double wall_ms = 0.0;
  // Baseline steps over this row's steps; empty unless both reached.
  std::optional<double> speedup;
};

struct CompareOutcome {
  std::vector<CompareRow> rows;
  // Index of the reference row: the first "mezo" entry, else the first.
  std::size_t baseline = 0;
};

// Requires at least two entries in config.compare and a target loss. All
// runs share the task, the data stream and the run seed. Writes compare.csv.
CompareOutcome CompareCommand(const RunConfig& config, std::ostream& progress);

const std::vector<std::string>& LabSuiteNames();

// Writes lab_<suite>.json and lab_<suite>.csv (and histogram CSV for the
// dispersion suite). Throws ConfigError for an unknown suite.
std::vector<McReport> LabCommand(const std::string& suite, const RunConfig& config,
                                 std::ostream& progress);

// Shortest round-trip decimal form.
std::string FormatNumber(double v);

}  // namespace pgap

#endif  // PGAP_COMMANDS_H_
