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

#include "pgap/commands.h"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <filesystem>
#include <sstream>
#include <utility>

#include "json.hpp"
#include "pgap/checkpoint.h"
#include "pgap/errors.h"
#include "pgap/tasks.h"

namespace pgap {
namespace {

namespace fs = std::filesystem;
using Json = nlohmann::ordered_json;

fs::path PrepareOutput(const RunConfig& config) {
  fs::path dir(config.output.dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory '" + dir.string() + "': " + ec.message());
  WriteFileAtomic(dir / "config.echo.toml", ToToml(config));
  return dir;
}

std::string RunLogText(const RunLog& log) {
  std::ostringstream out;
  WriteRunLogCsv(log, out);
  return out.str();
}

OptimizerConfig Effective(const RunConfig& config, const std::string& name) {
  OptimizerConfig c = config.Resolve(name);
  c.record_timing = config.output.record_timing;
  return c;
}

StepCallback ProgressPrinter(std::ostream& progress, const std::string& label,
                             std::int64_t steps) {
  const std::int64_t every = std::max<std::int64_t>(1, steps / 10);
  return [&progress, label, every](const StepRecord& r) {
    if (r.step % every == 0) {
      progress << label << " step " << r.step << " loss " << r.loss << "\n";
    }
  };
}

Json OptionalSteps(const std::optional<std::int64_t>& s) {
  return s ? Json(*s) : Json(nullptr);
}

}  // namespace

std::string FormatNumber(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

TrainOutcome TrainCommand(const RunConfig& config, std::ostream& progress) {
  const OptimizerConfig opt =
      Effective(config, std::string(OptimizerKindName(config.optimizer.kind)));
  opt.Validate();
  Task task = BuildTask(config.task);
  const fs::path dir = PrepareOutput(config);
  progress << "train: " << OptimizerKindName(opt.kind) << " on " << config.task.name
           << ", " << opt.steps << " steps\n";
  TrainOutcome out;
  try {
    out.result = Run(opt, *task.oracle, task.data, task.init,
                     ProgressPrinter(progress, "train", opt.steps));
  } catch (const RunAborted& e) {
    WriteFileAtomic(dir / "runlog.csv", RunLogText(e.partial().log));
    throw;
  }
  out.final_loss = task.oracle->Loss(out.result.final_params, task.data);
  WriteFileAtomic(dir / "runlog.csv", RunLogText(out.result.log));
  SaveCheckpoint(out.result.final_params, dir / "final.ckpt");
  Json summary;
  summary["optimizer"] = std::string(OptimizerKindName(opt.kind));
  summary["task"] = config.task.name;
  summary["steps"] = opt.steps;
  summary["initial_loss"] = task.oracle->Loss(task.init, task.data);
  summary["final_loss"] = out.final_loss;
  summary["target_loss"] = opt.target_loss ? Json(*opt.target_loss) : Json(nullptr);
  summary["steps_to_target"] = OptionalSteps(out.result.steps_to_target);
  summary["wall_ms"] = out.result.wall_ms;
  WriteFileAtomic(dir / "summary.json", summary.dump(2) + "\n");
  progress << "train: final loss " << out.final_loss << ", artifacts in " << dir.string()
           << "\n";
  return out;
}

CompareOutcome CompareCommand(const RunConfig& config, std::ostream& progress) {
  if (config.compare.size() < 2) {
    throw ConfigError("compare needs at least two optimizers in optimizer.compare");
  }
  std::vector<OptimizerConfig> opts;
  for (const auto& name : config.compare) {
    OptimizerConfig c = Effective(config, name);
    if (!c.target_loss) {
      throw ConfigError("compare needs optimizer.target_loss (missing for '" + name + "')");
    }
    c.Validate();
    opts.push_back(c);
  }
  Task task = BuildTask(config.task);
  const fs::path dir = PrepareOutput(config);

  CompareOutcome out;
  out.rows.resize(opts.size());
  std::vector<RunLog> logs(opts.size());
  ParallelFor(opts.size(), [&](std::size_t i) {
    RunResult r = Run(opts[i], *task.oracle, task.data, task.init);
    out.rows[i].optimizer = config.compare[i];
    out.rows[i].steps_to_target = r.steps_to_target;
    out.rows[i].final_loss = task.oracle->Loss(r.final_params, task.data);
    out.rows[i].wall_ms = r.wall_ms;
    logs[i] = std::move(r.log);
  });
  for (std::size_t i = 0; i < config.compare.size(); ++i) {
    if (config.compare[i] == "mezo") {
      out.baseline = i;
      break;
    }
  }
  const auto& base = out.rows[out.baseline].steps_to_target;
  for (auto& row : out.rows) {
    if (base && row.steps_to_target) {
      row.speedup = *row.steps_to_target == 0
                        ? 1.0
                        : static_cast<double>(*base) /
                              static_cast<double>(*row.steps_to_target);
      if (*base == 0 && *row.steps_to_target != 0) row.speedup = 0.0;
    }
  }

  std::ostringstream csv;
  csv << "optimizer,steps_to_target,final_loss,wall_ms,speedup\n";
  for (const auto& row : out.rows) {
    csv << row.optimizer << ','
        << (row.steps_to_target ? std::to_string(*row.steps_to_target) : "not reached")
        << ',' << FormatNumber(row.final_loss) << ',' << FormatNumber(row.wall_ms) << ','
        << (row.speedup ? FormatNumber(*row.speedup) : "n/a") << '\n';
  }
  WriteFileAtomic(dir / "compare.csv", csv.str());
  for (std::size_t i = 0; i < logs.size(); ++i) {
    WriteFileAtomic(dir / ("runlog_" + std::to_string(i) + "_" + config.compare[i] + ".csv"),
                    RunLogText(logs[i]));
  }
  for (const auto& row : out.rows) {
    progress << "compare: " << row.optimizer << " steps_to_target "
             << (row.steps_to_target ? std::to_string(*row.steps_to_target) : "not reached")
             << " final_loss " << row.final_loss;
    if (row.speedup) progress << " speedup " << *row.speedup;
    progress << "\n";
  }
  return out;
}

const std::vector<std::string>& LabSuiteNames() {
  static const std::vector<std::string> names = {
      "variance", "moments", "angle", "bias", "probe-mse", "davis-kahan", "dispersion"};
  return names;
}

std::vector<McReport> LabCommand(const std::string& suite, const RunConfig& config,
                                 std::ostream& progress) {
  const auto& names = LabSuiteNames();
  if (std::find(names.begin(), names.end(), suite) == names.end()) {
    std::string list;
    for (const auto& n : names) list += (list.empty() ? "" : ", ") + n;
    throw ConfigError("unknown lab suite '" + suite + "'; valid suites: " + list);
  }
  const LabConfig& lab = config.lab;
  const Seed seed = DeriveSubstream(lab.seed, suite, 0);
  const fs::path dir = PrepareOutput(config);
  progress << "lab: running " << suite << "\n";

  std::vector<McReport> reports;
  auto append = [&reports](std::vector<McReport> more) {
    for (auto& r : more) reports.push_back(std::move(r));
  };
  if (suite == "variance") {
    append(VarianceVsDim(lab.variance, seed));
  } else if (suite == "moments") {
    for (std::size_t n : lab.moment_dims) {
      std::vector<double> y(n);
      for (std::size_t i = 0; i < n; ++i) {
        y[i] = (i % 2 == 0 ? 1.0 : -1.0) * (1.0 + static_cast<double>(i) / static_cast<double>(n));
      }
      append(GaussianMomentSuite(n, y, lab.moment_samples, DeriveSubstream(seed, "n", n)));
    }
  } else if (suite == "angle") {
    for (std::size_t q : lab.angle_q) {
      append(AngleSuite(q, lab.angle_samples, DeriveSubstream(seed, "q", q)));
    }
  } else if (suite == "bias") {
    append(BiasRateSuite(lab.bias, seed));
  } else if (suite == "probe-mse") {
    append(ProbeMseSuite(lab.probe_mse, seed));
  } else if (suite == "davis-kahan") {
    append(DavisKahanSuite(lab.davis_kahan, seed));
  } else {
    DispersionResult d = DispersionSuite(lab.dispersion, seed);
    std::ostringstream hist;
    hist << "bin_lo,bin_hi,gaussian,pgap\n";
    for (std::size_t b = 0; b < d.gaussian.counts.size(); ++b) {
      hist << FormatNumber(d.gaussian.edges[b]) << ',' << FormatNumber(d.gaussian.edges[b + 1])
           << ',' << d.gaussian.counts[b] << ',' << d.pgap.counts[b] << '\n';
    }
    WriteFileAtomic(dir / "lab_dispersion_hist.csv", hist.str());
    append(std::move(d.reports));
  }

  WriteFileAtomic(dir / ("lab_" + suite + ".json"), ReportsToJson(reports));
  std::ostringstream csv;
  WriteReportsCsv(reports, csv);
  WriteFileAtomic(dir / ("lab_" + suite + ".csv"), csv.str());
  for (const auto& r : reports) {
    progress << "  " << r.id << " estimate " << r.estimate;
    if (r.asserted) progress << (r.pass ? " PASS" : " FAIL");
    progress << "\n";
  }
  return reports;
}

}  // namespace pgap
