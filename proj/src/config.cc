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

#include "pgap/config.h"

#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <string_view>
#include <utility>

#include "pgap/errors.h"
#include "toml.hpp"

namespace pgap {
namespace {

// Wraps one TOML table; every key must be consumed by a getter before
// Finish() or it is reported as unknown.
class Section {
 public:
  Section(const toml::table* table, std::string path)
      : table_(table), path_(std::move(path)) {}

  bool present() const { return table_ != nullptr; }

  template <typename Fn>
  void Visit(std::string_view key, Fn&& fn) {
    seen_.insert(std::string(key));
    if (!table_) return;
    const toml::node* node = table_->get(key);
    if (node) fn(*node, path_ + "." + std::string(key));
  }

  void Double(std::string_view key, double& out) {
    Visit(key, [&](const toml::node& n, const std::string& where) {
      if (auto v = n.value<double>()) {
        out = *v;
      } else {
        throw ConfigError(where + ": expected a number");
      }
    });
  }

  void OptDouble(std::string_view key, std::optional<double>& out) {
    Visit(key, [&](const toml::node& n, const std::string& where) {
      if (auto v = n.value<double>()) {
        out = *v;
      } else {
        throw ConfigError(where + ": expected a number");
      }
    });
  }

  template <typename Int>
  void Integer(std::string_view key, Int& out) {
    Visit(key, [&](const toml::node& n, const std::string& where) {
      out = ToInt<Int>(n, where);
    });
  }

  void Bool(std::string_view key, bool& out) {
    Visit(key, [&](const toml::node& n, const std::string& where) {
      if (auto v = n.value<bool>()) {
        out = *v;
      } else {
        throw ConfigError(where + ": expected true or false");
      }
    });
  }

  void String(std::string_view key, std::string& out) {
    Visit(key, [&](const toml::node& n, const std::string& where) {
      if (auto v = n.value<std::string>()) {
        out = *v;
      } else {
        throw ConfigError(where + ": expected a string");
      }
    });
  }

  void SeedValue(std::string_view key, Seed& out) {
    Visit(key, [&](const toml::node& n, const std::string& where) {
      if (auto s = n.value<std::string>()) {
        try {
          std::size_t used = 0;
          out.value = std::stoull(*s, &used, 0);
          if (used != s->size()) throw std::invalid_argument(*s);
        } catch (const std::exception&) {
          throw ConfigError(where + ": '" + *s + "' is not an unsigned integer");
        }
      } else {
        out.value = ToInt<std::uint64_t>(n, where);
      }
    });
  }

  template <typename Int>
  void IntList(std::string_view key, std::vector<Int>& out) {
    Visit(key, [&](const toml::node& n, const std::string& where) {
      const toml::array* arr = n.as_array();
      if (!arr) throw ConfigError(where + ": expected an array of integers");
      out.clear();
      for (const auto& e : *arr) out.push_back(ToInt<Int>(e, where));
    });
  }

  void DoubleList(std::string_view key, std::vector<double>& out) {
    Visit(key, [&](const toml::node& n, const std::string& where) {
      const toml::array* arr = n.as_array();
      if (!arr) throw ConfigError(where + ": expected an array of numbers");
      out.clear();
      for (const auto& e : *arr) {
        auto v = e.value<double>();
        if (!v) throw ConfigError(where + ": expected an array of numbers");
        out.push_back(*v);
      }
    });
  }

  void StringList(std::string_view key, std::vector<std::string>& out) {
    Visit(key, [&](const toml::node& n, const std::string& where) {
      const toml::array* arr = n.as_array();
      if (!arr) throw ConfigError(where + ": expected an array of strings");
      out.clear();
      for (const auto& e : *arr) {
        auto v = e.value<std::string>();
        if (!v) throw ConfigError(where + ": expected an array of strings");
        out.push_back(*v);
      }
    });
  }

  void Shapes(std::string_view key,
              std::vector<std::pair<std::size_t, std::size_t>>& out) {
    Visit(key, [&](const toml::node& n, const std::string& where) {
      const toml::array* arr = n.as_array();
      if (!arr) throw ConfigError(where + ": expected [[rows, cols], ...]");
      out.clear();
      for (const auto& e : *arr) {
        const toml::array* pair = e.as_array();
        if (!pair || pair->size() != 2) {
          throw ConfigError(where + ": expected [[rows, cols], ...]");
        }
        out.emplace_back(ToInt<std::size_t>(*pair->get(0), where),
                         ToInt<std::size_t>(*pair->get(1), where));
      }
    });
  }

  // Subtable; the key counts as consumed.
  const toml::table* Table(std::string_view key) {
    seen_.insert(std::string(key));
    if (!table_) return nullptr;
    const toml::node* node = table_->get(key);
    if (!node) return nullptr;
    if (!node->is_table()) {
      throw ConfigError(path_ + "." + std::string(key) + ": expected a table");
    }
    return node->as_table();
  }

  void Finish() const {
    if (!table_) return;
    for (const auto& [k, v] : *table_) {
      if (!seen_.count(std::string(k.str()))) {
        throw ConfigError("unknown key '" + path_ + "." + std::string(k.str()) + "'");
      }
    }
  }

 private:
  template <typename Int>
  static Int ToInt(const toml::node& n, const std::string& where) {
    auto v = n.value<std::int64_t>();
    if (!v || !n.is_integer()) throw ConfigError(where + ": expected an integer");
    if constexpr (std::is_unsigned_v<Int>) {
      if (*v < 0) throw ConfigError(where + ": must be >= 0");
    }
    return static_cast<Int>(*v);
  }

  const toml::table* table_;
  std::string path_;
  std::set<std::string> seen_;
};

void ReadOptimizerKeys(Section& s, OptimizerConfig& c) {
  std::string kind(OptimizerKindName(c.kind));
  s.String("kind", kind);
  c.kind = ParseOptimizerKind(kind);
  s.Double("eta", c.eta);
  s.Double("eps", c.eps);
  s.Integer("steps", c.steps);
  s.Integer("k", c.k);
  s.Integer("h", c.h);
  s.Integer("r", c.r);
  s.Double("delta0", c.delta0);
  s.Integer("n_avg", c.n_avg);
  s.SeedValue("seed", c.seed);
  s.Integer("batch_size", c.batch_size);
  s.Integer("eval_every", c.eval_every);
  s.OptDouble("target_loss", c.target_loss);
  s.Bool("stop_at_target", c.stop_at_target);
}

toml::array IntArray(const auto& xs) {
  toml::array a;
  for (auto x : xs) a.push_back(static_cast<std::int64_t>(x));
  return a;
}

toml::array DoubleArray(const std::vector<double>& xs) {
  toml::array a;
  for (double x : xs) a.push_back(x);
  return a;
}

void PutSeed(toml::table& t, std::string_view key, Seed seed) {
  if (seed.value <= static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max())) {
    t.insert(key, static_cast<std::int64_t>(seed.value));
  } else {
    t.insert(key, std::to_string(seed.value));
  }
}

toml::table OptimizerTable(const OptimizerConfig& c) {
  toml::table t;
  t.insert("kind", std::string(OptimizerKindName(c.kind)));
  t.insert("eta", c.eta);
  t.insert("eps", c.eps);
  t.insert("steps", c.steps);
  t.insert("k", c.k);
  t.insert("h", c.h);
  t.insert("r", static_cast<std::int64_t>(c.r));
  t.insert("delta0", c.delta0);
  t.insert("n_avg", c.n_avg);
  PutSeed(t, "seed", c.seed);
  t.insert("batch_size", static_cast<std::int64_t>(c.batch_size));
  t.insert("eval_every", c.eval_every);
  if (c.target_loss) t.insert("target_loss", *c.target_loss);
  t.insert("stop_at_target", c.stop_at_target);
  return t;
}

}  // namespace

std::vector<std::string> OptimizerNames() { return {"pgap", "mezo"}; }

OptimizerConfig RunConfig::Resolve(const std::string& name) const {
  auto it = per_optimizer.find(name);
  if (it != per_optimizer.end()) return it->second;
  OptimizerConfig c = optimizer;
  c.kind = ParseOptimizerKind(name);
  return c;
}

RunConfig ParseConfig(const std::string& text, const std::string& origin) {
  toml::table root;
  try {
    root = toml::parse(text, origin);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << origin << ":" << e.source().begin.line << ":" << e.source().begin.column
        << ": " << e.description();
    throw ParseError(msg.str());
  }
  RunConfig c;
  Section top(&root, "");
  auto path = [](const char* name) { return std::string(name); };

  {
    Section s(top.Table("task"), path("task"));
    TaskSpec& t = c.task;
    s.String("name", t.name);
    s.SeedValue("seed", t.seed);
    s.Integer("examples", t.examples);
    s.Integer("features", t.features);
    s.Shapes("shapes", t.shapes);
    s.Integer("planted_rank", t.planted_rank);
    s.Double("lambda", t.lambda);
    s.Double("mu", t.mu);
    s.Double("offset_norm", t.offset_norm);
    s.Double("label_noise", t.label_noise);
    s.Double("weight_scale", t.weight_scale);
    s.Integer("hidden", t.hidden);
    s.Integer("classes", t.classes);
    s.String("csv", t.csv);
    s.String("label_column", t.label_column);
    s.StringList("feature_columns", t.feature_columns);
    s.Integer("lora_rank", t.lora_rank);
    s.Finish();
  }

  const toml::table* opt_table = top.Table("optimizer");
  Section opt(opt_table, "optimizer");
  ReadOptimizerKeys(opt, c.optimizer);
  opt.StringList("compare", c.compare);
  {
    Section sched(top.Table("schedules"), "schedules");
    std::string lr(ScheduleKindName(c.optimizer.schedule_lr));
    std::string delta(ScheduleKindName(c.optimizer.schedule_delta));
    sched.String("lr", lr);
    sched.String("delta", delta);
    sched.Finish();
    c.optimizer.schedule_lr = ParseScheduleKind(lr);
    c.optimizer.schedule_delta = ParseScheduleKind(delta);
  }
  {
    Section out(top.Table("output"), "output");
    out.String("dir", c.output.dir);
    out.Bool("record_timing", c.output.record_timing);
    out.Finish();
  }
  c.optimizer.record_timing = c.output.record_timing;
  for (const std::string& name : OptimizerNames()) {
    const toml::table* sub = opt.Table(name);
    if (!sub) continue;
    OptimizerConfig oc = c.optimizer;
    oc.kind = ParseOptimizerKind(name);
    Section s(sub, "optimizer." + name);
    ReadOptimizerKeys(s, oc);
    s.Finish();
    if (oc.kind != ParseOptimizerKind(name)) {
      throw ConfigError("optimizer." + name + ".kind must be '" + name + "'");
    }
    c.per_optimizer[name] = oc;
  }
  opt.Finish();
  for (const auto& name : c.compare) ParseOptimizerKind(name);

  {
    Section lab(top.Table("lab"), "lab");
    LabConfig& l = c.lab;
    lab.SeedValue("seed", l.seed);
    {
      Section s(lab.Table("variance"), "lab.variance");
      s.IntList("q_list", l.variance.q_list);
      s.Double("norm_u", l.variance.norm_u);
      s.Integer("samples", l.variance.samples);
      s.Integer("extra_dims", l.variance.extra_dims);
      s.Double("eps", l.variance.eps);
      s.Double("rel_tol", l.variance.rel_tol);
      s.Double("slope_tol", l.variance.slope_tol);
      s.Finish();
    }
    {
      Section s(lab.Table("moments"), "lab.moments");
      s.IntList("dims", l.moment_dims);
      s.Integer("samples", l.moment_samples);
      s.Finish();
    }
    {
      Section s(lab.Table("angle"), "lab.angle");
      s.IntList("q_list", l.angle_q);
      s.Integer("samples", l.angle_samples);
      s.Finish();
    }
    {
      Section s(lab.Table("bias"), "lab.bias");
      s.DoubleList("eps_list", l.bias.eps_list);
      s.Integer("dims", l.bias.dims);
      s.Integer("samples", l.bias.samples);
      s.Double("slope_tol", l.bias.slope_tol);
      s.Finish();
    }
    {
      Section s(lab.Table("probe-mse"), "lab.probe-mse");
      s.IntList("w_list", l.probe_mse.w_list);
      s.Integer("dims", l.probe_mse.dims);
      s.Double("sigma", l.probe_mse.sigma);
      s.Double("grad_norm", l.probe_mse.grad_norm);
      s.Integer("replications", l.probe_mse.replications);
      s.Double("slope_tol", l.probe_mse.slope_tol);
      s.Finish();
    }
    {
      Section s(lab.Table("davis-kahan"), "lab.davis-kahan");
      s.Integer("rows", l.davis_kahan.rows);
      s.Integer("cols", l.davis_kahan.cols);
      s.Integer("rank", l.davis_kahan.rank);
      s.Double("sigma", l.davis_kahan.sigma);
      s.Double("sigma_min", l.davis_kahan.sigma_min);
      s.Integer("trials", l.davis_kahan.trials);
      s.Integer("probes", l.davis_kahan.probes);
      s.Double("capture_limit", l.davis_kahan.capture_limit);
      s.Double("required_fraction", l.davis_kahan.required_fraction);
      s.Finish();
    }
    {
      Section s(lab.Table("dispersion"), "lab.dispersion");
      s.Integer("rows", l.dispersion.rows);
      s.Integer("cols", l.dispersion.cols);
      s.Integer("planted_rank", l.dispersion.planted_rank);
      s.Integer("rank", l.dispersion.rank);
      s.Integer("window", l.dispersion.window);
      s.Integer("probes", l.dispersion.probes);
      s.Double("delta", l.dispersion.delta);
      s.Double("eps", l.dispersion.eps);
      s.Integer("samples", l.dispersion.samples);
      s.Integer("bins", l.dispersion.bins);
      s.Double("max_ratio", l.dispersion.max_ratio);
      s.Double("grad_norm", l.dispersion.grad_norm);
      s.Finish();
    }
    lab.Finish();
  }
  top.Finish();
  c.optimizer.Validate();
  for (const auto& [name, oc] : c.per_optimizer) oc.Validate();
  return c;
}

RunConfig LoadConfigFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  return ParseConfig(text.str(), path.string());
}

std::string ToToml(const RunConfig& c) {
  toml::table root;
  {
    const TaskSpec& t = c.task;
    toml::table s;
    s.insert("name", t.name);
    PutSeed(s, "seed", t.seed);
    s.insert("examples", static_cast<std::int64_t>(t.examples));
    s.insert("features", static_cast<std::int64_t>(t.features));
    toml::array shapes;
    for (const auto& [r, cc] : t.shapes) {
      shapes.push_back(toml::array{static_cast<std::int64_t>(r),
                                   static_cast<std::int64_t>(cc)});
    }
    s.insert("shapes", std::move(shapes));
    s.insert("planted_rank", static_cast<std::int64_t>(t.planted_rank));
    s.insert("lambda", t.lambda);
    s.insert("mu", t.mu);
    s.insert("offset_norm", t.offset_norm);
    s.insert("label_noise", t.label_noise);
    s.insert("weight_scale", t.weight_scale);
    s.insert("hidden", static_cast<std::int64_t>(t.hidden));
    s.insert("classes", static_cast<std::int64_t>(t.classes));
    s.insert("csv", t.csv);
    s.insert("label_column", t.label_column);
    toml::array cols;
    for (const auto& f : t.feature_columns) cols.push_back(f);
    s.insert("feature_columns", std::move(cols));
    s.insert("lora_rank", static_cast<std::int64_t>(t.lora_rank));
    root.insert("task", std::move(s));
  }
  {
    toml::table o = OptimizerTable(c.optimizer);
    toml::array cmp;
    for (const auto& n : c.compare) cmp.push_back(n);
    o.insert("compare", std::move(cmp));
    for (const auto& [name, oc] : c.per_optimizer) o.insert(name, OptimizerTable(oc));
    root.insert("optimizer", std::move(o));
  }
  {
    toml::table s;
    s.insert("lr", std::string(ScheduleKindName(c.optimizer.schedule_lr)));
    s.insert("delta", std::string(ScheduleKindName(c.optimizer.schedule_delta)));
    root.insert("schedules", std::move(s));
  }
  {
    const LabConfig& l = c.lab;
    toml::table lab;
    PutSeed(lab, "seed", l.seed);
    lab.insert("variance",
               toml::table{{"q_list", IntArray(l.variance.q_list)},
                           {"norm_u", l.variance.norm_u},
                           {"samples", static_cast<std::int64_t>(l.variance.samples)},
                           {"extra_dims", static_cast<std::int64_t>(l.variance.extra_dims)},
                           {"eps", l.variance.eps},
                           {"rel_tol", l.variance.rel_tol},
                           {"slope_tol", l.variance.slope_tol}});
    lab.insert("moments",
               toml::table{{"dims", IntArray(l.moment_dims)},
                           {"samples", static_cast<std::int64_t>(l.moment_samples)}});
    lab.insert("angle",
               toml::table{{"q_list", IntArray(l.angle_q)},
                           {"samples", static_cast<std::int64_t>(l.angle_samples)}});
    lab.insert("bias",
               toml::table{{"eps_list", DoubleArray(l.bias.eps_list)},
                           {"dims", static_cast<std::int64_t>(l.bias.dims)},
                           {"samples", static_cast<std::int64_t>(l.bias.samples)},
                           {"slope_tol", l.bias.slope_tol}});
    lab.insert("probe-mse",
               toml::table{{"w_list", IntArray(l.probe_mse.w_list)},
                           {"dims", static_cast<std::int64_t>(l.probe_mse.dims)},
                           {"sigma", l.probe_mse.sigma},
                           {"grad_norm", l.probe_mse.grad_norm},
                           {"replications",
                            static_cast<std::int64_t>(l.probe_mse.replications)},
                           {"slope_tol", l.probe_mse.slope_tol}});
    lab.insert("davis-kahan",
               toml::table{{"rows", static_cast<std::int64_t>(l.davis_kahan.rows)},
                           {"cols", static_cast<std::int64_t>(l.davis_kahan.cols)},
                           {"rank", static_cast<std::int64_t>(l.davis_kahan.rank)},
                           {"sigma", l.davis_kahan.sigma},
                           {"sigma_min", l.davis_kahan.sigma_min},
                           {"trials", static_cast<std::int64_t>(l.davis_kahan.trials)},
                           {"probes", static_cast<std::int64_t>(l.davis_kahan.probes)},
                           {"capture_limit", l.davis_kahan.capture_limit},
                           {"required_fraction", l.davis_kahan.required_fraction}});
    const DispersionOptions& d = l.dispersion;
    lab.insert("dispersion",
               toml::table{{"rows", static_cast<std::int64_t>(d.rows)},
                           {"cols", static_cast<std::int64_t>(d.cols)},
                           {"planted_rank", static_cast<std::int64_t>(d.planted_rank)},
                           {"rank", static_cast<std::int64_t>(d.rank)},
                           {"window", d.window},
                           {"probes", d.probes},
                           {"delta", d.delta},
                           {"eps", d.eps},
                           {"samples", static_cast<std::int64_t>(d.samples)},
                           {"bins", static_cast<std::int64_t>(d.bins)},
                           {"max_ratio", d.max_ratio},
                           {"grad_norm", d.grad_norm}});
    root.insert("lab", std::move(lab));
  }
  {
    toml::table s;
    s.insert("dir", c.output.dir);
    s.insert("record_timing", c.output.record_timing);
    root.insert("output", std::move(s));
  }
  std::ostringstream out;
  out << root << "\n";
  return out.str();
}

}  // namespace pgap
