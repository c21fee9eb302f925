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

// Monte-Carlo laboratory for the estimator's statistical laws.
//
// Every suite is deterministic in its seed: trial i draws from
// DeriveSubstream(seed, <suite label>, i), so results do not depend on the
// number of worker threads.

#ifndef PGAP_LAB_H_
#define PGAP_LAB_H_

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "pgap/random.h"

namespace pgap {

enum class CheckKind {
  kEquals,   // |estimate - target| <= max(abs_tol, z * stderr)
  kAtMost,   // estimate <= target
  kAtLeast,  // estimate >= target
};

struct McReport {
  std::string id;
  std::uint64_t samples = 0;
  double estimate = 0.0;
  double stderr_ = 0.0;
  double target = 0.0;
  double abs_tol = 0.0;
  double z = 3.0;
  CheckKind check = CheckKind::kEquals;
  // Informational reports are recorded but never fail a suite.
  bool asserted = true;
  bool pass = false;

  // Recomputes `pass` from the registered criterion.
  void Evaluate();
};

McReport MakeReport(std::string id, std::uint64_t samples, double estimate,
                    double stderr_, double target, double abs_tol,
                    CheckKind check = CheckKind::kEquals, bool asserted = true);

bool AllPass(const std::vector<McReport>& reports);

// JSON array with one object per report; CSV with one row per report.
std::string ReportsToJson(const std::vector<McReport>& reports);
void WriteReportsCsv(const std::vector<McReport>& reports, std::ostream& out);

// Worker count for trial loops: PGAP_THREADS if set (>= 1), otherwise the
// hardware concurrency.
std::size_t LabThreads();
// Runs body(i) for i in [0, n) across LabThreads() workers.
void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& body);

// --- statistics helpers ---------------------------------------------------

struct MeanStat {
  double mean = 0.0;
  double stderr_ = 0.0;
};

// Plain sample mean with stderr = sd / sqrt(N).
MeanStat SampleMean(const std::vector<double>& xs);
// Median of `blocks` block means; stderr = sqrt(pi / 2) * sd / sqrt(N).
MeanStat MedianOfMeans(const std::vector<double>& xs, std::size_t blocks = 16);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};
LineFit FitLine(const std::vector<double>& x, const std::vector<double>& y);

// --- suites ---------------------------------------------------------------

struct VarianceOptions {
  std::vector<std::size_t> q_list = {1, 2, 4, 8, 16, 32};
  double norm_u = 1.0;
  std::uint64_t samples = 1000000;
  // Ambient dimension is q + extra_dims; 0 makes P the identity.
  std::size_t extra_dims = 16;
  double eps = 1e-3;
  double rel_tol = 0.03;
  double slope_tol = 0.05;
};
// Per q: "variance/q=<q>/var" against (q+1)|u|^2 and ".../second_moment"
// against (q+2)|u|^2, then "variance/slope" of Var against q.
std::vector<McReport> VarianceVsDim(const VarianceOptions& opts, Seed seed);

// "moments/n=<n>/m2" and "moments/n=<n>/m4".
std::vector<McReport> GaussianMomentSuite(std::size_t n,
                                          const std::vector<double>& y,
                                          std::uint64_t samples, Seed seed);

// "angle/q=<q>/cos2" (asserted, target 1/q) and "angle/q=<q>/cos"
// (informational, target 1/q).
std::vector<McReport> AngleSuite(std::size_t q, std::uint64_t samples, Seed seed);

struct BiasOptions {
  std::vector<double> eps_list = {0.3, 0.1, 0.03};
  std::size_t dims = 4;
  std::uint64_t samples = 1000000;
  double slope_tol = 0.2;
};
// Cubic f(x) = sum x_i^3. Per eps and coordinate: mean(rho u_j) - 3 x_j^2
// against 3 eps^2; per eps the bias norm against 3 eps^2 sqrt(d); finally the
// log-log slope of the norm against eps (target 2).
std::vector<McReport> BiasRateSuite(const BiasOptions& opts, Seed seed);

struct ProbeMseOptions {
  std::vector<std::size_t> w_list = {1, 2, 4, 8, 16, 32, 64, 128, 256};
  std::size_t dims = 64;
  double sigma = 1.0;
  double grad_norm = 1.0;
  std::uint64_t replications = 2000;
  double slope_tol = 0.2;
};
// Noisy quadratic: every probe sees the gradient plus N(0, sigma^2 / d I)
// noise. Per w: "probe-mse/w=<w>" against ((d+1)|g|^2 + (d+2) sigma^2) / w,
// then "probe-mse/slope" (target -1).
std::vector<McReport> ProbeMseSuite(const ProbeMseOptions& opts, Seed seed);

struct DavisKahanOptions {
  std::size_t rows = 8;
  std::size_t cols = 8;
  std::size_t rank = 4;
  double sigma = 3.0;
  double sigma_min = 1.0;
  std::size_t trials = 200;
  // 0 uses ceil(48 (d + 2) sigma^2 / sigma_min^2).
  std::uint64_t probes = 0;
  double capture_limit = 0.5;
  double required_fraction = 0.9;
};
std::uint64_t DavisKahanProbeCount(std::size_t d, double sigma, double sigma_min);
// "davis-kahan/pass_fraction" (at least required_fraction) and
// "davis-kahan/mean_capture" (informational).
std::vector<McReport> DavisKahanSuite(const DavisKahanOptions& opts, Seed seed);

struct Histogram {
  std::vector<double> edges;  // bins + 1 values
  std::vector<std::uint64_t> counts;
};
Histogram MakeHistogram(const std::vector<double>& values,
                        const std::vector<double>& edges);
std::vector<double> UniformEdges(double lo, double hi, std::size_t bins);

struct DispersionOptions {
  std::size_t rows = 64;
  std::size_t cols = 64;
  std::size_t planted_rank = 4;
  std::size_t rank = 8;
  std::int64_t window = 100;
  std::int64_t probes = 10;
  double delta = 2.0;
  double eps = 1e-2;
  std::uint64_t samples = 100000;
  std::size_t bins = 41;
  double max_ratio = 0.25;
  // Gradient norm at the evaluation point; 0 gives a zero-gradient point.
  double grad_norm = 1.0;
};

struct DispersionResult {
  std::vector<double> gaussian_rho;
  std::vector<double> pgap_rho;
  Histogram gaussian;
  Histogram pgap;
  std::vector<McReport> reports;
};
// rho samples at a fixed point of the rank-structured quadratic under full
// Gaussian and under aligned perturbations (frames refreshed every `window`
// samples), common histogram edges, and "dispersion/variance_ratio".
DispersionResult DispersionSuite(const DispersionOptions& opts, Seed seed);

}  // namespace pgap

#endif  // PGAP_LAB_H_
