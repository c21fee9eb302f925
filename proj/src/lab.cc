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

#include "pgap/lab.h"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <utility>

#include "json.hpp"
#include "pgap/errors.h"
#include "pgap/estimator.h"
#include "pgap/matrix.h"
#include "pgap/objectives.h"
#include "pgap/subspace.h"
#include "pgap/svd.h"

namespace pgap {
namespace {

std::string Fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, end);
}

std::string CheckName(CheckKind c) {
  switch (c) {
    case CheckKind::kEquals:
      return "equals";
    case CheckKind::kAtMost:
      return "at_most";
    case CheckKind::kAtLeast:
      return "at_least";
  }
  return "equals";
}

double Dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Gradient vector whose projection onto the columns of p has norm `inside`
// and whose orthogonal remainder has norm `outside`.
std::vector<double> GradientFor(const Matrix& p, GaussStream& rng, double inside,
                                double outside) {
  const std::size_t d = p.rows();
  const std::size_t q = p.cols();
  std::vector<double> coef(q);
  rng.FillGaussian(coef);
  double cn = std::sqrt(Dot(coef, coef));
  std::vector<double> g(d, 0.0);
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < q; ++j) g[i] += p(i, j) * coef[j] * inside / cn;
  }
  if (outside > 0.0 && q < d) {
    std::vector<double> w(d);
    rng.FillGaussian(w);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t j = 0; j < q; ++j) {
        double c = 0.0;
        for (std::size_t i = 0; i < d; ++i) c += p(i, j) * w[i];
        for (std::size_t i = 0; i < d; ++i) w[i] -= c * p(i, j);
      }
    }
    const double wn = std::sqrt(Dot(w, w));
    for (std::size_t i = 0; i < d; ++i) g[i] += w[i] * outside / wn;
  }
  return g;
}

// Diagonal quadratic f(x) = sum h_i x_i^2 evaluated literally.
double DiagQuadratic(const std::vector<double>& h, const std::vector<double>& x) {
  KahanSum s;
  for (std::size_t i = 0; i < x.size(); ++i) s.Add(h[i] * x[i] * x[i]);
  return s.value();
}

// Splits N samples into chunks, each drawn from its own substream.
constexpr std::uint64_t kChunk = 8192;

std::size_t ChunkCount(std::uint64_t n) {
  return static_cast<std::size_t>((n + kChunk - 1) / kChunk);
}

}  // namespace

void McReport::Evaluate() {
  switch (check) {
    case CheckKind::kEquals:
      pass = std::abs(estimate - target) <= std::max(abs_tol, z * stderr_);
      break;
    case CheckKind::kAtMost:
      pass = estimate <= target;
      break;
    case CheckKind::kAtLeast:
      pass = estimate >= target;
      break;
  }
  if (!std::isfinite(estimate)) pass = false;
}

McReport MakeReport(std::string id, std::uint64_t samples, double estimate,
                    double stderr_, double target, double abs_tol,
                    CheckKind check, bool asserted) {
  McReport r;
  r.id = std::move(id);
  r.samples = samples;
  r.estimate = estimate;
  r.stderr_ = stderr_;
  r.target = target;
  r.abs_tol = abs_tol;
  r.check = check;
  r.asserted = asserted;
  r.Evaluate();
  return r;
}

bool AllPass(const std::vector<McReport>& reports) {
  return std::all_of(reports.begin(), reports.end(),
                     [](const McReport& r) { return !r.asserted || r.pass; });
}

std::string ReportsToJson(const std::vector<McReport>& reports) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const McReport& r : reports) {
    nlohmann::ordered_json o;
    o["id"] = r.id;
    o["samples"] = r.samples;
    o["estimate"] = r.estimate;
    o["stderr"] = r.stderr_;
    o["target"] = r.target;
    o["abs_tol"] = r.abs_tol;
    o["z"] = r.z;
    o["check"] = CheckName(r.check);
    o["asserted"] = r.asserted;
    o["pass"] = r.pass;
    arr.push_back(std::move(o));
  }
  return arr.dump(2) + "\n";
}

void WriteReportsCsv(const std::vector<McReport>& reports, std::ostream& out) {
  out << "id,samples,estimate,stderr,target,abs_tol,z,check,asserted,pass\n";
  for (const McReport& r : reports) {
    out << r.id << ',' << r.samples << ',' << Fmt(r.estimate) << ','
        << Fmt(r.stderr_) << ',' << Fmt(r.target) << ',' << Fmt(r.abs_tol) << ','
        << Fmt(r.z) << ',' << CheckName(r.check) << ',' << (r.asserted ? 1 : 0)
        << ',' << (r.pass ? 1 : 0) << '\n';
  }
}

std::size_t LabThreads() {
  if (const char* env = std::getenv("PGAP_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

void ParallelFor(std::size_t n, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min(LabThreads(), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < n && !failed; i = next++) {
        try {
          body(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

MeanStat SampleMean(const std::vector<double>& xs) {
  if (xs.empty()) return {};
  KahanSum s;
  for (double x : xs) s.Add(x);
  const double n = static_cast<double>(xs.size());
  const double mean = s.value() / n;
  KahanSum ss;
  for (double x : xs) ss.Add((x - mean) * (x - mean));
  const double var = xs.size() > 1 ? ss.value() / (n - 1) : 0.0;
  return {mean, std::sqrt(var / n)};
}

MeanStat MedianOfMeans(const std::vector<double>& xs, std::size_t blocks) {
  const MeanStat plain = SampleMean(xs);
  if (xs.size() < blocks || blocks < 2) return plain;
  std::vector<double> means;
  const std::size_t per = xs.size() / blocks;
  for (std::size_t b = 0; b < blocks; ++b) {
    const std::size_t lo = b * per;
    const std::size_t hi = b + 1 == blocks ? xs.size() : lo + per;
    KahanSum s;
    for (std::size_t i = lo; i < hi; ++i) s.Add(xs[i]);
    means.push_back(s.value() / static_cast<double>(hi - lo));
  }
  std::sort(means.begin(), means.end());
  const double med = blocks % 2 == 1
                         ? means[blocks / 2]
                         : 0.5 * (means[blocks / 2 - 1] + means[blocks / 2]);
  return {med, std::sqrt(std::numbers::pi / 2.0) * plain.stderr_};
}

LineFit FitLine(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) {
    throw DimensionError("FitLine: need at least two paired points");
  }
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n;
  const double my = sy / n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  const double slope = sxy / sxx;
  return {slope, my - slope * mx};
}

// --- variance --------------------------------------------------------------

std::vector<McReport> VarianceVsDim(const VarianceOptions& opts, Seed seed) {
  std::vector<McReport> out;
  std::vector<double> qs;
  std::vector<double> vars;
  for (std::size_t q : opts.q_list) {
    if (q == 0) throw ConfigError("variance: q must be >= 1");
    const std::size_t d = q + opts.extra_dims;
    GaussStream setup(DeriveSubstream(seed, "variance_setup", q));
    const Matrix p = opts.extra_dims == 0 ? Matrix::Identity(d)
                                          : RandomOrthonormal(setup, d, q);
    // Quadratic regime: f(x) = sum h_i x_i^2 with a point x chosen so that
    // grad f = 2 h x has |P^T grad| = norm_u plus an orthogonal remainder.
    std::vector<double> h(d);
    for (double& v : h) v = 0.5 + setup.NextUniform();
    const std::vector<double> grad = GradientFor(p, setup, opts.norm_u, 1.0);
    std::vector<double> x(d);
    for (std::size_t i = 0; i < d; ++i) x[i] = grad[i] / (2.0 * h[i]);
    // E[g] = P P^T grad.
    std::vector<double> mean_g(d, 0.0);
    for (std::size_t i = 0; i < d; ++i) {
      for (std::size_t j = 0; j < q; ++j) {
        double c = 0.0;
        for (std::size_t k = 0; k < d; ++k) c += p(k, j) * grad[k];
        mean_g[i] += p(i, j) * c;
      }
    }

    std::vector<double> sq(opts.samples);
    std::vector<double> centered(opts.samples);
    const std::size_t chunks = ChunkCount(opts.samples);
    ParallelFor(chunks, [&](std::size_t c) {
      GaussStream rng(DeriveSubstream(seed, "variance", q * 1000003 + c));
      std::vector<double> z(q), v(d), xp(d), xm(d);
      const std::uint64_t lo = c * kChunk;
      const std::uint64_t hi = std::min<std::uint64_t>(opts.samples, lo + kChunk);
      for (std::uint64_t s = lo; s < hi; ++s) {
        rng.FillGaussian(z);
        for (std::size_t i = 0; i < d; ++i) {
          double acc = 0.0;
          for (std::size_t j = 0; j < q; ++j) acc += p(i, j) * z[j];
          v[i] = acc;
          xp[i] = x[i] + opts.eps * acc;
          xm[i] = x[i] - opts.eps * acc;
        }
        const double rho =
            (DiagQuadratic(h, xp) - DiagQuadratic(h, xm)) / (2.0 * opts.eps);
        double norm2 = 0.0;
        double cen2 = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          const double g = rho * v[i];
          norm2 += g * g;
          cen2 += (g - mean_g[i]) * (g - mean_g[i]);
        }
        sq[s] = norm2;
        centered[s] = cen2;
      }
    });
    const double u2 = opts.norm_u * opts.norm_u;
    const MeanStat var = MedianOfMeans(centered);
    const MeanStat second = MedianOfMeans(sq);
    const std::string base = "variance/q=" + std::to_string(q);
    const double t_var = static_cast<double>(q + 1) * u2;
    const double t_sec = static_cast<double>(q + 2) * u2;
    out.push_back(MakeReport(base + "/var", opts.samples, var.mean, var.stderr_,
                             t_var, opts.rel_tol * t_var));
    out.push_back(MakeReport(base + "/second_moment", opts.samples, second.mean,
                             second.stderr_, t_sec, opts.rel_tol * t_sec));
    qs.push_back(static_cast<double>(q));
    vars.push_back(var.mean / u2);
  }
  if (qs.size() >= 2) {
    const LineFit fit = FitLine(qs, vars);
    out.push_back(MakeReport("variance/slope", opts.samples * qs.size(), fit.slope,
                             0.0, 1.0, opts.slope_tol));
  }
  return out;
}

// --- moments ---------------------------------------------------------------

std::vector<McReport> GaussianMomentSuite(std::size_t n,
                                          const std::vector<double>& y,
                                          std::uint64_t samples, Seed seed) {
  if (y.size() != n) {
    throw DimensionError("moments: y has length " + std::to_string(y.size()) +
                         ", expected " + std::to_string(n));
  }
  std::vector<double> m2(samples), m4(samples);
  ParallelFor(ChunkCount(samples), [&](std::size_t c) {
    GaussStream rng(DeriveSubstream(seed, "moments", n * 1000003 + c));
    std::vector<double> z(n);
    const std::uint64_t lo = c * kChunk;
    const std::uint64_t hi = std::min<std::uint64_t>(samples, lo + kChunk);
    for (std::uint64_t s = lo; s < hi; ++s) {
      rng.FillGaussian(z);
      const double yz = Dot(y, z);
      m2[s] = yz * yz;
      m4[s] = yz * yz * Dot(z, z);
    }
  });
  const double y2 = Dot(y, y);
  const MeanStat a = SampleMean(m2);
  const MeanStat b = MedianOfMeans(m4);
  const std::string base = "moments/n=" + std::to_string(n);
  const double tiny = 1e-12;
  return {MakeReport(base + "/m2", samples, a.mean, a.stderr_, y2, tiny),
          MakeReport(base + "/m4", samples, b.mean, b.stderr_,
                     static_cast<double>(n + 2) * y2, tiny)};
}

// --- angle -----------------------------------------------------------------

std::vector<McReport> AngleSuite(std::size_t q, std::uint64_t samples, Seed seed) {
  if (q == 0) throw ConfigError("angle: q must be >= 1");
  const std::size_t d = q + 8;
  GaussStream setup(DeriveSubstream(seed, "angle_setup", q));
  const Matrix p = RandomOrthonormal(setup, d, q);
  const std::vector<double> grad = GradientFor(p, setup, 1.0, 0.0);
  std::vector<double> cos2(samples), cos1(samples);
  ParallelFor(ChunkCount(samples), [&](std::size_t c) {
    GaussStream rng(DeriveSubstream(seed, "angle", q * 1000003 + c));
    std::vector<double> z(q), g(d);
    const std::uint64_t lo = c * kChunk;
    const std::uint64_t hi = std::min<std::uint64_t>(samples, lo + kChunk);
    for (std::uint64_t s = lo; s < hi; ++s) {
      rng.FillGaussian(z);
      for (std::size_t i = 0; i < d; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < q; ++j) acc += p(i, j) * z[j];
        g[i] = acc;
      }
      const double rho = Dot(grad, g);
      for (double& v : g) v *= rho;
      const double gn = std::sqrt(Dot(g, g));
      const double cs = gn > 0.0 ? Dot(g, grad) / gn : 0.0;  // |grad| == 1
      cos1[s] = cs;
      cos2[s] = cs * cs;
    }
  });
  const MeanStat a = SampleMean(cos2);
  const MeanStat b = SampleMean(cos1);
  const std::string base = "angle/q=" + std::to_string(q);
  const double target = 1.0 / static_cast<double>(q);
  return {MakeReport(base + "/cos2", samples, a.mean, a.stderr_, target, 1e-12),
          MakeReport(base + "/cos", samples, b.mean, b.stderr_, target, 1e-12,
                     CheckKind::kEquals, /*asserted=*/false)};
}

// --- bias ------------------------------------------------------------------

std::vector<McReport> BiasRateSuite(const BiasOptions& opts, Seed seed) {
  const std::size_t d = opts.dims;
  GaussStream setup(DeriveSubstream(seed, "bias_setup", 0));
  std::vector<double> x(d);
  for (double& v : x) v = 0.1 * (setup.NextUniform() - 0.5);
  auto cubic = [](const std::vector<double>& p) {
    KahanSum s;
    for (double v : p) s.Add(v * v * v);
    return s.value();
  };
  std::vector<McReport> out;
  std::vector<double> log_eps, log_bias;
  for (std::size_t e = 0; e < opts.eps_list.size(); ++e) {
    const double eps = opts.eps_list[e];
    // Columns: g_j - 3 x_j^2 for every sample. Common random numbers across
    // eps: chunk c uses the same substream for every eps.
    std::vector<std::vector<double>> dev(d, std::vector<double>(opts.samples));
    ParallelFor(ChunkCount(opts.samples), [&](std::size_t c) {
      GaussStream rng(DeriveSubstream(seed, "bias", c));
      std::vector<double> u(d), xp(d), xm(d);
      const std::uint64_t lo = c * kChunk;
      const std::uint64_t hi = std::min<std::uint64_t>(opts.samples, lo + kChunk);
      for (std::uint64_t s = lo; s < hi; ++s) {
        rng.FillGaussian(u);
        for (std::size_t i = 0; i < d; ++i) {
          xp[i] = x[i] + eps * u[i];
          xm[i] = x[i] - eps * u[i];
        }
        const double rho = (cubic(xp) - cubic(xm)) / (2.0 * eps);
        for (std::size_t j = 0; j < d; ++j) {
          dev[j][s] = rho * u[j] - 3.0 * x[j] * x[j];
        }
      }
    });
    const double target = 3.0 * eps * eps;
    double norm2 = 0.0;
    double norm_se2 = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
      const MeanStat m = SampleMean(dev[j]);
      out.push_back(MakeReport("bias/eps=" + Fmt(eps) + "/coord=" + std::to_string(j),
                               opts.samples, m.mean, m.stderr_, target, 0.0));
      norm2 += m.mean * m.mean;
      norm_se2 += m.stderr_ * m.stderr_;
    }
    const double norm = std::sqrt(norm2);
    out.push_back(MakeReport("bias/eps=" + Fmt(eps) + "/norm", opts.samples, norm,
                             std::sqrt(norm_se2), target * std::sqrt(double(d)),
                             0.0, CheckKind::kEquals, /*asserted=*/false));
    log_eps.push_back(std::log(eps));
    log_bias.push_back(std::log(norm));
  }
  if (log_eps.size() >= 2) {
    const LineFit fit = FitLine(log_eps, log_bias);
    out.push_back(MakeReport("bias/slope", opts.samples * log_eps.size(), fit.slope,
                             0.0, 2.0, opts.slope_tol));
  }
  return out;
}

// --- probe MSE -------------------------------------------------------------

std::vector<McReport> ProbeMseSuite(const ProbeMseOptions& opts, Seed seed) {
  const std::size_t d = opts.dims;
  GaussStream setup(DeriveSubstream(seed, "probe_mse_setup", 0));
  std::vector<double> g(d);
  setup.FillGaussian(g);
  const double gn = std::sqrt(Dot(g, g));
  for (double& v : g) v *= opts.grad_norm / gn;
  // Noisy linear-plus-quadratic landscape f(x) = <g, x> + |x|^2 / 2 at x = 0;
  // the two-point quotient of the quadratic part vanishes at the origin, so
  // each probe reads <g + a_j, Q_j> up to rounding.
  const double noise_sd = opts.sigma / std::sqrt(static_cast<double>(d));
  const double eps = 1e-3;
  std::vector<McReport> out;
  std::vector<double> lw, lm;
  for (std::size_t w : opts.w_list) {
    if (w == 0) throw ConfigError("probe-mse: w must be >= 1");
    std::vector<double> err(opts.replications);
    ParallelFor(opts.replications, [&](std::size_t rep) {
      GaussStream rng(DeriveSubstream(seed, "probe_mse", w * 1000003 + rep));
      std::vector<double> q(d), a(d), acc(d, 0.0);
      for (std::size_t j = 0; j < w; ++j) {
        rng.FillGaussian(q);
        rng.FillGaussian(a);
        double fp = 0.0, fm = 0.0;
        for (std::size_t i = 0; i < d; ++i) {
          const double slope = g[i] + noise_sd * a[i];
          const double xp = eps * q[i];
          fp += slope * xp + 0.5 * xp * xp;
          fm += -slope * xp + 0.5 * xp * xp;
        }
        const double rho = (fp - fm) / (2.0 * eps);
        for (std::size_t i = 0; i < d; ++i) acc[i] += rho * q[i];
      }
      double e = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double diff = acc[i] / static_cast<double>(w) - g[i];
        e += diff * diff;
      }
      err[rep] = e;
    });
    const MeanStat m = MedianOfMeans(err);
    const double g2 = opts.grad_norm * opts.grad_norm;
    const double target = (static_cast<double>(d + 1) * g2 +
                           static_cast<double>(d + 2) * opts.sigma * opts.sigma) /
                          static_cast<double>(w);
    out.push_back(MakeReport("probe-mse/w=" + std::to_string(w), opts.replications,
                             m.mean, m.stderr_, target, 0.0));
    lw.push_back(std::log(static_cast<double>(w)));
    lm.push_back(std::log(m.mean));
  }
  if (lw.size() >= 2) {
    const LineFit fit = FitLine(lw, lm);
    out.push_back(MakeReport("probe-mse/slope", opts.replications * lw.size(),
                             fit.slope, 0.0, -1.0, opts.slope_tol));
  }
  return out;
}

// --- Davis-Kahan -----------------------------------------------------------

std::uint64_t DavisKahanProbeCount(std::size_t d, double sigma, double sigma_min) {
  if (!(sigma_min > 0.0)) throw ConfigError("davis-kahan: sigma_min must be > 0");
  const double w = 48.0 * static_cast<double>(d + 2) * sigma * sigma /
                   (sigma_min * sigma_min);
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::ceil(w)));
}

std::vector<McReport> DavisKahanSuite(const DavisKahanOptions& opts, Seed seed) {
  const std::size_t m = opts.rows;
  const std::size_t n = opts.cols;
  const std::size_t r = opts.rank;
  if (r == 0 || r > std::min(m, n)) {
    throw DimensionError("davis-kahan: rank " + std::to_string(r) + " invalid for " +
                         std::to_string(m) + "x" + std::to_string(n));
  }
  const std::size_t d = m * n;
  const std::uint64_t w = opts.probes > 0
                              ? opts.probes
                              : DavisKahanProbeCount(d, opts.sigma, opts.sigma_min);
  GaussStream setup(DeriveSubstream(seed, "davis_kahan_setup", 0));
  // Planted singular values sigma_min * (1 + (r - 1 - i) / r): the r-th equals
  // sigma_min.
  std::vector<double> s(r);
  for (std::size_t i = 0; i < r; ++i) {
    s[i] = opts.sigma_min *
           (1.0 + static_cast<double>(r - 1 - i) / static_cast<double>(r));
  }
  const Matrix u = RandomOrthonormal(setup, m, r);
  const Matrix v = RandomOrthonormal(setup, n, r);
  const Matrix grad = MatMulTransB(MatMul(u, Matrix::Diagonal(s)), v);
  const double noise_sd = opts.sigma / std::sqrt(static_cast<double>(d));
  const double eps = 1e-3;

  std::vector<double> capture(opts.trials);
  ParallelFor(opts.trials, [&](std::size_t t) {
    GaussStream rng(DeriveSubstream(seed, "davis_kahan", t));
    std::vector<double> q(d), a(d);
    Matrix acc(m, n);
    auto accd = acc.data();
    const auto gd = grad.data();
    for (std::uint64_t j = 0; j < w; ++j) {
      rng.FillGaussian(q);
      rng.FillGaussian(a);
      // Linear landscape <grad + a_j, W> probed at W = 0.
      double fp = 0.0, fm = 0.0;
      for (std::size_t i = 0; i < d; ++i) {
        const double slope = gd[i] + noise_sd * a[i];
        fp += slope * (eps * q[i]);
        fm += slope * (-eps * q[i]);
      }
      const double rho = (fp - fm) / (2.0 * eps) / static_cast<double>(w);
      for (std::size_t i = 0; i < d; ++i) accd[i] += rho * q[i];
    }
    const SvdTriple svd = TruncatedSvd(acc, r);
    SubspaceBasis basis{svd.u, svd.s, svd.v, 0};
    capture[t] = SubspaceCapture(basis, grad);
  });
  std::size_t good = 0;
  for (double c : capture) good += c <= opts.capture_limit ? 1 : 0;
  const double frac = static_cast<double>(good) / static_cast<double>(opts.trials);
  const MeanStat mc = SampleMean(capture);
  return {MakeReport("davis-kahan/pass_fraction", opts.trials, frac, 0.0,
                     opts.required_fraction, 0.0, CheckKind::kAtLeast),
          MakeReport("davis-kahan/mean_capture", opts.trials, mc.mean, mc.stderr_,
                     opts.capture_limit, 0.0, CheckKind::kAtMost,
                     /*asserted=*/false)};
}

// --- dispersion ------------------------------------------------------------

std::vector<double> UniformEdges(double lo, double hi, std::size_t bins) {
  if (bins == 0) throw ConfigError("histogram: bins must be >= 1");
  if (!(hi > lo)) {
    lo -= 0.5;
    hi += 0.5;
  }
  std::vector<double> edges(bins + 1);
  for (std::size_t i = 0; i <= bins; ++i) {
    edges[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(bins);
  }
  return edges;
}

Histogram MakeHistogram(const std::vector<double>& values,
                        const std::vector<double>& edges) {
  if (edges.size() < 2) throw ConfigError("histogram: need at least two edges");
  Histogram h{edges, std::vector<std::uint64_t>(edges.size() - 1, 0)};
  for (double x : values) {
    if (x < edges.front() || x > edges.back()) continue;
    auto it = std::upper_bound(edges.begin(), edges.end(), x);
    std::size_t bin = static_cast<std::size_t>(it - edges.begin());
    bin = bin == 0 ? 0 : std::min(bin - 1, h.counts.size() - 1);
    ++h.counts[bin];
  }
  return h;
}

DispersionResult DispersionSuite(const DispersionOptions& opts, Seed seed) {
  RankQuadraticSpec spec;
  spec.shapes = {{opts.rows, opts.cols}};
  spec.planted_rank = opts.planted_rank;
  spec.offset_norm = opts.grad_norm;
  const RankQuadraticObjective oracle(spec, DeriveSubstream(seed, "dispersion_task", 0));
  const ParamSet point = oracle.Initialize(seed);
  const Batch none;
  const std::size_t n = static_cast<std::size_t>(opts.samples);

  DispersionResult out;
  out.gaussian_rho.resize(n);
  out.pgap_rho.resize(n);
  const std::size_t windows =
      (n + static_cast<std::size_t>(opts.window) - 1) / static_cast<std::size_t>(opts.window);
  ParallelFor(windows, [&](std::size_t wi) {
    ParamSet params = point;
    const Seed wseed = DeriveSubstream(seed, "dispersion_window", wi);
    const ProbeResult probe = LowerDimGenerate(
        oracle, params, none, opts.probes, opts.rank, opts.eps,
        DeriveSubstream(wseed, "refresh", 0));
    const std::size_t lo = wi * static_cast<std::size_t>(opts.window);
    const std::size_t hi = std::min(n, lo + static_cast<std::size_t>(opts.window));
    for (std::size_t s = lo; s < hi; ++s) {
      const Seed draw = DeriveSubstream(wseed, "draw", s);
      const PerturbPlan gauss = BuildPlan(params, draw, opts.eps, nullptr, 0.0);
      const PerturbPlan aligned =
          BuildPlan(params, draw, opts.eps, &probe.bases, opts.delta);
      out.gaussian_rho[s] = TwoPointCoeff(oracle, params, gauss, none).rho;
      out.pgap_rho[s] = TwoPointCoeff(oracle, params, aligned, none).rho;
    }
  });

  double lo = 0.0, hi = 0.0;
  for (const auto* v : {&out.gaussian_rho, &out.pgap_rho}) {
    for (double x : *v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  const double span = std::max(std::abs(lo), std::abs(hi));
  const std::vector<double> edges = UniformEdges(-span, span, opts.bins);
  out.gaussian = MakeHistogram(out.gaussian_rho, edges);
  out.pgap = MakeHistogram(out.pgap_rho, edges);

  auto variance = [](const std::vector<double>& xs) {
    const MeanStat m = SampleMean(xs);
    return m.stderr_ * m.stderr_ * static_cast<double>(xs.size());
  };
  const double vg = variance(out.gaussian_rho);
  const double vp = variance(out.pgap_rho);
  const double ratio = vg > 0.0 ? vp / vg : (vp > 0.0 ? INFINITY : 0.0);
  out.reports.push_back(MakeReport("dispersion/gaussian_variance", opts.samples, vg,
                                   0.0, opts.grad_norm * opts.grad_norm, 0.0,
                                   CheckKind::kEquals, /*asserted=*/false));
  out.reports.push_back(MakeReport("dispersion/pgap_variance", opts.samples, vp,
                                   0.0, vg, 0.0, CheckKind::kAtMost,
                                   /*asserted=*/vg > 0.0));
  out.reports.push_back(MakeReport("dispersion/variance_ratio", opts.samples, ratio,
                                   0.0, opts.max_ratio, 0.0, CheckKind::kAtMost,
                                   /*asserted=*/vg > 0.0));
  return out;
}

}  // namespace pgap
