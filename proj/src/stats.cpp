// SPDX-FileCopyrightText: (c) 2026 ckarank contributors
// SPDX-License-Identifier: Apache-2.0

#include "ckarank/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace ckarank::stats {

double mean(const std::vector<double>& v) {
  require(!v.empty(), "mean: empty vector");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sample_std(const std::vector<double>& v) {
  require(v.size() >= 2, "sample_std: need at least 2 values");
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

namespace {

// Lentz continued fraction for the incomplete beta function.
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 3e-16;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  require(a > 0.0 && b > 0.0, "incomplete_beta: a, b must be positive");
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                          a * std::log(x) + b * std::log(1.0 - x);
  const double front = std::exp(ln_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, int dof) {
  require(dof >= 1, "student_t_two_sided_p: dof must be >= 1");
  const double d = static_cast<double>(dof);
  return incomplete_beta(d / 2.0, 0.5, d / (d + t * t));
}

double student_t_quantile_975(int dof) {
  require(dof >= 1, "student_t_quantile_975: dof must be >= 1");
  double lo = 0.0, hi = 1e4;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (student_t_two_sided_p(mid, dof) > 0.05)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

TTestResult paired_t_test(const std::vector<double>& deltas) {
  require(deltas.size() >= 2, "paired_t_test: need at least 2 paired differences");
  TTestResult r;
  const int n = static_cast<int>(deltas.size());
  r.dof = n - 1;
  r.mean = mean(deltas);
  r.stddev = sample_std(deltas);
  if (r.stddev == 0.0) {
    r.degenerate = true;
    r.t = 0.0;
    r.p = (r.mean != 0.0) ? 0.0 : 1.0;
    r.ci_lo = r.ci_hi = r.mean;
    return r;
  }
  const double se = r.stddev / std::sqrt(static_cast<double>(n));
  r.t = r.mean / se;
  r.p = student_t_two_sided_p(r.t, r.dof);
  const double q = student_t_quantile_975(r.dof);
  r.ci_lo = r.mean - q * se;
  r.ci_hi = r.mean + q * se;
  return r;
}

HolmResult holm_bonferroni(const std::vector<double>& p_values, double alpha) {
  require(alpha > 0.0 && alpha < 1.0, "holm_bonferroni: alpha must be in (0,1)");
  const std::size_t m = p_values.size();
  HolmResult out;
  out.reject.assign(m, false);
  out.adjusted_p.assign(m, 1.0);
  if (m == 0) return out;

  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return p_values[i] < p_values[j]; });

  // Step-down: adjusted p is the running max of (m - i) * p_(i).
  double running = 0.0;
  bool blocked = false;
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t idx = order[i];
    const double scaled = std::min(1.0, static_cast<double>(m - i) * p_values[idx]);
    running = std::max(running, scaled);
    out.adjusted_p[idx] = running;
    if (!blocked && p_values[idx] <= alpha / static_cast<double>(m - i))
      out.reject[idx] = true;
    else
      blocked = true;
  }
  return out;
}

namespace {

std::vector<double> average_ranks(const std::vector<double>& v) {
  const std::size_t n = v.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return v[i] < v[j]; });
  std::vector<double> ranks(n, 0.0);
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
    const double avg = 0.5 * (static_cast<double>(i) + static_cast<double>(j)) + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = avg;
    i = j + 1;
  }
  return ranks;
}

}  // namespace

double spearman(const std::vector<double>& a, const std::vector<double>& b) {
  require(a.size() == b.size() && a.size() >= 2, "spearman: need two equal-size samples");
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  const double ma = mean(ra);
  const double mb = mean(rb);
  double num = 0.0, da = 0.0, db = 0.0;
  for (std::size_t i = 0; i < ra.size(); ++i) {
    num += (ra[i] - ma) * (rb[i] - mb);
    da += (ra[i] - ma) * (ra[i] - ma);
    db += (rb[i] - mb) * (rb[i] - mb);
  }
  if (da == 0.0 || db == 0.0)
    throw DegenerateInputError("spearman: constant ranks");
  return num / std::sqrt(da * db);
}

}  // namespace ckarank::stats
