#include "opbw/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/normal.hpp>
#include <boost/math/special_functions/gamma.hpp>

namespace opbw::stats {

Summary summarize(std::span<const double> x) {
  Summary s;
  s.n = static_cast<std::int64_t>(x.size());
  if (x.empty()) return s;
  // Two-pass for accuracy.
  s.mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
  if (x.size() > 1) {
    double ss = 0;
    for (double v : x) ss += (v - s.mean) * (v - s.mean);
    s.var = ss / static_cast<double>(x.size() - 1);
    s.se = std::sqrt(s.var / static_cast<double>(x.size()));
  }
  return s;
}

Interval wilson(std::int64_t successes, std::int64_t trials, double z) {
  if (trials <= 0) return {0.0, 1.0};
  const double n = static_cast<double>(trials);
  const double phat = static_cast<double>(successes) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double centre = (phat + z2 / (2 * n)) / denom;
  const double half = z * std::sqrt(phat * (1 - phat) / n + z2 / (4 * n * n)) / denom;
  return {std::max(0.0, centre - half), std::min(1.0, centre + half)};
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_quantile(double q) {
  return boost::math::quantile(boost::math::normal_distribution<double>(0.0, 1.0), q);
}

double chi2_sf(double stat, double df) {
  if (stat <= 0) return 1.0;
  return boost::math::gamma_q(df / 2.0, stat / 2.0);
}

double quantile(std::vector<double> x, double q) {
  if (x.empty()) throw StatisticalError("quantile of an empty sample");
  std::sort(x.begin(), x.end());
  const double pos = q * static_cast<double>(x.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, x.size() - 1);
  return x[lo] + (pos - static_cast<double>(lo)) * (x[hi] - x[lo]);
}

double median(std::vector<double> x) { return quantile(std::move(x), 0.5); }

// Regression --------------------------------------------------------------

LineFit fit_line(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw StatisticalError("fit_line: size mismatch");
  const std::size_t n = x.size();
  if (n < 3) throw StatisticalError("fit_line: need at least 3 points");
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0) throw StatisticalError("fit_line: zero variance in x");
  LineFit f;
  f.points = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double sse = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    sse += r * r;
  }
  const double s2 = sse / static_cast<double>(n - 2);
  f.slope_se = std::sqrt(s2 / sxx);
  f.intercept_se = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / sxx));
  f.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
  return f;
}

LineFit fit_line_weighted(std::span<const double> x, std::span<const double> y, std::span<const double> y_se) {
  if (x.size() != y.size() || x.size() != y_se.size()) throw StatisticalError("fit_line_weighted: size mismatch");
  const std::size_t n = x.size();
  if (n < 2) throw StatisticalError("fit_line_weighted: need at least 2 points");
  double sw = 0, swx = 0, swy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(y_se[i] > 0)) throw StatisticalError("fit_line_weighted: standard errors must be positive");
    const double w = 1.0 / (y_se[i] * y_se[i]);
    sw += w;
    swx += w * x[i];
    swy += w * y[i];
  }
  const double mx = swx / sw, my = swy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double w = 1.0 / (y_se[i] * y_se[i]);
    sxx += w * (x[i] - mx) * (x[i] - mx);
    sxy += w * (x[i] - mx) * (y[i] - my);
    syy += w * (y[i] - my) * (y[i] - my);
  }
  if (sxx <= 0) throw StatisticalError("fit_line_weighted: zero variance in x");
  LineFit f;
  f.points = n;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.slope_se = std::sqrt(1.0 / sxx);
  f.intercept_se = std::sqrt(1.0 / sw + mx * mx / sxx);
  double sse = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - f.intercept - f.slope * x[i];
    sse += r * r / (y_se[i] * y_se[i]);
  }
  f.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
  return f;
}

TailFitResult fit_log_counts(std::span<const double> keys, std::span<const std::int64_t> counts, std::int64_t total,
                             std::int64_t min_count) {
  if (keys.size() != counts.size()) throw StatisticalError("fit_log_counts: size mismatch");
  std::vector<double> xs, ys;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    if (counts[i] < min_count) continue;
    xs.push_back(keys[i]);
    ys.push_back(std::log(static_cast<double>(counts[i]) / static_cast<double>(total)));
  }
  if (xs.size() < 3) {
    throw StatisticalError("tail fit: only " + std::to_string(xs.size()) + " levels with >= " +
                           std::to_string(min_count) + " samples; need at least 3");
  }
  const LineFit f = fit_line(xs, ys);
  TailFitResult r;
  r.rate = -f.slope;
  r.rate_se = f.slope_se;
  r.ci_low = r.rate - 1.96 * r.rate_se;
  r.ci_high = r.rate + 1.96 * r.rate_se;
  r.intercept = f.intercept;
  r.r2 = f.r2;
  r.points = f.points;
  r.n_lo = static_cast<std::int64_t>(*std::min_element(xs.begin(), xs.end()));
  r.n_hi = static_cast<std::int64_t>(*std::max_element(xs.begin(), xs.end()));
  return r;
}

TailFitResult tail_fit(std::span<const std::int64_t> samples, std::int64_t min_count) {
  if (samples.size() < 1000) {
    throw StatisticalError("tail_fit: need at least 1000 samples, got " + std::to_string(samples.size()));
  }
  std::map<std::int64_t, std::int64_t> hist;
  for (auto v : samples) {
    if (v <= 0) throw StatisticalError("tail_fit: samples must be positive integers");
    ++hist[v];
  }
  if (hist.size() == 1) throw StatisticalError("tail_fit: zero variance in the sample");
  std::vector<double> keys;
  std::vector<std::int64_t> counts;
  std::int64_t at_or_above = static_cast<std::int64_t>(samples.size());
  for (std::int64_t n = hist.begin()->first; n <= hist.rbegin()->first; ++n) {
    keys.push_back(static_cast<double>(n));
    counts.push_back(at_or_above);
    if (auto it = hist.find(n); it != hist.end()) at_or_above -= it->second;
  }
  return fit_log_counts(keys, counts, static_cast<std::int64_t>(samples.size()), min_count);
}

SigmaEstimate estimate_sigma2(std::span<const double> y, std::span<const double> tau) {
  if (y.size() != tau.size()) throw StatisticalError("estimate_sigma2: size mismatch");
  if (y.size() < 100) {
    throw StatisticalError("estimate_sigma2: need at least 100 regenerations, got " + std::to_string(y.size()));
  }
  const double n = static_cast<double>(y.size());
  double a = 0, b = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    a += y[i] * y[i];
    b += tau[i];
  }
  a /= n;
  b /= n;
  double vaa = 0, vbb = 0, vab = 0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double da = y[i] * y[i] - a, db = tau[i] - b;
    vaa += da * da;
    vbb += db * db;
    vab += da * db;
  }
  vaa /= n - 1;
  vbb /= n - 1;
  vab /= n - 1;
  SigmaEstimate s;
  s.regenerations = static_cast<std::int64_t>(y.size());
  s.mean_y2 = a;
  s.mean_tau = b;
  s.sigma2 = a / b;
  const double var = (vaa / (b * b) - 2.0 * a * vab / (b * b * b) + a * a * vbb / (b * b * b * b)) / n;
  s.se = std::sqrt(std::max(0.0, var));
  return s;
}

SigmaEstimate SigmaAccumulator::result() const {
  if (n < 100) throw StatisticalError("estimate_sigma2: need at least 100 regenerations, got " + std::to_string(n));
  const double m = static_cast<double>(n);
  const double a = static_cast<double>(sy2) / m, b = static_cast<double>(st) / m;
  const double vaa = (static_cast<double>(sy4) - m * a * a) / (m - 1);
  const double vbb = (static_cast<double>(st2) - m * b * b) / (m - 1);
  const double vab = (static_cast<double>(sy2t) - m * a * b) / (m - 1);
  SigmaEstimate s;
  s.regenerations = n;
  s.mean_y2 = a;
  s.mean_tau = b;
  s.sigma2 = a / b;
  const double var = (vaa / (b * b) - 2.0 * a * vab / (b * b * b) + a * a * vbb / (b * b * b * b)) / m;
  s.se = std::sqrt(std::max(0.0, var));
  return s;
}

// Kolmogorov-Smirnov -----------------------------------------------------------

namespace {

using Matrix = std::vector<double>;

void mat_mul(const Matrix& a, const Matrix& b, Matrix& c, int m) {
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      double s = 0;
      for (int k = 0; k < m; ++k) s += a[i * m + k] * b[k * m + j];
      c[i * m + j] = s;
    }
  }
}

// V = A^n with a decimal exponent carried in eV to avoid overflow.
void mat_pow(const Matrix& a, int ea, Matrix& v, int& ev, int m, std::int64_t n) {
  if (n == 1) {
    v = a;
    ev = ea;
    return;
  }
  mat_pow(a, ea, v, ev, m, n / 2);
  Matrix b(v.size());
  mat_mul(v, v, b, m);
  int eb = 2 * ev;
  if (n % 2 == 0) {
    v = b;
    ev = eb;
  } else {
    mat_mul(a, b, v, m);
    ev = ea + eb;
  }
  if (v[(m / 2) * m + m / 2] > 1e140) {
    for (double& x : v) x *= 1e-140;
    ev += 140;
  }
}

// Marsaglia, Tsang & Wang (2003): P(D_n < d).
double ks_cdf_exact(std::int64_t n, double d) {
  const int k = static_cast<int>(static_cast<double>(n) * d) + 1;
  const int m = 2 * k - 1;
  const double h = k - static_cast<double>(n) * d;
  Matrix H(static_cast<std::size_t>(m) * m);
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) H[i * m + j] = (i - j + 1 < 0) ? 0.0 : 1.0;
  }
  for (int i = 0; i < m; ++i) {
    H[i * m] -= std::pow(h, i + 1);
    H[(m - 1) * m + i] -= std::pow(h, m - i);
  }
  H[(m - 1) * m] += (2 * h - 1 > 0) ? std::pow(2 * h - 1, m) : 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < m; ++j) {
      if (i - j + 1 > 0) {
        for (int g = 1; g <= i - j + 1; ++g) H[i * m + j] /= g;
      }
    }
  }
  Matrix Q;
  int eQ = 0;
  mat_pow(H, 0, Q, eQ, m, n);
  double s = Q[(k - 1) * m + k - 1];
  for (std::int64_t i = 1; i <= n; ++i) {
    s = s * static_cast<double>(i) / static_cast<double>(n);
    if (s < 1e-140) {
      s *= 1e140;
      eQ -= 140;
    }
  }
  return s * std::pow(10.0, eQ);
}

// Q_KS(λ) = 2 Σ (−1)^{j−1} exp(−2 j² λ²)
double kolmogorov_sf(double lambda) {
  if (lambda < 0.2) return 1.0;
  double sum = 0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 == 1 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

}  // namespace

double ks_pvalue(double d, std::int64_t n) {
  if (n <= 0) throw StatisticalError("ks_pvalue: empty sample");
  if (d <= 0) return 1.0;
  if (d >= 1) return 0.0;
  if (n <= 200 && static_cast<double>(n) * d <= 100) {
    return std::clamp(1.0 - ks_cdf_exact(n, d), 0.0, 1.0);
  }
  const double sn = std::sqrt(static_cast<double>(n));
  return kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d);
}

TestResult ks_test(std::vector<double> x, const std::function<double(double)>& cdf) {
  if (x.empty()) throw StatisticalError("ks_test: empty sample");
  std::sort(x.begin(), x.end());
  const double n = static_cast<double>(x.size());
  double d = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double f = cdf(x[i]);
    d = std::max({d, static_cast<double>(i + 1) / n - f, f - static_cast<double>(i) / n});
  }
  return {d, ks_pvalue(d, static_cast<std::int64_t>(x.size())), static_cast<std::int64_t>(x.size())};
}

TestResult ks_test_normal(std::vector<double> x, double mean, double var) {
  if (!(var > 0)) throw StatisticalError("ks_test_normal: variance must be positive");
  const double sd = std::sqrt(var);
  return ks_test(std::move(x), [&](double v) { return normal_cdf((v - mean) / sd); });
}

TestResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw StatisticalError("ks_two_sample: empty sample");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0;
  while (i < a.size() && j < b.size()) {
    const double v = std::min(a[i], b[j]);
    while (i < a.size() && a[i] == v) ++i;
    while (j < b.size() && b[j] == v) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double ne = na * nb / (na + nb);
  const double sn = std::sqrt(ne);
  return {d, kolmogorov_sf((sn + 0.12 + 0.11 / sn) * d), static_cast<std::int64_t>(a.size() + b.size())};
}

TestResult sign_test(std::span<const double> x) {
  std::int64_t pos = 0, neg = 0;
  for (double v : x) {
    if (v > 0) ++pos;
    else if (v < 0) ++neg;
  }
  const std::int64_t n = pos + neg;
  if (n == 0) return {0.0, 1.0, 0};
  boost::math::binomial_distribution<double> bin(static_cast<double>(n), 0.5);
  const auto k = static_cast<double>(std::min(pos, neg));
  const double p = std::min(1.0, 2.0 * boost::math::cdf(bin, k));
  return {static_cast<double>(pos - neg), p, n};
}

TestResult chi2_gof(std::span<const std::int64_t> observed, std::span<const double> probs) {
  if (observed.size() != probs.size()) throw StatisticalError("chi2_gof: size mismatch");
  std::int64_t total = 0;
  for (auto o : observed) total += o;
  if (total == 0) throw StatisticalError("chi2_gof: no observations");
  double stat = 0;
  int cells = 0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    if (probs[i] <= 0) {
      if (observed[i] > 0) return {std::numeric_limits<double>::infinity(), 0.0, total};
      continue;
    }
    const double e = probs[i] * static_cast<double>(total);
    stat += (static_cast<double>(observed[i]) - e) * (static_cast<double>(observed[i]) - e) / e;
    ++cells;
  }
  if (cells < 2) throw StatisticalError("chi2_gof: need at least 2 cells");
  return {stat, chi2_sf(stat, cells - 1), total};
}

TestResult chi2_homogeneity(std::span<const std::int64_t> a, std::span<const std::int64_t> b) {
  if (a.size() != b.size()) throw StatisticalError("chi2_homogeneity: size mismatch");
  double na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += static_cast<double>(a[i]);
    nb += static_cast<double>(b[i]);
  }
  if (na == 0 || nb == 0) throw StatisticalError("chi2_homogeneity: empty sample");
  const double n = na + nb;
  double stat = 0;
  int cells = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double col = static_cast<double>(a[i] + b[i]);
    if (col == 0) continue;
    const double ea = na * col / n, eb = nb * col / n;
    stat += (static_cast<double>(a[i]) - ea) * (static_cast<double>(a[i]) - ea) / ea;
    stat += (static_cast<double>(b[i]) - eb) * (static_cast<double>(b[i]) - eb) / eb;
    ++cells;
  }
  if (cells < 2) return {0.0, 1.0, static_cast<std::int64_t>(n)};
  return {stat, chi2_sf(stat, cells - 1), static_cast<std::int64_t>(n)};
}

TestResult permutation_test(std::span<const double> a, std::span<const double> b, int reps, std::uint64_t seed) {
  if (a.empty() || b.empty()) throw StatisticalError("permutation_test: empty sample");
  std::vector<double> pooled(a.begin(), a.end());
  pooled.insert(pooled.end(), b.begin(), b.end());
  const double total = std::accumulate(pooled.begin(), pooled.end(), 0.0);
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  auto stat = [&](double sum_a) { return std::abs(sum_a / na - (total - sum_a) / nb); };
  const double observed = stat(std::accumulate(a.begin(), a.end(), 0.0));
  std::mt19937_64 gen(seed);
  int extreme = 0;
  for (int r = 0; r < reps; ++r) {
    std::shuffle(pooled.begin(), pooled.end(), gen);
    const double s = stat(std::accumulate(pooled.begin(), pooled.begin() + static_cast<std::ptrdiff_t>(a.size()), 0.0));
    if (s >= observed - 1e-12 * std::abs(observed)) ++extreme;
  }
  return {observed, (1.0 + extreme) / (1.0 + reps), static_cast<std::int64_t>(pooled.size())};
}

double autocorrelation(std::span<const double> x, int lag) {
  const std::size_t n = x.size();
  if (lag <= 0 || static_cast<std::size_t>(lag) >= n) throw StatisticalError("autocorrelation: bad lag");
  const double m = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double den = 0, num = 0;
  for (std::size_t i = 0; i < n; ++i) den += (x[i] - m) * (x[i] - m);
  for (std::size_t i = 0; i + static_cast<std::size_t>(lag) < n; ++i) num += (x[i] - m) * (x[i + lag] - m);
  return den > 0 ? num / den : 0.0;
}

IidReport iid_diagnostics(const std::vector<std::pair<std::string, std::vector<double>>>& series, int max_lag,
                          std::uint64_t seed) {
  IidReport report;
  report.pass = true;
  std::uint64_t sub = 0;
  for (const auto& [name, x] : series) {
    if (x.size() < 1000) {
      throw StatisticalError("iid_diagnostics: series '" + name + "' has fewer than 1000 entries");
    }
    SeriesDiagnostics s;
    s.name = name;
    s.se = 1.0 / std::sqrt(static_cast<double>(x.size()));
    for (int lag = 1; lag <= max_lag; ++lag) {
      const double r = autocorrelation(x, lag);
      s.rho.push_back(r);
      s.max_abs_z = std::max(s.max_abs_z, std::abs(r) / s.se);
    }
    const std::size_t half = x.size() / 2;
    const std::span<const double> all(x);
    s.halves_pvalue = permutation_test(all.first(half), all.subspan(half), 999, seed + 0x9E37 * ++sub).pvalue;
    if (s.max_abs_z > 3.0 || s.halves_pvalue <= 0.01) report.pass = false;
    report.series.push_back(std::move(s));
  }
  return report;
}

SupportReport support_check(std::span<const Coord> y, std::span<const std::int64_t> tau, int d, int radius,
                            int n_max) {
  if (y.size() != tau.size()) throw StatisticalError("support_check: size mismatch");
  SupportReport r;
  std::map<std::pair<std::int64_t, Coord>, bool> seen;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const std::int64_t norm = sup_norm(y[i]);
    if (norm > tau[i] * radius) ++r.violations;
    if (tau[i] <= n_max && norm <= tau[i] * radius) seen[{tau[i], y[i]}] = true;
  }
  for (int n = 1; n <= n_max; ++n) {
    std::int64_t cells = 1;
    for (int i = 0; i < d; ++i) cells *= 2 * static_cast<std::int64_t>(n) * radius + 1;
    r.cone_cells += cells;
  }
  r.covered = static_cast<std::int64_t>(seen.size());
  r.coverage = r.cone_cells > 0 ? static_cast<double>(r.covered) / static_cast<double>(r.cone_cells) : 0.0;
  return r;
}

double tv_distance(std::span<const std::int64_t> a, std::span<const std::int64_t> b) {
  if (a.size() != b.size()) throw StatisticalError("tv_distance: size mismatch");
  double na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    na += static_cast<double>(a[i]);
    nb += static_cast<double>(b[i]);
  }
  if (na == 0 || nb == 0) throw StatisticalError("tv_distance: empty sample");
  double tv = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    tv += std::abs(static_cast<double>(a[i]) / na - static_cast<double>(b[i]) / nb);
  }
  return 0.5 * tv;
}

namespace {

std::vector<std::int64_t> multinomial_resample(std::span<const std::int64_t> counts, std::mt19937_64& gen) {
  std::int64_t remaining = 0;
  for (auto c : counts) remaining += c;
  double mass = static_cast<double>(remaining);
  const std::int64_t n = remaining;
  std::vector<std::int64_t> out(counts.size(), 0);
  std::int64_t left = n;
  for (std::size_t i = 0; i < counts.size() && left > 0; ++i) {
    if (counts[i] == 0) continue;
    const double p = std::min(1.0, static_cast<double>(counts[i]) / mass);
    std::binomial_distribution<std::int64_t> bin(left, p);
    out[i] = bin(gen);
    left -= out[i];
    mass -= static_cast<double>(counts[i]);
  }
  return out;
}

}  // namespace

TvEstimate bootstrap_tv(std::span<const std::int64_t> a, std::span<const std::int64_t> b, int reps,
                        std::uint64_t seed) {
  TvEstimate est;
  est.tv = tv_distance(a, b);
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] > 0 || b[i] > 0) && a[i] < 5 && b[i] < 5) ++est.sparse_bins;
  }
  std::mt19937_64 gen(seed);
  std::vector<double> boot;
  boot.reserve(static_cast<std::size_t>(reps));
  for (int r = 0; r < reps; ++r) {
    const auto ra = multinomial_resample(a, gen);
    const auto rb = multinomial_resample(b, gen);
    boot.push_back(tv_distance(ra, rb));
  }
  // The plug-in estimate is biased upwards; the bootstrap bias is subtracted
  // and the interval is the basic (pivotal) one around the corrected value.
  double mean_boot = 0;
  for (double v : boot) mean_boot += v;
  mean_boot /= static_cast<double>(boot.size());
  est.bias = mean_boot - est.tv;
  est.corrected = std::max(0.0, est.tv - est.bias);
  est.ci_low = std::max(0.0, 2 * est.tv - quantile(boot, 0.975));
  est.ci_high = std::max(0.0, 2 * est.tv - quantile(boot, 0.025));
  return est;
}

}  // namespace opbw::stats
