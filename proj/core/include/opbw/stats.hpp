#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "opbw/types.hpp"

namespace opbw::stats {

struct Summary {
  std::int64_t n = 0;
  double mean = 0;
  double var = 0;  // unbiased
  double se = 0;   // of the mean
};
Summary summarize(std::span<const double> x);

struct Interval {
  double low = 0;
  double high = 0;
};
Interval wilson(std::int64_t successes, std::int64_t trials, double z = 1.96);

double normal_cdf(double x);
double normal_quantile(double q);
double chi2_sf(double stat, double df);
double median(std::vector<double> x);
double quantile(std::vector<double> x, double q);

// Regression --------------------------------------------------------------

struct LineFit {
  double slope = 0;
  double intercept = 0;
  double slope_se = 0;
  double intercept_se = 0;
  double r2 = 0;
  std::size_t points = 0;
};
/// Ordinary least squares; throws StatisticalError with < 3 points or zero
/// spread in x.
LineFit fit_line(std::span<const double> x, std::span<const double> y);
/// Weighted least squares with weights 1/se²; slope_se from the weights.
LineFit fit_line_weighted(std::span<const double> x, std::span<const double> y, std::span<const double> y_se);

struct TailFitResult {
  double rate = 0;  // −slope of log survival
  double rate_se = 0;
  double ci_low = 0;
  double ci_high = 0;
  double intercept = 0;
  double r2 = 0;
  std::int64_t n_lo = 0;
  std::int64_t n_hi = 0;
  std::size_t points = 0;
};

/// Least squares of log(count_k / total) against key_k over entries with
/// count ≥ min_count.
TailFitResult fit_log_counts(std::span<const double> keys, std::span<const std::int64_t> counts, std::int64_t total,
                             std::int64_t min_count = 30);

/// Fit of the empirical survival P(X ≥ n) of positive integer samples over
/// the bulk (levels with at least min_count samples at or above them).
/// Throws StatisticalError on non-positive samples, fewer than 1000 samples,
/// or a degenerate distribution.
TailFitResult tail_fit(std::span<const std::int64_t> samples, std::int64_t min_count = 30);

// Ratio estimator ----------------------------------------------------------

struct SigmaEstimate {
  double sigma2 = 0;
  double se = 0;
  double mean_y2 = 0;
  double mean_tau = 0;
  std::int64_t regenerations = 0;
};
/// mean(Y²) / mean(τ) with delta-method SE including the covariance term.
SigmaEstimate estimate_sigma2(std::span<const double> y, std::span<const double> tau);

/// Same estimator from exact integer moment sums, so partial results can be
/// merged in any order.
struct SigmaAccumulator {
  std::int64_t n = 0;
  std::int64_t sy2 = 0, sy4 = 0, st = 0, st2 = 0, sy2t = 0;

  void add(std::int64_t y, std::int64_t tau) {
    const std::int64_t y2 = y * y;
    ++n;
    sy2 += y2;
    sy4 += y2 * y2;
    st += tau;
    st2 += tau * tau;
    sy2t += y2 * tau;
  }
  void merge(const SigmaAccumulator& o) {
    n += o.n;
    sy2 += o.sy2;
    sy4 += o.sy4;
    st += o.st;
    st2 += o.st2;
    sy2t += o.sy2t;
  }
  SigmaEstimate result() const;  // throws StatisticalError below 100 samples
};

// Tests -----------------------------------------------------------------------

struct TestResult {
  double statistic = 0;
  double pvalue = 0;
  std::int64_t n = 0;
};

/// P(D_n >= d) for the one-sample Kolmogorov-Smirnov statistic: exact
/// (Marsaglia-Tsang-Wang) for n <= 200, Stephens-corrected asymptotic above.
double ks_pvalue(double d, std::int64_t n);
TestResult ks_test(std::vector<double> x, const std::function<double(double)>& cdf);
TestResult ks_test_normal(std::vector<double> x, double mean, double var);
/// Two-sample KS with the asymptotic Kolmogorov p-value.
TestResult ks_two_sample(std::vector<double> a, std::vector<double> b);

/// Two-sided exact sign test on the nonzero entries.
TestResult sign_test(std::span<const double> x);

/// Goodness of fit of observed counts against expected probabilities.
TestResult chi2_gof(std::span<const std::int64_t> observed, std::span<const double> probs);
/// Homogeneity of two count vectors over the same cells; cells empty in both
/// are dropped.
TestResult chi2_homogeneity(std::span<const std::int64_t> a, std::span<const std::int64_t> b);

/// Two-sample permutation test on the difference of means.
TestResult permutation_test(std::span<const double> a, std::span<const double> b, int reps, std::uint64_t seed);

double autocorrelation(std::span<const double> x, int lag);

struct SeriesDiagnostics {
  std::string name;
  std::vector<double> rho;  // lags 1..rho.size()
  double se = 0;            // 1/sqrt(n)
  double max_abs_z = 0;
  double halves_pvalue = 0;
};
struct IidReport {
  std::vector<SeriesDiagnostics> series;
  bool pass = false;  // all |rho| within 3 SE and all halves tests p > 0.01
};
IidReport iid_diagnostics(const std::vector<std::pair<std::string, std::vector<double>>>& series, int max_lag = 5,
                          std::uint64_t seed = 1);

struct SupportReport {
  std::int64_t cone_cells = 0;
  std::int64_t covered = 0;
  double coverage = 0;
  std::int64_t violations = 0;  // ‖Y‖_∞ > τ·radius
};
SupportReport support_check(std::span<const Coord> y, std::span<const std::int64_t> tau, int d, int radius,
                            int n_max);

struct TvEstimate {
  double tv = 0;         // plug-in
  double bias = 0;       // bootstrap estimate of the plug-in bias
  double corrected = 0;  // max(0, tv − bias)
  double ci_low = 0;
  double ci_high = 0;
  std::int64_t sparse_bins = 0;  // bins with fewer than 5 counts in both samples
};
double tv_distance(std::span<const std::int64_t> a, std::span<const std::int64_t> b);
/// Plug-in TV between two empirical distributions, its bootstrap bias
/// correction and a basic bootstrap interval (multinomial resampling).
TvEstimate bootstrap_tv(std::span<const std::int64_t> a, std::span<const std::int64_t> b, int reps, std::uint64_t seed);

}  // namespace opbw::stats
