#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "borsuk/rng.hpp"

namespace borsuk::stats {

inline constexpr double kZ95 = 1.959963984540054;

struct Proportion {
  std::uint64_t hits = 0;
  std::uint64_t trials = 0;
  double p = 0;
  double lo = 0;
  double hi = 0;
};

/// Wilson score interval. trials == 0 gives the vacuous interval [0, 1].
Proportion wilson(std::uint64_t hits, std::uint64_t trials, double z = kZ95);

struct LinearFit {
  double slope = 0;
  double intercept = 0;
  double r2 = 0;
  double slope_se = 0;
  double intercept_se = 0;
};

/// Ordinary least squares (weights optional, all 1 when empty).
LinearFit linear_fit(std::span<const double> x, std::span<const double> y, std::span<const double> w = {});

double mean(std::span<const double> x);
/// Unbiased sample variance.
double variance(std::span<const double> x);

double poisson_pmf(std::uint64_t k, double mu);
/// Total variation distance between the empirical law of `counts` and Poisson(mu).
double tv_to_poisson(std::span<const std::uint64_t> counts, double mu);
/// Empirical falling-factorial moment E[W (W-1) ... (W-m+1)].
double falling_moment(std::span<const std::uint64_t> counts, int m);

/// Asymptotic one-sample Kolmogorov-Smirnov critical value at level 1%.
double ks_critical_1pct(std::size_t n);

/// Four-parameter logistic y = lo + (hi - lo) / (1 + exp(-s (x - x0))).
struct Logistic {
  double lo = 0;
  double hi = 1;
  double x0 = 0;
  double s = 1;
  double operator()(double x) const;
  /// x where the curve equals `level`, if lo < level < hi.
  std::optional<double> crossing(double level = 0.5) const;
};

struct LogisticFit {
  Logistic curve;
  bool converged = false;
  double rss = 0;
};

/// Weighted least squares by Levenberg-Marquardt. Asymptotes are kept inside
/// [0, 1] with lo < 1/2 < hi. Needs at least four points.
LogisticFit fit_logistic(std::span<const double> x, std::span<const double> y, std::span<const double> w);

/// Point weights 1 / (Wilson half-width)^2 for binomial frequencies.
std::vector<double> wilson_weights(std::span<const std::uint64_t> hits, std::span<const std::uint64_t> trials);

struct CrossingEstimate {
  double x = 0;
  double lo = 0;
  double hi = 0;
  Logistic curve;
  std::size_t bootstrap_used = 0;
};

/// 1/2-crossing of a frequency curve in x with a parametric bootstrap
/// percentile interval (binomial resampling of every cell). Returns nullopt
/// when the data do not bracket 1/2 or the fit fails.
std::optional<CrossingEstimate> crossing_with_ci(std::span<const double> x, std::span<const std::uint64_t> hits,
                                                 std::span<const std::uint64_t> trials, Stream rng,
                                                 std::size_t replicates = 200);

/// True when the frequencies, listed in increasing x, decrease by more than
/// `z` joint standard errors anywhere.
bool non_monotone(std::span<const std::uint64_t> hits, std::span<const std::uint64_t> trials, double z = 3.0);

}  // namespace borsuk::stats
