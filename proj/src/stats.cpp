#include "borsuk/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include <Eigen/Dense>

namespace borsuk::stats {

Proportion wilson(std::uint64_t hits, std::uint64_t trials, double z) {
  Proportion r{hits, trials, 0, 0, 1};
  if (hits > trials) throw std::invalid_argument("wilson: hits exceed trials");
  if (trials == 0) return r;
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(hits) / n;
  const double z2 = z * z;
  const double centre = (p + z2 / (2 * n)) / (1 + z2 / n);
  const double half = z / (1 + z2 / n) * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
  r.p = p;
  r.lo = std::max(0.0, centre - half);
  r.hi = std::min(1.0, centre + half);
  // Guard against rounding pushing the estimate just outside its interval.
  r.lo = std::min(r.lo, p);
  r.hi = std::max(r.hi, p);
  return r;
}

LinearFit linear_fit(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n || (!w.empty() && w.size() != n)) throw std::invalid_argument("linear_fit: bad input");
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double wi = w.empty() ? 1.0 : w[i];
    sw += wi;
    sx += wi * x[i];
    sy += wi * y[i];
  }
  const double mx = sx / sw, my = sy / sw;
  double sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double wi = w.empty() ? 1.0 : w[i];
    sxx += wi * (x[i] - mx) * (x[i] - mx);
    sxy += wi * (x[i] - mx) * (y[i] - my);
    syy += wi * (y[i] - my) * (y[i] - my);
  }
  if (!(sxx > 0)) throw std::invalid_argument("linear_fit: x has no spread");
  LinearFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double rss = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double wi = w.empty() ? 1.0 : w[i];
    double r = y[i] - f.intercept - f.slope * x[i];
    rss += wi * r * r;
  }
  f.r2 = syy > 0 ? 1.0 - rss / syy : 1.0;
  if (n > 2) {
    double s2 = rss / static_cast<double>(n - 2) * static_cast<double>(n) / sw;
    f.slope_se = std::sqrt(s2 / (sxx * static_cast<double>(n) / sw));
    f.intercept_se = std::sqrt(s2 * (1.0 / static_cast<double>(n) + mx * mx / (sxx * static_cast<double>(n) / sw)));
  }
  return f;
}

double mean(std::span<const double> x) {
  if (x.empty()) return 0;
  double s = 0;
  for (double v : x) s += v;
  return s / static_cast<double>(x.size());
}

double variance(std::span<const double> x) {
  if (x.size() < 2) return 0;
  double m = mean(x), s = 0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

double poisson_pmf(std::uint64_t k, double mu) {
  if (mu == 0) return k == 0 ? 1.0 : 0.0;
  return std::exp(static_cast<double>(k) * std::log(mu) - mu - std::lgamma(static_cast<double>(k) + 1.0));
}

double tv_to_poisson(std::span<const std::uint64_t> counts, double mu) {
  if (counts.empty()) throw std::invalid_argument("tv_to_poisson: no data");
  std::map<std::uint64_t, double> emp;
  for (auto c : counts) emp[c] += 1.0 / static_cast<double>(counts.size());
  double tv = 0, covered = 0;
  std::uint64_t top = emp.rbegin()->first;
  for (std::uint64_t k = 0; k <= top; ++k) {
    double q = poisson_pmf(k, mu);
    covered += q;
    auto it = emp.find(k);
    tv += std::abs((it == emp.end() ? 0.0 : it->second) - q);
  }
  tv += std::max(0.0, 1.0 - covered);
  return tv / 2;
}

double falling_moment(std::span<const std::uint64_t> counts, int m) {
  if (counts.empty()) return 0;
  double s = 0;
  for (auto c : counts) {
    double f = 1;
    for (int j = 0; j < m; ++j) f *= static_cast<double>(c) - j;
    s += f;
  }
  return s / static_cast<double>(counts.size());
}

double ks_critical_1pct(std::size_t n) { return 1.62762 / std::sqrt(static_cast<double>(n)); }

double Logistic::operator()(double x) const { return lo + (hi - lo) / (1.0 + std::exp(-s * (x - x0))); }

std::optional<double> Logistic::crossing(double level) const {
  if (!(lo < level && level < hi) || s == 0) return std::nullopt;
  return x0 - std::log((hi - lo) / (level - lo) - 1.0) / s;
}

namespace {

double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }
double logit(double p) { return std::log(p / (1 - p)); }

Logistic decode(const Eigen::Vector4d& q) {
  return Logistic{0.5 * sigmoid(q[0]), 0.5 + 0.5 * sigmoid(q[1]), q[2], q[3]};
}

double wrss(const Logistic& f, std::span<const double> x, std::span<const double> y, std::span<const double> w) {
  double s = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double r = y[i] - f(x[i]);
    s += w[i] * r * r;
  }
  return s;
}

}  // namespace

LogisticFit fit_logistic(std::span<const double> x, std::span<const double> y, std::span<const double> w) {
  const std::size_t n = x.size();
  if (n < 4 || y.size() != n || w.size() != n) throw std::invalid_argument("fit_logistic: need >= 4 weighted points");
  double wsum = 0;
  for (double v : w) wsum += v;
  std::vector<double> wn(w.begin(), w.end());
  for (double& v : wn) v *= static_cast<double>(n) / wsum;

  // Start: asymptotes from the data range, centre at the first 1/2 crossing.
  double ymin = *std::min_element(y.begin(), y.end()), ymax = *std::max_element(y.begin(), y.end());
  double lo0 = std::clamp(ymin, 0.005, 0.45), hi0 = std::clamp(ymax, 0.55, 0.995);
  std::size_t imin = std::min_element(y.begin(), y.end()) - y.begin();
  std::size_t imax = std::max_element(y.begin(), y.end()) - y.begin();
  double x0 = 0.5 * (x[imin] + x[imax]);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    if ((y[i] - 0.5) * (y[i + 1] - 0.5) <= 0 && y[i] != y[i + 1]) {
      x0 = x[i] + (0.5 - y[i]) * (x[i + 1] - x[i]) / (y[i + 1] - y[i]);
      break;
    }
  }
  double span = std::abs(x[n - 1] - x[0]);
  if (!(span > 0)) span = 1;
  double s0 = (x[imax] >= x[imin] ? 1.0 : -1.0) * 8.0 / span;
  Eigen::Vector4d q(logit(lo0 / 0.5), logit((hi0 - 0.5) / 0.5), x0, s0);

  LogisticFit out;
  double cur = wrss(decode(q), x, y, wn);
  double lambda = 1e-3;
  for (int it = 0; it < 300; ++it) {
    Eigen::MatrixXd J(n, 4);
    Eigen::VectorXd r(n);
    const Logistic f = decode(q);
    for (std::size_t i = 0; i < n; ++i) {
      double sw = std::sqrt(wn[i]);
      r[static_cast<Eigen::Index>(i)] = sw * (y[i] - f(x[i]));
      for (int k = 0; k < 4; ++k) {
        Eigen::Vector4d qp = q;
        double h = 1e-7 * std::max(1.0, std::abs(q[k]));
        qp[k] += h;
        J(static_cast<Eigen::Index>(i), k) = sw * (decode(qp)(x[i]) - f(x[i])) / h;
      }
    }
    Eigen::Matrix4d A = J.transpose() * J;
    Eigen::Vector4d g = J.transpose() * r;
    bool improved = false;
    for (int tries = 0; tries < 20; ++tries) {
      Eigen::Matrix4d M = A;
      for (int k = 0; k < 4; ++k) M(k, k) += lambda * std::max(A(k, k), 1e-12);
      Eigen::Vector4d step = M.ldlt().solve(g);
      if (!step.allFinite()) break;
      Eigen::Vector4d qn = q + step;
      double next = wrss(decode(qn), x, y, wn);
      if (std::isfinite(next) && next < cur) {
        double rel = (cur - next) / std::max(cur, 1e-300);
        q = qn;
        cur = next;
        lambda = std::max(lambda / 3, 1e-12);
        improved = true;
        if (rel < 1e-12 || step.norm() < 1e-12 * (1 + q.norm())) {
          out.converged = true;
          it = 300;
        }
        break;
      }
      lambda *= 4;
    }
    if (!improved) {
      out.converged = true;
      break;
    }
  }
  out.curve = decode(q);
  out.rss = cur;
  return out;
}

std::vector<double> wilson_weights(std::span<const std::uint64_t> hits, std::span<const std::uint64_t> trials) {
  std::vector<double> w(hits.size());
  for (std::size_t i = 0; i < hits.size(); ++i) {
    auto p = wilson(hits[i], trials[i]);
    double half = std::max((p.hi - p.lo) / 2, 1e-6);
    w[i] = 1.0 / (half * half);
  }
  return w;
}

std::optional<CrossingEstimate> crossing_with_ci(std::span<const double> x, std::span<const std::uint64_t> hits,
                                                 std::span<const std::uint64_t> trials, Stream rng,
                                                 std::size_t replicates) {
  const std::size_t n = x.size();
  if (n < 4 || hits.size() != n || trials.size() != n) throw std::invalid_argument("crossing_with_ci: bad input");
  auto fit_once = [&](std::span<const std::uint64_t> h) -> std::optional<Logistic> {
    std::vector<double> y(n);
    bool below = false, above = false;
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = trials[i] ? static_cast<double>(h[i]) / static_cast<double>(trials[i]) : 0.0;
      below = below || y[i] <= 0.5;
      above = above || y[i] >= 0.5;
    }
    if (!below || !above) return std::nullopt;
    auto w = wilson_weights(h, trials);
    auto f = fit_logistic(x, y, w);
    if (!f.curve.crossing()) return std::nullopt;
    return f.curve;
  };
  auto base = fit_once(hits);
  if (!base) return std::nullopt;
  CrossingEstimate est;
  est.curve = *base;
  est.x = *base->crossing();
  const double xmin = *std::min_element(x.begin(), x.end()), xmax = *std::max_element(x.begin(), x.end());
  std::vector<double> boot;
  std::vector<std::uint64_t> h(n);
  for (std::size_t b = 0; b < replicates; ++b) {
    for (std::size_t i = 0; i < n; ++i) {
      double p = trials[i] ? static_cast<double>(hits[i]) / static_cast<double>(trials[i]) : 0.0;
      std::binomial_distribution<std::uint64_t> bin(trials[i], p);
      h[i] = bin(rng);
    }
    auto f = fit_once(h);
    if (!f) continue;
    double c = *f->crossing();
    // A replicate whose crossing leaves the sampled range is an extrapolation
    // artefact; clamp it to the edge so it still widens the interval.
    boot.push_back(std::clamp(c, xmin, xmax));
  }
  est.bootstrap_used = boot.size();
  if (boot.size() < std::max<std::size_t>(10, replicates / 2)) {
    est.lo = xmin;
    est.hi = xmax;
    return est;
  }
  std::sort(boot.begin(), boot.end());
  auto q = [&](double p) { return boot[static_cast<std::size_t>(std::floor(p * static_cast<double>(boot.size() - 1)))]; };
  est.lo = std::min(q(0.025), est.x);
  est.hi = std::max(q(0.975), est.x);
  return est;
}

bool non_monotone(std::span<const std::uint64_t> hits, std::span<const std::uint64_t> trials, double z) {
  for (std::size_t i = 0; i + 1 < hits.size(); ++i) {
    if (!trials[i] || !trials[i + 1]) continue;
    double p0 = static_cast<double>(hits[i]) / static_cast<double>(trials[i]);
    double p1 = static_cast<double>(hits[i + 1]) / static_cast<double>(trials[i + 1]);
    // Variance floored at 1/n^2 so cells at 0 or 1 still carry some noise.
    auto var = [](double p, std::uint64_t t) {
      double n = static_cast<double>(t);
      return std::max(p * (1 - p), 1.0 / n) / n;
    };
    double se = std::sqrt(var(p0, trials[i]) + var(p1, trials[i + 1]));
    if (p0 - p1 > z * se) return true;
  }
  return false;
}

}  // namespace borsuk::stats
