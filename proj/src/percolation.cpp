#include "borsuk/percolation.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numbers>
#include <random>
#include <unordered_map>

#include <boost/math/distributions/chi_squared.hpp>

#include "borsuk/grid.hpp"
#include "borsuk/parallel.hpp"
#include "borsuk/sphere.hpp"
#include "borsuk/union_find.hpp"

namespace borsuk::perco {

void ABSample::add(std::span<const double> x, Label l) {
  coords.insert(coords.end(), x.begin(), x.end());
  labels.push_back(l);
}

namespace {

void check_box(int d, double R, double la, double lb) {
  if (d < 1 || d > 16) throw std::invalid_argument("percolation: dimension must be in [1, 16]");
  if (!(R > 0)) throw std::invalid_argument("percolation: box half-width must be positive");
  if (!(la >= 0) || !(lb >= 0)) throw std::invalid_argument("percolation: intensities must be nonnegative");
}

std::uint64_t poisson(Stream& rng, double mean) {
  if (!(mean > 0)) return 0;
  std::poisson_distribution<std::uint64_t> dist(mean);
  return dist(rng);
}

void append_origin(ABSample& s, std::optional<Label> origin_label) {
  if (!origin_label) return;
  s.origin = static_cast<std::uint32_t>(s.size());
  std::vector<double> zero(static_cast<std::size_t>(s.d), 0.0);
  s.add(zero, *origin_label);
}

bool joined(Model m, Label a, Label b) { return m == Model::Boolean || a != b; }

double dist2(const double* a, const double* b, int d) {
  double s = 0;
  for (int k = 0; k < d; ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return s;
}

double norm_inf(const double* a, int d) {
  double m = 0;
  for (int k = 0; k < d; ++k) m = std::max(m, std::abs(a[k]));
  return m;
}

double norm2(const double* a, int d) {
  double s = 0;
  for (int k = 0; k < d; ++k) s += a[k] * a[k];
  return std::sqrt(s);
}

// Unit cells [c, c+1)^d meeting the box [-R, R]^d.
struct CellIndex {
  int d;
  double R;
  std::int64_t cmin, per_axis;

  CellIndex(int d_, double R_) : d(d_), R(R_) {
    cmin = static_cast<std::int64_t>(std::floor(-R));
    std::int64_t cmax = static_cast<std::int64_t>(std::ceil(R)) - 1;
    per_axis = cmax - cmin + 1;
  }

  std::int64_t axis(double x) const {
    return std::clamp<std::int64_t>(static_cast<std::int64_t>(std::floor(x)) - cmin, 0, per_axis - 1);
  }

  std::uint64_t total() const {
    std::uint64_t t = 1;
    for (int k = 0; k < d; ++k) t *= static_cast<std::uint64_t>(per_axis);
    return t;
  }

  // Appends the points of the cell with flat index `flat`.
  void generate(std::uint64_t flat, double la, double lb, const Stream& base, std::vector<double>& coords,
                std::vector<Label>& labels) const {
    double lo[16], hi[16];
    double vol = 1;
    std::uint64_t rest = flat;
    for (int k = d - 1; k >= 0; --k) {
      auto c = static_cast<std::int64_t>(rest % static_cast<std::uint64_t>(per_axis)) + cmin;
      rest /= static_cast<std::uint64_t>(per_axis);
      lo[k] = std::max<double>(static_cast<double>(c), -R);
      hi[k] = std::min<double>(static_cast<double>(c + 1), R);
      vol *= std::max(0.0, hi[k] - lo[k]);
    }
    if (!(vol > 0)) return;
    Stream s = base.split(flat);
    for (Label l : {Label::A, Label::B}) {
      std::uint64_t count = poisson(s, (l == Label::A ? la : lb) * vol);
      for (std::uint64_t i = 0; i < count; ++i) {
        for (int k = 0; k < d; ++k) coords.push_back(lo[k] + (hi[k] - lo[k]) * s.uniform());
        labels.push_back(l);
      }
    }
  }
};

}  // namespace

ABSample sample_ab(int d, double R, double lambda_a, double lambda_b, Stream& rng,
                   std::optional<Label> origin_label) {
  check_box(d, R, lambda_a, lambda_b);
  ABSample s;
  s.d = d;
  s.R = R;
  s.lambda_a = lambda_a;
  s.lambda_b = lambda_b;
  const double vol = std::pow(2 * R, d);
  for (Label l : {Label::A, Label::B}) {
    std::uint64_t count = poisson(rng, (l == Label::A ? lambda_a : lambda_b) * vol);
    s.coords.reserve(s.coords.size() + count * static_cast<std::size_t>(d));
    for (std::uint64_t i = 0; i < count; ++i) {
      for (int k = 0; k < d; ++k) s.coords.push_back(R * (2 * rng.uniform() - 1));
      s.labels.push_back(l);
    }
  }
  append_origin(s, origin_label);
  return s;
}

ABSample sample_ab(int d, double R, double lambda_a, double lambda_b, std::uint64_t seed,
                   std::optional<Label> origin_label) {
  Stream rng = Stream::derive(seed, {0xAB});
  return sample_ab(d, R, lambda_a, lambda_b, rng, origin_label);
}

ABSample sample_ab_cellwise(int d, double R, double lambda_a, double lambda_b, const Stream& rng,
                            std::optional<Label> origin_label) {
  check_box(d, R, lambda_a, lambda_b);
  ABSample s;
  s.d = d;
  s.R = R;
  s.lambda_a = lambda_a;
  s.lambda_b = lambda_b;
  CellIndex cells(d, R);
  for (std::uint64_t c = 0; c < cells.total(); ++c) cells.generate(c, lambda_a, lambda_b, rng, s.coords, s.labels);
  append_origin(s, origin_label);
  return s;
}

namespace {

template <typename Fn>
void for_each_edge(const ABSample& s, Model model, Fn&& fn) {
  const std::size_t n = s.size();
  if (n < 2) return;
  UniformGrid grid(s.d, s.coords, 1.0, -s.R, s.R, std::max<std::size_t>(1024, 4 * n));
  for (std::size_t i = 0; i < n; ++i) {
    const double* p = s.coords.data() + i * static_cast<std::size_t>(s.d);
    grid.for_each_near(p, [&](std::uint32_t j) {
      if (j <= i || !joined(model, s.labels[i], s.labels[j])) return;
      if (dist2(p, s.coords.data() + static_cast<std::size_t>(j) * static_cast<std::size_t>(s.d), s.d) <= 1.0)
        fn(static_cast<std::uint32_t>(i), j);
    });
  }
}

ClusterLabeling label_from(UnionFind& uf, const ABSample& s, double shell, std::size_t merges) {
  ClusterLabeling out;
  out.merges = merges;
  out.component = uf.component_ids();
  std::uint32_t count = 0;
  for (auto c : out.component) count = std::max(count, c + 1);
  out.sizes.assign(count, 0);
  out.touches_shell.assign(count, 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    ++out.sizes[out.component[i]];
    if (norm_inf(s.coords.data() + i * static_cast<std::size_t>(s.d), s.d) >= s.R - shell)
      out.touches_shell[out.component[i]] = 1;
  }
  return out;
}

}  // namespace

ClusterLabeling build_clusters(const ABSample& s, Model model, double shell) {
  UnionFind uf(s.size());
  std::size_t merges = 0;
  for_each_edge(s, model, [&](std::uint32_t i, std::uint32_t j) { merges += uf.unite(i, j); });
  return label_from(uf, s, shell, merges);
}

ClusterLabeling build_clusters_brute(const ABSample& s, Model model, double shell) {
  UnionFind uf(s.size());
  std::size_t merges = 0;
  for (auto [i, j] : model_edges(s, model)) merges += uf.unite(i, j);
  return label_from(uf, s, shell, merges);
}

std::vector<std::pair<std::uint32_t, std::uint32_t>> model_edges(const ABSample& s, Model model) {
  std::vector<std::pair<std::uint32_t, std::uint32_t>> out;
  const auto n = static_cast<std::uint32_t>(s.size());
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j)
      if (joined(model, s.labels[i], s.labels[j]) &&
          dist2(s.coords.data() + static_cast<std::size_t>(i) * s.d,
                s.coords.data() + static_cast<std::size_t>(j) * s.d, s.d) <= 1.0)
        out.emplace_back(i, j);
  return out;
}

bool origin_reaches_shell(const ABSample& s, Model model, double shell) {
  if (!s.origin) throw std::invalid_argument("origin_reaches_shell: sample has no origin point");
  auto lab = build_clusters(s, model, shell);
  return lab.touches_shell[lab.component[*s.origin]] != 0;
}

bool origin_reaches_shell_lazy(int d, double R, double lambda_a, double lambda_b, const Stream& rng, Model model,
                               double shell) {
  check_box(d, R, lambda_a, lambda_b);
  if (R - shell <= 0) return true;
  CellIndex cells(d, R);
  std::vector<double> coords(static_cast<std::size_t>(d), 0.0);
  std::vector<Label> labels{Label::A};
  std::vector<std::uint8_t> seen{1};
  std::unordered_map<std::uint64_t, std::pair<std::uint32_t, std::uint32_t>> made;
  std::deque<std::uint32_t> queue{0};
  std::vector<int> off(static_cast<std::size_t>(d), -1);
  std::vector<std::int64_t> base(static_cast<std::size_t>(d));
  while (!queue.empty()) {
    const std::uint32_t i = queue.front();
    queue.pop_front();
    for (int k = 0; k < d; ++k) base[k] = cells.axis(coords[static_cast<std::size_t>(i) * d + k]);
    std::fill(off.begin(), off.end(), -1);
    for (;;) {
      std::uint64_t flat = 0;
      bool inside = true;
      for (int k = 0; k < d; ++k) {
        std::int64_t c = base[k] + off[k];
        if (c < 0 || c >= cells.per_axis) {
          inside = false;
          break;
        }
        flat = flat * static_cast<std::uint64_t>(cells.per_axis) + static_cast<std::uint64_t>(c);
      }
      if (inside) {
        auto it = made.find(flat);
        if (it == made.end()) {
          auto begin = static_cast<std::uint32_t>(labels.size());
          cells.generate(flat, lambda_a, lambda_b, rng, coords, labels);
          seen.resize(labels.size(), 0);
          it = made.emplace(flat, std::make_pair(begin, static_cast<std::uint32_t>(labels.size()))).first;
        }
        for (std::uint32_t j = it->second.first; j < it->second.second; ++j) {
          if (seen[j] || !joined(model, labels[i], labels[j])) continue;
          const double* pj = coords.data() + static_cast<std::size_t>(j) * d;
          if (dist2(coords.data() + static_cast<std::size_t>(i) * d, pj, d) > 1.0) continue;
          if (norm_inf(pj, d) >= R - shell) return true;
          seen[j] = 1;
          queue.push_back(j);
        }
      }
      int k = d - 1;
      while (k >= 0 && off[k] == 1) off[k--] = -1;
      if (k < 0) break;
      ++off[k];
    }
  }
  return false;
}

bool crosses_box(const ABSample& s, Model model) {
  auto lab = build_clusters(s, model);
  std::vector<std::uint8_t> left(lab.sizes.size(), 0), right(lab.sizes.size(), 0);
  for (std::size_t i = 0; i < s.size(); ++i) {
    double x = s.coords[i * static_cast<std::size_t>(s.d)];
    auto c = lab.component[i];
    if (x <= -s.R + 1) left[c] = 1;
    if (x >= s.R - 1) right[c] = 1;
    if (left[c] && right[c]) return true;
  }
  return false;
}

namespace {

stats::Proportion run_trials(std::uint64_t trials, unsigned threads, const std::function<bool(std::uint64_t)>& trial) {
  if (trials == 0) throw std::invalid_argument("percolation: trials must be positive");
  std::vector<std::uint8_t> hit(trials, 0);
  parallel_for(trials, threads, [&](std::size_t t) { hit[t] = trial(t) ? 1 : 0; });
  std::uint64_t hits = 0;
  for (auto h : hit) hits += h;
  return stats::wilson(hits, trials);
}

}  // namespace

stats::Proportion boundary_reach_prob(int d, double lambda, double R, std::uint64_t trials, std::uint64_t seed,
                                      RunOptions opt, Model model) {
  check_box(d, R, lambda, lambda);
  const double lb = model == Model::AB ? lambda : 0.0;
  return run_trials(trials, opt.threads, [&](std::uint64_t t) {
    return origin_reaches_shell_lazy(d, R, lambda, lb, Stream::derive(seed, {t}), model);
  });
}

stats::Proportion m_k_statistic(int d, double lambda, double k, std::uint64_t trials, std::uint64_t seed,
                                RunOptions opt) {
  if (!(k >= 2)) throw std::invalid_argument("m_k_statistic: k must be at least 2");
  check_box(d, k + 1, lambda, lambda);
  // A path leaving B(0, k) first lands within distance 1 of it, so the box
  // [-(k+1), k+1]^d sees the event exactly.
  return run_trials(trials, opt.threads, [&](std::uint64_t t) {
    Stream rng = Stream::derive(seed, {t});
    auto s = sample_ab(d, k + 1, lambda, lambda, rng);
    auto lab = build_clusters(s, Model::AB);
    std::vector<std::uint8_t> inner(lab.sizes.size(), 0), far(lab.sizes.size(), 0);
    for (std::size_t i = 0; i < s.size(); ++i) {
      double r = norm2(s.coords.data() + i * static_cast<std::size_t>(d), d);
      auto c = lab.component[i];
      if (s.labels[i] == Label::A && r < k / 2) inner[c] = 1;
      if (r >= k) far[c] = 1;
    }
    for (std::size_t c = 0; c < inner.size(); ++c)
      if (inner[c] && far[c]) return true;
    return false;
  });
}

std::vector<SweepCell> sweep_cells(const SweepConfig& cfg, Model model) {
  if (cfg.lambda_grid.size() < 4) throw std::invalid_argument("sweep: need at least four intensities");
  if (cfg.box_sizes.empty()) throw std::invalid_argument("sweep: need at least one box size");
  if (cfg.trials == 0) throw std::invalid_argument("sweep: trials must be positive");
  for (std::size_t i = 0; i < cfg.lambda_grid.size(); ++i) {
    if (!(cfg.lambda_grid[i] > 0)) throw std::invalid_argument("sweep: intensities must be positive");
    if (i && !(cfg.lambda_grid[i] > cfg.lambda_grid[i - 1]))
      throw std::invalid_argument("sweep: intensity grid must be increasing");
  }
  for (double R : cfg.box_sizes)
    if (!(R > 1)) throw std::invalid_argument("sweep: box sizes must exceed 1");
  const std::size_t L = cfg.lambda_grid.size(), S = cfg.box_sizes.size();
  const std::size_t total = L * S * cfg.trials;
  std::vector<std::uint8_t> hit(total, 0);
  parallel_for(total, cfg.threads, [&](std::size_t idx) {
    const std::size_t t = idx % cfg.trials, j = (idx / cfg.trials) % S, i = idx / (cfg.trials * S);
    const double lambda = cfg.lambda_grid[i], R = cfg.box_sizes[j];
    const double lb = model == Model::AB ? lambda : 0.0;
    Stream rng = Stream::derive(cfg.seed, {i, j, t});
    bool h;
    if (cfg.observable == Observable::BoxCrossing) {
      auto s = sample_ab(cfg.d, R, lambda, lb, rng);
      h = crosses_box(s, model);
    } else {
      h = origin_reaches_shell_lazy(cfg.d, R, lambda, lb, rng, model);
    }
    hit[idx] = h ? 1 : 0;
  });
  std::vector<SweepCell> cells;
  cells.reserve(L * S);
  for (std::size_t i = 0; i < L; ++i)
    for (std::size_t j = 0; j < S; ++j) {
      std::uint64_t h = 0;
      for (std::size_t t = 0; t < cfg.trials; ++t) h += hit[(i * S + j) * cfg.trials + t];
      cells.push_back({cfg.lambda_grid[i], cfg.box_sizes[j], stats::wilson(h, cfg.trials)});
    }
  return cells;
}

LambdaCEstimate fit_threshold(const SweepConfig& cfg, Model model, std::vector<SweepCell> cells) {
  LambdaCEstimate est;
  est.model = model;
  est.observable = cfg.observable;
  est.box_sizes = cfg.box_sizes;
  const double lmin = cfg.lambda_grid.front(), lmax = cfg.lambda_grid.back();
  std::vector<double> lam, sigma;
  for (std::size_t j = 0; j < cfg.box_sizes.size(); ++j) {
    std::vector<double> x;
    std::vector<std::uint64_t> hits, trials;
    bool below = false, above = false;
    for (const auto& c : cells) {
      if (c.R != cfg.box_sizes[j]) continue;
      x.push_back(std::log(c.lambda));
      hits.push_back(c.freq.hits);
      trials.push_back(c.freq.trials);
      below = below || c.freq.p <= 0.5;
      above = above || c.freq.p >= 0.5;
    }
    if (!below || !above)
      throw NotBracketed("transition not bracketed at box half-width " + std::to_string(cfg.box_sizes[j]));
    est.non_monotone = est.non_monotone || stats::non_monotone(hits, trials);
    auto ce = stats::crossing_with_ci(x, hits, trials, Stream::derive(cfg.seed, {0xB0075, j}), cfg.bootstrap);
    if (!ce) throw NotBracketed("no 1/2 crossing fitted at box half-width " + std::to_string(cfg.box_sizes[j]));
    ce->x = std::exp(ce->x);
    ce->lo = std::exp(ce->lo);
    ce->hi = std::exp(ce->hi);
    lam.push_back(ce->x);
    sigma.push_back(std::max((ce->hi - ce->lo) / (2 * stats::kZ95), 1e-9 * ce->x));
    est.per_size.push_back(*ce);
  }
  est.cells = std::move(cells);

  if (lam.size() == 1) {
    est.estimate = lam[0];
    est.lo = est.per_size[0].lo;
    est.hi = est.per_size[0].hi;
  } else {
    // Weighted fit lambda_R = L + a R^{-3/4}.
    double W = 0, Su = 0, Suu = 0, Sy = 0, Suy = 0;
    for (std::size_t j = 0; j < lam.size(); ++j) {
      double w = 1 / (sigma[j] * sigma[j]), u = std::pow(cfg.box_sizes[j], -0.75);
      W += w;
      Su += w * u;
      Suu += w * u * u;
      Sy += w * lam[j];
      Suy += w * u * lam[j];
    }
    double D = W * Suu - Su * Su;
    double slope = D > 0 ? (W * Suy - Su * Sy) / D : 0.0;
    double slope_se = D > 0 ? std::sqrt(W / D) : INFINITY;
    if (D > 0 && std::abs(slope) > 2 * slope_se) {
      est.estimate = (Suu * Sy - Su * Suy) / D;
      double se = std::sqrt(Suu / D);
      est.lo = est.estimate - stats::kZ95 * se;
      est.hi = est.estimate + stats::kZ95 * se;
    } else {
      // Drift below resolution: pooled mean, widened by the largest box's offset.
      est.estimate = Sy / W;
      std::size_t big = static_cast<std::size_t>(
          std::max_element(cfg.box_sizes.begin(), cfg.box_sizes.end()) - cfg.box_sizes.begin());
      double half = stats::kZ95 / std::sqrt(W) + std::abs(lam[big] - est.estimate);
      est.lo = est.estimate - half;
      est.hi = est.estimate + half;
    }
  }
  if (est.non_monotone) {
    est.lo = est.estimate - 2 * (est.estimate - est.lo);
    est.hi = est.estimate + 2 * (est.hi - est.estimate);
  }
  if (est.estimate < lmin || est.estimate > lmax) {
    est.estimate = std::clamp(est.estimate, lmin, lmax);
    est.lo = std::min(est.lo, est.estimate);
    est.hi = std::max(est.hi, est.estimate);
  }
  return est;
}

LambdaCEstimate estimate_threshold(const SweepConfig& cfg, Model model) {
  return fit_threshold(cfg, model, sweep_cells(cfg, model));
}

LambdaCEstimate estimate_lambda_c(const SweepConfig& cfg) { return estimate_threshold(cfg, Model::AB); }

LambdaCEstimate boolean_lambda_c(const SweepConfig& cfg) { return estimate_threshold(cfg, Model::Boolean); }

double c2_constant(int d, double lambda_c) {
  if (d < 1 || lambda_c < 0) throw std::invalid_argument("c2_constant: bad arguments");
  return std::pow((d + 1) * sphere::ball_volume(d + 1) * lambda_c, 1.0 / d);
}

bool covered_predicate(const ABSample& s, const Region& region, double probe_spacing) {
  const int d = s.d;
  if (!(probe_spacing > 0) || probe_spacing >= 1 / (2 * std::sqrt(static_cast<double>(d))))
    throw std::invalid_argument("covered_predicate: probe spacing must be in (0, 1/(2 sqrt d))");
  if (static_cast<int>(region.center.size()) != d || !(region.half >= 0))
    throw std::invalid_argument("covered_predicate: bad region");
  if (s.size() == 0) return false;
  const double reach = 0.25 - std::sqrt(static_cast<double>(d)) / 2 * probe_spacing;
  const double r2 = reach * reach;
  UniformGrid grid(d, s.coords, 1.0, -s.R, s.R, std::max<std::size_t>(1024, 4 * s.size()));
  auto per_axis = std::max<std::int64_t>(1, static_cast<std::int64_t>(std::ceil(2 * region.half / probe_spacing)));
  std::vector<std::int64_t> idx(static_cast<std::size_t>(d), 0);
  std::vector<double> probe(static_cast<std::size_t>(d));
  for (;;) {
    for (int k = 0; k < d; ++k)
      probe[k] = region.center[k] - region.half + probe_spacing * (static_cast<double>(idx[k]) + 0.5);
    bool a = false, b = false;
    grid.for_each_near(probe.data(), [&](std::uint32_t j) {
      if (dist2(probe.data(), s.coords.data() + static_cast<std::size_t>(j) * d, d) < r2)
        (s.labels[j] == Label::A ? a : b) = true;
    });
    if (!a || !b) return false;
    int k = d - 1;
    while (k >= 0 && idx[k] == per_axis - 1) idx[k--] = 0;
    if (k < 0) break;
    ++idx[k];
  }
  return true;
}

CapProjectionReport cap_projection_intensity_check(int d, double n, double alpha, double t, std::uint64_t trials,
                                                   std::uint64_t seed, double t_min) {
  if (d < 1 || !(n > 0) || !(alpha > 0 && alpha < std::numbers::pi) || trials == 0)
    throw std::invalid_argument("cap_projection_intensity_check: bad arguments");
  if (!(t > t_min) || !(t < 1)) throw std::invalid_argument("cap_projection_intensity_check: need t_min < t < 1");
  CapProjectionReport rep;
  rep.rho_formula = 2 * std::sqrt(1 - t * t) / ((1 + t) * alpha);
  {
    std::vector<double> edge(static_cast<std::size_t>(d + 1), 0.0);
    edge[0] = std::sqrt(1 - t * t);
    edge[static_cast<std::size_t>(d)] = -t;
    rep.rho = 2 / alpha * sphere::stereo_project(edge).norm();
  }
  const double area = sphere::sphere_area(d);
  const double scale = std::pow(alpha / 2, d);
  const double window = sphere::ball_volume(d) * std::pow(rep.rho / 2, d);
  rep.lower_bound = n * std::pow(1 + t, d) / area * scale * window;
  rep.upper_bound = n * std::pow(2.0, d) / area * scale * window;

  const int cells = 1 << d;
  std::vector<std::uint64_t> inner(trials, 0);
  std::vector<std::vector<std::uint64_t>> orth(trials, std::vector<std::uint64_t>(static_cast<std::size_t>(cells), 0));
  parallel_for(trials, 1, [&](std::size_t tr) {
    Stream rng = Stream::derive(seed, {0xCA9, tr});
    std::uint64_t N = poisson(rng, n);
    std::vector<double> x(static_cast<std::size_t>(d + 1));
    for (std::uint64_t i = 0; i < N; ++i) {
      sphere::sample_uniform_into(d, rng, x);
      if (!(x[d] < -t)) continue;
      double r2 = 0;
      int o = 0;
      for (int k = 0; k < d; ++k) {
        double z = 2 / alpha * x[k] / (1 - x[d]);
        r2 += z * z;
        if (z > 0) o |= 1 << k;
      }
      double r = std::sqrt(r2);
      if (r < rep.rho / 2) ++inner[tr];
      if (r < rep.rho / 4) ++orth[tr][static_cast<std::size_t>(o)];
    }
  });
  std::vector<double> counts(inner.begin(), inner.end());
  rep.mean_count = stats::mean(counts);
  rep.count_se = std::sqrt(stats::variance(counts) / static_cast<double>(trials));
  double tol = 4 * std::max(rep.count_se, std::sqrt(std::max(rep.mean_count, 1.0) / static_cast<double>(trials)));
  rep.within_bounds = rep.mean_count >= rep.lower_bound - tol && rep.mean_count <= rep.upper_bound + tol;

  std::vector<double> tot(static_cast<std::size_t>(cells), 0.0);
  double all = 0;
  for (const auto& row : orth)
    for (int c = 0; c < cells; ++c) {
      tot[c] += static_cast<double>(row[c]);
      all += static_cast<double>(row[c]);
    }
  rep.chi2_dof = cells - 1;
  if (all > 0) {
    double e = all / cells;
    for (double v : tot) rep.chi2 += (v - e) * (v - e) / e;
    boost::math::chi_squared dist(rep.chi2_dof);
    rep.uniform_ok = rep.chi2 <= boost::math::quantile(dist, 0.99);
  }
  return rep;
}

stats::Proportion bond_percolation_box(int d, int m, double p, double eps, std::uint64_t trials, std::uint64_t seed,
                                       RunOptions opt) {
  if (!(p >= 0 && p <= 1)) throw std::invalid_argument("bond_percolation_box: p must lie in [0, 1]");
  if (d < 1 || m < 0 || !(eps >= 0 && eps <= 1)) throw std::invalid_argument("bond_percolation_box: bad arguments");
  const std::size_t side = static_cast<std::size_t>(2 * m + 1);
  std::size_t volume = 1;
  for (int k = 0; k < d; ++k) volume *= side;
  std::vector<std::size_t> stride(static_cast<std::size_t>(d), 1);
  for (int k = d - 2; k >= 0; --k) stride[k] = stride[k + 1] * side;
  std::size_t origin = 0;
  for (int k = 0; k < d; ++k) origin += static_cast<std::size_t>(m) * stride[k];
  return run_trials(trials, opt.threads, [&](std::uint64_t t) {
    Stream rng = Stream::derive(seed, {0xB0D, t});
    UnionFind uf(volume);
    for (std::size_t v = 0; v < volume; ++v)
      for (int k = 0; k < d; ++k) {
        if ((v / stride[k]) % side == side - 1) continue;
        if (rng.uniform() < p) uf.unite(static_cast<std::uint32_t>(v), static_cast<std::uint32_t>(v + stride[k]));
      }
    auto root = uf.find(static_cast<std::uint32_t>(origin));
    std::size_t size = 0;
    for (std::size_t v = 0; v < volume; ++v) size += uf.find(static_cast<std::uint32_t>(v)) == root;
    return static_cast<double>(size) > (1 - eps) * static_cast<double>(volume);
  });
}

}  // namespace borsuk::perco
