// Acceptance run: one PASS/FAIL line per criterion, exit status 1 when any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "borsuk/borsuk_graph.hpp"
#include "borsuk/coloring.hpp"
#include "borsuk/embedding.hpp"
#include "borsuk/experiments.hpp"
#include "borsuk/graph.hpp"
#include "borsuk/percolation.hpp"
#include "borsuk/rng.hpp"
#include "borsuk/sphere.hpp"
#include "borsuk/stats.hpp"

using namespace borsuk;

namespace {

constexpr std::uint64_t kSeed = 1;

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double uniform(Stream& rng, double lo, double hi) { return lo + (hi - lo) * rng.uniform(); }

std::size_t below(Stream& rng, std::size_t n) { return static_cast<std::size_t>(rng.uniform() * static_cast<double>(n)); }

// Shared between the threshold criteria.
struct Percolation {
  perco::LambdaCEstimate ab;
  perco::LambdaCEstimate boolean;
  bool ok = false;
  std::string error;
};

Percolation& percolation() {
  static Percolation p = [] {
    Percolation out;
    try {
      perco::SweepConfig sc;
      sc.d = 2;
      sc.box_sizes = {8, 12, 16};
      sc.trials = 400;
      sc.seed = kSeed;
      for (int i = -5; i <= 5; ++i) sc.lambda_grid.push_back(1.0 * std::exp(0.06 * i));
      out.ab = perco::estimate_lambda_c(sc);
      sc.lambda_grid.clear();
      for (int i = -5; i <= 5; ++i) sc.lambda_grid.push_back(1.44 * std::exp(0.06 * i));
      out.boolean = perco::boolean_lambda_c(sc);
      out.ok = true;
    } catch (const std::exception& e) {
      out.error = e.what();
    }
    return out;
  }();
  return p;
}

Outcome edge_count_law() {
  auto rep = exp::edge_count_experiment(2, 8.0, {4000}, 20000, kSeed);
  const auto& row = rep.rows.at(0);
  const double target = std::exp(-1.0);
  const auto& z = row.zero;
  bool zero_ok = target >= z.p - 3 * (z.p - z.lo) && target <= z.p + 3 * (z.hi - z.p);
  bool mean_ok = std::abs(row.mean - row.target_mean) <= 4 * row.mean_se;
  return {zero_ok && mean_ok, fmt("P(W=0)=%.5f [%.5f, %.5f] vs %.5f; mean %.4f +- %.4f vs %.4f", z.p, z.lo, z.hi,
                                  target, row.mean, row.mean_se, row.target_mean)};
}

Outcome connection_probability() {
  auto rep = exp::pn_experiment(2, {0.05}, 10'000'000, kSeed);
  const auto& row = rep.rows.at(0);
  bool ok = row.ratio >= 0.98 && row.ratio <= 1.02 && std::abs(row.z) < 4;
  return {ok, fmt("p=%.6e ratio=%.5f z=%.3f exact=%.6e", row.freq.p, row.ratio, row.z, row.exact)};
}

Outcome odd_girth() {
  std::size_t instances = 0, witnesses = 0, violations = 0, tries = 0;
  std::size_t shortest = SIZE_MAX;
  while (instances < 1000 && tries < 5000) {
    auto rng = Stream::derive(kSeed, {3, tries++});
    auto g = build_graph(sphere::sample_uniform(2, 2000, rng), 0.3);
    if (is_bipartite(g.graph).bipartite) continue;
    auto rep = odd_girth_floor(g);
    ++instances;
    witnesses += rep.witnesses;
    violations += rep.violations;
    if (rep.shortest) shortest = std::min(shortest, *rep.shortest);
  }
  return {instances == 1000 && violations == 0 && shortest >= 11,
          fmt("%zu non-bipartite instances, %zu witnesses, shortest %zu, %zu violations", instances, witnesses,
              shortest, violations)};
}

Outcome triangle_free() {
  std::size_t triangles = 0, edges = 0;
  for (std::uint64_t t = 0; t < 1000; ++t) {
    auto rng = Stream::derive(kSeed, {4, t});
    std::size_t n = 50 + below(rng, 451);
    double alpha = uniform(rng, 0.2, std::numbers::pi / 3 - 1e-9);
    auto pts = sphere::sample_uniform(2, n, rng);
    Graph g(n, borsuk_edges_brute(pts, alpha));
    edges += g.num_edges();
    for (const auto& e : g.edges()) {
      auto a = g.neighbors(e.u), b = g.neighbors(e.v);
      std::vector<std::uint32_t> common;
      std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(common));
      triangles += common.size();
    }
  }
  return {triangles == 0, fmt("1000 instances, %zu edges, %zu triangles", edges, triangles)};
}

Outcome bipartite_vs_antipodal() {
  std::size_t disagreements = 0, bipartite = 0;
  for (std::uint64_t t = 0; t < 500; ++t) {
    auto rng = Stream::derive(kSeed, {5, t});
    std::size_t n = 20 + below(rng, 381);
    double c = uniform(rng, 1.0, 8.0);
    double alpha = c / std::sqrt(static_cast<double>(n));
    auto pts = sphere::sample_uniform(2, n, rng);
    bool bip = is_bipartite(build_graph(pts, alpha).graph).bipartite;
    bool conn = antipodal_connectivity(build_geo_mirror(pts, alpha)).connected;
    bipartite += bip;
    disagreements += bip == conn;
  }
  return {disagreements == 0, fmt("500 instances (%zu bipartite), %zu disagreements", bipartite, disagreements)};
}

bool colorable_by_enumeration(const Graph& g, std::uint32_t k) {
  const std::size_t n = g.num_vertices();
  if (n == 0) return true;
  std::vector<std::uint32_t> col(n, 0);
  for (;;) {
    bool proper = true;
    for (const auto& e : g.edges())
      if (col[e.u] == col[e.v]) {
        proper = false;
        break;
      }
    if (proper) return true;
    std::size_t i = 0;
    while (i < n && ++col[i] == k) col[i++] = 0;
    if (i == n) return false;
  }
}

Outcome coloring_oracle() {
  std::size_t disagreements = 0, yes = 0;
  for (std::uint64_t t = 0; t < 200; ++t) {
    auto rng = Stream::derive(kSeed, {6, t});
    std::size_t n = 1 + below(rng, 12);
    std::uint32_t k = 2 + static_cast<std::uint32_t>(below(rng, 3));
    double p = uniform(rng, 0.15, 0.85);
    std::vector<Edge> edges;
    for (std::uint32_t u = 0; u < n; ++u)
      for (std::uint32_t v = u + 1; v < n; ++v)
        if (rng.uniform() < p) edges.push_back({u, v});
    Graph g(n, edges);
    bool truth = colorable_by_enumeration(g, k);
    auto res = coloring::k_colorable(g, k);
    bool solver = res.decision == coloring::Decision::Yes;
    if (res.decision == coloring::Decision::Undecided || solver != truth) ++disagreements;
    if (solver && (!res.coloring || !coloring::is_proper(g, *res.coloring))) ++disagreements;
    yes += truth;
  }
  return {disagreements == 0, fmt("200 graphs (%zu colourable), %zu disagreements", yes, disagreements)};
}

Outcome certificate_soundness() {
  std::size_t engineered = 0, counterexamples = 0, undecided = 0, tries = 0;
  while (engineered < 100 && tries < 1000) {
    auto rng = Stream::derive(kSeed, {7, tries++});
    int d = tries % 4 == 0 ? 3 : 2;
    std::size_t n = 20 + below(rng, 41);
    auto pts = sphere::sample_uniform(d, n, rng);
    // Smallest alpha on a coarse ladder whose caps certify a cover.
    for (double alpha = 0.6; alpha < 3.0; alpha += 0.05) {
      auto g = build_graph(pts, alpha);
      auto cert = coloring::cap_cover_certificate(g, 0.1 * alpha / 2);
      if (!cert.valid) continue;
      ++engineered;
      auto res = coloring::k_colorable(g.graph, static_cast<std::uint32_t>(d + 1));
      if (res.decision == coloring::Decision::Yes) ++counterexamples;
      if (res.decision == coloring::Decision::Undecided) ++undecided;
      break;
    }
  }
  return {engineered == 100 && counterexamples == 0 && undecided == 0,
          fmt("%zu certified instances, %zu counterexamples, %zu undecided", engineered, counterexamples, undecided)};
}

Outcome threshold_scaling() {
  auto& perc = percolation();
  if (!perc.ok) return {false, "percolation sweep failed: " + perc.error};
  double c_hat = perco::c2_constant(2, perc.ab.estimate);
  exp::ThresholdSweepConfig tc;
  tc.d = 2;
  tc.k = 2;
  tc.n_list = {2000, 8000, 32000};
  for (int i = 0; i <= 12; ++i) tc.c_list.push_back(c_hat * std::pow(2.0, -1.0 + i / 6.0));
  tc.trials = 200;
  tc.seed = kSeed;
  tc.reference = c_hat;
  tc.reference_lo = perco::c2_constant(2, perc.ab.lo);
  tc.reference_hi = perco::c2_constant(2, perc.ab.hi);
  auto rep = exp::threshold_sweep(tc);
  std::string per;
  for (std::size_t i = 0; i < rep.per_n.size(); ++i)
    per += fmt(" n=%g:%.3f[%.3f,%.3f]", tc.n_list[i], rep.per_n[i].x, rep.per_n[i].lo, rep.per_n[i].hi);
  bool agree = rep.agrees_with_reference.value_or(false);
  return {rep.mutually_overlapping && agree,
          fmt("c2=%.3f [%.3f, %.3f];%s; pooled %.3f [%.3f, %.3f]; drift %.3f +- %.3f", c_hat, *tc.reference_lo,
              *tc.reference_hi, per.c_str(), rep.pooled, rep.pooled_lo, rep.pooled_hi, rep.drift, rep.drift_se)};
}

Outcome ab_sanity() {
  auto& perc = percolation();
  if (!perc.ok) return {false, "percolation sweep failed: " + perc.error};
  double width = (perc.ab.hi - perc.ab.lo) + (perc.boolean.hi - perc.boolean.lo);
  bool ok = perc.ab.estimate >= perc.boolean.estimate / 2 - width;
  return {ok, fmt("lambda_c(AB)=%.4f [%.4f, %.4f]; lambda_c(Boolean)=%.4f [%.4f, %.4f]", perc.ab.estimate,
                  perc.ab.lo, perc.ab.hi, perc.boolean.estimate, perc.boolean.lo, perc.boolean.hi)};
}

Outcome subcritical_decay() {
  auto& perc = percolation();
  if (!perc.ok) return {false, "percolation sweep failed: " + perc.error};
  double lambda = 0.5 * perc.ab.estimate;
  std::vector<double> R, y;
  std::string rows;
  for (int r = 4; r <= 12; ++r) {
    auto p = perco::boundary_reach_prob(2, lambda, r, 400'000, kSeed);
    rows += fmt(" %d:%.2e", r, p.p);
    if (p.hits == 0) return {false, fmt("no hits at R=%d;%s", r, rows.c_str())};
    R.push_back(r);
    y.push_back(std::log(p.p));
  }
  auto fit = stats::linear_fit(R, y);
  return {fit.slope < 0 && fit.r2 > 0.9,
          fmt("lambda=%.4f slope=%.4f R2=%.4f;%s", lambda, fit.slope, fit.r2, rows.c_str())};
}

Outcome embedding() {
  const double n = 1e5;
  std::size_t success = 0, checked_fail = 0;
  std::string statuses;
  bool schedule_ok = true;
  for (std::uint64_t s = 0; s < 50; ++s) {
    embed::EmbeddingConfig cfg;
    cfg.epsilon = 0.05;
    cfg.max_level = 1;
    cfg.n = n;
    cfg.probes = 10000;
    cfg.odd_pairs = 1000;
    cfg.seed = s + 1;
    auto rng = Stream::derive(kSeed, {11, s});
    auto pts = sphere::sample_uniform(2, static_cast<std::size_t>(n), rng);
    auto res = embed::build_embedding(pts, cfg);
    if (res.status != embed::EmbeddingStatus::Success) {
      statuses += fmt(" seed%llu:%s", static_cast<unsigned long long>(s + 1), embed::to_string(res.status));
      continue;
    }
    ++success;
    const auto& v = res.verify;
    bool ok = v.max_odd < 1e-12 && v.lipschitz <= cfg.epsilon * (1 + 1e-6) && v.coverage_failures == 0 &&
              v.probes >= 10000 && v.levels_ok;
    for (const auto& lvl : res.levels) {
      ok = ok && lvl.clearance_ok;
      if (lvl.iterate) schedule_ok = schedule_ok && lvl.iterate->schedule_exact;
    }
    checked_fail += !ok;
  }
  // Closed-form schedule on representative parameters.
  for (double a : {1e-3, 2.5e-4, 1.0 / 3})
    for (double r : {1e-3, 0.004})
      schedule_ok = schedule_ok && embed::schedule_closed_form_exact(a, r, 6);
  return {checked_fail == 0 && schedule_ok,
          fmt("success %zu/50; %zu successful runs failing a check; schedule exact %s%s", success, checked_fail,
              schedule_ok ? "yes" : "no", statuses.c_str())};
}

Outcome projected_density() {
  const std::size_t m = 1'000'000;
  auto rng = Stream::derive(kSeed, {12});
  std::vector<double> radii;
  radii.reserve(m);
  std::vector<double> x(3);
  for (std::size_t i = 0; i < m; ++i) {
    sphere::sample_uniform_into(2, rng, x);
    if (x[2] == 1.0) continue;
    radii.push_back(sphere::stereo_project(x).norm());
  }
  std::sort(radii.begin(), radii.end());
  // The law is evaluated at every 50th order statistic only; by monotonicity
  // the two neighbouring evaluations bracket F at every radius in between,
  // which bounds the KS distance from above.
  constexpr std::size_t stride = 50;
  const double count = static_cast<double>(radii.size());
  double ks = 0;
  double F_lo = 0;
  for (std::size_t k = 0; k < radii.size(); k += stride) {
    std::size_t end = std::min(k + stride, radii.size());
    double F_hi = end == radii.size() ? 1.0 : sphere::projected_radius_cdf(radii[end], 2);
    for (std::size_t i = k; i < end; ++i) ks = std::max({ks, F_hi - i / count, (i + 1) / count - F_lo});
    F_lo = F_hi;
  }
  double crit = stats::ks_critical_1pct(radii.size());
  double mass = sphere::projected_density_mass(2);
  return {ks < crit && std::abs(mass - 1) <= 1e-6, fmt("KS=%.5f crit=%.5f mass-1=%.2e", ks, crit, mass - 1)};
}

Outcome bond_box() {
  auto p = perco::bond_percolation_box(2, 30, 0.99, 0.1, 200, kSeed);
  return {p.p > 0.9, fmt("%llu/200 trials above density 0.9", static_cast<unsigned long long>(p.hits))};
}

Outcome determinism() {
  std::vector<exp::ExperimentConfig> configs(3);
  configs[0].sizes = {200, 400};
  configs[0].params = {1, 2, 3, 4, 5};
  configs[0].trials = 40;
  configs[1].model = exp::ModelKind::AB;
  configs[1].sizes = {6};
  configs[1].params = {0.9, 1.1};
  configs[1].event = exp::Event::Percolation;
  configs[1].trials = 30;
  configs[2].d = 3;
  configs[2].sizes = {100};
  configs[2].params = {2, 4};
  configs[2].k = 3;
  configs[2].trials = 20;
  configs[2].node_budget = 20000;
  std::size_t differing = 0;
  for (auto cfg : configs) {
    cfg.seed = 77;
    cfg.threads = 1;
    auto one = exp::to_csv(exp::estimate_event_probability(cfg));
    cfg.threads = 4;
    auto four = exp::to_csv(exp::estimate_event_probability(cfg));
    differing += one != four;
  }
  return {differing == 0, fmt("%zu of 3 sweeps differ between 1 and 4 threads", differing)};
}

}  // namespace

int main(int argc, char** argv) {
  // Optional criterion numbers restrict the run.
  std::vector<std::size_t> only;
  for (int a = 1; a < argc; ++a) only.push_back(std::stoul(argv[a]));
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"edge-count Poisson law", edge_count_law},
      {"connection probability", connection_probability},
      {"odd-girth bound", odd_girth},
      {"triangle-freeness", triangle_free},
      {"bipartite iff not antipodally connected", bipartite_vs_antipodal},
      {"colouring oracle", coloring_oracle},
      {"certificate soundness", certificate_soundness},
      {"threshold scaling", threshold_scaling},
      {"AB percolation sanity", ab_sanity},
      {"subcritical decay", subcritical_decay},
      {"embedding construction", embedding},
      {"projected density", projected_density},
      {"bond percolation box", bond_box},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    if (!only.empty() && std::find(only.begin(), only.end(), i + 1) == only.end()) continue;
    auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = criteria[i].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%2zu %s %s: %s (%.1f s)\n", i + 1, out.pass ? "PASS" : "FAIL", criteria[i].first,
                out.detail.c_str(), secs);
    std::fflush(stdout);
    failed += !out.pass;
  }
  return failed == 0 ? 0 : 1;
}
