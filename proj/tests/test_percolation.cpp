#include "doctest.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "borsuk/percolation.hpp"
#include "borsuk/sphere.hpp"

using namespace borsuk;
using namespace borsuk::perco;

namespace {

ABSample pair_at(double dist) {
  ABSample s;
  s.d = 2;
  s.R = 5;
  s.add(std::vector<double>{0, 0}, Label::A);
  s.add(std::vector<double>{dist, 0}, Label::B);
  return s;
}

}  // namespace

TEST_CASE("sample_ab basics") {
  auto empty = sample_ab(2, 3, 0, 0, 1);
  CHECK(empty.size() == 0);
  auto seeded = sample_ab(2, 3, 0.5, 0.5, 2, Label::A);
  REQUIRE(seeded.origin);
  CHECK(*seeded.origin == seeded.size() - 1);
  CHECK(seeded.labels.back() == Label::A);
  CHECK(seeded.point(*seeded.origin)[0] == 0.0);
  for (std::size_t i = 0; i < seeded.size(); ++i)
    for (double v : seeded.point(i)) CHECK(std::abs(v) <= 3.0);
  CHECK_THROWS_AS(sample_ab(2, -1, 1, 1, 1), std::invalid_argument);
  CHECK_THROWS_AS(sample_ab(2, 1, -1, 1, 1), std::invalid_argument);
}

TEST_CASE("sample_ab counts are Poisson") {
  std::vector<double> counts;
  for (std::uint64_t r = 0; r < 1000; ++r) {
    auto s = sample_ab(2, 10, 2, 0, r);
    counts.push_back(static_cast<double>(s.size()));
  }
  double m = stats::mean(counts);
  CHECK(std::abs(m - 800) < 4 * std::sqrt(800.0 / 1000));
  CHECK(stats::variance(counts) == doctest::Approx(800).epsilon(0.15));
  std::vector<double> cells;
  for (std::uint64_t r = 0; r < 400; ++r)
    cells.push_back(static_cast<double>(sample_ab_cellwise(2, 4.5, 1.5, 0, Stream(r)).size()));
  CHECK(std::abs(stats::mean(cells) - 121.5) < 4 * std::sqrt(121.5 / 400));
}

TEST_CASE("cluster examples") {
  auto near = build_clusters(pair_at(0.5));
  CHECK(near.sizes.size() == 1);
  CHECK(near.sizes[0] == 2);
  auto far = build_clusters(pair_at(1.5));
  CHECK(far.sizes.size() == 2);
  // Same label never joins in the AB model, but does in the Boolean model.
  auto same = pair_at(0.5);
  same.labels[1] = Label::A;
  CHECK(build_clusters(same).sizes.size() == 2);
  CHECK(build_clusters(same, Model::Boolean).sizes.size() == 1);
  CHECK(build_clusters(pair_at(1.0)).sizes.size() == 1);
}

TEST_CASE("grid clustering equals brute force") {
  int instances = 0;
  for (std::uint64_t r = 0; r < 120; ++r) {
    double R = 2 + 0.1 * static_cast<double>(r % 40);
    double lam = 0.3 + 0.02 * static_cast<double>(r % 50);
    int d = r % 3 == 2 ? 3 : 2;
    Stream rng = Stream::derive(21, {r});
    auto s = sample_ab(d, R, lam, lam, rng, r % 2 ? std::optional<Label>(Label::B) : std::nullopt);
    if (s.size() > 1000) continue;
    ++instances;
    for (Model m : {Model::AB, Model::Boolean}) {
      auto g = build_clusters(s, m);
      auto b = build_clusters_brute(s, m);
      CHECK(g.component == b.component);
      CHECK(g.sizes == b.sizes);
      CHECK(g.touches_shell == b.touches_shell);
      CHECK(g.merges == b.merges);
      CHECK(g.merges == s.size() - g.sizes.size());
    }
  }
  CHECK(instances >= 100);
}

TEST_CASE("every merge is witnessed by an A-B pair within distance 1") {
  for (std::uint64_t r = 0; r < 30; ++r) {
    auto s = sample_ab(2, 4, 1.2, 1.2, r + 500);
    auto lab = build_clusters(s);
    for (auto [i, j] : model_edges(s, Model::AB)) {
      CHECK(s.labels[i] != s.labels[j]);
      double d2 = 0;
      for (int k = 0; k < 2; ++k) d2 += std::pow(s.point(i)[k] - s.point(j)[k], 2);
      CHECK(d2 <= 1.0);
      CHECK(lab.component[i] == lab.component[j]);
    }
    // Connectivity through the witnessed edges alone reproduces the labelling.
    auto brute = build_clusters_brute(s);
    CHECK(brute.component == lab.component);
  }
}

TEST_CASE("lazy exploration equals full cellwise clustering") {
  int reached = 0, total = 0;
  for (std::uint64_t r = 0; r < 150; ++r) {
    double R = 3 + 0.37 * static_cast<double>(r % 11);
    double lam = 0.6 + 0.05 * static_cast<double>(r % 13);
    Model m = r % 4 == 3 ? Model::Boolean : Model::AB;
    double lb = m == Model::AB ? lam : 0.0;
    Stream rng = Stream::derive(33, {r});
    auto full = sample_ab_cellwise(2, R, lam, lb, rng, Label::A);
    bool expect = origin_reaches_shell(full, m);
    CHECK(origin_reaches_shell_lazy(2, R, lam, lb, rng, m) == expect);
    reached += expect;
    ++total;
  }
  // Both outcomes occur, so the comparison is not vacuous.
  CHECK(reached > 10);
  CHECK(reached < total - 10);
}

TEST_CASE("box crossing") {
  CHECK_FALSE(crosses_box(sample_ab(2, 10, 0.2, 0.2, 1)));
  CHECK(crosses_box(sample_ab(2, 10, 3.0, 3.0, 1)));
  CHECK_THROWS(origin_reaches_shell(sample_ab(2, 3, 1, 1, 1)));
}

TEST_CASE("boundary reach probability") {
  auto zero = boundary_reach_prob(2, 0.0, 5, 200, 1);
  CHECK(zero.hits == 0);
  CHECK_THROWS_AS(boundary_reach_prob(2, 1.0, 5, 0, 1), std::invalid_argument);
  // Monotone in lambda at fixed R within joint CI.
  stats::Proportion prev{};
  for (double lam : {0.4, 0.7, 1.0, 1.3, 1.6}) {
    auto p = boundary_reach_prob(2, lam, 8, 2000, 5);
    CHECK(p.hi >= prev.lo);
    prev = p;
  }
  CHECK(prev.p > 0.5);
}

TEST_CASE("subcritical decay is log-linear in R") {
  std::vector<double> R, logp;
  for (double r : {4.0, 6.0, 8.0, 10.0, 12.0}) {
    auto p = boundary_reach_prob(2, 0.6, r, 40000, 100 + static_cast<std::uint64_t>(r));
    REQUIRE(p.hits > 0);
    R.push_back(r);
    logp.push_back(std::log(p.p));
  }
  auto f = stats::linear_fit(R, logp);
  CHECK(f.slope < 0);
  CHECK(f.r2 > 0.9);
}

TEST_CASE("M_k statistic") {
  CHECK(m_k_statistic(2, 0.0, 4, 50, 1).hits == 0);
  CHECK_THROWS_AS(m_k_statistic(2, 0.5, 1.5, 10, 1), std::invalid_argument);
  auto small = m_k_statistic(2, 0.6, 4, 1500, 2);
  auto large = m_k_statistic(2, 0.6, 8, 1500, 3);
  CHECK(large.lo <= small.hi);
  CHECK(large.p < small.p);
  auto super4 = m_k_statistic(2, 1.6, 4, 200, 4);
  auto super8 = m_k_statistic(2, 1.6, 8, 200, 5);
  CHECK(super4.p > 0.9);
  CHECK(super8.p > 0.9);
}

TEST_CASE("c2 constant") {
  CHECK(c2_constant(2, 0.0) == 0.0);
  CHECK(c2_constant(2, 1 / (3 * sphere::ball_volume(3))) == doctest::Approx(1.0));
  CHECK(c2_constant(2, 1.0) == doctest::Approx(std::sqrt(4 * std::numbers::pi)));
  CHECK(c2_constant(3, 1.0) == doctest::Approx(std::cbrt(2 * std::numbers::pi * std::numbers::pi)));
}

TEST_CASE("covered predicate") {
  Region reg{{0.0, 0.0}, 1.0};
  CHECK_FALSE(covered_predicate(sample_ab(2, 3, 0, 0, 1), reg, 0.05));
  CHECK_THROWS_AS(covered_predicate(sample_ab(2, 3, 1, 1, 1), reg, 0.36), std::invalid_argument);
  int yes = 0;
  for (std::uint64_t r = 0; r < 20; ++r) {
    auto s = sample_ab(2, 2, 200, 200, r);
    Region small{{0.0, 0.0}, 0.5};
    if (!covered_predicate(s, small, 0.04)) continue;
    ++yes;
    // Direct check at random region points against the nearby sample points.
    std::vector<std::size_t> local;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (std::abs(s.point(i)[0]) <= 0.75 && std::abs(s.point(i)[1]) <= 0.75) local.push_back(i);
    Stream rng(r + 99);
    for (int q = 0; q < 10000; ++q) {
      double y[2] = {rng.uniform() - 0.5, rng.uniform() - 0.5};
      bool a = false, b = false;
      for (std::size_t i : local) {
        double d2 = std::pow(s.point(i)[0] - y[0], 2) + std::pow(s.point(i)[1] - y[1], 2);
        if (d2 < 1.0 / 16) (s.labels[i] == Label::A ? a : b) = true;
      }
      REQUIRE((a && b));
    }
  }
  CHECK(yes >= 18);
}

TEST_CASE("cap projection intensity") {
  const double n = 1e6, alpha = 3 / std::sqrt(n), t = 0.9;
  auto rep = cap_projection_intensity_check(2, n, alpha, t, 8, 1);
  CHECK(rep.rho == doctest::Approx(rep.rho_formula).epsilon(1e-12));
  CHECK(rep.within_bounds);
  CHECK(rep.uniform_ok);
  CHECK(rep.lower_bound < rep.mean_count);
  CHECK(rep.mean_count < rep.upper_bound);
  auto tight = cap_projection_intensity_check(2, 1000, 0.1, 0.999999, 1, 1);
  CHECK(tight.rho_formula < 0.1);
  CHECK_THROWS_AS(cap_projection_intensity_check(2, n, alpha, 0.5, 1, 1, 0.8), std::invalid_argument);
}

TEST_CASE("bond percolation box") {
  CHECK(bond_percolation_box(2, 5, 1.0, 0.1, 10, 1).hits == 10);
  CHECK(bond_percolation_box(2, 5, 0.0, 0.5, 10, 1).hits == 0);
  CHECK_THROWS_AS(bond_percolation_box(2, 5, 1.5, 0.1, 10, 1), std::invalid_argument);
  auto p = bond_percolation_box(2, 30, 0.99, 0.1, 200, 7);
  CHECK(p.p > 0.9);
}

TEST_CASE("threshold sweep") {
  SweepConfig cfg;
  cfg.d = 2;
  cfg.box_sizes = {6};
  cfg.trials = 60;
  cfg.seed = 4;
  cfg.lambda_grid = {0.2, 0.25, 0.3, 0.35};
  CHECK_THROWS_AS(boolean_lambda_c(cfg), NotBracketed);
  cfg.lambda_grid = {4, 5, 6, 7};
  CHECK_THROWS_AS(boolean_lambda_c(cfg), NotBracketed);

  cfg.lambda_grid = {1.0, 1.15, 1.3, 1.45, 1.6, 1.75, 1.9, 2.1};
  cfg.box_sizes = {8, 12};
  cfg.trials = 150;
  auto b = boolean_lambda_c(cfg);
  CHECK(b.lo <= b.estimate);
  CHECK(b.estimate <= b.hi);
  CHECK(b.lo < b.hi);
  CHECK(b.estimate >= cfg.lambda_grid.front());
  CHECK(b.estimate <= cfg.lambda_grid.back());
  // Known two-dimensional value for unit connection distance is about 1.436.
  CHECK(b.lo < 1.436);
  CHECK(1.436 < b.hi);
  REQUIRE(b.per_size.size() == 2);
  CHECK(b.cells.size() == cfg.lambda_grid.size() * cfg.box_sizes.size());

  // Determinism across thread counts.
  SweepConfig one = cfg;
  one.threads = 1;
  SweepConfig four = cfg;
  four.threads = 4;
  auto c1 = sweep_cells(one, Model::AB);
  auto c4 = sweep_cells(four, Model::AB);
  REQUIRE(c1.size() == c4.size());
  for (std::size_t i = 0; i < c1.size(); ++i) CHECK(c1[i].freq.hits == c4[i].freq.hits);

  cfg.lambda_grid = {1.0, 1.2, 1.4};
  CHECK_THROWS_AS(sweep_cells(cfg, Model::AB), std::invalid_argument);
}
