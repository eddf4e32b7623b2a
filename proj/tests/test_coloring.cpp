#include "doctest.h"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "borsuk/coloring.hpp"

using namespace borsuk;
using namespace borsuk::coloring;
using std::numbers::pi;

namespace {

Graph cycle(std::uint32_t n) {
  std::vector<Edge> es;
  for (std::uint32_t i = 0; i < n; ++i) es.push_back({i, (i + 1) % n});
  return Graph(n, es);
}

Graph random_graph(Stream& rng, std::uint32_t n, double p) {
  std::vector<Edge> es;
  for (std::uint32_t i = 0; i < n; ++i)
    for (std::uint32_t j = i + 1; j < n; ++j)
      if (rng.uniform() < p) es.push_back({i, j});
  return Graph(n, es);
}

// Odometer over all k^n assignments.
bool colorable_exhaustive(const Graph& g, std::uint32_t k) {
  const auto n = g.num_vertices();
  std::vector<std::uint32_t> c(n, 0);
  for (;;) {
    bool ok = true;
    for (auto e : g.edges())
      if (c[e.u] == c[e.v]) {
        ok = false;
        break;
      }
    if (ok) return true;
    std::size_t i = 0;
    while (i < n && ++c[i] == k) c[i++] = 0;
    if (i == n) return false;
  }
}

}  // namespace

TEST_CASE("greedy colouring") {
  CHECK(greedy_color(Graph(4, {})).k == 1);
  CHECK(greedy_color(Graph(2, {{0, 1}})).k == 2);
  CHECK(greedy_color(cycle(5)).k <= 3);
  Stream rng(1);
  for (int rep = 0; rep < 100; ++rep) {
    auto g = random_graph(rng, 40, 0.2);
    auto c = greedy_color(g);
    CHECK(is_proper(g, c));
    CHECK(c.k <= g.max_degree() + 1);
  }
}

TEST_CASE("k-colourability edge cases") {
  CHECK(k_colorable(Graph(3, {}), 1).decision == Decision::Yes);
  CHECK(k_colorable(Graph(3, {{0, 2}}), 1).decision == Decision::No);
  CHECK(k_colorable(cycle(7), 2).decision == Decision::No);
  CHECK(k_colorable(cycle(7), 3).decision == Decision::Yes);
  CHECK_THROWS_AS(k_colorable(cycle(3), 0), std::invalid_argument);
  // K4 is not 3-colourable; the backtracker must prove it.
  Graph k4(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  CHECK(k_colorable(k4, 3).decision == Decision::No);
}

TEST_CASE("exact solver agrees with exhaustive enumeration") {
  Stream rng(77);
  int checked = 0;
  for (int rep = 0; rep < 240; ++rep) {
    std::uint32_t n = 4 + static_cast<std::uint32_t>(rng() % 9);
    auto g = random_graph(rng, n, 0.15 + 0.6 * rng.uniform());
    for (std::uint32_t k : {2u, 3u, 4u}) {
      auto r = k_colorable(g, k);
      REQUIRE(r.decision != Decision::Undecided);
      bool expect = colorable_exhaustive(g, k);
      CHECK((r.decision == Decision::Yes) == expect);
      if (r.coloring) {
        CHECK(is_proper(g, *r.coloring));
        CHECK(r.coloring->k <= k);
      }
      ++checked;
    }
  }
  CHECK(checked == 720);
}

TEST_CASE("exact solver on small Borsuk instances") {
  for (int rep = 0; rep < 60; ++rep) {
    auto g = build_graph(sphere::sample_uniform(2, 14, 300 + rep), 1.2 + 0.02 * rep);
    for (std::uint32_t k : {2u, 3u}) {
      auto r = k_colorable(g.graph, k);
      CHECK((r.decision == Decision::Yes) == colorable_exhaustive(g.graph, k));
    }
  }
}

TEST_CASE("node budget yields undecided") {
  // K5 with k=4 and a budget of one assignment must stop undecided.
  std::vector<Edge> es;
  for (std::uint32_t i = 0; i < 5; ++i)
    for (std::uint32_t j = i + 1; j < 5; ++j) es.push_back({i, j});
  Graph k5(5, es);
  CHECK(k_colorable(k5, 4, 1).decision == Decision::Undecided);
  CHECK(k_colorable(k5, 4).decision == Decision::No);
}

TEST_CASE("chromatic number") {
  CHECK(chromatic_number(Graph(3, {})).value == 1u);
  CHECK(chromatic_number(Graph(2, {{0, 1}})).value == 2u);
  CHECK(chromatic_number(cycle(9)).value == 3u);
  Stream rng(4);
  for (int rep = 0; rep < 50; ++rep) {
    auto g = random_graph(rng, 10, 0.5);
    auto r = chromatic_number(g);
    REQUIRE(r.value);
    CHECK(colorable_exhaustive(g, *r.value));
    if (*r.value > 1) CHECK_FALSE(colorable_exhaustive(g, *r.value - 1));
    CHECK(*r.value <= greedy_color(g).k);
    CHECK(is_proper(g, *r.coloring));
  }
  // Bounds already meet for an odd cycle, so the cap is irrelevant there.
  CHECK(chromatic_number(cycle(9), 2).value == 3u);
  Graph k4(4, {{0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}});
  auto capped = chromatic_number(k4, 2);
  CHECK_FALSE(capped.value);
  CHECK(capped.lo == 3);
  CHECK(capped.hi == 4);
}

TEST_CASE("cube net covering radius") {
  for (int d : {1, 2, 3}) {
    double beta = 0.15;
    auto net = cube_net(d, beta);
    auto probes = sphere::sample_uniform(d, 3000, 10 + d);
    double worst = 0;
    for (std::size_t i = 0; i < probes.size(); ++i) {
      double best = pi;
      for (std::size_t j = 0; j < net.size(); ++j) best = std::min(best, sphere::geodesic_distance(probes[i], net[j]));
      worst = std::max(worst, best);
    }
    CHECK(worst <= beta);
  }
}

TEST_CASE("cap cover certificate") {
  sphere::PointSet empty(2);
  BorsukGraph g0{2, 0.5, empty, Graph(0, {})};
  CHECK_FALSE(cap_cover_certificate(g0, 0.1).valid);
  CHECK_THROWS_AS(cap_cover_certificate(g0, 0.25), std::invalid_argument);

  // A fine net as the vertex set covers itself.
  auto net = cube_net(2, 0.05);
  auto g = build_graph(net, 0.4);
  auto cert = cap_cover_certificate(g, 0.1);
  CHECK(cert.valid);
  CHECK(cert.uncovered == 0);

  // Sparse sample: certificate fails and reports nearest distances beyond the reach.
  auto sparse = build_graph(sphere::sample_uniform(2, 50, 3), 0.3);
  auto bad = cap_cover_certificate(sparse, 0.05);
  CHECK_FALSE(bad.valid);
  REQUIRE_FALSE(bad.failures.empty());
  for (auto f : bad.failures) CHECK(f.nearest_distance >= 0.3 / 2 - 0.05 - 1e-12);
}

TEST_CASE("certificate implies no (d+1)-colouring on small instances") {
  int valid = 0;
  for (int rep = 0; rep < 40; ++rep) {
    // Jittered points around the circle: d = 1, so 2 colours must fail.
    const int n = 7 + rep % 20;
    Stream rng = Stream::derive(5, {static_cast<std::uint64_t>(rep)});
    sphere::PointSet pts(1);
    for (int i = 0; i < n; ++i) {
      double t = 2 * pi * (i + 0.3 * (rng.uniform() - 0.5)) / n;
      pts.push_back(std::vector<double>{std::cos(t), std::sin(t)});
    }
    double alpha = 2 * (1.35 * pi / n) + 0.05;
    auto g = build_graph(pts, alpha);
    auto cert = cap_cover_certificate(g, 0.02);
    if (!cert.valid) continue;
    ++valid;
    CHECK(k_colorable(g.graph, 2).decision == Decision::No);
  }
  CHECK(valid > 30);
}

TEST_CASE("chromatic_exceeds uses shortcuts") {
  auto g = build_graph(sphere::sample_uniform(2, 20, 1), 0.05);
  auto r = chromatic_exceeds(g, 2);
  CHECK(r.decision == Decision::No);
  auto dense = build_graph(cube_net(2, 0.25), 1.2);
  auto r3 = chromatic_exceeds(dense, 3);
  CHECK(r3.decision == Decision::Yes);
}
