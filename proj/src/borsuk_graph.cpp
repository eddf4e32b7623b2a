#include "borsuk/borsuk_graph.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "borsuk/grid.hpp"
#include "borsuk/union_find.hpp"

namespace borsuk {

namespace {

void check_alpha(double alpha) {
  if (!(alpha > 0 && alpha < std::numbers::pi)) throw std::invalid_argument("alpha must lie in (0, pi)");
}

bool use_grid(const sphere::PointSet& pts, double alpha, EdgeMethod method) {
  if (method != EdgeMethod::Auto) return method == EdgeMethod::Grid;
  // The neighbourhood scan visits 3^(d+1) cells per query; past six
  // coordinates or for wide caps brute force is cheaper.
  return pts.size() >= 64 && pts.stride() <= 6 && sphere::chord_of_angle(alpha) < 0.7;
}

// Calls fn(i, j) for every adjacent pair with i < j, ordered by (i, j).
template <typename Fn>
void scan_pairs(const sphere::PointSet& pts, double alpha, EdgeMethod method, Fn&& fn) {
  check_alpha(alpha);
  const std::size_t n = pts.size();
  const double thr = -std::cos(alpha);
  if (!use_grid(pts, alpha, method)) {
    for (std::size_t i = 0; i < n; ++i) {
      auto u = pts[i];
      for (std::size_t j = i + 1; j < n; ++j)
        if (sphere::dot(u, pts[j]) < thr) fn(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(j));
    }
    return;
  }
  const int dim = pts.stride();
  std::vector<double> anti(pts.flat().begin(), pts.flat().end());
  for (double& v : anti) v = -v;
  // Adjacent pairs satisfy ||X_i + X_j|| < chord(alpha), so X_i lies within
  // one cell of the bucket holding -X_j in every coordinate.
  const double cell = sphere::chord_of_angle(alpha) * (1 + 1e-9);
  UniformGrid grid(dim, anti, cell, -1.0, 1.0, std::max<std::size_t>(4096, 16 * n));
  std::vector<std::uint32_t> hits;
  for (std::size_t i = 0; i < n; ++i) {
    auto u = pts[i];
    hits.clear();
    grid.for_each_near(u.data(), [&](std::uint32_t j) {
      if (j > i && sphere::dot(u, pts[j]) < thr) hits.push_back(j);
    });
    std::sort(hits.begin(), hits.end());
    for (auto j : hits) fn(static_cast<std::uint32_t>(i), j);
  }
}

std::vector<Edge> mirror_edges(const sphere::PointSet& pts, double alpha, EdgeMethod method) {
  const auto n = static_cast<std::uint32_t>(pts.size());
  std::vector<Edge> es;
  scan_pairs(pts, alpha, method, [&](std::uint32_t i, std::uint32_t j) {
    es.push_back({i, n + j});
    es.push_back({j, n + i});
  });
  return es;
}

}  // namespace

std::vector<Edge> borsuk_edges(const sphere::PointSet& points, double alpha, EdgeMethod method) {
  std::vector<Edge> es;
  scan_pairs(points, alpha, method, [&](std::uint32_t i, std::uint32_t j) { es.push_back({i, j}); });
  return es;
}

std::vector<Edge> borsuk_edges_brute(const sphere::PointSet& points, double alpha) {
  return borsuk_edges(points, alpha, EdgeMethod::Brute);
}

std::size_t count_borsuk_edges(const sphere::PointSet& points, double alpha, EdgeMethod method) {
  std::size_t m = 0;
  scan_pairs(points, alpha, method, [&](std::uint32_t, std::uint32_t) { ++m; });
  return m;
}

BorsukGraph build_graph(sphere::PointSet points, double alpha, EdgeMethod method) {
  BorsukGraph g;
  g.d = points.dim();
  g.alpha = alpha;
  auto es = borsuk_edges(points, alpha, method);
  g.graph = Graph(points.size(), std::move(es));
  g.points = std::move(points);
  return g;
}

GeoMirrorGraph build_geo_mirror(sphere::PointSet points, double alpha, EdgeMethod method) {
  GeoMirrorGraph g;
  g.d = points.dim();
  g.alpha = alpha;
  auto es = mirror_edges(points, alpha, method);
  g.graph = Graph(2 * points.size(), std::move(es));
  g.points = std::move(points);
  return g;
}

AntipodalConnection antipodal_connectivity(const GeoMirrorGraph& g) {
  AntipodalConnection out;
  const auto n = static_cast<std::uint32_t>(g.n());
  UnionFind uf(2 * static_cast<std::size_t>(n));
  for (auto e : g.graph.edges()) uf.unite(e.u, e.v);
  std::uint32_t start = UINT32_MAX;
  for (std::uint32_t i = 0; i < n; ++i) {
    if (uf.connected(g.x(i), g.y(i))) {
      start = i;
      break;
    }
  }
  if (start == UINT32_MAX) return out;
  // Shortest path X_start -> Y_start by BFS.
  const std::uint32_t src = g.x(start), dst = g.y(start);
  std::vector<std::uint32_t> parent(2 * static_cast<std::size_t>(n), UINT32_MAX);
  std::vector<std::uint32_t> queue{src};
  parent[src] = src;
  for (std::size_t head = 0; head < queue.size() && parent[dst] == UINT32_MAX; ++head) {
    auto v = queue[head];
    for (auto w : g.graph.neighbors(v)) {
      if (parent[w] != UINT32_MAX) continue;
      parent[w] = v;
      queue.push_back(w);
    }
  }
  for (std::uint32_t v = dst; v != src; v = parent[v]) out.path.push_back(v);
  out.path.push_back(src);
  std::reverse(out.path.begin(), out.path.end());
  out.connected = true;
  // Drop the closing Y_start: it is the start vertex again once unmirrored.
  for (std::size_t k = 0; k + 1 < out.path.size(); ++k) out.closed_walk.push_back(out.path[k] % n);
  return out;
}

OddGirthReport odd_girth_floor(const BorsukGraph& g, std::size_t limit) {
  OddGirthReport r;
  r.bound = std::numbers::pi / g.alpha;
  for (const auto& w : bfs_odd_cycles(g.graph, limit)) {
    ++r.witnesses;
    if (!(static_cast<double>(w.size()) > r.bound)) ++r.violations;
    if (!r.shortest || w.size() < *r.shortest) r.shortest = w.size();
  }
  return r;
}

}  // namespace borsuk
