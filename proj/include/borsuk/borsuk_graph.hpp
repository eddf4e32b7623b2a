#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "borsuk/graph.hpp"
#include "borsuk/sphere.hpp"

namespace borsuk {

enum class EdgeMethod { Auto, Grid, Brute };

/// Points of S^d joined when dot(u, v) < -cos(alpha), i.e. when their
/// geodesic distance exceeds pi - alpha.
struct BorsukGraph {
  int d = 0;
  double alpha = 0;
  sphere::PointSet points;
  Graph graph;
};

/// Sorted (u < v) edge list under the near-antipodal rule.
std::vector<Edge> borsuk_edges(const sphere::PointSet& points, double alpha, EdgeMethod method = EdgeMethod::Auto);
/// O(n^2) reference construction.
std::vector<Edge> borsuk_edges_brute(const sphere::PointSet& points, double alpha);
/// Edge count without materializing the list.
std::size_t count_borsuk_edges(const sphere::PointSet& points, double alpha, EdgeMethod method = EdgeMethod::Auto);

/// Throws std::invalid_argument unless 0 < alpha < pi.
BorsukGraph build_graph(sphere::PointSet points, double alpha, EdgeMethod method = EdgeMethod::Auto);

/// Bipartite twin: vertex i is X_i, vertex n + j is Y_j = -X_j. X_i ~ Y_j
/// (i != j) when dist(X_i, Y_j) < alpha, the same strict rule as the Borsuk
/// graph, so each Borsuk edge {i, j} yields X_i ~ Y_j and X_j ~ Y_i.
struct GeoMirrorGraph {
  int d = 0;
  double alpha = 0;
  sphere::PointSet points;
  Graph graph;

  std::size_t n() const noexcept { return points.size(); }
  std::uint32_t x(std::uint32_t i) const noexcept { return i; }
  std::uint32_t y(std::uint32_t j) const noexcept { return static_cast<std::uint32_t>(n()) + j; }
};

GeoMirrorGraph build_geo_mirror(sphere::PointSet points, double alpha, EdgeMethod method = EdgeMethod::Auto);

struct AntipodalConnection {
  bool connected = false;
  /// Mirror-graph path X_i, Y_., X_., ..., Y_i when connected.
  std::vector<std::uint32_t> path;
  /// The same path with mirror labels dropped: an odd closed walk of the
  /// Borsuk graph (first vertex not repeated at the end).
  OddCycleWitness closed_walk;
};

AntipodalConnection antipodal_connectivity(const GeoMirrorGraph& g);

struct OddGirthReport {
  /// pi / alpha; every odd cycle must be strictly longer.
  double bound = 0;
  std::size_t witnesses = 0;
  std::size_t violations = 0;
  std::optional<std::size_t> shortest;
  bool ok() const noexcept { return violations == 0; }
};

/// Checks every BFS odd-cycle witness (up to `limit`) against the bound.
OddGirthReport odd_girth_floor(const BorsukGraph& g, std::size_t limit = SIZE_MAX);

}  // namespace borsuk
