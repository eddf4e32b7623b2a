#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "borsuk/borsuk_graph.hpp"
#include "borsuk/graph.hpp"
#include "borsuk/sphere.hpp"

namespace borsuk::coloring {

struct Coloring {
  std::vector<std::uint32_t> color;
  std::uint32_t k = 0;
};

bool is_proper(const Graph& g, const Coloring& c);

/// Sequential greedy colouring in DSATUR order; uses at most max degree + 1
/// colours.
Coloring greedy_color(const Graph& g);

enum class Decision { Yes, No, Undecided };

struct KColorResult {
  Decision decision = Decision::Undecided;
  std::optional<Coloring> coloring;
  std::uint64_t nodes = 0;
};

inline constexpr std::uint64_t kDefaultNodeBudget = 100'000'000;

/// Exact k-colourability by DSATUR-ordered backtracking with colour symmetry
/// breaking, one connected component at a time. `node_budget` bounds the
/// total number of colour assignments tried; running out gives Undecided.
KColorResult k_colorable(const Graph& g, std::uint32_t k, std::uint64_t node_budget = kDefaultNodeBudget);

struct ChromaticResult {
  std::optional<std::uint32_t> value;
  std::uint32_t lo = 0;
  std::uint32_t hi = 0;
  std::optional<Coloring> coloring;
};

/// Smallest k with a proper k-colouring. If `max_k` is set, no k above it is
/// tried; the result is then unknown with lo = max_k + 1 when every k <= max_k
/// fails. Budget exhaustion also leaves value empty with the bounds found.
ChromaticResult chromatic_number(const Graph& g, std::optional<std::uint32_t> max_k = std::nullopt,
                                 std::uint64_t node_budget = kDefaultNodeBudget);

/// Net on S^d with covering radius at most beta (geodesic): a grid of
/// spacing h <= (4 / sqrt(d)) sin(beta / 2) on every face of the cube
/// [-1, 1]^{d+1}, pushed radially onto the sphere. Radial projection from
/// outside the unit ball is 1-Lipschitz, so chords shrink.
sphere::PointSet cube_net(int d, double beta);

struct CoverFailure {
  std::uint32_t net_index;
  double nearest_distance;
};

struct CoverCertificate {
  int d = 0;
  double alpha = 0;
  double beta = 0;
  std::size_t net_size = 0;
  std::vector<std::uint8_t> covered;
  /// Up to 64 uncovered net points with the geodesic distance to the nearest vertex.
  std::vector<CoverFailure> failures;
  std::size_t uncovered = 0;
  bool valid = false;
};

/// Sound one-sided check that the open caps cap(v, alpha/2) cover S^d:
/// valid iff every net point lies strictly within alpha/2 - beta of a vertex.
/// A valid certificate implies chi(G) >= d + 2. Throws unless 0 < beta < alpha/2.
CoverCertificate cap_cover_certificate(const BorsukGraph& g, double beta, unsigned threads = 1);

/// chi > k decision used by the experiments: greedy, bipartite shortcut
/// (k = 2), cover certificate (k = d + 1), exact solver, then Undecided.
struct ExceedsResult {
  Decision decision = Decision::Undecided;
  const char* decided_by = "";
};
ExceedsResult chromatic_exceeds(const BorsukGraph& g, std::uint32_t k, std::uint64_t node_budget = kDefaultNodeBudget,
                                double certificate_beta_fraction = 0.1);

}  // namespace borsuk::coloring
