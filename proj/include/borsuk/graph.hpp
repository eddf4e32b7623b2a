#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace borsuk {

struct Edge {
  std::uint32_t u;
  std::uint32_t v;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Simple undirected graph in CSR form. Edges are stored once with u < v,
/// sorted; neighbour lists are sorted ascending.
class Graph {
 public:
  Graph() = default;
  /// Throws std::invalid_argument on self-loops or out-of-range endpoints.
  /// Duplicate edges are merged.
  Graph(std::size_t n, std::vector<Edge> edges);

  std::size_t num_vertices() const noexcept { return n_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  const std::vector<Edge>& edges() const noexcept { return edges_; }
  std::span<const std::uint32_t> neighbors(std::uint32_t v) const noexcept {
    return {adj_.data() + start_[v], adj_.data() + start_[v + 1]};
  }
  std::size_t degree(std::uint32_t v) const noexcept { return start_[v + 1] - start_[v]; }
  std::size_t max_degree() const noexcept;
  bool adjacent(std::uint32_t a, std::uint32_t b) const noexcept;

  /// Subgraph induced by `vertices` (relabelled 0..k-1 in the given order).
  Graph induced(std::span<const std::uint32_t> vertices) const;

 private:
  std::size_t n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::size_t> start_{0};
  std::vector<std::uint32_t> adj_;
};

/// Vertex sequence w_0, ..., w_{L-1} of odd length L >= 3 with w_i ~ w_{i+1}
/// and w_{L-1} ~ w_0.
using OddCycleWitness = std::vector<std::uint32_t>;

/// True when consecutive entries (cyclically) are adjacent.
bool is_closed_walk(const Graph& g, std::span<const std::uint32_t> walk);

struct BipartiteResult {
  bool bipartite = true;
  /// 0/1 side per vertex when bipartite.
  std::vector<std::uint8_t> side;
  /// Odd cycle found by BFS layering when not bipartite.
  std::optional<OddCycleWitness> witness;
};

BipartiteResult is_bipartite(const Graph& g);

/// Every odd cycle obtainable from a BFS forest: one per non-tree edge joining
/// two vertices on the same layer. At most `limit` are returned.
std::vector<OddCycleWitness> bfs_odd_cycles(const Graph& g, std::size_t limit = SIZE_MAX);

/// Connected component id per vertex, dense in order of first appearance.
std::vector<std::uint32_t> connected_components(const Graph& g);

/// Some triangle (a, b, c) if one exists.
std::optional<std::array<std::uint32_t, 3>> find_triangle(const Graph& g);

}  // namespace borsuk
