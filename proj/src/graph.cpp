#include <algorithm>
#include <array>
#include <stdexcept>

#include "borsuk/graph.hpp"
#include "borsuk/union_find.hpp"

namespace borsuk {

Graph::Graph(std::size_t n, std::vector<Edge> edges) : n_(n) {
  if (n > UINT32_MAX) throw std::invalid_argument("Graph: too many vertices");
  for (auto& e : edges) {
    if (e.u == e.v) throw std::invalid_argument("Graph: self-loop");
    if (e.u >= n || e.v >= n) throw std::invalid_argument("Graph: endpoint out of range");
    if (e.u > e.v) std::swap(e.u, e.v);
  }
  std::sort(edges.begin(), edges.end());
  edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
  edges_ = std::move(edges);
  start_.assign(n + 1, 0);
  for (auto e : edges_) {
    ++start_[e.u + 1];
    ++start_[e.v + 1];
  }
  for (std::size_t i = 0; i < n; ++i) start_[i + 1] += start_[i];
  adj_.resize(2 * edges_.size());
  std::vector<std::size_t> fill(start_.begin(), start_.end() - 1);
  // Edges are sorted by (u, v); filling both directions in this order leaves
  // every neighbour list sorted.
  for (auto e : edges_) adj_[fill[e.v]++] = e.u;
  for (auto e : edges_) adj_[fill[e.u]++] = e.v;
  for (std::size_t v = 0; v < n; ++v) std::sort(adj_.begin() + start_[v], adj_.begin() + start_[v + 1]);
}

std::size_t Graph::max_degree() const noexcept {
  std::size_t m = 0;
  for (std::uint32_t v = 0; v < n_; ++v) m = std::max(m, degree(v));
  return m;
}

bool Graph::adjacent(std::uint32_t a, std::uint32_t b) const noexcept {
  if (a >= n_ || b >= n_) return false;
  auto nb = neighbors(a);
  return std::binary_search(nb.begin(), nb.end(), b);
}

Graph Graph::induced(std::span<const std::uint32_t> vertices) const {
  std::vector<std::uint32_t> local(n_, UINT32_MAX);
  for (std::uint32_t i = 0; i < vertices.size(); ++i) local[vertices[i]] = i;
  std::vector<Edge> es;
  for (std::uint32_t i = 0; i < vertices.size(); ++i)
    for (auto w : neighbors(vertices[i]))
      if (local[w] != UINT32_MAX && local[w] > i) es.push_back({i, local[w]});
  return Graph(vertices.size(), std::move(es));
}

bool is_closed_walk(const Graph& g, std::span<const std::uint32_t> walk) {
  if (walk.size() < 2) return false;
  for (std::size_t i = 0; i < walk.size(); ++i)
    if (!g.adjacent(walk[i], walk[(i + 1) % walk.size()])) return false;
  return true;
}

namespace {

struct Bfs {
  std::vector<std::uint32_t> parent;
  std::vector<std::uint32_t> depth;
  std::vector<std::uint32_t> order;
};

Bfs bfs_forest(const Graph& g) {
  const auto n = static_cast<std::uint32_t>(g.num_vertices());
  Bfs b;
  b.parent.assign(n, UINT32_MAX);
  b.depth.assign(n, UINT32_MAX);
  b.order.reserve(n);
  for (std::uint32_t s = 0; s < n; ++s) {
    if (b.depth[s] != UINT32_MAX) continue;
    b.depth[s] = 0;
    b.parent[s] = s;
    std::size_t head = b.order.size();
    b.order.push_back(s);
    while (head < b.order.size()) {
      auto v = b.order[head++];
      for (auto w : g.neighbors(v)) {
        if (b.depth[w] != UINT32_MAX) continue;
        b.depth[w] = b.depth[v] + 1;
        b.parent[w] = v;
        b.order.push_back(w);
      }
    }
  }
  return b;
}

// Cycle u -> ... -> lca -> ... -> v closed by the edge v-u; u, v on one layer.
OddCycleWitness cycle_through(const Bfs& b, std::uint32_t u, std::uint32_t v) {
  std::vector<std::uint32_t> left{u}, right{v};
  while (left.back() != right.back()) {
    left.push_back(b.parent[left.back()]);
    right.push_back(b.parent[right.back()]);
  }
  right.pop_back();
  left.insert(left.end(), right.rbegin(), right.rend());
  return left;
}

}  // namespace

BipartiteResult is_bipartite(const Graph& g) {
  BipartiteResult r;
  auto b = bfs_forest(g);
  for (auto e : g.edges()) {
    if (b.depth[e.u] == b.depth[e.v]) {
      r.bipartite = false;
      r.witness = cycle_through(b, e.u, e.v);
      return r;
    }
  }
  r.side.resize(g.num_vertices());
  for (std::size_t v = 0; v < g.num_vertices(); ++v) r.side[v] = static_cast<std::uint8_t>(b.depth[v] & 1U);
  return r;
}

std::vector<OddCycleWitness> bfs_odd_cycles(const Graph& g, std::size_t limit) {
  std::vector<OddCycleWitness> out;
  if (limit == 0) return out;
  auto b = bfs_forest(g);
  for (auto e : g.edges()) {
    if (b.depth[e.u] != b.depth[e.v]) continue;
    out.push_back(cycle_through(b, e.u, e.v));
    if (out.size() >= limit) break;
  }
  return out;
}

std::vector<std::uint32_t> connected_components(const Graph& g) {
  UnionFind uf(g.num_vertices());
  for (auto e : g.edges()) uf.unite(e.u, e.v);
  return uf.component_ids();
}

std::optional<std::array<std::uint32_t, 3>> find_triangle(const Graph& g) {
  for (auto e : g.edges()) {
    auto a = g.neighbors(e.u), b = g.neighbors(e.v);
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
      if (a[i] < b[j]) {
        ++i;
      } else if (b[j] < a[i]) {
        ++j;
      } else {
        return std::array<std::uint32_t, 3>{e.u, e.v, a[i]};
      }
    }
  }
  return std::nullopt;
}

}  // namespace borsuk
