#include "borsuk/coloring.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <stdexcept>
#include <tuple>

#include "borsuk/grid.hpp"
#include "borsuk/parallel.hpp"

namespace borsuk::coloring {

bool is_proper(const Graph& g, const Coloring& c) {
  if (c.color.size() != g.num_vertices()) return false;
  for (auto col : c.color)
    if (col >= c.k) return false;
  for (auto e : g.edges())
    if (c.color[e.u] == c.color[e.v]) return false;
  return true;
}

Coloring greedy_color(const Graph& g) {
  const auto n = static_cast<std::uint32_t>(g.num_vertices());
  Coloring out;
  out.color.assign(n, UINT32_MAX);
  std::vector<std::vector<std::uint32_t>> seen(n);
  // Ordered by (saturation desc, degree desc, index asc).
  using Key = std::tuple<std::int64_t, std::int64_t, std::uint32_t>;
  std::set<Key> queue;
  auto key = [&](std::uint32_t v) {
    return Key{-static_cast<std::int64_t>(seen[v].size()), -static_cast<std::int64_t>(g.degree(v)), v};
  };
  for (std::uint32_t v = 0; v < n; ++v) queue.insert(key(v));
  while (!queue.empty()) {
    auto v = std::get<2>(*queue.begin());
    queue.erase(queue.begin());
    std::uint32_t c = 0;
    for (auto s : seen[v]) {
      if (s != c) break;
      ++c;
    }
    out.color[v] = c;
    out.k = std::max(out.k, c + 1);
    for (auto w : g.neighbors(v)) {
      if (out.color[w] != UINT32_MAX) continue;
      auto it = std::lower_bound(seen[w].begin(), seen[w].end(), c);
      if (it != seen[w].end() && *it == c) continue;
      queue.erase(key(w));
      seen[w].insert(it, c);
      queue.insert(key(w));
    }
  }
  return out;
}

namespace {

struct BudgetExhausted {};

class Backtracker {
 public:
  Backtracker(const Graph& g, std::uint32_t k, std::uint64_t budget, std::uint64_t& nodes)
      : g_(g), k_(k), n_(static_cast<std::uint32_t>(g.num_vertices())), budget_(budget), nodes_(nodes),
        color_(n_, UINT32_MAX), count_(static_cast<std::size_t>(n_) * k, 0), sat_(n_, 0) {}

  bool run() { return solve(0, 0); }
  const std::vector<std::uint32_t>& colors() const { return color_; }

 private:
  bool solve(std::uint32_t done, std::uint32_t used) {
    if (done == n_) return true;
    std::uint32_t v = UINT32_MAX;
    for (std::uint32_t u = 0; u < n_; ++u) {
      if (color_[u] != UINT32_MAX) continue;
      if (v == UINT32_MAX || sat_[u] > sat_[v] || (sat_[u] == sat_[v] && g_.degree(u) > g_.degree(v))) v = u;
    }
    if (sat_[v] >= k_) return false;
    // A colour never used so far is interchangeable with any other unused
    // one, so only the first is tried.
    const std::uint32_t top = std::min(used + 1, k_);
    for (std::uint32_t c = 0; c < top; ++c) {
      if (count_[idx(v, c)] != 0) continue;
      if (++nodes_ > budget_) throw BudgetExhausted{};
      assign(v, c);
      if (solve(done + 1, std::max(used, c + 1))) return true;
      unassign(v, c);
    }
    return false;
  }

  std::size_t idx(std::uint32_t v, std::uint32_t c) const { return static_cast<std::size_t>(v) * k_ + c; }

  void assign(std::uint32_t v, std::uint32_t c) {
    color_[v] = c;
    for (auto w : g_.neighbors(v))
      if (count_[idx(w, c)]++ == 0) ++sat_[w];
  }

  void unassign(std::uint32_t v, std::uint32_t c) {
    color_[v] = UINT32_MAX;
    for (auto w : g_.neighbors(v))
      if (--count_[idx(w, c)] == 0) --sat_[w];
  }

  const Graph& g_;
  std::uint32_t k_;
  std::uint32_t n_;
  std::uint64_t budget_;
  std::uint64_t& nodes_;
  std::vector<std::uint32_t> color_;
  std::vector<std::uint32_t> count_;
  std::vector<std::uint32_t> sat_;
};

}  // namespace

KColorResult k_colorable(const Graph& g, std::uint32_t k, std::uint64_t node_budget) {
  if (k < 1) throw std::invalid_argument("k_colorable: k must be at least 1");
  KColorResult r;
  const auto n = static_cast<std::uint32_t>(g.num_vertices());
  auto greedy = greedy_color(g);
  if (greedy.k <= k) {
    greedy.k = k;
    r.decision = Decision::Yes;
    r.coloring = std::move(greedy);
    return r;
  }
  if (k == 1) {
    r.decision = Decision::No;
    return r;
  }
  if (k == 2) {
    auto b = is_bipartite(g);
    r.decision = b.bipartite ? Decision::Yes : Decision::No;
    if (b.bipartite) r.coloring = Coloring{std::vector<std::uint32_t>(b.side.begin(), b.side.end()), 2};
    return r;
  }
  auto comp = connected_components(g);
  std::uint32_t ncomp = 0;
  for (auto c : comp) ncomp = std::max(ncomp, c + 1);
  std::vector<std::vector<std::uint32_t>> members(ncomp);
  for (std::uint32_t v = 0; v < n; ++v) members[comp[v]].push_back(v);
  Coloring out{std::vector<std::uint32_t>(n, 0), k};
  try {
    for (const auto& vs : members) {
      if (vs.size() == 1) continue;
      Graph sub = g.induced(vs);
      Backtracker bt(sub, k, node_budget, r.nodes);
      if (!bt.run()) {
        r.decision = Decision::No;
        return r;
      }
      for (std::size_t i = 0; i < vs.size(); ++i) out.color[vs[i]] = bt.colors()[i];
    }
  } catch (const BudgetExhausted&) {
    r.decision = Decision::Undecided;
    return r;
  }
  r.decision = Decision::Yes;
  r.coloring = std::move(out);
  return r;
}

ChromaticResult chromatic_number(const Graph& g, std::optional<std::uint32_t> max_k, std::uint64_t node_budget) {
  ChromaticResult r;
  auto greedy = greedy_color(g);
  r.hi = std::max<std::uint32_t>(greedy.k, 1);
  r.lo = g.num_vertices() == 0 ? 0 : 1;
  if (g.num_edges() > 0) r.lo = 2;
  if (r.lo >= 2 && !is_bipartite(g).bipartite) r.lo = 3;
  if (g.num_vertices() == 0) {
    r.value = 0;
    r.hi = 0;
    r.coloring = Coloring{{}, 0};
    return r;
  }
  for (std::uint32_t k = r.lo; k < r.hi; ++k) {
    if (max_k && k > *max_k) return r;
    auto res = k_colorable(g, k, node_budget);
    if (res.decision == Decision::Undecided) return r;
    if (res.decision == Decision::Yes) {
      r.value = r.lo = r.hi = k;
      r.coloring = std::move(res.coloring);
      return r;
    }
    r.lo = k + 1;
  }
  r.value = r.lo = r.hi;
  r.coloring = std::move(greedy);
  return r;
}

sphere::PointSet cube_net(int d, double beta) {
  if (d < 1) throw std::invalid_argument("cube_net: need d >= 1");
  if (!(beta > 0 && beta < std::numbers::pi)) throw std::invalid_argument("cube_net: beta out of range");
  const double hmax = 4.0 / std::sqrt(static_cast<double>(d)) * std::sin(beta / 2);
  const auto m = static_cast<std::size_t>(std::ceil(2.0 / hmax));
  const double h = 2.0 / static_cast<double>(m);
  std::size_t per_face = 1;
  for (int k = 0; k < d; ++k) {
    if (per_face > (std::size_t{1} << 40) / m) throw std::length_error("cube_net: net too large");
    per_face *= m;
  }
  sphere::PointSet net(d);
  std::vector<double> x(static_cast<std::size_t>(d + 1));
  std::vector<std::size_t> idx(static_cast<std::size_t>(d));
  for (int axis = 0; axis <= d; ++axis) {
    for (double sign : {-1.0, 1.0}) {
      std::fill(idx.begin(), idx.end(), 0);
      for (std::size_t f = 0; f < per_face; ++f) {
        int t = 0;
        for (int k = 0; k <= d; ++k) {
          if (k == axis) {
            x[static_cast<std::size_t>(k)] = sign;
          } else {
            x[static_cast<std::size_t>(k)] = -1.0 + h * (static_cast<double>(idx[static_cast<std::size_t>(t)]) + 0.5);
            ++t;
          }
        }
        net.push_back(x);
        for (int k = d - 1; k >= 0; --k) {
          if (++idx[static_cast<std::size_t>(k)] < m) break;
          idx[static_cast<std::size_t>(k)] = 0;
        }
      }
    }
  }
  return net;
}

CoverCertificate cap_cover_certificate(const BorsukGraph& g, double beta, unsigned threads) {
  if (!(beta > 0 && beta < g.alpha / 2)) throw std::invalid_argument("cap_cover_certificate: need 0 < beta < alpha/2");
  CoverCertificate cert;
  cert.d = g.d;
  cert.alpha = g.alpha;
  cert.beta = beta;
  const auto& pts = g.points;
  if (pts.empty()) return cert;
  auto net = cube_net(g.d, beta);
  cert.net_size = net.size();
  cert.covered.assign(net.size(), 0);
  const double reach = g.alpha / 2 - beta;
  const double thr = std::cos(reach);
  const int dim = pts.stride();
  const bool use_grid = dim <= 6 && sphere::chord_of_angle(reach) < 0.7;
  std::optional<UniformGrid> grid;
  if (use_grid)
    grid.emplace(dim, pts.flat(), sphere::chord_of_angle(reach) * (1 + 1e-9), -1.0, 1.0,
                 std::max<std::size_t>(4096, 16 * pts.size()));
  parallel_for(net.size(), threads, [&](std::size_t i) {
    auto w = net[i];
    bool hit = false;
    if (grid) {
      grid->for_each_near(w.data(), [&](std::uint32_t j) { hit = hit || sphere::dot(w, pts[j]) > thr; });
    } else {
      for (std::size_t j = 0; j < pts.size() && !hit; ++j) hit = sphere::dot(w, pts[j]) > thr;
    }
    cert.covered[i] = hit;
  });
  for (std::size_t i = 0; i < net.size(); ++i) {
    if (cert.covered[i]) continue;
    ++cert.uncovered;
    if (cert.failures.size() >= 64) continue;
    double best = std::numbers::pi;
    for (std::size_t j = 0; j < pts.size(); ++j) best = std::min(best, sphere::geodesic_distance(net[i], pts[j]));
    cert.failures.push_back({static_cast<std::uint32_t>(i), best});
  }
  cert.valid = cert.uncovered == 0;
  return cert;
}

ExceedsResult chromatic_exceeds(const BorsukGraph& g, std::uint32_t k, std::uint64_t node_budget,
                                double certificate_beta_fraction) {
  if (k < 1) throw std::invalid_argument("chromatic_exceeds: k must be at least 1");
  if (greedy_color(g.graph).k <= k) return {Decision::No, "greedy"};
  if (k == 1) return {Decision::Yes, "edge"};
  if (k == 2) return {is_bipartite(g.graph).bipartite ? Decision::No : Decision::Yes, "bipartite"};
  if (k == static_cast<std::uint32_t>(g.d + 1) && certificate_beta_fraction > 0) {
    const double beta = certificate_beta_fraction * g.alpha / 2;
    const double h = 4.0 / std::sqrt(static_cast<double>(g.d)) * std::sin(beta / 2);
    const double faces = 2.0 * (g.d + 1) * std::pow(2.0 / h + 1, g.d);
    // Expected caps must at least be able to cover the sphere before the net is worth building.
    const double coverage = static_cast<double>(g.points.size()) * sphere::cap_measure(g.alpha / 2, g.d);
    if (faces < 4e6 && coverage > 1.0) {
      if (cap_cover_certificate(g, beta).valid) return {Decision::Yes, "certificate"};
    }
  }
  auto r = k_colorable(g.graph, k, node_budget);
  if (r.decision == Decision::Undecided) return {Decision::Undecided, "budget"};
  return {r.decision == Decision::Yes ? Decision::No : Decision::Yes, "exact"};
}

}  // namespace borsuk::coloring
