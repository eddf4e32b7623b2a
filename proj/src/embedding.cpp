#include "borsuk/embedding.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <random>
#include <set>

#include <boost/multiprecision/cpp_int.hpp>

#include "borsuk/grid.hpp"

namespace borsuk::embed {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double norm(std::span<const double> x) {
  double s = 0;
  for (double v : x) s += v * v;
  return std::sqrt(s);
}

double dist(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t k = 0; k < a.size(); ++k) s += (a[k] - b[k]) * (a[k] - b[k]);
  return std::sqrt(s);
}

Vec normalized(Vec v) {
  double n = norm(v);
  for (double& x : v) x /= n;
  return v;
}

Vec gaussian_direction(int d, Stream& rng) {
  std::normal_distribution<double> g;
  for (;;) {
    Vec v(static_cast<std::size_t>(d));
    for (double& x : v) x = g(rng);
    if (norm(v) > 1e-12) return normalized(std::move(v));
  }
}

Vec negated(std::span<const double> u) {
  Vec v(u.begin(), u.end());
  for (double& x : v) x = -x;
  return v;
}

// Distance from the closed cube [lo, lo + s]^d to the origin, and its farthest corner.
std::pair<double, double> cube_norm_range(const Lattice& m, double s) {
  double nearest = 0, farthest = 0;
  for (auto c : m) {
    double lo = static_cast<double>(c) * s, hi = lo + s;
    double near = (lo <= 0 && hi >= 0) ? 0.0 : std::min(std::abs(lo), std::abs(hi));
    double far = std::max(std::abs(lo), std::abs(hi));
    nearest += near * near;
    farthest += far * far;
  }
  return {std::sqrt(nearest), std::sqrt(farthest)};
}

int truncated_top(int d, double s0, int K, int max_level, double roi, std::vector<double>& side,
                  std::vector<std::string>* warnings) {
  side.assign(1, s0);
  for (int i = 1; i <= max_level; ++i) side.push_back(side.back() * std::pow(static_cast<double>(K), i));
  int top = max_level;
  while (top > 0 && side[static_cast<std::size_t>(top)] * std::sqrt(static_cast<double>(d)) > roi) --top;
  if (top < max_level && warnings)
    warnings->push_back("level count truncated from " + std::to_string(max_level) + " to " + std::to_string(top) +
                        ": larger cubes do not fit in the region of interest");
  side.resize(static_cast<std::size_t>(top) + 1);
  return top;
}

}  // namespace

// ---------------------------------------------------------------- cubes

std::vector<Vec> CubeHierarchy::bad_anchors(int level, bool relevant_only) const {
  std::vector<Vec> out;
  const double s = side[static_cast<std::size_t>(level)];
  for (const auto& [m, st] : cubes[static_cast<std::size_t>(level)]) {
    if (!st.bad || (relevant_only && !st.relevant)) continue;
    Vec p(m.size());
    for (std::size_t k = 0; k < m.size(); ++k) p[k] = static_cast<double>(m[k]) * s;
    out.push_back(std::move(p));
  }
  return out;
}

std::size_t CubeHierarchy::count_bad(int level, bool relevant_only) const {
  std::size_t c = 0;
  for (const auto& [m, st] : cubes[static_cast<std::size_t>(level)]) c += st.bad && (!relevant_only || st.relevant);
  return c;
}

CubeHierarchy classify_cubes(std::span<const double> projected, int d, double s0, int K, int max_level,
                             const CubeOptions& opt) {
  if (d < 1 || !(s0 > 0) || K < 2 || max_level < 0 || !(opt.roi_radius > 0))
    throw std::invalid_argument("classify_cubes: need d >= 1, s0 > 0, K >= 2, max_level >= 0");
  CubeHierarchy h;
  h.d = d;
  h.s0 = s0;
  h.K = K;
  h.top = truncated_top(d, s0, K, max_level, opt.roi_radius, h.side, &h.warnings);
  h.cubes.resize(static_cast<std::size_t>(h.top) + 1);
  const bool banded = !opt.shell_margin.empty();
  auto margin = [&](int level) {
    if (!banded) return kInf;
    return opt.shell_margin[std::min<std::size_t>(static_cast<std::size_t>(level), opt.shell_margin.size() - 1)];
  };
  auto fits = [&](const Lattice& m, double s) { return cube_norm_range(m, s).second <= opt.roi_radius; };
  auto relevant = [&](const Lattice& m, int level) {
    auto [lo, hi] = cube_norm_range(m, h.side[static_cast<std::size_t>(level)]);
    double gap = std::max({0.0, lo - 1.0, 1.0 - hi});
    return gap <= margin(level);
  };

  // Seed each level with the cubes of the region (or band), then add the
  // children of every kept parent so parents can be classified.
  for (int level = h.top; level >= 0; --level) {
    const double s = h.side[static_cast<std::size_t>(level)];
    double extent = opt.roi_radius;
    if (banded) extent = std::min(extent, 1.0 + margin(level) + s * std::sqrt(static_cast<double>(d)));
    const auto lo = static_cast<std::int64_t>(std::floor(-extent / s)) - 1;
    const auto hi = static_cast<std::int64_t>(std::ceil(extent / s));
    Lattice m(static_cast<std::size_t>(d), lo);
    auto& map = h.cubes[static_cast<std::size_t>(level)];
    for (;;) {
      if (fits(m, s) && relevant(m, level)) map.emplace(m, CubeStatus{});
      int k = d - 1;
      while (k >= 0 && m[k] == hi) m[k--] = lo;
      if (k < 0) break;
      ++m[k];
    }
    if (level < h.top) {
      const auto per = static_cast<std::int64_t>(std::llround(std::pow(K, level + 1)));
      for (const auto& [pm, st] : h.cubes[static_cast<std::size_t>(level) + 1]) {
        Lattice off(static_cast<std::size_t>(d), 0);
        for (;;) {
          Lattice c(static_cast<std::size_t>(d));
          for (int k = 0; k < d; ++k) c[k] = pm[k] * per + off[k];
          map.emplace(c, CubeStatus{});
          int k = d - 1;
          while (k >= 0 && off[k] == per - 1) off[k--] = 0;
          if (k < 0) break;
          ++off[k];
        }
      }
    }
    for (auto& [cm, st] : map) st.relevant = relevant(cm, level);
  }

  std::set<Lattice> occupied;
  const std::size_t n = projected.size() / static_cast<std::size_t>(d);
  for (std::size_t i = 0; i < n; ++i) {
    Lattice m(static_cast<std::size_t>(d));
    bool ok = true;
    for (int k = 0; k < d; ++k) {
      double v = projected[i * static_cast<std::size_t>(d) + k] / s0;
      if (!(std::abs(v) < 4e18)) ok = false;
      m[k] = ok ? static_cast<std::int64_t>(std::floor(v)) : 0;
    }
    if (ok) occupied.insert(std::move(m));
  }
  for (auto& [m, st] : h.cubes[0]) st.bad = !occupied.count(m);
  for (int level = 1; level <= h.top; ++level) {
    const auto per = static_cast<std::int64_t>(std::llround(std::pow(K, level)));
    const auto& below = h.cubes[static_cast<std::size_t>(level) - 1];
    for (auto& [pm, st] : h.cubes[static_cast<std::size_t>(level)]) {
      int bad = 0;
      Lattice off(static_cast<std::size_t>(d), 0);
      for (;;) {
        Lattice c(static_cast<std::size_t>(d));
        for (int k = 0; k < d; ++k) c[k] = pm[k] * per + off[k];
        auto it = below.find(c);
        if (it == below.end() || it->second.bad) ++bad;
        if (bad >= 2) break;
        int k = d - 1;
        while (k >= 0 && off[k] == per - 1) off[k--] = 0;
        if (k < 0) break;
        ++off[k];
      }
      st.bad = bad >= 2;
    }
  }
  return h;
}

// ---------------------------------------------------------------- partition

int orthant_of(std::span<const double> x) {
  int o = 0;
  for (std::size_t k = 0; k < x.size(); ++k)
    if (x[k] < 0) o |= 1 << k;
  return o;
}

std::vector<std::vector<Vec>> orthant_partition(const std::vector<Vec>& V, double r, const std::vector<Vec>& U,
                                                int k) {
  if (k < 1 || !(r > 0)) throw std::invalid_argument("orthant_partition: need k >= 1 and r > 0");
  if (V.empty()) return {};
  const int d = static_cast<int>(V.front().size());
  if (d > 16) throw std::invalid_argument("orthant_partition: dimension too large");
  const std::size_t orthants = std::size_t{1} << d;
  for (const auto& u : U) {
    int c = 0;
    for (const auto& v : V) c += dist(u, v) < r;
    if (c > k)
      throw PreconditionError("orthant_partition: " + std::to_string(c) + " points in one r-ball exceed k = " +
                                  std::to_string(k),
                              u);
  }
  std::vector<std::size_t> W, rest;
  for (std::size_t i = 0; i < V.size(); ++i) {
    bool near = std::any_of(U.begin(), U.end(), [&](const Vec& u) { return dist(u, V[i]) < r / 2; });
    (near ? W : rest).push_back(i);
  }
  std::vector<std::vector<std::size_t>> groups;
  for (int round = 1; round < k && !W.empty(); ++round) {
    std::vector<std::size_t> chosen, left;
    for (auto i : W) {
      bool sep = std::all_of(chosen.begin(), chosen.end(), [&](std::size_t j) { return dist(V[i], V[j]) >= r / 2; });
      (sep ? chosen : left).push_back(i);
    }
    groups.push_back(std::move(chosen));
    W = std::move(left);
  }
  // Whatever is left of W is r/2-separated by the counting argument; the far
  // points never enter an r/4-ball around U.
  groups.resize(static_cast<std::size_t>(k));
  auto& last = groups.back();
  last.insert(last.end(), W.begin(), W.end());
  last.insert(last.end(), rest.begin(), rest.end());

  std::vector<std::vector<Vec>> slots(static_cast<std::size_t>(k) * orthants);
  for (std::size_t g = 0; g < groups.size(); ++g) {
    std::sort(groups[g].begin(), groups[g].end());
    for (auto i : groups[g]) slots[g * orthants + static_cast<std::size_t>(orthant_of(V[i]))].push_back(V[i]);
  }
  for (const auto& u : U)
    for (const auto& slot : slots) {
      int c = 0;
      for (const auto& v : slot) c += dist(u, v) < r / 4;
      if (c > 1) throw std::logic_error("orthant_partition: slot has two points in an r/4-ball");
    }
  return slots;
}

// ---------------------------------------------------------------- bump sums

BumpSum::BumpSum(int d, Vec base) : d_(d), base_(std::move(base)) {
  if (d < 1) throw std::invalid_argument("BumpSum: need d >= 1");
  if (!base_.empty() && static_cast<int>(base_.size()) != d) throw std::invalid_argument("BumpSum: base dimension");
}

double BumpSum::eval(std::span<const double> u, std::size_t layers) const {
  double f = 0;
  for (std::size_t k = 0; k < base_.size(); ++k) f += base_[k] * u[k];
  double up[16], um[16];
  for (std::size_t l = 0; l < layers; ++l) {
    const auto& L = layers_[l];
    const double mf = -f;
    // phi(u) and phi(-u) = (1 + f(-u)) (-u), written so that the roles swap
    // exactly under u -> -u.
    for (int k = 0; k < d_; ++k) {
      up[k] = (1.0 + f) * u[k];
      um[k] = (1.0 + mf) * (-u[k]);
    }
    double term = 0;
    for (std::size_t i = 0; i < L.points.size(); ++i) {
      const auto& p = L.points[i];
      double dp = 0, dm = 0;
      for (int k = 0; k < d_; ++k) {
        dp += (up[k] - p[k]) * (up[k] - p[k]);
        dm += (um[k] - p[k]) * (um[k] - p[k]);
      }
      const double m1 = std::max(0.0, L.r - std::sqrt(dp));
      const double m2 = std::max(0.0, L.r - std::sqrt(dm));
      term += L.amplitude[i] * (m1 - m2);
    }
    f = f + term;
  }
  return f;
}

std::size_t BumpSum::active_terms(std::span<const double> u, std::size_t layer) const {
  const double f = eval(u, layer);
  const auto& L = layers_[layer];
  Vec up(u.size()), um(u.size());
  for (std::size_t k = 0; k < u.size(); ++k) {
    up[k] = (1.0 + f) * u[k];
    um[k] = (1.0 - f) * (-u[k]);
  }
  std::size_t c = 0;
  for (const auto& p : L.points) c += dist(up, p) < L.r || dist(um, p) < L.r;
  return c;
}

Vec BumpSum::phi(std::span<const double> u, std::size_t layers) const {
  const double f = eval(u, layers);
  Vec out(u.begin(), u.end());
  for (double& x : out) x *= 1.0 + f;
  return out;
}

void BumpSum::push_layer(BumpLayer layer) {
  if (layer.points.size() != layer.amplitude.size()) throw std::invalid_argument("BumpSum: layer size mismatch");
  if (!(layer.r > 0)) throw std::invalid_argument("BumpSum: layer radius must be positive");
  for (const auto& p : layer.points)
    if (static_cast<int>(p.size()) != d_) throw std::invalid_argument("BumpSum: layer point dimension");
  layers_.push_back(std::move(layer));
}

nlohmann::json BumpSum::to_json() const {
  nlohmann::json j;
  j["d"] = d_;
  j["base"] = base_;
  j["layers"] = nlohmann::json::array();
  for (const auto& L : layers_)
    j["layers"].push_back({{"a", L.a}, {"r", L.r}, {"points", L.points}, {"amplitude", L.amplitude}});
  return j;
}

BumpSum BumpSum::from_json(const nlohmann::json& j) {
  BumpSum f(j.at("d").get<int>(), j.at("base").get<Vec>());
  for (const auto& L : j.at("layers")) {
    BumpLayer layer;
    layer.a = L.at("a").get<double>();
    layer.r = L.at("r").get<double>();
    layer.points = L.at("points").get<std::vector<Vec>>();
    layer.amplitude = L.at("amplitude").get<std::vector<double>>();
    f.push_layer(std::move(layer));
  }
  return f;
}

// ---------------------------------------------------------------- probes

std::vector<Vec> probe_directions(int d, std::size_t count, Stream& rng, const std::vector<Vec>& targets) {
  std::vector<Vec> out;
  out.reserve(count + 18 * targets.size());
  for (std::size_t i = 0; i < count; ++i) out.push_back(gaussian_direction(d, rng));
  for (const auto& p : targets) {
    if (norm(p) == 0) continue;
    Vec v = normalized(p);
    for (Vec w : {v, negated(v)}) {
      out.push_back(w);
      for (double scale : {1e-2, 1e-3, 1e-4, 1e-5}) {
        for (int rep = 0; rep < 2; ++rep) {
          Vec j = gaussian_direction(d, rng);
          Vec x = w;
          for (int k = 0; k < d; ++k) x[k] += scale * j[k];
          out.push_back(normalized(std::move(x)));
        }
      }
    }
  }
  return out;
}

LipschitzSample sampled_lipschitz(const BumpSum& f, std::size_t pairs, Stream rng, double close_scale,
                                  const std::vector<Vec>& targets) {
  const int d = f.dim();
  LipschitzSample out;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t i = 0; i < pairs; ++i) {
    Vec u, v;
    const std::size_t kind = i % 4;
    if (kind == 0 || (kind == 3 && targets.empty())) {
      u = gaussian_direction(d, rng);
      v = gaussian_direction(d, rng);
    } else {
      if (kind == 3) {
        const auto& p = targets[static_cast<std::size_t>(rng() % targets.size())];
        u = normalized(p);
        if (rng() & 1) u = negated(u);
        Vec j = gaussian_direction(d, rng);
        double s = close_scale * unit(rng);
        for (int k = 0; k < d; ++k) u[k] += s * j[k];
        u = normalized(std::move(u));
      } else {
        u = gaussian_direction(d, rng);
      }
      // Separations spread over several decades below close_scale.
      double s = close_scale * std::pow(10.0, -3.0 * unit(rng));
      Vec j = gaussian_direction(d, rng);
      v = u;
      for (int k = 0; k < d; ++k) v[k] += s * j[k];
      v = normalized(std::move(v));
    }
    double sep = dist(u, v);
    if (sep < 1e-12) continue;
    out.ratio = std::max(out.ratio, std::abs(f(u) - f(v)) / sep);
    ++out.pairs;
  }
  return out;
}

// ---------------------------------------------------------------- perturbation

PerturbResult perturb_once(const BumpSum& f, const std::vector<Vec>& V, double a, double r,
                           const ProbeConfig& probes) {
  const int d = f.dim();
  if (!(a > 0 && a < 0.01)) throw PreconditionError("perturb_once: need 0 < a < 0.01", {});
  if (!(r > 0 && r < 0.01 / std::sqrt(static_cast<double>(d))))
    throw PreconditionError("perturb_once: need 0 < r < 0.01/sqrt(d)", {});
  std::vector<Vec> pts;
  for (const auto& p : V) {
    if (static_cast<int>(p.size()) != d) throw std::invalid_argument("perturb_once: point dimension");
    if (norm(p) > 0) pts.push_back(p);
  }
  if (!pts.empty()) {
    for (int k = 0; k < d; ++k) {
      bool pos = false, neg = false;
      for (const auto& p : pts) {
        pos = pos || p[k] > 0;
        neg = neg || p[k] < 0;
      }
      if (pos && neg) throw PreconditionError("perturb_once: V is not inside one orthant", pts.front());
    }
  }
  PerturbResult res{f, {}};
  auto& rep = res.report;
  if (pts.empty()) {
    rep.change_ok = rep.clearance_ok = rep.lipschitz_ok = rep.odd_ok = rep.disjoint_ok = true;
    rep.min_clearance = kInf;
    return res;
  }

  Stream rng = Stream::derive(probes.seed, {0xBE});
  auto dirs = probe_directions(d, probes.directions, rng, pts);
  for (const auto& u : dirs) {
    double fu = f(u);
    if (!(std::abs(fu) < 0.1)) throw PreconditionError("perturb_once: |f| >= 0.1", u);
    if (std::abs(fu + f(negated(u))) > 1e-12) throw PreconditionError("perturb_once: f is not odd", u);
    Vec ph = f.phi(u);
    int c = 0;
    for (const auto& p : pts) c += dist(ph, p) < r;
    if (c > 1) throw PreconditionError("perturb_once: two points of V in one r-ball", u);
  }
  auto lip_f = sampled_lipschitz(f, probes.lipschitz_pairs, Stream::derive(probes.seed, {0x11}), r, pts);
  if (lip_f.ratio > a * (1 + 1e-6))
    throw PreconditionError("perturb_once: f is not a-Lipschitz on the probes (ratio " +
                                std::to_string(lip_f.ratio) + ")",
                            {});

  BumpLayer layer;
  layer.a = a;
  layer.r = r;
  for (const auto& p : pts) {
    double np = norm(p);
    Vec v = p;
    for (double& x : v) x /= np;
    layer.points.push_back(p);
    layer.amplitude.push_back(np < 1 + f(v) ? a : -a);
  }
  res.g.push_layer(std::move(layer));
  const BumpSum& g = res.g;
  const std::size_t top = g.size() - 1;

  rep.min_clearance = kInf;
  for (const auto& u : dirs) {
    double fu = f(u), gu = g(u);
    rep.max_change = std::max(rep.max_change, std::abs(gu - fu));
    rep.max_odd = std::max(rep.max_odd, std::abs(gu + g(negated(u))));
    Vec ps = g.phi(u);
    for (const auto& p : pts) rep.min_clearance = std::min(rep.min_clearance, dist(ps, p));
    rep.max_active = std::max(rep.max_active, g.active_terms(u, top));
  }
  rep.lipschitz = sampled_lipschitz(g, probes.lipschitz_pairs, Stream::derive(probes.seed, {0x12}), r, pts).ratio;
  const double eps = std::numeric_limits<double>::epsilon();
  rep.change_ok = rep.max_change <= a * r * (1 + 1e-9) + 4 * eps * 0.1;
  rep.clearance_ok = rep.min_clearance >= a * r / 2;
  rep.lipschitz_ok = rep.lipschitz <= 9 * a * (1 + 1e-6);
  rep.odd_ok = rep.max_odd <= 1e-12;
  rep.disjoint_ok = rep.max_active <= 1;
  return res;
}

std::vector<ScheduleStep> schedule(double a, double r, double t, std::size_t count) {
  std::vector<ScheduleStep> s{{a, r / 4, 0.0, t}};
  for (std::size_t i = 0; i < count; ++i) {
    const auto& p = s.back();
    s.push_back({9 * p.a, (p.a / 2) * p.r, p.a * p.r, p.t + p.a * p.r});
  }
  return s;
}

bool schedule_closed_form_exact(double a, double r, std::size_t count) {
  using boost::multiprecision::cpp_rational;
  using boost::multiprecision::cpp_int;
  const cpp_rational A(a), R(r);
  cpp_rational ai = A, ri = R / 4;
  auto pw = [](cpp_rational b, std::size_t e) {
    cpp_rational x = 1;
    for (std::size_t i = 0; i < e; ++i) x *= b;
    return x;
  };
  for (std::size_t i = 0;; ++i) {
    const cpp_rational three = pw(cpp_rational(3), i * (i >= 1 ? i - 1 : 0));
    if (ai != pw(cpp_rational(9), i) * A) return false;
    if (ri != three * R * pw(A, i) / pw(cpp_rational(2), i + 2)) return false;
    if (i == count) return true;
    const cpp_rational delta = ai * ri;
    ri = ai / 2 * ri;
    ai = 9 * ai;
    // Delta_{i+1} = a_i r_i; its closed form carries 2^{-(i+2)}.
    const std::size_t j = i + 1;
    if (delta != pw(cpp_rational(3), j * (j - 1)) * R * pw(A, j) / pw(cpp_rational(2), j + 1)) return false;
  }
}

bool IterateReport::ok() const {
  bool layers_ok = std::all_of(layers.begin(), layers.end(), [](const PerturbReport& p) { return p.ok(); });
  return layers_ok && nested_ok && schedule_exact && change_ok && clearance_ok && lipschitz_ok;
}

IterateResult iterate_perturbation(const BumpSum& f, const std::vector<Vec>& V, int k, double a, double r,
                                   const ProbeConfig& probes) {
  const int d = f.dim();
  if (k < 1) throw std::invalid_argument("iterate_perturbation: need k >= 1");
  IterateResult res{f, {}};
  auto& rep = res.report;
  rep.slots = static_cast<std::size_t>(k) << d;
  rep.log_C = static_cast<double>(rep.slots * rep.slots) * std::log(3.0);
  if (V.empty()) {
    rep.schedule_exact = rep.change_ok = rep.clearance_ok = rep.lipschitz_ok = true;
    rep.min_clearance = kInf;
    return res;
  }
  Stream rng = Stream::derive(probes.seed, {0x17});
  auto dirs = probe_directions(d, probes.directions, rng, V);
  std::vector<Vec> U;
  U.reserve(dirs.size());
  double t = 0;
  for (const auto& u : dirs) {
    U.push_back(f.phi(u));
    t = std::max(t, std::abs(f(u)));
  }
  auto slots = orthant_partition(V, r, U, k);
  std::vector<std::vector<Vec>> parts;
  for (auto& s : slots)
    if (!s.empty()) parts.push_back(std::move(s));
  rep.parts = parts.size();
  rep.steps = schedule(a, r, t, parts.size());
  const double rmax = 0.01 / std::sqrt(static_cast<double>(d));
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto& s = rep.steps[i];
    if (!(s.a > 0 && s.a < 0.01) || !(s.r > 0 && s.r < rmax) || !(s.t < 0.1))
      throw InadmissibleSchedule("iterate_perturbation: step " + std::to_string(i) + " has a = " +
                                 std::to_string(s.a) + ", r = " + std::to_string(s.r) + ", t = " +
                                 std::to_string(s.t) + " (need a < 0.01, r < 0.01/sqrt(d), t < 0.1)");
  }
  rep.schedule_exact = schedule_closed_form_exact(a, r, parts.size());

  BumpSum g = f;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    ProbeConfig pc = probes;
    pc.seed = Stream::derive(probes.seed, {0x20, i})();
    auto step = perturb_once(g, parts[i], rep.steps[i].a, rep.steps[i].r, pc);
    for (const auto& u : dirs) {
      double moved = std::abs(step.g(u) - g(u));
      if (moved + rep.steps[i + 1].r > rep.steps[i].r * (1 + 1e-12)) rep.nested_ok = false;
    }
    rep.layers.push_back(step.report);
    g = std::move(step.g);
  }

  rep.min_clearance = kInf;
  for (const auto& u : dirs) {
    rep.max_change = std::max(rep.max_change, std::abs(g(u) - f(u)));
    Vec ps = g.phi(u);
    for (const auto& p : V) rep.min_clearance = std::min(rep.min_clearance, dist(ps, p));
  }
  rep.lipschitz = sampled_lipschitz(g, probes.lipschitz_pairs, Stream::derive(probes.seed, {0x13}), rep.steps.back().r,
                                    V)
                      .ratio;
  const auto& last = rep.steps.back();
  // |f - g| < C a r, in logs since C overflows quickly.
  rep.change_ok = rep.max_change == 0 || std::log(rep.max_change) < rep.log_C + std::log(a) + std::log(r);
  // Clearance: the schedule's r_l, which dominates a^C r.
  rep.clearance_ok = rep.min_clearance >= last.r * (1 - 1e-9);
  rep.lipschitz_ok = rep.lipschitz <= last.a * (1 + 1e-6);
  res.g = std::move(g);
  return res;
}

// ---------------------------------------------------------------- embedding

const char* to_string(EmbeddingStatus s) {
  switch (s) {
    case EmbeddingStatus::Success: return "success";
    case EmbeddingStatus::Rejected: return "rejected";
    case EmbeddingStatus::Inadmissible: return "inadmissible";
    case EmbeddingStatus::PreconditionFailed: return "precondition-failed";
    case EmbeddingStatus::VerificationFailed: return "verification-failed";
  }
  return "unknown";
}

nlohmann::json EmbeddingResult::to_json() const {
  nlohmann::json j;
  j["status"] = to_string(status);
  j["message"] = message;
  j["d"] = d;
  j["n"] = n;
  j["alpha"] = alpha;
  j["s0"] = s0;
  j["top_level"] = top;
  j["warnings"] = warnings;
  j["levels"] = nlohmann::json::array();
  for (const auto& L : levels) {
    nlohmann::json l{{"level", L.level},
                     {"side", L.side},
                     {"bad_relevant", L.bad_relevant},
                     {"a", L.a},
                     {"r", L.r},
                     {"min_anchor_distance", std::isfinite(L.min_anchor_distance) ? L.min_anchor_distance : -1.0},
                     {"required", L.required},
                     {"clearance_ok", L.clearance_ok}};
    if (L.iterate) {
      l["parts"] = L.iterate->parts;
      l["schedule_exact"] = L.iterate->schedule_exact;
      l["nested_ok"] = L.iterate->nested_ok;
      l["min_clearance"] = L.iterate->min_clearance;
    }
    j["levels"].push_back(l);
  }
  j["verification"] = {{"probes", verify.probes},
                       {"max_abs_h", verify.max_abs_h},
                       {"h_bound", verify.h_bound},
                       {"max_odd", verify.max_odd},
                       {"lipschitz", verify.lipschitz},
                       {"lipschitz_pairs", verify.lipschitz_pairs},
                       {"coverage_failures", verify.coverage_failures},
                       {"worst_coverage", verify.worst_coverage},
                       {"coverage_radius", verify.coverage_radius},
                       {"ok", verify.ok()}};
  j["h"] = h.to_json();
  return j;
}

EmbeddingResult build_embedding(const sphere::PointSet& points, const EmbeddingConfig& cfg) {
  const int d = points.dim();
  if (d < 2) throw std::invalid_argument("build_embedding: need d >= 2");
  if (!(cfg.epsilon > 0) || !(cfg.c > 0) || !(cfg.delta > 0) || cfg.K < 2)
    throw std::invalid_argument("build_embedding: epsilon, c, delta must be positive and K >= 2");
  EmbeddingResult out;
  out.d = d;
  out.n = cfg.n > 0 ? cfg.n : static_cast<double>(points.size());
  if (!(out.n >= 3)) throw std::invalid_argument("build_embedding: need n >= 3");
  out.alpha = cfg.c * std::pow(out.n, -1.0 / d);
  out.s0 = cfg.delta * out.alpha;
  out.h = BumpSum(d);
  const double sqd = std::sqrt(static_cast<double>(d));

  std::vector<double> Z;
  for (std::size_t i = 0; i < points.size(); ++i) {
    auto x = points[i];
    if (!(1.0 - x[static_cast<std::size_t>(d)] > sphere::kPoleTolerance)) continue;
    auto z = sphere::stereo_project(x);
    Z.insert(Z.end(), z.coords.begin(), z.coords.end());
  }

  const int max_level =
      cfg.max_level ? *cfg.max_level : std::max(0, static_cast<int>(std::ceil(2 * std::log(std::log(out.n)))));
  std::vector<double> side;
  out.top = truncated_top(d, out.s0, cfg.K, max_level, cfg.roi_radius, side, nullptr);
  const int top = out.top;
  auto reach = [&](int j) {
    return j == top ? 2 * sqd * side[static_cast<std::size_t>(j)]
                    : std::max(side[static_cast<std::size_t>(j) + 1] / 2, 2 * sqd * side[static_cast<std::size_t>(j)]);
  };
  auto above = [&](int j) {
    double s = 0;
    for (int m = j + 1; m <= top; ++m) s += side[static_cast<std::size_t>(m)];
    return s;
  };
  CubeOptions copt;
  copt.roi_radius = cfg.roi_radius;
  for (int j = 0; j <= top; ++j) copt.shell_margin.push_back(above(j) + reach(j) + 1e-9);
  auto H = classify_cubes(Z, d, out.s0, cfg.K, top, copt);
  out.warnings = H.warnings;

  // Bad anchors that can interact with phi_j given the current bound t on |h|.
  double t = 0;
  auto relevant_bad = [&](int j) {
    std::vector<Vec> v;
    for (auto& p : H.bad_anchors(j, false))
      if (std::abs(norm(p) - 1.0) < t + reach(j)) v.push_back(std::move(p));
    return v;
  };

  const std::size_t slots = std::size_t{1} << (2 * d);
  const double logC = cfg.C_override ? std::log(*cfg.C_override)
                                     : static_cast<double>(slots * slots) * std::log(3.0);
  std::vector<std::vector<Vec>> B(static_cast<std::size_t>(top) + 1);
  std::vector<std::size_t> layer_count(static_cast<std::size_t>(top) + 1, 0);
  out.levels.resize(static_cast<std::size_t>(top) + 1);
  B[static_cast<std::size_t>(top)] = relevant_bad(top);
  for (int j = 0; j <= top; ++j) {
    auto& L = out.levels[static_cast<std::size_t>(j)];
    L.level = j;
    L.side = side[static_cast<std::size_t>(j)];
    L.required = 2 * sqd * L.side;
  }
  out.levels[static_cast<std::size_t>(top)].bad_relevant = B[static_cast<std::size_t>(top)].size();
  if (!B[static_cast<std::size_t>(top)].empty()) {
    out.status = EmbeddingStatus::Rejected;
    out.message = "instance rejected: a bad cube survives at the top level " + std::to_string(top);
    return out;
  }

  ProbeConfig pc;
  pc.directions = std::max<std::size_t>(1000, cfg.probes / 4);
  pc.lipschitz_pairs = std::max<std::size_t>(2000, cfg.lipschitz_pairs / 10);
  for (int j = top - 1; j >= 0; --j) {
    auto& L = out.levels[static_cast<std::size_t>(j)];
    auto V = relevant_bad(j);
    L.bad_relevant = V.size();
    L.a = std::exp(std::log(cfg.epsilon) - (j + 1) * logC);
    L.r = side[static_cast<std::size_t>(j) + 1] / 2;
    if (!V.empty()) {
      pc.seed = Stream::derive(cfg.seed, {0xE1, static_cast<std::uint64_t>(j)})();
      try {
        if (!(L.a > 0)) throw InadmissibleSchedule("a underflows to zero at level " + std::to_string(j));
        auto it = iterate_perturbation(out.h, V, 1 << d, L.a, L.r, pc);
        double added = 0;
        for (std::size_t i = 1; i < it.report.steps.size(); ++i) added += it.report.steps[i].delta;
        t += added;
        out.h = std::move(it.g);
        L.iterate = std::move(it.report);
      } catch (const InadmissibleSchedule& e) {
        out.status = EmbeddingStatus::Inadmissible;
        out.message = std::string("level ") + std::to_string(j) + ": " + e.what();
        return out;
      } catch (const PreconditionError& e) {
        out.status = EmbeddingStatus::PreconditionFailed;
        out.message = std::string("level ") + std::to_string(j) + ": " + e.what();
        return out;
      }
    }
    if (t > above(j)) {
      out.status = EmbeddingStatus::VerificationFailed;
      out.message = "|h_j| bound exceeds the sum of larger cube sides at level " + std::to_string(j);
      return out;
    }
    B[static_cast<std::size_t>(j)] = std::move(V);
    layer_count[static_cast<std::size_t>(j)] = out.h.size();
  }

  // Verification on fresh probes plus directions toward every bad anchor.
  auto& vr = out.verify;
  Stream rng = Stream::derive(cfg.seed, {0xF0});
  std::vector<Vec> targets;
  for (const auto& b : B) targets.insert(targets.end(), b.begin(), b.end());
  for (const auto& L : out.h.layers()) targets.insert(targets.end(), L.points.begin(), L.points.end());
  auto dirs = probe_directions(d, cfg.probes, rng, targets);
  vr.probes = dirs.size();
  vr.h_bound = std::pow(out.n, -0.9 / d);
  vr.coverage_radius = cfg.epsilon * out.alpha;

  std::vector<double> band;
  for (std::size_t i = 0; i < Z.size() / static_cast<std::size_t>(d); ++i) {
    double nz = norm({Z.data() + i * static_cast<std::size_t>(d), static_cast<std::size_t>(d)});
    if (std::abs(nz - 1) < 0.5 + vr.coverage_radius) band.insert(band.end(), Z.begin() + i * d, Z.begin() + (i + 1) * d);
  }
  std::unique_ptr<UniformGrid> grid;
  if (!band.empty()) grid = std::make_unique<UniformGrid>(d, band, vr.coverage_radius, -1.6, 1.6, 4000000);

  vr.levels_ok = true;
  for (int j = 0; j <= top; ++j) {
    auto& L = out.levels[static_cast<std::size_t>(j)];
    L.min_anchor_distance = kInf;
  }
  for (const auto& u : dirs) {
    double hu = out.h(u);
    vr.max_abs_h = std::max(vr.max_abs_h, std::abs(hu));
    vr.max_odd = std::max(vr.max_odd, std::abs(hu + out.h(negated(u))));
    Vec ph = out.h.phi(u);
    double best = kInf;
    if (grid)
      grid->for_each_near(ph.data(), [&](std::uint32_t i) {
        best = std::min(best, dist(ph, {band.data() + static_cast<std::size_t>(i) * d, static_cast<std::size_t>(d)}));
      });
    if (!(best < vr.coverage_radius)) ++vr.coverage_failures;
    vr.worst_coverage = std::max(vr.worst_coverage, std::isfinite(best) ? best : vr.coverage_radius);
    for (int j = 0; j <= top; ++j) {
      auto& L = out.levels[static_cast<std::size_t>(j)];
      const auto& Bj = B[static_cast<std::size_t>(j)];
      if (Bj.empty()) continue;
      Vec pj = out.h.phi(u, layer_count[static_cast<std::size_t>(j)]);
      for (const auto& p : Bj) L.min_anchor_distance = std::min(L.min_anchor_distance, dist(pj, p));
    }
  }
  for (std::size_t i = 0; i < std::min<std::size_t>(cfg.odd_pairs, dirs.size()); ++i) {
    Vec u = gaussian_direction(d, rng);
    vr.max_odd = std::max(vr.max_odd, std::abs(out.h(u) + out.h(negated(u))));
  }
  for (auto& L : out.levels) {
    L.clearance_ok = L.min_anchor_distance >= L.required;
    vr.levels_ok = vr.levels_ok && L.clearance_ok;
  }
  auto lip = sampled_lipschitz(out.h, cfg.lipschitz_pairs, Stream::derive(cfg.seed, {0xF1}), out.s0, targets);
  vr.lipschitz = lip.ratio;
  vr.lipschitz_pairs = lip.pairs;
  vr.bound_ok = vr.max_abs_h < vr.h_bound;
  vr.odd_ok = vr.max_odd < 1e-12;
  vr.lipschitz_ok = vr.lipschitz <= cfg.epsilon * (1 + 1e-6);
  vr.coverage_ok = vr.coverage_failures == 0;
  out.status = vr.ok() ? EmbeddingStatus::Success : EmbeddingStatus::VerificationFailed;
  if (!vr.ok()) out.message = "probe verification failed";
  return out;
}

}  // namespace borsuk::embed
