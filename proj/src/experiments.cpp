#include "borsuk/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numbers>
#include <random>
#include <set>
#include <sstream>

#include "borsuk/borsuk_graph.hpp"
#include "borsuk/coloring.hpp"
#include "borsuk/parallel.hpp"
#include "borsuk/percolation.hpp"
#include "borsuk/sphere.hpp"

namespace borsuk::exp {

namespace {

template <typename E>
struct Names {
  E value;
  const char* name;
};

constexpr Names<ModelKind> kModels[] = {
    {ModelKind::Borsuk, "borsuk"}, {ModelKind::GeoMirror, "geo-mirror"}, {ModelKind::AB, "ab"}, {ModelKind::Bond, "bond"}};
constexpr Names<AlphaRule> kRules[] = {{AlphaRule::Fixed, "fixed"},
                                       {AlphaRule::Thermodynamic, "thermodynamic"},
                                       {AlphaRule::Logarithmic, "logarithmic"},
                                       {AlphaRule::Nu, "nu"}};
constexpr Names<Event> kEvents[] = {{Event::ChiExceeds, "chi>k"},
                                    {Event::Bipartite, "bipartite"},
                                    {Event::EdgeCount, "edge-count"},
                                    {Event::Certificate, "certificate"},
                                    {Event::Percolation, "percolation"}};

template <typename E, std::size_t N>
const char* name_of(const Names<E> (&table)[N], E v) {
  for (const auto& e : table)
    if (e.value == v) return e.name;
  return "unknown";
}

template <typename E, std::size_t N>
E parse(const Names<E> (&table)[N], const std::string& s, const char* what) {
  for (const auto& e : table)
    if (s == e.name) return e.value;
  throw ConfigError(std::string("unknown ") + what + " '" + s + "'");
}

std::string num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

bool is_borsuk_like(ModelKind m) { return m == ModelKind::Borsuk || m == ModelKind::GeoMirror; }

}  // namespace

const char* to_string(ModelKind m) { return name_of(kModels, m); }
const char* to_string(AlphaRule r) { return name_of(kRules, r); }
const char* to_string(Event e) { return name_of(kEvents, e); }

double alpha_for(AlphaRule rule, double p, int d, double n) {
  switch (rule) {
    case AlphaRule::Fixed: return p;
    case AlphaRule::Thermodynamic: return p * std::pow(n, -1.0 / d);
    case AlphaRule::Logarithmic: return p * std::pow(std::log(n) / n, 1.0 / d);
    case AlphaRule::Nu: return std::pow(p / (n * n), 1.0 / d);
  }
  return p;
}

// ---------------------------------------------------------------- config

void ExperimentConfig::validate() const {
  if (d < 1) throw ConfigError("d must be at least 1");
  if (sizes.empty()) throw ConfigError("sizes must be nonempty");
  if (params.empty()) throw ConfigError("params must be nonempty");
  if (trials < 1) throw ConfigError("trials must be at least 1");
  for (double s : sizes)
    if (!(s > 0)) throw ConfigError("sizes must be positive");
  for (double p : params)
    if (!(p > 0)) throw ConfigError("params must be positive");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  switch (model) {
    case ModelKind::Borsuk:
      if (event == Event::Percolation) throw ConfigError("event 'percolation' needs model ab or bond");
      if (event == Event::ChiExceeds && k < 1) throw ConfigError("k must be at least 1");
      if (event == Event::Certificate && !(certificate_beta_fraction > 0 && certificate_beta_fraction < 1))
        throw ConfigError("certificate_beta_fraction must lie in (0, 1)");
      for (double s : sizes)
        if (s != std::floor(s) || (alpha_rule == AlphaRule::Logarithmic && s < 2))
          throw ConfigError("sample sizes must be integers (at least 2 for the logarithmic rule)");
      break;
    case ModelKind::GeoMirror:
      if (event != Event::Bipartite && !(event == Event::ChiExceeds && k == 2))
        throw ConfigError("geo-mirror supports 'bipartite' and 'chi>k' with k = 2");
      break;
    case ModelKind::AB:
      if (event != Event::Percolation) throw ConfigError("model ab supports only 'percolation'");
      for (double s : sizes)
        if (!(s > 1)) throw ConfigError("box half-widths must exceed 1");
      break;
    case ModelKind::Bond:
      if (event != Event::Percolation) throw ConfigError("model bond supports only 'percolation'");
      for (double s : sizes)
        if (s != std::floor(s)) throw ConfigError("bond box sides must be integers");
      for (double p : params)
        if (p > 1) throw ConfigError("bond probabilities must lie in (0, 1]");
      if (!(epsilon > 0 && epsilon < 1)) throw ConfigError("epsilon must lie in (0, 1)");
      break;
  }
  if (is_borsuk_like(model))
    for (double s : sizes)
      for (double p : params) {
        double a = alpha_for(alpha_rule, p, d, s);
        if (!(a > 0 && a < std::numbers::pi))
          throw ConfigError("alpha = " + num(a) + " outside (0, pi) at n = " + num(s) + ", param = " + num(p));
      }
}

nlohmann::json ExperimentConfig::to_json() const {
  return {{"model", to_string(model)},
          {"d", d},
          {"sizes", sizes},
          {"params", params},
          {"alpha_rule", to_string(alpha_rule)},
          {"event", to_string(event)},
          {"k", k},
          {"trials", trials},
          {"seed", seed},
          {"poissonize", poissonize},
          {"node_budget", node_budget},
          {"certificate_beta_fraction", certificate_beta_fraction},
          {"epsilon", epsilon},
          {"threads", threads},
          {"output", output}};
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  static const std::set<std::string> known{"model", "d", "sizes", "params", "alpha_rule", "event", "k", "trials",
                                           "seed", "poissonize", "node_budget", "certificate_beta_fraction",
                                           "epsilon", "threads", "output"};
  for (const auto& [key, v] : j.items())
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
  ExperimentConfig c;
  try {
    if (j.contains("model")) c.model = parse(kModels, j["model"].get<std::string>(), "model");
    if (j.contains("alpha_rule")) c.alpha_rule = parse(kRules, j["alpha_rule"].get<std::string>(), "alpha rule");
    if (j.contains("event")) c.event = parse(kEvents, j["event"].get<std::string>(), "event");
    if (j.contains("d")) c.d = j["d"].get<int>();
    if (j.contains("sizes")) c.sizes = j["sizes"].get<std::vector<double>>();
    if (j.contains("params")) c.params = j["params"].get<std::vector<double>>();
    if (j.contains("k")) c.k = j["k"].get<std::uint32_t>();
    if (j.contains("trials")) c.trials = j["trials"].get<std::uint64_t>();
    if (j.contains("seed")) c.seed = j["seed"].get<std::uint64_t>();
    if (j.contains("poissonize")) c.poissonize = j["poissonize"].get<bool>();
    if (j.contains("node_budget")) c.node_budget = j["node_budget"].get<std::uint64_t>();
    if (j.contains("certificate_beta_fraction"))
      c.certificate_beta_fraction = j["certificate_beta_fraction"].get<double>();
    if (j.contains("epsilon")) c.epsilon = j["epsilon"].get<double>();
    if (j.contains("threads")) c.threads = j["threads"].get<unsigned>();
    if (j.contains("output")) c.output = j["output"].get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return c;
}

// ---------------------------------------------------------------- poissonization

std::uint64_t poissonize(double n, Stream& rng) {
  if (!(n >= 0)) throw std::invalid_argument("poissonize: n must be non-negative");
  if (n == 0) return 0;
  std::poisson_distribution<std::uint64_t> po(n);
  return po(rng);
}

std::uint64_t poissonize(double n, std::uint64_t seed) {
  Stream rng = Stream::derive(seed, {0x9015});
  return poissonize(n, rng);
}

std::pair<std::uint64_t, std::uint64_t> poisson_coupled(double n, double m, Stream& rng) {
  if (!(n >= 0 && n <= m)) throw std::invalid_argument("poisson_coupled: need 0 <= n <= m");
  const std::uint64_t big = poissonize(m, rng);
  if (big == 0 || n == m) return {n == m ? big : 0, big};
  std::binomial_distribution<std::uint64_t> thin(big, n / m);
  return {thin(rng), big};
}

// ---------------------------------------------------------------- trials

namespace {

// Point count and graph for one Borsuk trial; the count comes from a
// separate substream so fixed and Poisson samples share their points.
sphere::PointSet trial_points(const ExperimentConfig& cfg, double n, Stream& rng, bool poisson) {
  Stream count_rng = rng.split(0x9015);
  const auto N = poisson ? poissonize(n, count_rng) : static_cast<std::uint64_t>(n);
  return sphere::sample_uniform(cfg.d, N, rng);
}

int borsuk_trial(const ExperimentConfig& cfg, double n, double alpha, Stream& rng, bool poisson) {
  auto pts = trial_points(cfg, n, rng, poisson);
  if (cfg.model == ModelKind::GeoMirror) {
    auto g = build_geo_mirror(std::move(pts), alpha);
    bool connected = antipodal_connectivity(g).connected;
    return cfg.event == Event::Bipartite ? !connected : connected;
  }
  auto g = build_graph(std::move(pts), alpha);
  switch (cfg.event) {
    case Event::ChiExceeds: {
      auto r = coloring::chromatic_exceeds(g, cfg.k, cfg.node_budget, cfg.certificate_beta_fraction);
      if (r.decision == coloring::Decision::Undecided) return 2;
      return r.decision == coloring::Decision::Yes;
    }
    case Event::Bipartite: return is_bipartite(g.graph).bipartite;
    case Event::EdgeCount: return g.graph.num_edges() > 0;
    case Event::Certificate:
      return coloring::cap_cover_certificate(g, cfg.certificate_beta_fraction * alpha / 2).valid;
    case Event::Percolation: break;
  }
  throw ConfigError("unsupported event for the Borsuk model");
}

int trial_impl(const ExperimentConfig& cfg, std::size_t i, std::size_t j, std::uint64_t t, bool poisson) {
  const double size = cfg.sizes[i], p = cfg.params[j];
  Stream rng = Stream::derive(cfg.seed, {i, j, t});
  switch (cfg.model) {
    case ModelKind::Borsuk:
    case ModelKind::GeoMirror: return borsuk_trial(cfg, size, alpha_for(cfg.alpha_rule, p, cfg.d, size), rng, poisson);
    case ModelKind::AB: {
      auto s = perco::sample_ab(cfg.d, size, p, p, rng);
      return perco::crosses_box(s, perco::Model::AB);
    }
    case ModelKind::Bond: {
      auto r = perco::bond_percolation_box(cfg.d, static_cast<int>(size), p, cfg.epsilon, 1, rng());
      return r.hits == 1;
    }
  }
  return 2;
}

TrialBatch run_batch(const ExperimentConfig& cfg, bool poisson) {
  cfg.validate();
  const auto start = std::chrono::steady_clock::now();
  const std::size_t cells = cfg.sizes.size() * cfg.params.size();
  const std::size_t total = cells * cfg.trials;
  std::vector<std::uint8_t> outcome(total);
  parallel_for(total, cfg.threads, [&](std::size_t idx) {
    const std::size_t c = idx / cfg.trials;
    const std::uint64_t t = idx % cfg.trials;
    outcome[idx] = static_cast<std::uint8_t>(trial_impl(cfg, c / cfg.params.size(), c % cfg.params.size(), t, poisson));
  });
  TrialBatch b;
  b.config = cfg;
  b.config.poissonize = poisson;
  for (std::size_t c = 0; c < cells; ++c) {
    CellResult r;
    r.size = cfg.sizes[c / cfg.params.size()];
    r.param = cfg.params[c % cfg.params.size()];
    r.alpha = is_borsuk_like(cfg.model) ? alpha_for(cfg.alpha_rule, r.param, cfg.d, r.size) : 0.0;
    r.trials = cfg.trials;
    for (std::uint64_t t = 0; t < cfg.trials; ++t) {
      auto o = outcome[c * cfg.trials + t];
      r.hits += o == 1;
      r.censored += o == 2;
    }
    r.estimate = stats::wilson(r.hits, r.decided());
    b.cells.push_back(r);
  }
  b.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return b;
}

}  // namespace

int run_trial(const ExperimentConfig& cfg, std::size_t i, std::size_t j, std::uint64_t t) {
  return trial_impl(cfg, i, j, t, cfg.poissonize);
}

bool TrialBatch::all_censored() const {
  return !cells.empty() && std::all_of(cells.begin(), cells.end(), [](const CellResult& c) { return c.decided() == 0; });
}

TrialBatch estimate_event_probability(const ExperimentConfig& cfg) { return run_batch(cfg, cfg.poissonize); }

std::vector<TransferRow> poissonization_audit(const ExperimentConfig& cfg) {
  if (!is_borsuk_like(cfg.model)) throw ConfigError("poissonization audit needs a Borsuk-type model");
  auto fixed = run_batch(cfg, false);
  auto po = run_batch(cfg, true);
  std::vector<TransferRow> out;
  for (std::size_t c = 0; c < fixed.cells.size(); ++c) {
    const auto& f = fixed.cells[c];
    const auto& p = po.cells[c];
    out.push_back({f.size, f.param, f.estimate.p, p.estimate.p, p.estimate.p - f.estimate.p});
  }
  return out;
}

// ---------------------------------------------------------------- edge counts

nlohmann::json EdgeCountReport::to_json() const {
  nlohmann::json j{{"d", d}, {"nu", nu}, {"trials", trials}, {"rows", nlohmann::json::array()}};
  for (const auto& r : rows)
    j["rows"].push_back({{"n", r.n},
                         {"alpha", r.alpha},
                         {"target_mean", r.target_mean},
                         {"mean", r.mean},
                         {"variance", r.variance},
                         {"mean_se", r.mean_se},
                         {"p_zero", r.zero.p},
                         {"p_zero_lo", r.zero.lo},
                         {"p_zero_hi", r.zero.hi},
                         {"tv", r.tv},
                         {"falling", r.falling},
                         {"histogram", r.histogram}});
  return j;
}

EdgeCountReport edge_count_experiment(int d, double nu, const std::vector<double>& n_list, std::uint64_t trials,
                                      std::uint64_t seed, unsigned threads) {
  if (d < 1 || !(nu > 0) || trials < 1 || n_list.empty())
    throw std::invalid_argument("edge_count_experiment: need d >= 1, nu > 0, trials >= 1, nonempty n list");
  EdgeCountReport rep;
  rep.d = d;
  rep.nu = nu;
  rep.trials = trials;
  const double mu = sphere::connection_coefficient(d) / 2 * nu;
  for (std::size_t i = 0; i < n_list.size(); ++i) {
    const double n = n_list[i];
    const double alpha = alpha_for(AlphaRule::Nu, nu, d, n);
    if (!(alpha < std::numbers::pi)) throw std::invalid_argument("edge_count_experiment: alpha >= pi");
    std::vector<std::uint64_t> counts(trials);
    parallel_for(trials, threads, [&](std::size_t t) {
      Stream rng = Stream::derive(seed, {0xED, i, t});
      auto pts = sphere::sample_uniform(d, static_cast<std::size_t>(n), rng);
      counts[t] = count_borsuk_edges(pts, alpha);
    });
    EdgeCountRow row;
    row.n = n;
    row.alpha = alpha;
    row.target_mean = mu;
    std::vector<double> w(counts.begin(), counts.end());
    row.mean = stats::mean(w);
    row.variance = trials > 1 ? stats::variance(w) : 0.0;
    row.mean_se = std::sqrt(row.variance / static_cast<double>(trials));
    row.zero = stats::wilson(static_cast<std::uint64_t>(std::count(counts.begin(), counts.end(), 0)), trials);
    row.tv = stats::tv_to_poisson(counts, mu);
    for (int m = 1; m <= 3; ++m) row.falling.push_back(stats::falling_moment(counts, m));
    row.histogram.assign(*std::max_element(counts.begin(), counts.end()) + 1, 0);
    for (auto c : counts) ++row.histogram[c];
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

// ---------------------------------------------------------------- pair connection

nlohmann::json PnReport::to_json() const {
  nlohmann::json j{{"d", d}, {"pairs", pairs}, {"rows", nlohmann::json::array()}};
  for (const auto& r : rows)
    j["rows"].push_back({{"alpha", r.alpha},
                         {"p", r.freq.p},
                         {"ci_lo", r.freq.lo},
                         {"ci_hi", r.freq.hi},
                         {"cap_measure", r.exact},
                         {"asymptotic", r.asymptotic},
                         {"ratio", r.ratio},
                         {"z", r.z}});
  return j;
}

PnReport pn_experiment(int d, const std::vector<double>& alpha_list, std::uint64_t pairs, std::uint64_t seed,
                       unsigned threads) {
  if (d < 1 || pairs < 1) throw std::invalid_argument("pn_experiment: need d >= 1 and pairs >= 1");
  PnReport rep;
  rep.d = d;
  rep.pairs = pairs;
  const std::uint64_t chunk = 1 << 16;
  for (std::size_t i = 0; i < alpha_list.size(); ++i) {
    const double alpha = alpha_list[i];
    if (!(alpha > 0 && alpha <= std::numbers::pi)) throw std::invalid_argument("pn_experiment: alpha outside (0, pi]");
    const double threshold = -std::cos(alpha);
    const std::size_t chunks = (pairs + chunk - 1) / chunk;
    std::vector<std::uint64_t> hits(chunks);
    parallel_for(chunks, threads, [&](std::size_t c) {
      Stream rng = Stream::derive(seed, {0x9A, i, c});
      std::vector<double> u(static_cast<std::size_t>(d) + 1), v(u.size());
      const std::uint64_t m = std::min(chunk, pairs - c * chunk);
      std::uint64_t h = 0;
      for (std::uint64_t t = 0; t < m; ++t) {
        sphere::sample_uniform_into(d, rng, u);
        sphere::sample_uniform_into(d, rng, v);
        h += sphere::dot(u, v) < threshold;
      }
      hits[c] = h;
    });
    std::uint64_t total = 0;
    for (auto h : hits) total += h;
    PnRow row;
    row.alpha = alpha;
    row.freq = stats::wilson(total, pairs);
    row.exact = sphere::cap_measure(alpha, d);
    row.asymptotic = sphere::connection_coefficient(d) * std::pow(alpha, d);
    row.ratio = row.freq.p / row.asymptotic;
    const double sd = std::sqrt(row.exact * (1 - row.exact) / static_cast<double>(pairs));
    row.z = sd > 0 ? (row.freq.p - row.exact) / sd : 0.0;
    rep.rows.push_back(row);
  }
  return rep;
}

// ---------------------------------------------------------------- threshold sweep

nlohmann::json ThresholdSweepReport::to_json() const {
  nlohmann::json j = exp::to_json(batch);
  j["per_n"] = nlohmann::json::array();
  for (std::size_t i = 0; i < per_n.size(); ++i)
    j["per_n"].push_back({{"n", batch.config.sizes[i]},
                          {"crossing", per_n[i].x},
                          {"ci_lo", per_n[i].lo},
                          {"ci_hi", per_n[i].hi},
                          {"non_monotone", static_cast<bool>(non_monotone[i])}});
  j["pooled"] = {{"crossing", pooled}, {"ci_lo", pooled_lo}, {"ci_hi", pooled_hi}};
  j["drift"] = {{"slope_per_ln_n", drift}, {"se", drift_se}};
  j["mutually_overlapping"] = mutually_overlapping;
  if (agrees_with_reference) j["agrees_with_reference"] = *agrees_with_reference;
  return j;
}

ThresholdSweepReport threshold_sweep(const ThresholdSweepConfig& cfg) {
  if (cfg.c_list.size() < 4) throw ConfigError("threshold_sweep: need at least four c values");
  if (!std::is_sorted(cfg.c_list.begin(), cfg.c_list.end()))
    throw ConfigError("threshold_sweep: c values must be increasing");
  ExperimentConfig ec;
  ec.model = ModelKind::Borsuk;
  ec.d = cfg.d;
  ec.sizes = cfg.n_list;
  ec.params = cfg.c_list;
  ec.alpha_rule = AlphaRule::Thermodynamic;
  ec.event = Event::ChiExceeds;
  ec.k = cfg.k;
  ec.trials = cfg.trials;
  ec.seed = cfg.seed;
  ec.node_budget = cfg.node_budget;
  ec.threads = cfg.threads;
  ThresholdSweepReport rep;
  rep.batch = estimate_event_probability(ec);

  std::vector<double> logc;
  for (double c : cfg.c_list) logc.push_back(std::log(c));
  std::vector<double> xs, ws, lnn;
  for (std::size_t i = 0; i < cfg.n_list.size(); ++i) {
    std::vector<std::uint64_t> hits, decided;
    for (std::size_t j = 0; j < cfg.c_list.size(); ++j) {
      hits.push_back(rep.batch.cell(i, j).hits);
      decided.push_back(rep.batch.cell(i, j).decided());
    }
    auto ce = stats::crossing_with_ci(logc, hits, decided, Stream::derive(cfg.seed, {0xC0, i}), cfg.bootstrap);
    if (!ce)
      throw perco::NotBracketed("threshold_sweep: P(chi > " + std::to_string(cfg.k) + ") does not cross 1/2 at n = " +
                                num(cfg.n_list[i]));
    bool nm = stats::non_monotone(hits, decided);
    stats::CrossingEstimate c = *ce;
    c.x = std::exp(c.x);
    double lo = std::exp(c.lo), hi = std::exp(c.hi);
    if (nm) {
      lo = c.x - 2 * (c.x - lo);
      hi = c.x + 2 * (hi - c.x);
    }
    c.lo = lo;
    c.hi = hi;
    rep.per_n.push_back(c);
    rep.non_monotone.push_back(nm);
    const double se = std::max((c.hi - c.lo) / (2 * stats::kZ95), 1e-12);
    xs.push_back(c.x);
    ws.push_back(1 / (se * se));
    lnn.push_back(std::log(cfg.n_list[i]));
  }
  double W = 0, S = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    W += ws[i];
    S += ws[i] * xs[i];
  }
  rep.pooled = S / W;
  const double pooled_se = 1 / std::sqrt(W);
  rep.pooled_lo = rep.pooled - stats::kZ95 * pooled_se;
  rep.pooled_hi = rep.pooled + stats::kZ95 * pooled_se;
  double max_lo = -1e300, min_hi = 1e300;
  for (const auto& c : rep.per_n) {
    max_lo = std::max(max_lo, c.lo);
    min_hi = std::min(min_hi, c.hi);
  }
  rep.mutually_overlapping = max_lo <= min_hi;
  if (xs.size() >= 3) {
    auto f = stats::linear_fit(lnn, xs, ws);
    rep.drift = f.slope;
    rep.drift_se = f.slope_se;
  } else if (xs.size() == 2) {
    rep.drift = (xs[1] - xs[0]) / (lnn[1] - lnn[0]);
    rep.drift_se = std::sqrt(1 / ws[0] + 1 / ws[1]) / std::abs(lnn[1] - lnn[0]);
  }
  if (cfg.reference) {
    double ref_se = 0;
    if (cfg.reference_lo && cfg.reference_hi) ref_se = (*cfg.reference_hi - *cfg.reference_lo) / (2 * stats::kZ95);
    rep.agrees_with_reference =
        std::abs(rep.pooled - *cfg.reference) <= stats::kZ95 * std::sqrt(pooled_se * pooled_se + ref_se * ref_se);
  }
  return rep;
}

// ---------------------------------------------------------------- reports

std::string to_csv(const TrialBatch& b) {
  std::ostringstream os;
  os << "schema_version,model,event,d,k,size,param,alpha,trials,hits,censored,decided,estimate,ci_lo,ci_hi\n";
  for (const auto& c : b.cells)
    os << kSchemaVersion << ',' << to_string(b.config.model) << ',' << to_string(b.config.event) << ','
       << b.config.d << ',' << b.config.k << ',' << num(c.size) << ',' << num(c.param) << ',' << num(c.alpha) << ','
       << c.trials << ',' << c.hits << ',' << c.censored << ',' << c.decided() << ',' << num(c.estimate.p) << ','
       << num(c.estimate.lo) << ',' << num(c.estimate.hi) << '\n';
  return os.str();
}

std::vector<CellResult> cells_from_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("schema_version,", 0) != 0)
    throw std::runtime_error("cells_from_csv: missing header");
  std::vector<CellResult> out;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    for (std::string field; std::getline(ss, field, ',');) f.push_back(field);
    if (f.size() != 15) throw std::runtime_error("cells_from_csv: expected 15 columns");
    if (std::stoi(f[0]) != kSchemaVersion) throw std::runtime_error("cells_from_csv: unsupported schema version");
    CellResult c;
    c.size = std::stod(f[5]);
    c.param = std::stod(f[6]);
    c.alpha = std::stod(f[7]);
    c.trials = std::stoull(f[8]);
    c.hits = std::stoull(f[9]);
    c.censored = std::stoull(f[10]);
    c.estimate = stats::wilson(c.hits, c.decided());
    out.push_back(c);
  }
  return out;
}

nlohmann::json to_json(const TrialBatch& b) {
  nlohmann::json j;
  j["schema_version"] = kSchemaVersion;
  j["config"] = b.config.to_json();
  j["cells"] = nlohmann::json::array();
  for (const auto& c : b.cells)
    j["cells"].push_back({{"size", c.size},
                          {"param", c.param},
                          {"alpha", c.alpha},
                          {"trials", c.trials},
                          {"hits", c.hits},
                          {"censored", c.censored},
                          {"estimate", c.estimate.p},
                          {"ci_lo", c.estimate.lo},
                          {"ci_hi", c.estimate.hi}});
  return j;
}

TrialBatch batch_from_json(const nlohmann::json& j) {
  if (j.at("schema_version").get<int>() != kSchemaVersion)
    throw std::runtime_error("batch_from_json: unsupported schema version");
  TrialBatch b;
  b.config = ExperimentConfig::from_json(j.at("config"));
  for (const auto& c : j.at("cells")) {
    CellResult r;
    r.size = c.at("size").get<double>();
    r.param = c.at("param").get<double>();
    r.alpha = c.at("alpha").get<double>();
    r.trials = c.at("trials").get<std::uint64_t>();
    r.hits = c.at("hits").get<std::uint64_t>();
    r.censored = c.at("censored").get<std::uint64_t>();
    r.estimate = stats::wilson(r.hits, r.decided());
    b.cells.push_back(r);
  }
  return b;
}

std::string to_svg(const TrialBatch& b, const std::string& title) {
  const double W = 640, H = 400, L = 60, R = 20, T = 30, B = 50;
  const auto& params = b.config.params;
  double xmin = *std::min_element(params.begin(), params.end());
  double xmax = *std::max_element(params.begin(), params.end());
  if (xmax == xmin) xmax = xmin + 1;
  auto X = [&](double x) { return L + (x - xmin) / (xmax - xmin) * (W - L - R); };
  auto Y = [&](double y) { return H - B - y * (H - T - B); };
  static const char* colors[] = {"#1b6ca8", "#c0392b", "#27ae60", "#8e44ad", "#d35400", "#2c3e50"};
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
     << ' ' << H << "\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << W / 2 << "\" y=\"20\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"14\">"
     << (title.empty() ? std::string(to_string(b.config.model)) + " / " + to_string(b.config.event) : title)
     << "</text>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << Y(0) << "\" x2=\"" << W - R << "\" y2=\"" << Y(0)
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << Y(0) << "\" x2=\"" << L << "\" y2=\"" << Y(1) << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << L << "\" y1=\"" << Y(0.5) << "\" x2=\"" << W - R << "\" y2=\"" << Y(0.5)
     << "\" stroke=\"#aaa\" stroke-dasharray=\"4 4\"/>\n";
  for (double y : {0.0, 0.5, 1.0})
    os << "<text x=\"" << L - 8 << "\" y=\"" << Y(y) + 4 << "\" text-anchor=\"end\" font-family=\"sans-serif\" "
       << "font-size=\"11\">" << y << "</text>\n";
  for (double x : {xmin, xmax})
    os << "<text x=\"" << X(x) << "\" y=\"" << H - B + 16 << "\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       << "font-size=\"11\">" << num(x).substr(0, 8) << "</text>\n";
  for (std::size_t i = 0; i < b.config.sizes.size(); ++i) {
    const char* col = colors[i % std::size(colors)];
    os << "<polyline fill=\"none\" stroke=\"" << col << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t j = 0; j < params.size(); ++j)
      os << X(params[j]) << ',' << Y(b.cell(i, j).estimate.p) << (j + 1 < params.size() ? " " : "");
    os << "\"/>\n";
    for (std::size_t j = 0; j < params.size(); ++j) {
      const auto& e = b.cell(i, j).estimate;
      os << "<line x1=\"" << X(params[j]) << "\" y1=\"" << Y(e.lo) << "\" x2=\"" << X(params[j]) << "\" y2=\""
         << Y(e.hi) << "\" stroke=\"" << col << "\"/>\n";
    }
    os << "<text x=\"" << W - R - 4 << "\" y=\"" << T + 14 * (i + 1) << "\" text-anchor=\"end\" fill=\"" << col
       << "\" font-family=\"sans-serif\" font-size=\"11\">size " << num(b.config.sizes[i]) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<std::filesystem::path> emit_report(const TrialBatch& batch, const std::filesystem::path& stem,
                                               ReportFormats formats) {
  std::vector<std::filesystem::path> written;
  auto write = [&](const std::string& ext, const std::string& body) {
    std::filesystem::path p = stem;
    p += ext;
    std::ofstream os(p, std::ios::binary);
    if (!os) throw std::runtime_error("emit_report: cannot write " + p.string());
    os << body;
    if (!os) throw std::runtime_error("emit_report: write failed for " + p.string());
    written.push_back(p);
  };
  if (formats.csv) write(".csv", to_csv(batch));
  if (formats.json) write(".json", to_json(batch).dump(2) + "\n");
  if (formats.svg) write(".svg", to_svg(batch));
  return written;
}

}  // namespace borsuk::exp
