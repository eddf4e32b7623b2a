// Command-line front end: sampling, colouring, percolation sweeps, edge-count
// laws, the spherical embedding and invariant checks.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "borsuk/borsuk_graph.hpp"
#include "borsuk/coloring.hpp"
#include "borsuk/embedding.hpp"
#include "borsuk/experiments.hpp"
#include "borsuk/graph.hpp"
#include "borsuk/io.hpp"
#include "borsuk/percolation.hpp"
#include "borsuk/sphere.hpp"

using namespace borsuk;
using nlohmann::json;

namespace {

enum Exit { kOk = 0, kVerifyFailed = 1, kConfigError = 2, kNotBracketed = 3, kAllCensored = 4 };

struct Globals {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::uint64_t> trials;
  std::string out;
  std::optional<unsigned> threads;
};

json load_config(const std::string& path) {
  if (path.empty()) return json::object();
  std::ifstream in(path);
  if (!in) throw exp::ConfigError("cannot open config " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw exp::ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
}

void write_json(const Globals& g, const json& j, const std::string& suffix = ".json") {
  if (g.out.empty()) {
    std::cout << j.dump(2) << '\n';
    return;
  }
  std::string path = g.out + suffix;
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path);
  os << j.dump(2) << '\n';
  std::cerr << "wrote " << path << '\n';
}

unsigned threads_of(const Globals& g) { return g.threads.value_or(1); }

sphere::PointSet points_from(const std::string& in, int d, std::uint64_t n, std::uint64_t seed) {
  if (!in.empty()) return io::load_points(in);
  return sphere::sample_uniform(d, n, Stream::derive(seed, {0x9E})());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Random Borsuk graphs and continuum AB percolation"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON config file");
  app.add_option("--seed", g.seed, "master seed");
  app.add_option("--trials", g.trials, "trials per cell");
  app.add_option("--out", g.out, "output path stem (stdout when empty)");
  app.add_option("--threads", g.threads, "worker threads");
  std::function<int()> run;

  // generate
  auto* gen = app.add_subcommand("generate", "sample points on S^d and optionally the graph");
  int gen_d = 2;
  std::uint64_t gen_n = 1000;
  std::optional<double> gen_alpha;
  std::string gen_format = "bin";
  gen->add_option("--d", gen_d, "sphere dimension")->check(CLI::PositiveNumber);
  gen->add_option("-n,--n", gen_n, "number of points");
  gen->add_option("--alpha", gen_alpha, "also write the graph at this alpha");
  gen->add_option("--format", gen_format, "bin or jsonl")->check(CLI::IsMember({"bin", "jsonl"}));
  gen->callback([&] {
    run = [&] {
      const auto seed = g.seed.value_or(1);
      auto pts = sphere::sample_uniform(gen_d, gen_n, Stream::derive(seed, {0x9E})());
      if (g.out.empty()) {
        io::write_points_jsonl(std::cout, pts);
      } else {
        io::save_points(g.out + "." + gen_format, pts);
        std::cerr << "wrote " << g.out << "." << gen_format << '\n';
      }
      if (gen_alpha) {
        auto graph = build_graph(pts, *gen_alpha);
        std::ostringstream os;
        io::write_graph_json(os, graph, seed);
        write_json(g, json::parse(os.str()), ".graph.json");
      }
      return kOk;
    };
  });

  // color
  auto* col = app.add_subcommand("color", "chromatic number or chi > k decision");
  std::string col_in;
  int col_d = 2;
  std::uint64_t col_n = 200;
  double col_alpha = 0.5;
  std::optional<std::uint32_t> col_k, col_max_k;
  std::uint64_t col_budget = coloring::kDefaultNodeBudget;
  col->add_option("--in", col_in, "point file (.bin or .jsonl); sampled when absent");
  col->add_option("--d", col_d, "sphere dimension when sampling");
  col->add_option("-n,--n", col_n, "number of points when sampling");
  col->add_option("--alpha", col_alpha, "edge parameter")->required();
  col->add_option("-k,--k", col_k, "decide chi > k instead of computing chi");
  col->add_option("--max-k", col_max_k, "largest k tried for chi");
  col->add_option("--budget", col_budget, "solver node budget");
  col->callback([&] {
    run = [&] {
      auto graph = build_graph(points_from(col_in, col_d, col_n, g.seed.value_or(1)), col_alpha);
      json j{{"n", graph.points.size()}, {"d", graph.d}, {"alpha", col_alpha}, {"edges", graph.graph.num_edges()}};
      if (col_k) {
        auto r = coloring::chromatic_exceeds(graph, *col_k, col_budget);
        const char* names[] = {"yes", "no", "undecided"};
        j["k"] = *col_k;
        j["chi_exceeds_k"] = names[static_cast<int>(r.decision)];
        j["decided_by"] = r.decided_by;
      } else {
        auto r = coloring::chromatic_number(graph.graph, col_max_k, col_budget);
        if (r.value) j["chi"] = *r.value;
        j["lower"] = r.lo;
        j["upper"] = r.hi;
      }
      write_json(g, j);
      return kOk;
    };
  });

  // percolate
  auto* perc = app.add_subcommand("percolate", "critical intensity of AB (or Boolean) percolation");
  std::vector<double> perc_lambda;
  std::vector<double> perc_boxes{8, 12};
  int perc_d = 2;
  std::string perc_model = "ab", perc_obs = "crossing";
  std::optional<double> perc_reach_lambda;
  perc->add_option("--d", perc_d, "dimension");
  perc->add_option("--lambda", perc_lambda, "intensity grid per label (increasing)");
  perc->add_option("--boxes", perc_boxes, "box half-widths");
  perc->add_option("--model", perc_model, "ab or boolean")->check(CLI::IsMember({"ab", "boolean"}));
  perc->add_option("--observable", perc_obs, "crossing or shell")->check(CLI::IsMember({"crossing", "shell"}));
  perc->add_option("--reach", perc_reach_lambda, "only P(origin reaches the shell) at this intensity, per box");
  perc->callback([&] {
    run = [&] {
      json cfg = load_config(g.config);
      perco::SweepConfig sc;
      sc.d = cfg.value("d", perc_d);
      sc.lambda_grid = cfg.value("lambda_grid", perc_lambda);
      sc.box_sizes = cfg.value("box_sizes", perc_boxes);
      sc.trials = g.trials.value_or(cfg.value("trials", std::uint64_t{200}));
      sc.seed = g.seed.value_or(cfg.value("seed", std::uint64_t{1}));
      sc.threads = g.threads.value_or(cfg.value("threads", 1u));
      sc.observable = perc_obs == "shell" ? perco::Observable::OriginToShell : perco::Observable::BoxCrossing;
      auto model = perc_model == "boolean" ? perco::Model::Boolean : perco::Model::AB;
      if (perc_reach_lambda) {
        json j{{"lambda", *perc_reach_lambda}, {"rows", json::array()}};
        for (double R : sc.box_sizes) {
          auto p = perco::boundary_reach_prob(sc.d, *perc_reach_lambda, R, sc.trials, sc.seed, {sc.threads}, model);
          j["rows"].push_back({{"R", R}, {"p", p.p}, {"ci_lo", p.lo}, {"ci_hi", p.hi}, {"hits", p.hits}});
        }
        write_json(g, j);
        return kOk;
      }
      if (sc.lambda_grid.empty()) {
        const double center = model == perco::Model::AB ? 1.0 : 1.44;
        for (int i = -4; i <= 4; ++i) sc.lambda_grid.push_back(center * std::exp(0.08 * i));
      }
      auto est = perco::estimate_threshold(sc, model);
      json j{{"model", perc_model},
             {"d", sc.d},
             {"lambda_c", est.estimate},
             {"ci_lo", est.lo},
             {"ci_hi", est.hi},
             {"non_monotone", est.non_monotone},
             {"c2", perco::c2_constant(sc.d, est.estimate)},
             {"per_size", json::array()}};
      for (std::size_t i = 0; i < est.per_size.size(); ++i)
        j["per_size"].push_back({{"R", est.box_sizes[i]},
                                 {"crossing", est.per_size[i].x},
                                 {"ci_lo", est.per_size[i].lo},
                                 {"ci_hi", est.per_size[i].hi}});
      write_json(g, j);
      return kOk;
    };
  });

  // sweep
  auto* sw = app.add_subcommand("sweep", "Monte Carlo event probabilities over a grid (JSON config)");
  bool sw_svg = false, sw_fit = false;
  std::optional<double> sw_reference;
  sw->add_flag("--svg", sw_svg, "also write an SVG plot");
  sw->add_flag("--fit", sw_fit, "fit the 1/2-crossing in c per size (borsuk, chi>k, thermodynamic rule)");
  sw->add_option("--reference", sw_reference, "crossing to compare the pooled fit against");
  sw->callback([&] {
    run = [&] {
      auto cfg = exp::ExperimentConfig::from_json(load_config(g.config));
      if (g.seed) cfg.seed = *g.seed;
      if (g.trials) cfg.trials = *g.trials;
      if (g.threads) cfg.threads = *g.threads;
      if (!g.out.empty()) cfg.output = g.out;
      cfg.validate();
      if (sw_fit) {
        if (cfg.model != exp::ModelKind::Borsuk || cfg.event != exp::Event::ChiExceeds ||
            cfg.alpha_rule != exp::AlphaRule::Thermodynamic)
          throw exp::ConfigError("--fit needs model borsuk, event chi>k and the thermodynamic rule");
        exp::ThresholdSweepConfig tc;
        tc.d = cfg.d;
        tc.k = cfg.k;
        tc.n_list = cfg.sizes;
        tc.c_list = cfg.params;
        tc.trials = cfg.trials;
        tc.seed = cfg.seed;
        tc.threads = cfg.threads;
        tc.node_budget = cfg.node_budget;
        tc.reference = sw_reference;
        auto rep = exp::threshold_sweep(tc);
        exp::emit_report(rep.batch, cfg.output, {.csv = true, .json = false, .svg = sw_svg});
        Globals jg = g;
        jg.out = cfg.output;
        write_json(jg, rep.to_json());
        return rep.batch.all_censored() ? kAllCensored : kOk;
      }
      auto batch = exp::estimate_event_probability(cfg);
      for (const auto& p : exp::emit_report(batch, cfg.output, {.csv = true, .json = true, .svg = sw_svg}))
        std::cerr << "wrote " << p.string() << '\n';
      std::cerr << "elapsed " << batch.seconds << " s\n";
      return batch.all_censored() ? kAllCensored : kOk;
    };
  });

  // edges
  auto* ed = app.add_subcommand("edges", "edge-count law (nu rule) or pair connection frequency");
  int ed_d = 2;
  double ed_nu = 8.0;
  std::vector<double> ed_n{1000, 4000};
  std::vector<double> ed_alpha;
  std::uint64_t ed_pairs = 10'000'000;
  ed->add_option("--d", ed_d, "sphere dimension");
  ed->add_option("--nu", ed_nu, "n^2 alpha^d");
  ed->add_option("-n,--n", ed_n, "sample sizes");
  ed->add_option("--alpha", ed_alpha, "pair-connection mode: alpha values");
  ed->add_option("--pairs", ed_pairs, "pairs per alpha in pair-connection mode");
  ed->callback([&] {
    run = [&] {
      const auto seed = g.seed.value_or(1);
      if (!ed_alpha.empty()) {
        write_json(g, exp::pn_experiment(ed_d, ed_alpha, ed_pairs, seed, threads_of(g)).to_json());
      } else {
        auto rep = exp::edge_count_experiment(ed_d, ed_nu, ed_n, g.trials.value_or(2000), seed, threads_of(g));
        write_json(g, rep.to_json());
      }
      return kOk;
    };
  });

  // embed
  auto* em = app.add_subcommand("embed", "odd bad-patch-avoiding embedding of a sample of S^d");
  embed::EmbeddingConfig ec;
  std::string em_in;
  std::uint64_t em_n = 100000;
  int em_d = 2;
  std::optional<int> em_max_level;
  std::optional<double> em_C;
  em->add_option("--in", em_in, "point file; sampled when absent");
  em->add_option("--d", em_d, "sphere dimension when sampling");
  em->add_option("-n,--n", em_n, "number of points when sampling");
  em->add_option("--epsilon", ec.epsilon, "Lipschitz constant of h");
  em->add_option("--c", ec.c, "alpha = c n^{-1/d}");
  em->add_option("--delta", ec.delta, "s_0 = delta alpha");
  em->add_option("--K", ec.K, "side growth");
  em->add_option("--max-level", em_max_level, "top cube level (default ceil(2 ln ln n))");
  em->add_option("--C", em_C, "replaces C in a = epsilon C^{-(j+1)}");
  em->add_option("--probes", ec.probes, "verification probes");
  em->callback([&] {
    run = [&] {
      ec.seed = g.seed.value_or(1);
      ec.max_level = em_max_level;
      ec.C_override = em_C;
      auto pts = points_from(em_in, em_d, em_n, ec.seed);
      auto res = embed::build_embedding(pts, ec);
      write_json(g, res.to_json());
      std::cerr << "embedding: " << embed::to_string(res.status) << (res.message.empty() ? "" : ": ")
                << res.message << '\n';
      return res.status == embed::EmbeddingStatus::Success ? kOk : kVerifyFailed;
    };
  });

  // verify
  auto* ve = app.add_subcommand("verify", "check graph invariants on a sample");
  std::string ve_in;
  int ve_d = 2;
  std::uint64_t ve_n = 500;
  double ve_alpha = 0.3;
  ve->add_option("--in", ve_in, "point file; sampled when absent");
  ve->add_option("--d", ve_d, "sphere dimension when sampling");
  ve->add_option("-n,--n", ve_n, "number of points when sampling");
  ve->add_option("--alpha", ve_alpha, "edge parameter");
  ve->callback([&] {
    run = [&] {
      auto pts = points_from(ve_in, ve_d, ve_n, g.seed.value_or(1));
      auto graph = build_graph(pts, ve_alpha);
      auto girth = odd_girth_floor(graph);
      bool bip = is_bipartite(graph.graph).bipartite;
      bool linked = antipodal_connectivity(build_geo_mirror(pts, ve_alpha)).connected;
      bool triangle_rule = ve_alpha < std::numbers::pi / 3;
      bool triangle_free = find_triangle(graph.graph) == std::nullopt;
      bool ok = girth.ok() && bip == !linked && (!triangle_rule || triangle_free);
      json j{{"n", pts.size()},
             {"alpha", ve_alpha},
             {"odd_girth_bound", girth.bound},
             {"odd_cycle_witnesses", girth.witnesses},
             {"odd_girth_violations", girth.violations},
             {"bipartite", bip},
             {"antipodally_connected", linked},
             {"bipartite_matches_mirror", bip == !linked},
             {"triangle_free", triangle_free},
             {"ok", ok}};
      if (girth.shortest) j["shortest_odd_cycle"] = *girth.shortest;
      write_json(g, j);
      return ok ? kOk : kVerifyFailed;
    };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  try {
    return run();
  } catch (const exp::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const perco::NotBracketed& e) {
    std::cerr << "transition not bracketed: " << e.what() << '\n';
    return kNotBracketed;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid argument: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kVerifyFailed;
  }
}
