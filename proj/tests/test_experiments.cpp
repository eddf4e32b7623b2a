#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

#include "borsuk/experiments.hpp"
#include "borsuk/percolation.hpp"

using namespace borsuk;
using namespace borsuk::exp;

namespace {

ExperimentConfig small_borsuk(Event e, std::vector<double> params, AlphaRule rule = AlphaRule::Fixed) {
  ExperimentConfig c;
  c.model = ModelKind::Borsuk;
  c.d = 2;
  c.sizes = {60};
  c.params = std::move(params);
  c.alpha_rule = rule;
  c.event = e;
  c.trials = 40;
  c.seed = 3;
  return c;
}

}  // namespace

TEST_CASE("alpha rules") {
  CHECK(alpha_for(AlphaRule::Fixed, 0.3, 2, 100) == 0.3);
  CHECK(alpha_for(AlphaRule::Thermodynamic, 2.0, 2, 400) == doctest::Approx(0.1));
  CHECK(alpha_for(AlphaRule::Logarithmic, 1.0, 1, 100) == doctest::Approx(std::log(100.0) / 100));
  double a = alpha_for(AlphaRule::Nu, 8.0, 2, 4000);
  CHECK(4000.0 * 4000.0 * a * a == doctest::Approx(8.0));
}

TEST_CASE("config JSON round trip and validation") {
  auto c = small_borsuk(Event::ChiExceeds, {1, 2, 3}, AlphaRule::Thermodynamic);
  c.k = 3;
  c.poissonize = true;
  auto back = ExperimentConfig::from_json(nlohmann::json::parse(c.to_json().dump()));
  CHECK(back.to_json() == c.to_json());
  CHECK_NOTHROW(back.validate());

  auto bad = c;
  bad.sizes.clear();
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.trials = 0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.params = {-1};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.alpha_rule = AlphaRule::Fixed;
  bad.params = {3.5};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = c;
  bad.event = Event::Percolation;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"modle", "ab"}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"model", "lattice"}}), ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_json({{"d", "two"}}), ConfigError);
}

TEST_CASE("poissonize") {
  CHECK(poissonize(0.0, 5) == 0);
  CHECK(poissonize(50.0, 5) == poissonize(50.0, 5));
  const double n = 1e6;
  const int trials = 200;
  double sum = 0;
  for (int t = 0; t < trials; ++t) sum += static_cast<double>(poissonize(n, static_cast<std::uint64_t>(t)));
  CHECK(std::abs(sum / trials - n) < 4 * std::sqrt(n / trials));

  Stream rng(8);
  double small = 0;
  for (int t = 0; t < 20000; ++t) {
    auto [a, b] = poisson_coupled(3.0, 7.5, rng);
    REQUIRE(a <= b);
    small += static_cast<double>(a);
  }
  CHECK(small / 20000 == doctest::Approx(3.0).epsilon(0.03));
  CHECK_THROWS_AS(poisson_coupled(2.0, 1.0, rng), std::invalid_argument);
}

TEST_CASE("a sure event on one trial") {
  auto c = small_borsuk(Event::EdgeCount, {3.0});
  c.trials = 1;
  auto b = estimate_event_probability(c);
  REQUIRE(b.cells.size() == 1);
  auto w = stats::wilson(1, 1);
  CHECK(b.cells[0].estimate.p == 1.0);
  CHECK(b.cells[0].estimate.lo == w.lo);
  CHECK(b.cells[0].estimate.hi == w.hi);
}

TEST_CASE("censoring is counted, not dropped") {
  ExperimentConfig c;
  c.model = ModelKind::Borsuk;
  c.d = 3;
  c.sizes = {40};
  c.params = {2.6};
  c.alpha_rule = AlphaRule::Fixed;
  c.event = Event::ChiExceeds;
  c.k = 3;
  c.trials = 10;
  c.node_budget = 1;
  auto b = estimate_event_probability(c);
  for (const auto& cell : b.cells) CHECK(cell.censored + cell.decided() == cell.trials);
  CHECK(b.cells[0].censored == 10);
  CHECK(b.all_censored());
  CHECK(b.cells[0].estimate.lo == 0.0);
  CHECK(b.cells[0].estimate.hi == 1.0);
}

TEST_CASE("estimates lie in their intervals and grow with alpha") {
  auto c = small_borsuk(Event::ChiExceeds, {0.5, 1.0, 1.5, 2.0, 2.5, 3.0}, AlphaRule::Thermodynamic);
  c.sizes = {100, 200};
  c.trials = 60;
  auto b = estimate_event_probability(c);
  for (std::size_t i = 0; i < c.sizes.size(); ++i) {
    std::vector<std::uint64_t> h, t;
    for (std::size_t j = 0; j < c.params.size(); ++j) {
      const auto& cell = b.cell(i, j);
      CHECK(cell.estimate.lo <= cell.estimate.p);
      CHECK(cell.estimate.p <= cell.estimate.hi);
      h.push_back(cell.hits);
      t.push_back(cell.decided());
    }
    CHECK_FALSE(stats::non_monotone(h, t));
  }
  // P(chi > 2) >= P(chi > 3) on the same streams.
  auto c3 = c;
  c3.k = 3;
  auto b3 = estimate_event_probability(c3);
  for (std::size_t i = 0; i < b.cells.size(); ++i) CHECK(b3.cells[i].hits <= b.cells[i].hits);
}

TEST_CASE("geo mirror agrees with bipartiteness on shared streams") {
  auto c = small_borsuk(Event::Bipartite, {0.5, 1.0, 2.0}, AlphaRule::Thermodynamic);
  auto plain = estimate_event_probability(c);
  c.model = ModelKind::GeoMirror;
  auto mirror = estimate_event_probability(c);
  for (std::size_t i = 0; i < plain.cells.size(); ++i) CHECK(plain.cells[i].hits == mirror.cells[i].hits);
}

TEST_CASE("percolation models run through the harness") {
  ExperimentConfig ab;
  ab.model = ModelKind::AB;
  ab.event = Event::Percolation;
  ab.sizes = {4};
  ab.params = {0.2, 3.0};
  ab.trials = 30;
  auto b = estimate_event_probability(ab);
  CHECK(b.cells[0].hits < b.cells[1].hits);
  CHECK(b.cells[1].hits == 30);

  ExperimentConfig bond;
  bond.model = ModelKind::Bond;
  bond.event = Event::Percolation;
  bond.sizes = {10};
  bond.params = {0.99};
  bond.trials = 20;
  CHECK(estimate_event_probability(bond).cells[0].hits >= 18);
}

TEST_CASE("CSV is identical across thread counts") {
  auto c = small_borsuk(Event::ChiExceeds, {1.0, 2.0, 3.0, 4.0}, AlphaRule::Thermodynamic);
  c.sizes = {100, 300};
  c.threads = 1;
  auto one = to_csv(estimate_event_probability(c));
  c.threads = 4;
  CHECK(to_csv(estimate_event_probability(c)) == one);
}

TEST_CASE("edge counts: Poisson limit") {
  auto rep = edge_count_experiment(2, 8.0, {1000}, 3000, 4);
  const auto& r = rep.rows[0];
  CHECK(r.target_mean == doctest::Approx(1.0));
  CHECK(std::abs(r.mean - 1.0) < 4 * r.mean_se);
  CHECK(r.zero.lo - 3 * (r.zero.hi - r.zero.lo) <= std::exp(-1.0));
  CHECK(std::exp(-1.0) <= r.zero.hi + 3 * (r.zero.hi - r.zero.lo));
  CHECK(r.falling[1] == doctest::Approx(1.0).epsilon(0.15));
  CHECK(r.tv < 0.05);

  // d = 3: c_3 = Gamma(3) / (4 sqrt(pi) Gamma(5/2)) = 2 / (3 pi).
  const double c3 = 2 / (3 * std::numbers::pi);
  auto rep3 = edge_count_experiment(3, 2 / c3, {800}, 2000, 5);
  CHECK(rep3.rows[0].target_mean == doctest::Approx(1.0));
  CHECK(std::abs(rep3.rows[0].mean - 1.0) < 4 * rep3.rows[0].mean_se);

  auto tiny = edge_count_experiment(2, 0.01, {500}, 500, 6);
  CHECK(tiny.rows[0].zero.p >= 0.99);
  CHECK_THROWS_AS(edge_count_experiment(2, 1e9, {10}, 5, 1), std::invalid_argument);
}

TEST_CASE("pair connection frequency") {
  auto rep = pn_experiment(2, {std::numbers::pi, 0.3, 0.8}, 200000, 2);
  CHECK(rep.rows[0].freq.p == 1.0);
  for (std::size_t i = 1; i < rep.rows.size(); ++i) CHECK(std::abs(rep.rows[i].z) < 4);
  CHECK(rep.rows[1].ratio == doctest::Approx(rep.rows[1].exact / (0.25 * 0.09)).epsilon(0.03));
  auto again = pn_experiment(2, {std::numbers::pi, 0.3, 0.8}, 200000, 2, 4);
  for (std::size_t i = 0; i < rep.rows.size(); ++i) CHECK(again.rows[i].freq.hits == rep.rows[i].freq.hits);
}

TEST_CASE("threshold sweep in c") {
  ThresholdSweepConfig cfg;
  cfg.n_list = {150, 300};
  cfg.c_list = {1.0, 2.0, 3.0, 4.0, 5.5, 7.5, 10.0};
  cfg.trials = 80;
  cfg.seed = 2;
  cfg.bootstrap = 100;
  cfg.reference = 4.0;
  auto rep = threshold_sweep(cfg);
  REQUIRE(rep.per_n.size() == 2);
  for (const auto& c : rep.per_n) {
    CHECK(c.lo <= c.x);
    CHECK(c.x <= c.hi);
    CHECK(c.x > 1.0);
    CHECK(c.x < 10.0);
  }
  CHECK(rep.batch.cell(0, 0).estimate.p < 0.2);
  CHECK(rep.pooled_lo <= rep.pooled);
  CHECK(rep.agrees_with_reference.has_value());
  CHECK(rep.to_json().contains("pooled"));

  cfg.c_list = {0.05, 0.1, 0.15, 0.2};
  CHECK_THROWS_AS(threshold_sweep(cfg), perco::NotBracketed);
}

TEST_CASE("report round trips") {
  auto c = small_borsuk(Event::Bipartite, {0.5, 1.5, 2.5}, AlphaRule::Thermodynamic);
  c.sizes = {50, 80};
  auto b = estimate_event_probability(c);

  std::istringstream csv(to_csv(b));
  auto cells = cells_from_csv(csv);
  REQUIRE(cells.size() == b.cells.size());
  for (std::size_t i = 0; i < cells.size(); ++i) {
    CHECK(cells[i].size == b.cells[i].size);
    CHECK(cells[i].param == b.cells[i].param);
    CHECK(cells[i].alpha == b.cells[i].alpha);
    CHECK(cells[i].hits == b.cells[i].hits);
    CHECK(cells[i].estimate.lo == b.cells[i].estimate.lo);
  }

  auto j = to_json(b);
  auto back = batch_from_json(nlohmann::json::parse(j.dump()));
  CHECK(to_json(back).dump() == j.dump());
  CHECK(to_csv(back) == to_csv(b));

  auto dir = std::filesystem::temp_directory_path() / "borsuk_report_test";
  std::filesystem::create_directories(dir);
  auto paths = emit_report(b, dir / "batch", {.csv = true, .json = true, .svg = true});
  REQUIRE(paths.size() == 3);
  std::ifstream in(paths[0]);
  std::stringstream text;
  text << in.rdbuf();
  CHECK(text.str() == to_csv(b));
  std::ifstream svg(paths[2]);
  std::stringstream st;
  st << svg.rdbuf();
  CHECK(st.str().rfind("<svg", 0) == 0);
  std::size_t lines = 0;
  for (std::size_t pos = 0; (pos = st.str().find("<polyline", pos)) != std::string::npos; ++pos) ++lines;
  CHECK(lines == c.sizes.size());
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(emit_report(b, "/nonexistent-dir/x/batch"), std::runtime_error);
}

TEST_CASE("poissonization audit rows") {
  auto c = small_borsuk(Event::EdgeCount, {0.5, 2.0}, AlphaRule::Thermodynamic);
  c.sizes = {30, 300};
  c.trials = 200;
  auto rows = poissonization_audit(c);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) CHECK(r.difference == doctest::Approx(r.poisson - r.fixed));
}
