#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "borsuk/rng.hpp"
#include "borsuk/stats.hpp"

namespace borsuk::perco {

enum class Label : std::uint8_t { A = 0, B = 1 };

/// Two labelled Poisson samples in the box [-R, R]^d.
struct ABSample {
  int d = 2;
  double R = 1;
  double lambda_a = 0;
  double lambda_b = 0;
  std::vector<double> coords;  // stride d
  std::vector<Label> labels;
  std::optional<std::uint32_t> origin;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> point(std::size_t i) const noexcept {
    return {coords.data() + i * static_cast<std::size_t>(d), static_cast<std::size_t>(d)};
  }
  void add(std::span<const double> x, Label l);
};

/// Counts are Poisson(lambda (2R)^d), positions uniform in the box. The
/// optional origin point is appended last with the given label.
ABSample sample_ab(int d, double R, double lambda_a, double lambda_b, Stream& rng,
                   std::optional<Label> origin_label = std::nullopt);
ABSample sample_ab(int d, double R, double lambda_a, double lambda_b, std::uint64_t seed,
                   std::optional<Label> origin_label = std::nullopt);

/// Same law, generated independently per unit cell [c, c+1)^d clipped to the
/// box; cell c uses rng.split(hash(c)). Agrees point for point with the lazy
/// exploration below.
ABSample sample_ab_cellwise(int d, double R, double lambda_a, double lambda_b, const Stream& rng,
                            std::optional<Label> origin_label = std::nullopt);

/// AB joins opposite labels at distance <= 1; Boolean joins every such pair.
enum class Model { AB, Boolean };

struct ClusterLabeling {
  std::vector<std::uint32_t> component;
  std::vector<std::uint32_t> sizes;
  /// Component reaches {||x||_inf >= R - shell}.
  std::vector<std::uint8_t> touches_shell;
  std::size_t merges = 0;
};

/// Grid-bucketed (cell side 1) neighbour search plus union-find.
ClusterLabeling build_clusters(const ABSample& s, Model model = Model::AB, double shell = 1.0);
/// O(n^2) reference.
ClusterLabeling build_clusters_brute(const ABSample& s, Model model = Model::AB, double shell = 1.0);

/// Every edge of the model as (i, j), i < j, sorted. For audits on small inputs.
std::vector<std::pair<std::uint32_t, std::uint32_t>> model_edges(const ABSample& s, Model model);

bool origin_reaches_shell(const ABSample& s, Model model = Model::AB, double shell = 1.0);

/// Origin (label A) cluster explored breadth first, generating unit cells of
/// the cellwise process only when the search reaches them. Returns whether
/// the cluster reaches the shell; stops as soon as it does. Cost scales with
/// the cluster, not the box.
bool origin_reaches_shell_lazy(int d, double R, double lambda_a, double lambda_b, const Stream& rng,
                               Model model = Model::AB, double shell = 1.0);
/// A cluster meets both slabs {x_0 <= -R + 1} and {x_0 >= R - 1}.
bool crosses_box(const ABSample& s, Model model = Model::AB);

struct RunOptions {
  unsigned threads = 1;
};

/// Origin-seeded (label A) frequency of reaching the boundary shell of width 1.
stats::Proportion boundary_reach_prob(int d, double lambda, double R, std::uint64_t trials, std::uint64_t seed,
                                      RunOptions opt = {}, Model model = Model::AB);

/// P(M_k > 0), M_k = #{a in V_A, ||a|| < k/2, a connected to {||x|| >= k}},
/// on samples in [-(k+1), k+1]^d. Throws for k < 2.
stats::Proportion m_k_statistic(int d, double lambda, double k, std::uint64_t trials, std::uint64_t seed,
                                RunOptions opt = {});

enum class Observable { BoxCrossing, OriginToShell };

struct SweepCell {
  double lambda = 0;
  double R = 0;
  stats::Proportion freq;
};

struct LambdaCEstimate {
  double estimate = 0;
  double lo = 0;
  double hi = 0;
  /// 1/2-crossing per box size (same order as the box sizes), in lambda
  /// units; the fitted curve is in log lambda.
  std::vector<stats::CrossingEstimate> per_size;
  std::vector<double> box_sizes;
  std::vector<SweepCell> cells;
  bool non_monotone = false;
  Model model = Model::AB;
  Observable observable = Observable::BoxCrossing;
};

class NotBracketed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct SweepConfig {
  int d = 2;
  std::vector<double> lambda_grid;
  std::vector<double> box_sizes;
  std::uint64_t trials = 100;
  std::uint64_t seed = 1;
  Observable observable = Observable::BoxCrossing;
  unsigned threads = 1;
  std::size_t bootstrap = 200;
};

/// Raw sweep: frequency per (lambda, R), trial t of cell (i, j) on stream
/// derive(seed, {i, j, t}).
std::vector<SweepCell> sweep_cells(const SweepConfig& cfg, Model model);

/// Critical intensity by finite-size scaling. Per box size a logistic in
/// log lambda gives the 1/2-crossing with a bootstrap interval; crossings are
/// then extrapolated linearly in R^{-3/4} (2D correlation-length exponent 4/3)
/// when more than one size is given. The interval is the hull of the
/// bootstrap intervals propagated through the same extrapolation; flagged
/// non-monotone data double its half-width. Throws NotBracketed when some box
/// size never reaches (or never falls below) 1/2.
LambdaCEstimate estimate_lambda_c(const SweepConfig& cfg);
LambdaCEstimate boolean_lambda_c(const SweepConfig& cfg);
LambdaCEstimate estimate_threshold(const SweepConfig& cfg, Model model);
/// Same fit applied to already collected cells.
LambdaCEstimate fit_threshold(const SweepConfig& cfg, Model model, std::vector<SweepCell> cells);

/// ((d+1) kappa_{d+1} lambda_c)^{1/d}.
double c2_constant(int d, double lambda_c);

/// Axis-aligned cube region centred at `center` with half-width `half`.
struct Region {
  std::vector<double> center;
  double half = 0;
};

/// Sound one-sided coverage check: true iff every probe of a grid with the
/// given spacing has both an A and a B point within 1/4 - (sqrt(d)/2) spacing.
/// Throws for spacing >= 1 / (2 sqrt(d)).
bool covered_predicate(const ABSample& s, const Region& region, double probe_spacing);

struct CapProjectionReport {
  double rho = 0;
  double rho_formula = 0;
  double mean_count = 0;
  double count_se = 0;
  double lower_bound = 0;
  double upper_bound = 0;
  bool within_bounds = false;
  double chi2 = 0;
  int chi2_dof = 0;
  bool uniform_ok = false;
};

/// Samples Poisson(n) points on S^d, projects the cap {x_{d+1} < -t} with
/// g = 2 pi(.) / alpha and compares the count in B(0, rho/2) with the
/// intensity bounds n (1+t)^d / ((d+1) kappa_{d+1}) (alpha/2)^d and
/// n 2^d / ((d+1) kappa_{d+1}) (alpha/2)^d (4 sigma), and checks equal counts
/// across the 2^d orthants of B(0, rho/4) by a chi-square test at 1%.
CapProjectionReport cap_projection_intensity_check(int d, double n, double alpha, double t, std::uint64_t trials,
                                                   std::uint64_t seed, double t_min = 0.0);

/// Bond percolation on {-m..m}^d: fraction of trials with
/// |C_m(0)| > (1 - eps) |Lambda_m|.
stats::Proportion bond_percolation_box(int d, int m, double p, double eps, std::uint64_t trials, std::uint64_t seed,
                                       RunOptions opt = {});

}  // namespace borsuk::perco
