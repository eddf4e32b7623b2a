#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "borsuk/rng.hpp"
#include "borsuk/stats.hpp"
#include "json.hpp"

namespace borsuk::exp {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class ModelKind { Borsuk, GeoMirror, AB, Bond };
enum class AlphaRule { Fixed, Thermodynamic, Logarithmic, Nu };
enum class Event { ChiExceeds, Bipartite, EdgeCount, Certificate, Percolation };

const char* to_string(ModelKind m);
const char* to_string(AlphaRule r);
const char* to_string(Event e);

/// alpha for nominal size n: fixed p, p n^{-1/d}, p (ln n / n)^{1/d}, or
/// (p / n^2)^{1/d} so that n^2 alpha^d = p.
double alpha_for(AlphaRule rule, double p, int d, double n);

/// One Monte Carlo experiment over the grid sizes x params.
///
/// `sizes` are sample sizes n (borsuk, geo-mirror), box half-widths R (ab)
/// or box sides m (bond). `params` are alpha-rule parameters, intensities
/// per label, or bond probabilities.
struct ExperimentConfig {
  ModelKind model = ModelKind::Borsuk;
  int d = 2;
  std::vector<double> sizes;
  std::vector<double> params;
  AlphaRule alpha_rule = AlphaRule::Thermodynamic;
  Event event = Event::ChiExceeds;
  std::uint32_t k = 2;
  std::uint64_t trials = 100;
  std::uint64_t seed = 1;
  bool poissonize = false;
  std::uint64_t node_budget = 1'000'000;
  double certificate_beta_fraction = 0.1;
  /// Bond event: origin-cluster density above 1 - epsilon.
  double epsilon = 0.1;
  unsigned threads = 1;
  std::string output = "report";

  /// Throws ConfigError on empty grids, zero trials, non-positive parameters
  /// or a model/event pair that is not supported.
  void validate() const;
  nlohmann::json to_json() const;
  /// Missing keys keep their defaults; unknown keys are an error.
  static ExperimentConfig from_json(const nlohmann::json& j);
};

/// N ~ Poisson(n); n = 0 gives 0.
std::uint64_t poissonize(double n, std::uint64_t seed);
std::uint64_t poissonize(double n, Stream& rng);
/// (N_n, N_m) with N_m ~ Po(m) and N_n a binomial thinning of it, so that
/// N_n ~ Po(n) and N_n <= N_m pathwise. Needs 0 <= n <= m.
std::pair<std::uint64_t, std::uint64_t> poisson_coupled(double n, double m, Stream& rng);

struct CellResult {
  double size = 0;
  double param = 0;
  double alpha = 0;  // 0 for the percolation models
  std::uint64_t trials = 0;
  std::uint64_t hits = 0;
  std::uint64_t censored = 0;
  /// Wilson interval over the decided trials.
  stats::Proportion estimate;

  std::uint64_t decided() const noexcept { return trials - censored; }
};

struct TrialBatch {
  ExperimentConfig config;
  /// Row-major over (size, param).
  std::vector<CellResult> cells;
  double seconds = 0;

  const CellResult& cell(std::size_t i, std::size_t j) const { return cells[i * config.params.size() + j]; }
  bool all_censored() const;
};

/// Runs every (size, param, trial) on its own stream derive(seed, {i, j, t}).
/// Undecided chi > k instances are counted as censored, never dropped.
TrialBatch estimate_event_probability(const ExperimentConfig& cfg);

/// Outcome of a single trial: 0 no, 1 yes, 2 censored.
int run_trial(const ExperimentConfig& cfg, std::size_t i, std::size_t j, std::uint64_t t);

struct EdgeCountRow {
  double n = 0;
  double alpha = 0;
  double target_mean = 0;  // (c_d / 2) nu
  double mean = 0;
  double variance = 0;
  double mean_se = 0;
  stats::Proportion zero;  // P(W_n = 0)
  double tv = 0;
  std::vector<double> falling;  // E (W)_m for m = 1..3
  std::vector<std::uint64_t> histogram;
};

struct EdgeCountReport {
  int d = 2;
  double nu = 0;
  std::uint64_t trials = 0;
  std::vector<EdgeCountRow> rows;
  nlohmann::json to_json() const;
};

/// W_n = number of Borsuk edges among n uniform points at alpha =
/// (nu / n^2)^{1/d}. Throws std::invalid_argument when alpha >= pi.
EdgeCountReport edge_count_experiment(int d, double nu, const std::vector<double>& n_list, std::uint64_t trials,
                                      std::uint64_t seed, unsigned threads = 1);

struct PnRow {
  double alpha = 0;
  stats::Proportion freq;
  double exact = 0;       // cap_measure(alpha, d)
  double asymptotic = 0;  // c_d alpha^d
  double ratio = 0;       // freq / asymptotic
  double z = 0;           // (freq - exact) / binomial sd
};

struct PnReport {
  int d = 2;
  std::uint64_t pairs = 0;
  std::vector<PnRow> rows;
  nlohmann::json to_json() const;
};

/// Frequency of dot(u, v) < -cos(alpha) over independent uniform pairs.
PnReport pn_experiment(int d, const std::vector<double>& alpha_list, std::uint64_t pairs, std::uint64_t seed,
                       unsigned threads = 1);

struct ThresholdSweepConfig {
  int d = 2;
  std::uint32_t k = 2;
  std::vector<double> n_list;
  std::vector<double> c_list;
  std::uint64_t trials = 100;
  std::uint64_t seed = 1;
  unsigned threads = 1;
  std::uint64_t node_budget = 1'000'000;
  std::size_t bootstrap = 200;
  /// Reference crossing (for k = 2, c2_constant of a percolation estimate).
  std::optional<double> reference;
  std::optional<double> reference_lo;
  std::optional<double> reference_hi;
};

struct ThresholdSweepReport {
  TrialBatch batch;
  /// 1/2-crossing in c per n, fitted in log c.
  std::vector<stats::CrossingEstimate> per_n;
  std::vector<bool> non_monotone;
  double pooled = 0;
  double pooled_lo = 0;
  double pooled_hi = 0;
  /// Slope of the crossing against ln n and its standard error.
  double drift = 0;
  double drift_se = 0;
  /// Every pair of per-n intervals overlaps.
  bool mutually_overlapping = false;
  /// |pooled - reference| within the joint 95% interval, when a reference is set.
  std::optional<bool> agrees_with_reference;
  nlohmann::json to_json() const;
};

/// P(chi > k) over alpha = c n^{-1/d} for every (n, c). Throws
/// perco::NotBracketed when some n does not cross 1/2 on the grid.
ThresholdSweepReport threshold_sweep(const ThresholdSweepConfig& cfg);

struct TransferRow {
  double size = 0;
  double param = 0;
  double fixed = 0;
  double poisson = 0;
  double difference = 0;
};

/// Fixed-n and Poisson(n) estimates on shared streams (the Poisson sample is
/// a prefix or extension of the same point sequence).
std::vector<TransferRow> poissonization_audit(const ExperimentConfig& cfg);

// ---------------------------------------------------------------- reports

inline constexpr int kSchemaVersion = 1;

/// Fixed columns: schema_version, model, event, d, k, size, param, alpha,
/// trials, hits, censored, decided, estimate, ci_lo, ci_hi.
std::string to_csv(const TrialBatch& batch);
std::vector<CellResult> cells_from_csv(std::istream& is);
nlohmann::json to_json(const TrialBatch& batch);
TrialBatch batch_from_json(const nlohmann::json& j);
/// Self-contained line plot of the estimates against the parameter, one
/// polyline per size.
std::string to_svg(const TrialBatch& batch, const std::string& title = "");

struct ReportFormats {
  bool csv = true;
  bool json = true;
  bool svg = false;
};

/// Writes stem.csv, stem.json and stem.svg as requested; returns the paths.
/// Throws std::runtime_error when a file cannot be written.
std::vector<std::filesystem::path> emit_report(const TrialBatch& batch, const std::filesystem::path& stem,
                                               ReportFormats formats = {});

}  // namespace borsuk::exp
