#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "borsuk/rng.hpp"
#include "borsuk/sphere.hpp"
#include "json.hpp"

namespace borsuk::embed {

using Vec = std::vector<double>;
using Lattice = std::vector<std::int64_t>;

/// Thrown when a sampled precondition fails; `witness` is the offending probe.
class PreconditionError : public std::runtime_error {
 public:
  PreconditionError(const std::string& what, Vec witness) : std::runtime_error(what), witness(std::move(witness)) {}
  Vec witness;
};

class InadmissibleSchedule : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------- cubes

struct CubeOptions {
  double roi_radius = 100.0;
  /// Optional per-level distance to the unit sphere beyond which anchors are
  /// irrelevant. Empty keeps every cube inside the region of interest.
  std::vector<double> shell_margin;
};

struct CubeStatus {
  bool bad = false;
  bool relevant = true;
};

/// Level-i cubes p + [0, s_i]^d, p in s_i Z^d, with s_i = K^{i(i+1)/2} s_0.
struct CubeHierarchy {
  int d = 2;
  double s0 = 0;
  int K = 2;
  int top = 0;
  std::vector<double> side;
  std::vector<std::map<Lattice, CubeStatus>> cubes;
  std::vector<std::string> warnings;

  /// Anchors s_i * m of bad (and, by default, relevant) level-i cubes.
  std::vector<Vec> bad_anchors(int level, bool relevant_only = true) const;
  std::size_t count_bad(int level, bool relevant_only = true) const;
};

/// Good/bad classification bottom-up. A level-0 cube is good iff it holds a
/// point; a level-i cube is good iff at most one of its K^{di} children is
/// bad. Only cubes inside B(0, roi) are kept. The top level is truncated to
/// the largest level whose cubes still fit in the region.
CubeHierarchy classify_cubes(std::span<const double> projected, int d, double s0, int K, int max_level,
                             const CubeOptions& opt = {});

// ---------------------------------------------------------------- partition

/// Splits V into k 2^d slots (slot 2^d (i-1) + j holds W_i inside orthant j).
/// W_1 .. W_{k-1} are greedy maximal r/2-separated subsets of the points
/// within r/2 of U; W_k takes everything left. Checks |B(u, r) & V| <= k on U
/// first (PreconditionError with the probe as witness) and the r/4 property
/// of every slot afterwards.
std::vector<std::vector<Vec>> orthant_partition(const std::vector<Vec>& V, double r, const std::vector<Vec>& U,
                                                int k);

/// Index of the orthant {x : x_i sigma_i >= 0} holding x (bit i set for
/// sigma_i = -1; ties go to the positive side).
int orthant_of(std::span<const double> x);

// ---------------------------------------------------------------- bump sums

struct BumpLayer {
  std::vector<Vec> points;
  std::vector<double> amplitude;  // +a or -a per point
  double a = 0;
  double r = 0;
};

/// Odd function S^{d-1} -> R: a linear base u -> <w, u> plus bump layers.
/// Layer terms are b_p (max(0, r - |phi(u) - p|) - max(0, r - |phi(-u) - p|))
/// with phi(u) = (1 + f(u)) u and f the function below the layer. Evaluation
/// uses f(-u) = -f(u), so oddness holds bit for bit.
class BumpSum {
 public:
  BumpSum() = default;
  explicit BumpSum(int d, Vec base = {});

  int dim() const noexcept { return d_; }
  const Vec& base() const noexcept { return base_; }
  const std::vector<BumpLayer>& layers() const noexcept { return layers_; }
  std::size_t size() const noexcept { return layers_.size(); }

  double operator()(std::span<const double> u) const { return eval(u, layers_.size()); }
  /// Value of the function made of the base and the first `layers` layers.
  double eval(std::span<const double> u, std::size_t layers) const;
  /// Number of bump terms of layer `layer` that are nonzero at u.
  std::size_t active_terms(std::span<const double> u, std::size_t layer) const;
  /// (1 + f(u)) u with f truncated to `layers` layers.
  Vec phi(std::span<const double> u, std::size_t layers) const;
  Vec phi(std::span<const double> u) const { return phi(u, layers_.size()); }

  void push_layer(BumpLayer layer);

  nlohmann::json to_json() const;
  static BumpSum from_json(const nlohmann::json& j);

 private:
  int d_ = 2;
  Vec base_;
  std::vector<BumpLayer> layers_;
};

// ---------------------------------------------------------------- probes

/// Uniform directions on S^{d-1}, followed by p/|p| and -p/|p| for every
/// target p and small jitters of those.
std::vector<Vec> probe_directions(int d, std::size_t count, Stream& rng, const std::vector<Vec>& targets = {});

struct LipschitzSample {
  double ratio = 0;
  std::size_t pairs = 0;
};

/// max |f(u) - f(v)| / |u - v| over random pairs; half the pairs are close
/// (separation around `close_scale`) and centred on the target directions.
LipschitzSample sampled_lipschitz(const BumpSum& f, std::size_t pairs, Stream rng, double close_scale,
                                  const std::vector<Vec>& targets = {});

// ---------------------------------------------------------------- perturbation

struct PerturbReport {
  double max_change = 0;     // max |f - g| on probes
  double min_clearance = 0;  // min distance from psi(u) to V
  double lipschitz = 0;      // sampled ratio of g
  double max_odd = 0;        // max |g(u) + g(-u)|
  std::size_t max_active = 0;
  bool change_ok = false;
  bool clearance_ok = false;
  bool lipschitz_ok = false;
  bool odd_ok = false;
  bool disjoint_ok = false;
  bool ok() const { return change_ok && clearance_ok && lipschitz_ok && odd_ok && disjoint_ok; }
};

struct PerturbResult {
  BumpSum g;
  PerturbReport report;
};

struct ProbeConfig {
  std::size_t directions = 4000;
  std::size_t lipschitz_pairs = 20000;
  std::uint64_t seed = 1;
};

/// One layer of odd bumps that pushes phi away from V (one orthant, no two
/// points in a common r-ball along phi). b_p = +a if |p| < 1 + f(p/|p|),
/// -a otherwise; the origin is dropped. Preconditions a < 0.01,
/// r < 0.01/sqrt(d), |f| < 0.1, f odd and a-Lipschitz, at most one point of V
/// in B(phi(u), r) are sampled on the probes. Postconditions are measured.
PerturbResult perturb_once(const BumpSum& f, const std::vector<Vec>& V, double a, double r,
                           const ProbeConfig& probes = {});

struct ScheduleStep {
  double a = 0;
  double r = 0;
  double delta = 0;
  double t = 0;
};

/// a_0 = a, r_0 = r/4, a_{i+1} = 9 a_i, r_{i+1} = (a_i/2) r_i,
/// Delta_{i+1} = a_i r_i, t_{i+1} = t_i + Delta_{i+1}; steps 0..count.
std::vector<ScheduleStep> schedule(double a, double r, double t, std::size_t count);
/// Closed forms a_i = 9^i a, r_i = 3^{i(i-1)} 2^{-(i+2)} a^i r,
/// Delta_i = a_{i-1} r_{i-1} = 3^{i(i-1)} 2^{-(i+1)} a^i r, checked in exact rational
/// arithmetic against the recursion started from the given doubles.
bool schedule_closed_form_exact(double a, double r, std::size_t count);

struct IterateReport {
  std::size_t parts = 0;          // nonempty slots, the schedule length
  std::size_t slots = 0;          // k 2^d
  double log_C = 0;               // ln 3^{slots^2}
  std::vector<ScheduleStep> steps;
  std::vector<PerturbReport> layers;
  double max_change = 0;
  double min_clearance = 0;
  double lipschitz = 0;
  bool nested_ok = true;
  bool schedule_exact = false;
  bool change_ok = false;
  bool clearance_ok = false;
  bool lipschitz_ok = false;
  bool ok() const;
};

struct IterateResult {
  BumpSum g;
  IterateReport report;
};

/// Chains perturb_once over the nonempty slots of orthant_partition(V, r, .)
/// with the recursion above. The schedule is checked for a_i < 0.01,
/// r_i < 0.01/sqrt(d), t_i < 0.1 before any layer is built (throws
/// InadmissibleSchedule). Final checks use C = 3^{(k 2^d)^2}:
/// |f - g| < C a r, clearance a^C r, Lipschitz C a, and nested balls
/// B(psi_{i+1}(u), r_{i+1}) inside B(psi_i(u), r_i).
IterateResult iterate_perturbation(const BumpSum& f, const std::vector<Vec>& V, int k, double a, double r,
                                   const ProbeConfig& probes = {});

// ---------------------------------------------------------------- embedding

struct EmbeddingConfig {
  double epsilon = 0.05;
  double c = 361.0;
  double delta = 0.035;
  int K = 2;
  /// Defaults to ceil(2 ln ln n).
  std::optional<int> max_level;
  double roi_radius = 100.0;
  /// Replaces C = 3^{(2^d 2^d)^2} in a = epsilon C^{-(j+1)}.
  std::optional<double> C_override;
  /// Nominal sample size for alpha = c n^{-1/d}; 0 uses the number of points.
  double n = 0;
  std::size_t probes = 10000;
  std::size_t lipschitz_pairs = 100000;
  std::size_t odd_pairs = 1000;
  std::uint64_t seed = 1;
};

enum class EmbeddingStatus { Success, Rejected, Inadmissible, PreconditionFailed, VerificationFailed };
const char* to_string(EmbeddingStatus s);

struct LevelReport {
  int level = 0;
  double side = 0;
  std::size_t bad_relevant = 0;
  double a = 0;
  double r = 0;
  double min_anchor_distance = 0;  // min over probes of dist(phi_j(u), B_j)
  double required = 0;             // 2 sqrt(d) s_j
  bool clearance_ok = true;
  std::optional<IterateReport> iterate;
};

struct VerificationReport {
  std::size_t probes = 0;
  double max_abs_h = 0;
  double h_bound = 0;
  double max_odd = 0;
  double lipschitz = 0;
  std::size_t lipschitz_pairs = 0;
  std::size_t coverage_failures = 0;
  double worst_coverage = 0;  // max over probes of the distance to the nearest point
  double coverage_radius = 0;
  bool bound_ok = false;
  bool odd_ok = false;
  bool lipschitz_ok = false;
  bool coverage_ok = false;
  bool levels_ok = false;
  bool ok() const { return bound_ok && odd_ok && lipschitz_ok && coverage_ok && levels_ok; }
};

struct EmbeddingResult {
  EmbeddingStatus status = EmbeddingStatus::Rejected;
  std::string message;
  int d = 2;
  double n = 0;
  double alpha = 0;
  double s0 = 0;
  int top = 0;
  BumpSum h;
  std::vector<LevelReport> levels;
  VerificationReport verify;
  std::vector<std::string> warnings;

  nlohmann::json to_json() const;
};

/// Projects a sample of S^d (points at the north pole are skipped), builds
/// the cube hierarchy around the unit sphere of R^d and constructs h by
/// reverse induction over the levels, then verifies it on probes. A bad
/// relevant cube at the top level rejects the instance.
EmbeddingResult build_embedding(const sphere::PointSet& points, const EmbeddingConfig& cfg);

}  // namespace borsuk::embed
