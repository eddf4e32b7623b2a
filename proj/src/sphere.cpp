#include "borsuk/sphere.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

namespace borsuk::sphere {

namespace {

void normalize(std::span<double> x) {
  double s = 0;
  for (double v : x) s += v * v;
  s = std::sqrt(s);
  if (!(s > 0) || !std::isfinite(s)) throw std::invalid_argument("cannot normalize a zero or non-finite vector");
  // Leave already-unit input bit-identical so serialization round-trips.
  if (std::abs(s - 1.0) <= 1e-14) return;
  for (double& v : x) v /= s;
}

void check_same_dim(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
}

template <typename F>
double integrate(F f, double a, double b) {
  using boost::math::quadrature::gauss_kronrod;
  return gauss_kronrod<double, 31>::integrate(f, a, b, 20, 1e-12);
}

}  // namespace

SpherePoint::SpherePoint(std::vector<double> coords) : coords_(std::move(coords)) {
  if (coords_.size() < 2) throw std::invalid_argument("SpherePoint: need d >= 1");
  normalize(coords_);
}

SpherePoint SpherePoint::antipode() const {
  std::vector<double> c(coords_);
  for (double& v : c) v = -v;
  return SpherePoint(std::move(c));
}

SpherePoint SpherePoint::basis(int d, int axis) {
  if (d < 1 || axis < 0 || axis > d) throw std::invalid_argument("SpherePoint::basis: bad axis");
  std::vector<double> c(static_cast<std::size_t>(d + 1), 0.0);
  c[static_cast<std::size_t>(axis)] = 1.0;
  return SpherePoint(std::move(c));
}

SpherePoint SpherePoint::north_pole(int d) { return basis(d, d); }
SpherePoint SpherePoint::south_pole(int d) { return basis(d, d).antipode(); }

double ProjectedPoint::norm() const noexcept {
  double s = 0;
  for (double v : coords) s += v * v;
  return std::sqrt(s);
}

Cap::Cap(SpherePoint center, double opening) : center_(std::move(center)), opening_(opening) {
  if (!(opening > 0 && opening <= std::numbers::pi)) throw std::invalid_argument("Cap: opening must be in (0, pi]");
}

bool Cap::contains(std::span<const double> x) const { return geodesic_distance(center_.coords(), x) < opening_; }

PointSet::PointSet(int d, std::vector<double> flat) : d_(d), data_(std::move(flat)) {
  if (d < 1) throw std::invalid_argument("PointSet: need d >= 1");
  if (data_.size() % static_cast<std::size_t>(d + 1) != 0)
    throw std::invalid_argument("PointSet: buffer length is not a multiple of d+1");
  for (std::size_t i = 0; i < size(); ++i)
    normalize({data_.data() + i * static_cast<std::size_t>(d + 1), static_cast<std::size_t>(d + 1)});
}

SpherePoint PointSet::point(std::size_t i) const {
  auto s = (*this)[i];
  return SpherePoint(std::vector<double>(s.begin(), s.end()));
}

void PointSet::push_back(std::span<const double> x) {
  if (static_cast<int>(x.size()) != d_ + 1) throw std::invalid_argument("PointSet: dimension mismatch");
  std::size_t at = data_.size();
  data_.insert(data_.end(), x.begin(), x.end());
  normalize({data_.data() + at, x.size()});
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

void sample_uniform_into(int d, Stream& rng, std::span<double> out) {
  std::normal_distribution<double> gauss;
  for (;;) {
    double s = 0;
    for (int k = 0; k <= d; ++k) {
      out[static_cast<std::size_t>(k)] = gauss(rng);
      s += out[static_cast<std::size_t>(k)] * out[static_cast<std::size_t>(k)];
    }
    if (s > 1e-300) break;
  }
  normalize(out.first(static_cast<std::size_t>(d + 1)));
}

PointSet sample_uniform(int d, std::size_t n, Stream& rng) {
  if (d < 1) throw std::invalid_argument("sample_uniform: need d >= 1");
  std::vector<double> buf(n * static_cast<std::size_t>(d + 1));
  for (std::size_t i = 0; i < n; ++i)
    sample_uniform_into(d, rng, {buf.data() + i * static_cast<std::size_t>(d + 1), static_cast<std::size_t>(d + 1)});
  PointSet out(d);
  for (std::size_t i = 0; i < n; ++i)
    out.push_back({buf.data() + i * static_cast<std::size_t>(d + 1), static_cast<std::size_t>(d + 1)});
  return out;
}

PointSet sample_uniform(int d, std::size_t n, std::uint64_t seed) {
  Stream rng = Stream::derive(seed, {0x5348ULL});
  return sample_uniform(d, n, rng);
}

double geodesic_distance(std::span<const double> u, std::span<const double> v) {
  check_same_dim(u, v);
  return std::acos(std::clamp(dot(u, v), -1.0, 1.0));
}

double chord_distance(std::span<const double> u, std::span<const double> v) {
  check_same_dim(u, v);
  double s = 0;
  for (std::size_t i = 0; i < u.size(); ++i) s += (u[i] - v[i]) * (u[i] - v[i]);
  return std::sqrt(s);
}

double chord_of_angle(double angle) { return 2.0 * std::sin(angle / 2.0); }

ProjectedPoint stereo_project(std::span<const double> x) {
  if (x.size() < 2) throw std::invalid_argument("stereo_project: need d >= 1");
  const std::size_t d = x.size() - 1;
  double denom = 1.0 - x[d];
  if (!(denom > kPoleTolerance)) throw std::domain_error("stereo_project: point at the projection pole");
  ProjectedPoint z;
  z.coords.resize(d);
  for (std::size_t i = 0; i < d; ++i) z.coords[i] = x[i] / denom;
  return z;
}

SpherePoint stereo_inverse(std::span<const double> z) {
  if (z.empty()) throw std::invalid_argument("stereo_inverse: need d >= 1");
  double r2 = 0;
  for (double v : z) r2 += v * v;
  std::vector<double> x(z.size() + 1);
  for (std::size_t i = 0; i < z.size(); ++i) x[i] = 2.0 * z[i] / (1.0 + r2);
  x[z.size()] = (r2 - 1.0) / (r2 + 1.0);
  return SpherePoint(std::move(x));
}

ProjectedPoint antipodal_projected(const ProjectedPoint& z) {
  double r2 = 0;
  for (double v : z.coords) r2 += v * v;
  if (!(r2 > 0)) throw std::domain_error("antipodal_projected: the origin maps to the pole");
  ProjectedPoint out;
  out.coords.resize(z.coords.size());
  for (std::size_t i = 0; i < z.coords.size(); ++i) out.coords[i] = -z.coords[i] / r2;
  return out;
}

double ball_volume(int d) {
  if (d < 0) throw std::invalid_argument("ball_volume: negative dimension");
  return std::pow(std::numbers::pi, d / 2.0) / std::tgamma(d / 2.0 + 1.0);
}

double sphere_area(int d) { return (d + 1) * ball_volume(d + 1); }

double projected_density_at_radius(double radius, int d) {
  return std::pow(2.0 / (1.0 + radius * radius), d) / sphere_area(d);
}

double projected_density(std::span<const double> z, int d) {
  if (static_cast<int>(z.size()) != d) throw std::invalid_argument("projected_density: dimension mismatch");
  double r2 = 0;
  for (double v : z) r2 += v * v;
  return std::pow(2.0 / (1.0 + r2), d) / sphere_area(d);
}

double projected_radius_cdf(double radius, int d) {
  if (d < 1) throw std::invalid_argument("projected_radius_cdf: need d >= 1");
  if (!(radius > 0)) return 0.0;
  // Surface of S^{d-1} in R^d times the radial profile.
  const double shell = d * ball_volume(d);
  auto f = [&](double r) { return shell * std::pow(r, d - 1) * projected_density_at_radius(r, d); };
  if (radius <= 1.0) return integrate(f, 0.0, radius);
  // Tail substitution r = 1/s keeps the integrand bounded on the long range.
  auto g = [&](double s) { return s > 0 ? f(1.0 / s) / (s * s) : 0.0; };
  return integrate(f, 0.0, 1.0) + integrate(g, 1.0 / radius, 1.0);
}

double projected_density_mass(int d) {
  return projected_radius_cdf(std::numeric_limits<double>::infinity(), d);
}

double cap_measure(double opening, int d) {
  if (d < 1) throw std::invalid_argument("cap_measure: need d >= 1");
  if (!(opening > 0 && opening <= std::numbers::pi)) throw std::invalid_argument("cap_measure: opening must be in (0, pi]");
  auto w = [d](double t) { return std::pow(std::sin(t), d - 1); };
  const double half = integrate(w, 0.0, std::numbers::pi / 2);
  const double total = 2.0 * half;
  if (opening <= std::numbers::pi / 2) return integrate(w, 0.0, opening) / total;
  // Integrate the complement so small remainders near pi keep full precision.
  const double rest = integrate(w, opening, std::numbers::pi);
  return std::clamp(1.0 - rest / total, 0.0, 1.0);
}

double connection_coefficient(int d) {
  if (d < 1) throw std::invalid_argument("connection_coefficient: need d >= 1");
  return std::tgamma((d + 3) / 2.0) / ((d + 1) * std::sqrt(std::numbers::pi) * std::tgamma((d + 2) / 2.0));
}

double near_pole_delta(double eps) {
  if (!(eps > 0)) throw std::invalid_argument("near_pole_delta: eps must be positive");
  double c = (1.0 - 2.0 * eps) / (1.0 + 2.0 * eps);
  return std::acos(std::max(c, -1.0)) / 3.0 * (1.0 - 1e-12);
}

DistortionReport distortion_check(std::span<const double> a, std::span<const double> b, double t, double eps) {
  check_same_dim(a, b);
  if (!(t < 1)) throw std::invalid_argument("distortion_check: cutoff t must be below 1");
  if (!(eps > 0)) throw std::invalid_argument("distortion_check: eps must be positive");
  const std::size_t d = a.size() - 1;
  if (a[d] > t || b[d] > t) throw std::invalid_argument("distortion_check: point above the height cutoff");
  DistortionReport rep;
  rep.geodesic = geodesic_distance(a, b);
  auto pa = stereo_project(a), pb = stereo_project(b);
  double s = 0;
  for (std::size_t i = 0; i < d; ++i) s += (pa.coords[i] - pb.coords[i]) * (pa.coords[i] - pb.coords[i]);
  rep.projected = std::sqrt(s);
  // Relative slack absorbs rounding in acos and the projection.
  const double tol = 1e-12 * (1.0 + rep.geodesic);
  rep.lower_ok = rep.projected + tol >= 0.5 * rep.geodesic;
  rep.general_factor = (2.0 - t) / ((1.0 - t) * (1.0 - t));
  rep.general_ok = rep.projected <= rep.general_factor * rep.geodesic + tol;
  const double delta = near_pole_delta(eps);
  std::vector<double> south(d + 1, 0.0);
  south[d] = -1.0;
  if (geodesic_distance(a, south) < delta && geodesic_distance(b, south) < delta) {
    rep.near_pole_applicable = true;
    rep.near_pole_factor = 0.5 + eps;
    rep.near_pole_ok = rep.projected <= rep.near_pole_factor * rep.geodesic + tol;
  }
  return rep;
}

}  // namespace borsuk::sphere
