#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "borsuk/rng.hpp"

namespace borsuk::sphere {

/// A point of S^d stored as a unit vector in R^{d+1}. Coordinates are
/// renormalized on construction.
class SpherePoint {
 public:
  explicit SpherePoint(std::vector<double> coords);

  int dim() const noexcept { return static_cast<int>(coords_.size()) - 1; }
  std::span<const double> coords() const noexcept { return coords_; }
  double operator[](std::size_t i) const noexcept { return coords_[i]; }
  SpherePoint antipode() const;

  static SpherePoint south_pole(int d);
  static SpherePoint north_pole(int d);
  static SpherePoint basis(int d, int axis);

 private:
  std::vector<double> coords_;
};

/// A point of R^d, the image of a SpherePoint under stereographic projection.
struct ProjectedPoint {
  std::vector<double> coords;

  int dim() const noexcept { return static_cast<int>(coords.size()); }
  double norm() const noexcept;
};

/// Open spherical cap {x : dist(center, x) < opening}.
class Cap {
 public:
  Cap(SpherePoint center, double opening);

  const SpherePoint& center() const noexcept { return center_; }
  double opening() const noexcept { return opening_; }
  bool contains(std::span<const double> x) const;

 private:
  SpherePoint center_;
  double opening_;
};

/// Immutable-after-build list of points of S^d in one flat buffer
/// (stride d+1). This is the representation the graph builders consume.
class PointSet {
 public:
  PointSet() = default;
  explicit PointSet(int d) : d_(d) {}
  PointSet(int d, std::vector<double> flat);

  int dim() const noexcept { return d_; }
  int stride() const noexcept { return d_ + 1; }
  std::size_t size() const noexcept { return d_ < 0 ? 0 : data_.size() / static_cast<std::size_t>(d_ + 1); }
  bool empty() const noexcept { return size() == 0; }

  std::span<const double> operator[](std::size_t i) const noexcept {
    return {data_.data() + i * static_cast<std::size_t>(d_ + 1), static_cast<std::size_t>(d_ + 1)};
  }
  std::span<const double> flat() const noexcept { return data_; }
  SpherePoint point(std::size_t i) const;

  void push_back(std::span<const double> x);
  void push_back(const SpherePoint& p) { push_back(p.coords()); }

 private:
  int d_ = -1;
  std::vector<double> data_;
};

double dot(std::span<const double> a, std::span<const double> b);

/// n i.i.d. uniform points of S^d (normalized Gaussians).
PointSet sample_uniform(int d, std::size_t n, Stream& rng);
PointSet sample_uniform(int d, std::size_t n, std::uint64_t seed);
/// Single uniform unit vector written into `out` (length d+1).
void sample_uniform_into(int d, Stream& rng, std::span<double> out);

/// Angle between u and v in [0, pi]; the dot product is clamped first.
double geodesic_distance(std::span<const double> u, std::span<const double> v);
inline double geodesic_distance(const SpherePoint& u, const SpherePoint& v) {
  return geodesic_distance(u.coords(), v.coords());
}
/// Euclidean distance ||u - v||.
double chord_distance(std::span<const double> u, std::span<const double> v);
inline double chord_distance(const SpherePoint& u, const SpherePoint& v) {
  return chord_distance(u.coords(), v.coords());
}
/// Chord length 2 sin(angle / 2).
double chord_of_angle(double angle);

/// Closest admissible distance from the north pole, on 1 - x_{d+1}.
inline constexpr double kPoleTolerance = 1e-9;

/// Stereographic projection from the north pole. Throws std::domain_error for
/// points within kPoleTolerance of the pole.
ProjectedPoint stereo_project(std::span<const double> x);
inline ProjectedPoint stereo_project(const SpherePoint& x) { return stereo_project(x.coords()); }
/// Inverse stereographic projection; total on R^d.
SpherePoint stereo_inverse(std::span<const double> z);
inline SpherePoint stereo_inverse(const ProjectedPoint& z) { return stereo_inverse(z.coords); }
/// The antipodal map in projected coordinates, z -> -z / ||z||^2. Throws
/// std::domain_error at the origin (whose antipode is the pole).
ProjectedPoint antipodal_projected(const ProjectedPoint& z);

/// Volume of the unit ball in R^d.
double ball_volume(int d);
/// Surface area of S^d, equal to (d+1) * ball_volume(d+1).
double sphere_area(int d);
/// Density of pi(U) for U uniform on S^d.
double projected_density(std::span<const double> z, int d);
double projected_density_at_radius(double radius, int d);
/// P(||pi(U)|| <= radius), by adaptive quadrature of the radial density.
double projected_radius_cdf(double radius, int d);
/// Integral of projected_density over R^d, by quadrature in the radius.
double projected_density_mass(int d);

/// Normalized measure of a cap with the given opening on S^d, by adaptive
/// Gauss-Kronrod quadrature of sin^{d-1}. Monotone in opening.
double cap_measure(double opening, int d);
/// Small-angle coefficient of the pair connection probability:
/// Gamma((d+3)/2) / ((d+1) sqrt(pi) Gamma((d+2)/2)).
double connection_coefficient(int d);

/// Largest delta (up to a relative 1e-12 back-off) with
/// 1 / (1 + cos(3 delta)) < 1/2 + eps.
double near_pole_delta(double eps);

struct DistortionReport {
  double geodesic = 0;
  double projected = 0;
  // ||pi(a) - pi(b)|| >= geodesic / 2.
  bool lower_ok = true;
  // Only evaluated when both points lie in the south-pole cap of radius delta.
  bool near_pole_applicable = false;
  bool near_pole_ok = true;
  double near_pole_factor = 0;
  // ||pi(a) - pi(b)|| <= (2 - t) / (1 - t)^2 * geodesic.
  double general_factor = 0;
  bool general_ok = true;

  bool ok() const noexcept { return lower_ok && near_pole_ok && general_ok; }
};

/// Evaluates the three metric distortion bounds of stereographic projection
/// on the pair (a, b). Throws std::invalid_argument if either point lies above
/// the height cutoff t (t < 1), or eps <= 0.
DistortionReport distortion_check(std::span<const double> a, std::span<const double> b, double t,
                                  double eps = 0.05);

}  // namespace borsuk::sphere
