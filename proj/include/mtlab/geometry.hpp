#pragma once

#include <string>
#include <vector>

#include "mtlab/core.hpp"

namespace mtlab {

// Graph patch Sigma(w) = (w, h(w)) over the ball |w| <= domain_radius in R^{n-1}.
class SurfacePatch {
 public:
  enum class Kind { Paraboloid, SphereCap };

  // h(w) = curvature * |w|^2 / 2.
  static SurfacePatch paraboloid(int n, double curvature = 1.0, double domain_radius = 0.5);
  // h(w) = |w|^2 / 200 on the unit ball; normals stay within 1/100 of vertical.
  static SurfacePatch shallow(int n);
  // h(w) = 1 - sqrt(1 - |w|^2); requires domain_radius < 1.
  static SurfacePatch sphere_cap(int n, double domain_radius = 0.5);
  // Lookup by name: "paraboloid", "shallow", "sphere".
  static SurfacePatch by_name(const std::string& name, int n, double domain_radius, double curvature = 1.0);

  int dim() const { return n_; }
  Kind kind() const { return kind_; }
  double domain_radius() const { return domain_radius_; }
  double curvature() const { return curvature_; }
  double hess_bound() const { return hess_bound_; }
  std::string name() const;

  bool in_domain(const Omega& w) const { return norm(w) <= domain_radius_ * (1.0 + 1e-12); }
  double height(const Omega& w) const;
  Omega grad(const Omega& w) const;
  // Largest |grad h| over the domain (attained on the boundary for both kinds).
  double max_grad() const;
  // Hessian eigenvalues at w (n-1 of them, the second is 0 when n = 2).
  Omega hess_eigenvalues(const Omega& w) const;

  bool operator==(const SurfacePatch& o) const {
    return n_ == o.n_ && kind_ == o.kind_ && curvature_ == o.curvature_ && domain_radius_ == o.domain_radius_;
  }

 private:
  SurfacePatch(int n, Kind k, double c, double r);
  int n_;
  Kind kind_;
  double curvature_;
  double domain_radius_;
  double hess_bound_;
};

struct Cap {
  Omega center{};
  double radius = 0.0;
  bool contains(const Omega& w) const { return norm(w - center) <= radius; }
};

struct Tube {
  Point anchor{};     // centre of the tube
  Point direction{};  // unit vector along the axis
  double radius = 0.0;
  double length = 0.0;

  // Validated constructor; throws GeometryError on a non-unit direction or non-positive size.
  static Tube make(const Point& anchor, const Point& direction, double radius, double length);
  double axial(const Point& x) const { return dot(x - anchor, direction); }
  double radial(const Point& x) const;
  bool contains(const Point& x) const {
    return std::abs(axial(x)) <= 0.5 * length && radial(x) <= radius;
  }
  double volume(int n) const;
};

struct NormalInfo {
  Point direction{};
  double angle_to_vertical = 0.0;
};

Point surface_point(const SurfacePatch& patch, const Omega& w);
NormalInfo normal(const SurfacePatch& patch, const Omega& w);
std::vector<Cap> cap_cover(const SurfacePatch& patch, double radius);

// Finite-difference validation of a patch: gradient consistency and Hessian lower bound.
struct PatchCertificate {
  double max_grad_error = 0.0;
  double min_hess_eigenvalue = 0.0;
  bool gradient_consistent = false;
  bool convex = false;
  // The normalisation |grad h| <= 1/100 holds on the whole domain.
  bool near_vertical = false;
};
PatchCertificate validate_patch(const SurfacePatch& patch, std::uint64_t seed = 1, int samples = 200);

// Orthonormal completion of a unit vector u in R^n: returns n-1 vectors orthogonal to u.
std::array<Point, 2> orthonormal_complement(const Point& u, int n);

}  // namespace mtlab
