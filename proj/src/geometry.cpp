#include "mtlab/geometry.hpp"

#include <algorithm>
#include <random>

namespace mtlab {

SurfacePatch::SurfacePatch(int n, Kind k, double c, double r) : n_(n), kind_(k), curvature_(c), domain_radius_(r) {
  if (n != 2 && n != 3) throw ArgumentError("surface dimension must be 2 or 3");
  if (!(r > 0.0)) throw ArgumentError("domain radius must be positive");
  if (k == Kind::SphereCap && r >= 1.0) throw ArgumentError("sphere cap needs domain radius < 1");
  if (k == Kind::Paraboloid && !(c > 0.0)) throw ArgumentError("curvature must be positive");
  // For the sphere cap the smallest Hessian eigenvalue is 1 (at the origin).
  hess_bound_ = (k == Kind::Paraboloid) ? c : 1.0;
}

SurfacePatch SurfacePatch::paraboloid(int n, double curvature, double domain_radius) {
  return SurfacePatch(n, Kind::Paraboloid, curvature, domain_radius);
}

SurfacePatch SurfacePatch::shallow(int n) { return SurfacePatch(n, Kind::Paraboloid, 0.01, 1.0); }

SurfacePatch SurfacePatch::sphere_cap(int n, double domain_radius) {
  return SurfacePatch(n, Kind::SphereCap, 1.0, domain_radius);
}

SurfacePatch SurfacePatch::by_name(const std::string& name, int n, double domain_radius, double curvature) {
  if (name == "paraboloid") return paraboloid(n, curvature, domain_radius);
  if (name == "shallow") return shallow(n);
  if (name == "sphere") return sphere_cap(n, domain_radius);
  throw ArgumentError("unknown surface '" + name + "'");
}

std::string SurfacePatch::name() const {
  if (kind_ == Kind::SphereCap) return "sphere";
  return curvature_ == 0.01 && domain_radius_ == 1.0 ? "shallow" : "paraboloid";
}

double SurfacePatch::height(const Omega& w) const {
  double r2 = dot(w, w);
  if (kind_ == Kind::Paraboloid) return 0.5 * curvature_ * r2;
  return 1.0 - std::sqrt(1.0 - r2);
}

Omega SurfacePatch::grad(const Omega& w) const {
  if (kind_ == Kind::Paraboloid) return curvature_ * w;
  double s = std::sqrt(1.0 - dot(w, w));
  return (1.0 / s) * w;
}

double SurfacePatch::max_grad() const {
  Omega edge{domain_radius_, 0.0};
  return norm(grad(edge));
}

Omega SurfacePatch::hess_eigenvalues(const Omega& w) const {
  if (kind_ == Kind::Paraboloid) return {curvature_, n_ == 3 ? curvature_ : 0.0};
  double r2 = dot(w, w);
  double s = std::sqrt(1.0 - r2);
  // Radial eigenvalue (1-r^2)^{-3/2}, tangential (1-r^2)^{-1/2}.
  double radial = 1.0 / (s * s * s);
  double tangential = 1.0 / s;
  if (n_ == 2) return {radial, 0.0};
  return {std::min(radial, tangential), std::max(radial, tangential)};
}

double Tube::radial(const Point& x) const {
  Point d = x - anchor;
  double a = dot(d, direction);
  Point perp = d - a * direction;
  return norm(perp);
}

Tube Tube::make(const Point& anchor, const Point& direction, double radius, double length) {
  if (std::abs(norm(direction) - 1.0) > 1e-12) throw GeometryError("tube direction is not a unit vector");
  if (!(radius > 0.0) || !(length > 0.0)) throw GeometryError("tube radius and length must be positive");
  return Tube{anchor, direction, radius, length};
}

double Tube::volume(int n) const {
  if (n == 2) return 2.0 * radius * length;
  return kPi * radius * radius * length;
}

Point surface_point(const SurfacePatch& patch, const Omega& w) {
  if (!patch.in_domain(w)) throw DomainError("parameter point outside the patch domain");
  double h = patch.height(w);
  if (patch.dim() == 2) return {w[0], h, 0.0};
  return {w[0], w[1], h};
}

NormalInfo normal(const SurfacePatch& patch, const Omega& w) {
  if (!patch.in_domain(w)) throw DomainError("parameter point outside the patch domain");
  Omega g = patch.grad(w);
  Point v = patch.dim() == 2 ? Point{g[0], -1.0, 0.0} : Point{g[0], g[1], -1.0};
  double len = norm(v);
  NormalInfo info;
  info.direction = (1.0 / len) * v;
  info.angle_to_vertical = std::atan(norm(g));
  return info;
}

std::vector<Cap> cap_cover(const SurfacePatch& patch, double radius) {
  double rd = patch.domain_radius();
  if (!(radius > 0.0) || radius > 2.0 * rd * (1.0 + 1e-12)) throw ArgumentError("cap radius must lie in (0, 2*domain_radius]");
  std::vector<Cap> caps;
  if (radius >= 2.0 * rd * (1.0 - 1e-12)) {
    caps.push_back(Cap{{0.0, 0.0}, radius});
    return caps;
  }
  int kmax = static_cast<int>(std::floor(rd / radius + 1e-9));
  int m = patch.dim() - 1;
  for (int i = -kmax; i <= kmax; ++i) {
    for (int j = (m == 2 ? -kmax : 0); j <= (m == 2 ? kmax : 0); ++j) {
      Omega c{i * radius, j * radius};
      if (norm(c) <= rd * (1.0 + 1e-12)) caps.push_back(Cap{c, radius});
    }
  }
  return caps;
}

PatchCertificate validate_patch(const SurfacePatch& patch, std::uint64_t seed, int samples) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  int m = patch.dim() - 1;
  double rd = patch.domain_radius();
  PatchCertificate cert;
  cert.min_hess_eigenvalue = 1e300;
  const double eps = 1e-6;
  for (int s = 0; s < samples; ++s) {
    Omega w{};
    do {
      w = {u(rng) * rd, m == 2 ? u(rng) * rd : 0.0};
    } while (norm(w) > rd * (1.0 - 1e-3));
    Omega g = patch.grad(w);
    for (int a = 0; a < m; ++a) {
      Omega p = w, q = w;
      p[a] += eps;
      q[a] -= eps;
      double fd = (patch.height(p) - patch.height(q)) / (2.0 * eps);
      cert.max_grad_error = std::max(cert.max_grad_error, std::abs(fd - g[a]));
    }
    // Hessian by differencing the analytic gradient.
    double hxx = (patch.grad({w[0] + eps, w[1]})[0] - patch.grad({w[0] - eps, w[1]})[0]) / (2 * eps);
    double lo = hxx;
    if (m == 2) {
      double hyy = (patch.grad({w[0], w[1] + eps})[1] - patch.grad({w[0], w[1] - eps})[1]) / (2 * eps);
      double hxy = (patch.grad({w[0], w[1] + eps})[0] - patch.grad({w[0], w[1] - eps})[0]) / (2 * eps);
      double tr = hxx + hyy, det = hxx * hyy - hxy * hxy;
      lo = 0.5 * tr - std::sqrt(std::max(0.0, 0.25 * tr * tr - det));
    }
    cert.min_hess_eigenvalue = std::min(cert.min_hess_eigenvalue, lo);
  }
  cert.gradient_consistent = cert.max_grad_error <= 1e-6;
  cert.convex = cert.min_hess_eigenvalue >= patch.hess_bound() * (1.0 - 1e-4);
  cert.near_vertical = patch.max_grad() <= 0.01 + 1e-15;
  return cert;
}

std::array<Point, 2> orthonormal_complement(const Point& u, int n) {
  std::array<Point, 2> out{};
  if (n == 2) {
    out[0] = {-u[1], u[0], 0.0};
    return out;
  }
  // Gram-Schmidt against the coordinate axis least aligned with u.
  int k = 0;
  for (int a = 1; a < 3; ++a)
    if (std::abs(u[a]) < std::abs(u[k])) k = a;
  Point e{};
  e[k] = 1.0;
  Point p = e - dot(e, u) * u;
  p = (1.0 / norm(p)) * p;
  Point q{u[1] * p[2] - u[2] * p[1], u[2] * p[0] - u[0] * p[2], u[0] * p[1] - u[1] * p[0]};
  out[0] = p;
  out[1] = q;
  return out;
}

}  // namespace mtlab
