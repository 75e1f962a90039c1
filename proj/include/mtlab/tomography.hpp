#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mtlab/geometry.hpp"
#include "mtlab/grid.hpp"

namespace mtlab {

struct Slab {
  Point center{};
  Point normal{};  // unit normal of the slab plane
  double halfwidth = 0.5;
  double radius = 1.0;
  // Half-open thickness test so that stacked slabs at unit spacing tile exactly.
  bool contains(const Point& x) const;
  Slab dilated_thickness(double factor) const;
};

// Unit-thickness neighbourhood of the graph x_n = Gamma(x') over a base ball,
// with Gamma(w) = offset + <slope, w> + amplitude * sin(<wavevector, w> + phase).
struct Flake {
  Omega base_center{};
  double base_radius = 1.0;
  double offset = 0.0;
  Omega slope{};
  double amplitude = 0.0;
  Omega wavevector{};
  double phase = 0.0;
  double halfwidth = 0.5;

  double height(const Omega& w) const;
  Omega height_grad(const Omega& w) const;
  bool contains(const Point& x, int n) const;
  // Smallest angle between a tangent plane and the vertical over sampled base points.
  double tangent_angle_min(int n, int samples = 4096) const;
};

inline constexpr double kNearlyHorizontalAngle = 0.02;

Weight make_slab_weight(const SpatialGrid& grid, const std::vector<Slab>& slabs, const std::vector<double>& coeffs,
                        bool require_disjoint = true);
// w* companion: every slab thickened by `factor` with the same coefficients.
Weight make_slab_companion(const SpatialGrid& grid, const std::vector<Slab>& slabs, const std::vector<double>& coeffs,
                           double factor = 3.0);
Weight make_flake_weight(const SpatialGrid& grid, const std::vector<Flake>& flakes, const std::vector<double>& coeffs,
                         bool require_nearly_horizontal = true);
Weight make_ball_union_weight(const SpatialGrid& grid, const std::vector<Point>& centers, double radius = 1.0);
Weight make_tube_weight(const SpatialGrid& grid, const Tube& tube);
double slab_parallelism(const Slab& s, const SurfacePatch& patch, int samples_per_axis = 64);

// Line integral of the multilinear interpolant of w along x(t) = p + t u, trapezoid rule.
double line_integral(const Weight& w, const Point& p, const Point& u, double step);

struct Line {
  Point point{};
  Point direction{};
};

struct XrayResult {
  double value = 0.0;
  Line line;
  double coarse_value = 0.0;  // before the refinement pass
};

struct XrayOptions {
  double angular_res = 0.0;  // 0 selects pi / (4 * R_box)
  double offset_res = 0.5;
  bool refine = true;
  // Ray-march every sampled (direction, offset) pair instead of ranking candidates by strip projection.
  bool exhaustive = false;
};

XrayResult xray_sup(const Weight& w, const XrayOptions& opt = {});
// Restricted to a given list of unit directions.
XrayResult xray_sup_directions(const Weight& w, const std::vector<Point>& dirs, const XrayOptions& opt = {});
// Directions within `tolerance` of some normal N(w) over the given parameter points.
std::vector<Point> directions_near_normals(const SurfacePatch& patch, const std::vector<Omega>& pts, double tolerance,
                                           double angular_res);
// Exact chord sums for unions of balls of equal radius.
XrayResult xray_sup_balls(const std::vector<Point>& centers, double radius, int n, const XrayOptions& opt = {});
// sup over lines parallel to the tube axis of X(w chi_T).
double tube_line_sup(const Weight& w, const Tube& t, double offset_res = 0.5);

double tube_mass(const Weight& w, const Tube& t);

// Directions normal to the caps in E, sampled on a parameter lattice of the given spacing.
std::vector<Point> perp_directions(const SurfacePatch& patch, const std::vector<Cap>& E, double lattice_spacing);

struct AmalgamResult {
  double value = 0.0;
  Tube argmax{};
  double sup_segment_density = 0.0;  // sup_S w(S)/|S|
  double sup_tube_mass = 0.0;        // sup_T w(T)
  double comparison_bound = 0.0;     // (sup_S w(S)/|S|)^{(n-1)/(n+1)} * (sup_T w(T))^{2/(n+1)}
  bool cell_mode = false;
  std::size_t tubes = 0;
};

AmalgamResult a_functional(const Weight& w, double rho, double R, const std::vector<Cap>& E, const SurfacePatch& patch);
// Brute-force oracle for a_functional: per-tube cell scan with per-segment accumulation.
double a_functional_direct(const Weight& w, double rho, double R, const std::vector<Cap>& E, const SurfacePatch& patch);
// sup_T (int_T w^{(n+1)/2})^{2/(n+1)} over the same tube family, by a direct per-tube scan.
double tube_mass_functional_direct(const Weight& w, double R, const std::vector<Cap>& E, const SurfacePatch& patch);
// The same functional through the binned sliding-window path (fast).
double tube_mass_functional(const Weight& w, double R, const std::vector<Cap>& E, const SurfacePatch& patch);

// Running-average tessellation inequality for one direction: the worst ratio
// LHS / RHS over all S_{lambda rho} blocks of the lambda*rho bin lattice.
double tessellation_ratio(const Weight& w, const Point& direction, double rho, double lambda);

}  // namespace mtlab
