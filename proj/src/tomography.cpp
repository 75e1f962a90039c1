#include "mtlab/tomography.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

namespace mtlab {

namespace {

// Inclusive index range of grid cells whose centres may lie in the axis-aligned box [lo, hi].
struct IndexBox {
  std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
  bool empty = false;
};

IndexBox box_indices(const SpatialGrid& g, const Point& lo, const Point& hi) {
  IndexBox b;
  for (int a = 0; a < g.n; ++a) {
    b.lo[a] = std::max(0, static_cast<int>(std::floor((lo[a] - g.origin[a]) / g.spacing)));
    b.hi[a] = std::min(g.extent[a] - 1, static_cast<int>(std::ceil((hi[a] - g.origin[a]) / g.spacing)));
    if (b.lo[a] > b.hi[a]) b.empty = true;
  }
  return b;
}

template <class F>
void for_each_in_box(const SpatialGrid& g, const IndexBox& b, F&& f) {
  if (b.empty) return;
  for (int i0 = b.lo[0]; i0 <= b.hi[0]; ++i0)
    for (int i1 = b.lo[1]; i1 <= b.hi[1]; ++i1)
      for (int i2 = b.lo[2]; i2 <= b.hi[2]; ++i2) {
        std::size_t k = g.index(i0, i1, i2);
        f(k, g.point(k));
      }
}

Omega lateral_part(const Point& x, int n) { return n == 2 ? Omega{x[0], 0.0} : Omega{x[0], x[1]}; }

IndexBox tube_box(const SpatialGrid& g, const Tube& t) {
  double e = 0.5 * t.length + t.radius + g.spacing;
  Point lo{t.anchor[0] - e, t.anchor[1] - e, t.anchor[2] - e};
  Point hi{t.anchor[0] + e, t.anchor[1] + e, t.anchor[2] + e};
  return box_indices(g, lo, hi);
}

struct CellMass {
  Point x;
  double m;
};

std::vector<CellMass> nonzero_cells(const Weight& w) {
  std::vector<CellMass> out;
  const double vol = w.grid.cell_volume();
  for (std::size_t k = 0; k < w.samples.size(); ++k)
    if (w.samples[k] != 0.0) out.push_back({w.grid.point(k), w.samples[k] * vol});
  return out;
}

double box_radius(const SpatialGrid& g) {
  double r = 0.0;
  for (int a = 0; a < g.n; ++a) r = std::max(r, std::max(std::abs(g.origin[a]), std::abs(g.origin[a] + g.spacing * (g.extent[a] - 1))));
  return r;
}

Point direction_2d(double th) { return {std::cos(th), std::sin(th), 0.0}; }

Point direction_3d(double polar, double az) {
  return {std::sin(polar) * std::cos(az), std::sin(polar) * std::sin(az), std::cos(polar)};
}

// Hemisphere direction net with spacing `res` (upper hemisphere, x_3 >= 0).
std::vector<Point> hemisphere(double res) {
  std::vector<Point> dirs;
  int A = static_cast<int>(std::ceil(0.5 * kPi / res));
  for (int a = 0; a <= A; ++a) {
    double pol = std::min(0.5 * kPi, a * res);
    int K = std::max(1, static_cast<int>(std::ceil(kTwoPi * std::sin(pol) / res)));
    for (int k = 0; k < K; ++k) dirs.push_back(direction_3d(pol, kTwoPi * k / K));
  }
  return dirs;
}

std::vector<Point> circle_dirs(double res) {
  std::vector<Point> dirs;
  int K = static_cast<int>(std::ceil(kPi / res));
  for (int k = 0; k < K; ++k) dirs.push_back(direction_2d(kPi * k / K));
  return dirs;
}

struct ProjectionBest {
  double value = 0.0;
  Point dir{};
  Point point{};
};

// Strip-averaged line integrals along direction u via tent splatting of the cell masses.
ProjectionBest project_best(const std::vector<CellMass>& cells, const Point& u, int n, double h) {
  ProjectionBest best;
  best.dir = u;
  if (cells.empty()) return best;
  auto frame = orthonormal_complement(u, n);
  if (n == 2) {
    double smin = 1e300, smax = -1e300;
    for (const auto& c : cells) {
      double s = dot(c.x, frame[0]);
      smin = std::min(smin, s);
      smax = std::max(smax, s);
    }
    long j0 = static_cast<long>(std::floor(smin / h)) - 1;
    std::size_t nb = static_cast<std::size_t>(std::ceil(smax / h) - j0 + 2);
    std::vector<double> bins(nb, 0.0);
    for (const auto& c : cells) {
      double s = dot(c.x, frame[0]) / h - j0;
      long j = static_cast<long>(std::floor(s));
      double f = s - j;
      bins[j] += c.m * (1.0 - f);
      bins[j + 1] += c.m * f;
    }
    std::size_t arg = std::max_element(bins.begin(), bins.end()) - bins.begin();
    best.value = bins[arg] / h;
    best.point = ((static_cast<long>(arg) + j0) * h) * frame[0];
    return best;
  }
  double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
  for (const auto& c : cells) {
    double a = dot(c.x, frame[0]), b = dot(c.x, frame[1]);
    amin = std::min(amin, a);
    amax = std::max(amax, a);
    bmin = std::min(bmin, b);
    bmax = std::max(bmax, b);
  }
  long ja = static_cast<long>(std::floor(amin / h)) - 1, jb = static_cast<long>(std::floor(bmin / h)) - 1;
  std::size_t na = static_cast<std::size_t>(std::ceil(amax / h) - ja + 2);
  std::size_t nb = static_cast<std::size_t>(std::ceil(bmax / h) - jb + 2);
  std::vector<double> bins(na * nb, 0.0);
  for (const auto& c : cells) {
    double a = dot(c.x, frame[0]) / h - ja, b = dot(c.x, frame[1]) / h - jb;
    long i = static_cast<long>(std::floor(a)), j = static_cast<long>(std::floor(b));
    double fa = a - i, fb = b - j;
    bins[i * nb + j] += c.m * (1 - fa) * (1 - fb);
    bins[(i + 1) * nb + j] += c.m * fa * (1 - fb);
    bins[i * nb + j + 1] += c.m * (1 - fa) * fb;
    bins[(i + 1) * nb + j + 1] += c.m * fa * fb;
  }
  std::size_t arg = std::max_element(bins.begin(), bins.end()) - bins.begin();
  best.value = bins[arg] / (h * h);
  long ia = static_cast<long>(arg / nb) + ja, ib = static_cast<long>(arg % nb) + jb;
  best.point = (ia * h) * frame[0] + (ib * h) * frame[1];
  return best;
}

// Local search over nearby directions and offsets using an arbitrary line functional.
template <class F>
void refine_line(int n, double ares, double ores, bool fix_direction, Line& line, double& value, F&& eval) {
  for (int level = 0; level < 3; ++level) {
    double da = ares * std::pow(0.25, level + 1) * 2.0;
    double ds = ores * std::pow(0.25, level + 1) * 2.0;
    Line center = line;
    auto fr = orthonormal_complement(center.direction, n);
    int ka = fix_direction ? 0 : 4;
    int kb = (n == 3 && !fix_direction) ? 4 : 0;
    int ko = 4;
    for (int ia = -ka; ia <= ka; ++ia)
      for (int ib = -kb; ib <= kb; ++ib) {
        Point u = center.direction + (ia * da) * fr[0] + (ib * da) * fr[1];
        u = (1.0 / norm(u)) * u;
        auto fu = orthonormal_complement(u, n);
        // Re-express the centre offset in the perturbed frame.
        Point base = center.point - dot(center.point, u) * u;
        for (int j0 = -ko; j0 <= ko; ++j0)
          for (int j1 = (n == 3 ? -ko : 0); j1 <= (n == 3 ? ko : 0); ++j1) {
            Point p = base + (j0 * ds) * fu[0] + (j1 * ds) * fu[1];
            double v = eval(p, u);
            if (v > value) {
              value = v;
              line = {p, u};
            }
          }
      }
  }
}

double bin_of(double v, double width) { return std::floor(v / width + 1e-9); }

}  // namespace

bool Slab::contains(const Point& x) const {
  Point d = x - center;
  double t = dot(d, normal);
  if (t < -halfwidth || t >= halfwidth) return false;
  return norm(d - t * normal) <= radius;
}

Slab Slab::dilated_thickness(double factor) const {
  Slab s = *this;
  s.halfwidth *= factor;
  return s;
}

double Flake::height(const Omega& w) const { return offset + dot(slope, w) + amplitude * std::sin(dot(wavevector, w) + phase); }

Omega Flake::height_grad(const Omega& w) const {
  return slope + (amplitude * std::cos(dot(wavevector, w) + phase)) * wavevector;
}

bool Flake::contains(const Point& x, int n) const {
  Omega xp = lateral_part(x, n);
  if (norm(xp - base_center) > base_radius) return false;
  double t = x[n - 1] - height(xp);
  return t >= -halfwidth && t < halfwidth;
}

double Flake::tangent_angle_min(int n, int samples) const {
  double worst = 0.5 * kPi;
  int k = n == 2 ? samples : static_cast<int>(std::sqrt(static_cast<double>(samples)));
  for (int i = 0; i <= k; ++i)
    for (int j = 0; j <= (n == 3 ? k : 0); ++j) {
      Omega w{base_center[0] + base_radius * (2.0 * i / k - 1.0),
              n == 3 ? base_center[1] + base_radius * (2.0 * j / k - 1.0) : 0.0};
      if (norm(w - base_center) > base_radius) continue;
      double g = norm(height_grad(w));
      worst = std::min(worst, std::atan2(1.0, g));
    }
  return worst;
}

Weight make_slab_weight(const SpatialGrid& grid, const std::vector<Slab>& slabs, const std::vector<double>& coeffs,
                        bool require_disjoint) {
  if (coeffs.size() != slabs.size()) throw ArgumentError("one coefficient per slab is required");
  Weight w(grid);
  std::vector<int> owner(require_disjoint ? grid.size() : 0, -1);
  for (std::size_t i = 0; i < slabs.size(); ++i) {
    const Slab& s = slabs[i];
    if (std::abs(norm(s.normal) - 1.0) > 1e-12) throw GeometryError("slab normal is not a unit vector");
    if (coeffs[i] < 0.0) throw ArgumentError("slab coefficients must be non-negative");
    double e = s.radius + s.halfwidth + grid.spacing;
    auto box = box_indices(grid, s.center - Point{e, e, e}, s.center + Point{e, e, e});
    for_each_in_box(grid, box, [&](std::size_t k, const Point& x) {
      if (!s.contains(x)) return;
      if (require_disjoint) {
        if (owner[k] >= 0 && owner[k] != static_cast<int>(i))
          throw GeometryError("slabs " + std::to_string(owner[k]) + " and " + std::to_string(i) + " overlap");
        owner[k] = static_cast<int>(i);
      }
      w.samples[k] += coeffs[i];
    });
  }
  return w;
}

Weight make_slab_companion(const SpatialGrid& grid, const std::vector<Slab>& slabs, const std::vector<double>& coeffs,
                           double factor) {
  std::vector<Slab> big;
  for (const auto& s : slabs) big.push_back(s.dilated_thickness(factor));
  return make_slab_weight(grid, big, coeffs, false);
}

Weight make_flake_weight(const SpatialGrid& grid, const std::vector<Flake>& flakes, const std::vector<double>& coeffs,
                         bool require_nearly_horizontal) {
  if (coeffs.size() != flakes.size()) throw ArgumentError("one coefficient per flake is required");
  Weight w(grid);
  const int n = grid.n;
  for (std::size_t i = 0; i < flakes.size(); ++i) {
    const Flake& f = flakes[i];
    if (coeffs[i] < 0.0) throw ArgumentError("flake coefficients must be non-negative");
    if (require_nearly_horizontal && f.tangent_angle_min(n) < kNearlyHorizontalAngle)
      throw GeometryError("flake " + std::to_string(i) + " is not nearly horizontal");
    double hmax = std::abs(f.offset) + norm(f.slope) * (norm(f.base_center) + f.base_radius) + std::abs(f.amplitude) +
                  f.halfwidth + grid.spacing;
    Point lo{}, hi{};
    for (int a = 0; a < n - 1; ++a) {
      lo[a] = f.base_center[a] - f.base_radius - grid.spacing;
      hi[a] = f.base_center[a] + f.base_radius + grid.spacing;
    }
    lo[n - 1] = -hmax;
    hi[n - 1] = hmax;
    for_each_in_box(grid, box_indices(grid, lo, hi), [&](std::size_t k, const Point& x) {
      if (f.contains(x, n)) w.samples[k] += coeffs[i];
    });
  }
  return w;
}

Weight make_ball_union_weight(const SpatialGrid& grid, const std::vector<Point>& centers, double radius) {
  Weight w(grid);
  for (const auto& c : centers) {
    double e = radius + grid.spacing;
    for_each_in_box(grid, box_indices(grid, c - Point{e, e, e}, c + Point{e, e, e}), [&](std::size_t k, const Point& x) {
      if (norm(x - c) <= radius) w.samples[k] = 1.0;
    });
  }
  return w;
}

Weight make_tube_weight(const SpatialGrid& grid, const Tube& tube) {
  Weight w(grid);
  for_each_in_box(grid, tube_box(grid, tube), [&](std::size_t k, const Point& x) {
    if (tube.contains(x)) w.samples[k] = 1.0;
  });
  return w;
}

double slab_parallelism(const Slab& s, const SurfacePatch& patch, int samples_per_axis) {
  const int m = patch.dim() - 1;
  const double rd = patch.domain_radius();
  double nu = 0.5 * kPi;
  for (int i = 0; i <= samples_per_axis; ++i)
    for (int j = 0; j <= (m == 2 ? samples_per_axis : 0); ++j) {
      Omega w{rd * (2.0 * i / samples_per_axis - 1.0), m == 2 ? rd * (2.0 * j / samples_per_axis - 1.0) : 0.0};
      if (!patch.in_domain(w)) continue;
      Point N = normal(patch, w).direction;
      nu = std::min(nu, std::asin(std::min(1.0, std::abs(dot(N, s.normal)))));
    }
  return nu;
}

double line_integral(const Weight& w, const Point& p, const Point& u, double step) {
  const auto& g = w.grid;
  const int n = g.n;
  double t0 = -1e300, t1 = 1e300;
  for (int a = 0; a < n; ++a) {
    double lo = g.origin[a], hi = g.origin[a] + g.spacing * (g.extent[a] - 1);
    if (std::abs(u[a]) < 1e-15) {
      if (p[a] < lo || p[a] > hi) return 0.0;
      continue;
    }
    double ta = (lo - p[a]) / u[a], tb = (hi - p[a]) / u[a];
    t0 = std::max(t0, std::min(ta, tb));
    t1 = std::min(t1, std::max(ta, tb));
  }
  if (!(t1 > t0)) return 0.0;
  long K = std::max<long>(1, static_cast<long>(std::ceil((t1 - t0) / step)));
  double h = (t1 - t0) / K;
  auto sample = [&](double t) {
    double f[3];
    long i[3] = {0, 0, 0};
    double fr[3] = {0, 0, 0};
    for (int a = 0; a < n; ++a) {
      f[a] = (p[a] + t * u[a] - g.origin[a]) / g.spacing;
      i[a] = static_cast<long>(std::floor(f[a]));
      fr[a] = f[a] - i[a];
      if (i[a] >= g.extent[a] - 1) {
        i[a] = g.extent[a] - 2;
        fr[a] = 1.0;
      }
      if (i[a] < 0) {
        i[a] = 0;
        fr[a] = 0.0;
      }
    }
    double acc = 0.0;
    for (int c0 = 0; c0 < 2; ++c0)
      for (int c1 = 0; c1 < 2; ++c1)
        for (int c2 = 0; c2 < (n == 3 ? 2 : 1); ++c2) {
          double wt = (c0 ? fr[0] : 1 - fr[0]) * (c1 ? fr[1] : 1 - fr[1]) * (n == 3 ? (c2 ? fr[2] : 1 - fr[2]) : 1.0);
          if (wt == 0.0) continue;
          acc += wt * w.samples[g.index(static_cast<int>(i[0] + c0), static_cast<int>(i[1] + c1),
                                        n == 3 ? static_cast<int>(i[2] + c2) : 0)];
        }
    return acc;
  };
  double s = 0.5 * (sample(t0) + sample(t1));
  for (long k = 1; k < K; ++k) s += sample(t0 + k * h);
  return s * h;
}

namespace {

XrayResult xray_over(const Weight& w, const std::vector<Point>& dirs, const XrayOptions& opt, double ares,
                     bool fix_direction) {
  const int n = w.grid.n;
  auto cells = nonzero_cells(w);
  XrayResult res;
  if (cells.empty() || dirs.empty()) return res;
  const double step = 0.5 * std::min(opt.offset_res, w.grid.spacing);
  auto eval = [&](const Point& p, const Point& u) { return line_integral(w, p, u, step); };
  std::vector<Line> seeds;
  if (opt.exhaustive) {
    for (const Point& u : dirs) {
      auto fr = orthonormal_complement(u, n);
      double lo[2] = {1e300, 1e300}, hi[2] = {-1e300, -1e300};
      for (const auto& c : cells)
        for (int a = 0; a < n - 1; ++a) {
          lo[a] = std::min(lo[a], dot(c.x, fr[a]));
          hi[a] = std::max(hi[a], dot(c.x, fr[a]));
        }
      const double pad = w.grid.spacing;
      long i0 = static_cast<long>(std::floor((lo[0] - pad) / opt.offset_res));
      long i1 = static_cast<long>(std::ceil((hi[0] + pad) / opt.offset_res));
      long j0 = n == 3 ? static_cast<long>(std::floor((lo[1] - pad) / opt.offset_res)) : 0;
      long j1 = n == 3 ? static_cast<long>(std::ceil((hi[1] + pad) / opt.offset_res)) : 0;
      for (long i = i0; i <= i1; ++i)
        for (long j = j0; j <= j1; ++j) {
          Point p = (i * opt.offset_res) * fr[0] + (j * opt.offset_res) * fr[1];
          double v = eval(p, u);
          if (v > res.value) {
            res.value = v;
            res.line = {p, u};
          }
        }
    }
    seeds.push_back(res.line);
  } else {
    // The strip projection only ranks candidate lines; values always come from the ray march.
    const double h = std::max(opt.offset_res, w.grid.spacing);
    std::vector<ProjectionBest> top;
    for (const Point& u : dirs) {
      top.push_back(project_best(cells, u, n, h));
      std::sort(top.begin(), top.end(), [](const auto& x, const auto& y) { return x.value > y.value; });
      if (top.size() > 5) top.pop_back();
    }
    for (const auto& c : top) {
      Line line{c.point, c.dir};
      double v = eval(line.point, line.direction);
      if (v > res.value) {
        res.value = v;
        res.line = line;
      }
      seeds.push_back(line);
    }
  }
  res.coarse_value = res.value;
  if (opt.refine)
    for (Line line : seeds) {
      double v = eval(line.point, line.direction);
      refine_line(n, ares, std::max(opt.offset_res, w.grid.spacing), fix_direction, line, v, eval);
      if (v > res.value) {
        res.value = v;
        res.line = line;
      }
    }
  return res;
}

}  // namespace

XrayResult xray_sup_directions(const Weight& w, const std::vector<Point>& dirs, const XrayOptions& opt) {
  return xray_over(w, dirs, opt, 0.0, true);
}

XrayResult xray_sup(const Weight& w, const XrayOptions& opt) {
  if (!(opt.offset_res > 0.0) || opt.angular_res < 0.0) throw ArgumentError("x-ray resolutions must be positive");
  double ares = opt.angular_res > 0.0 ? opt.angular_res : kPi / (4.0 * box_radius(w.grid));
  return xray_over(w, w.grid.n == 2 ? circle_dirs(ares) : hemisphere(ares), opt, ares, false);
}

std::vector<Point> directions_near_normals(const SurfacePatch& patch, const std::vector<Omega>& pts, double tolerance,
                                           double angular_res) {
  const int n = patch.dim();
  std::vector<Point> out;
  std::set<std::array<long, 3>> seen;
  auto push = [&](Point u) {
    if (n == 2 ? (u[1] < 0 || (u[1] == 0 && u[0] < 0)) : u[2] < 0) u = -1.0 * u;
    std::array<long, 3> key{std::lround(u[0] / (0.25 * angular_res)), std::lround(u[1] / (0.25 * angular_res)),
                            std::lround(u[2] / (0.25 * angular_res))};
    if (seen.insert(key).second) out.push_back(u);
  };
  int K = std::max(0, static_cast<int>(std::floor(tolerance / angular_res)));
  for (const auto& w : pts) {
    Point N = normal(patch, w).direction;
    auto fr = orthonormal_complement(N, n);
    for (int i = -K; i <= K; ++i)
      for (int j = (n == 3 ? -K : 0); j <= (n == 3 ? K : 0); ++j) {
        if (i * i + j * j > K * K) continue;
        Point u = N + (std::tan(i * angular_res)) * fr[0] + (std::tan(j * angular_res)) * fr[1];
        push((1.0 / norm(u)) * u);
      }
  }
  return out;
}

XrayResult xray_sup_balls(const std::vector<Point>& centers, double radius, int n, const XrayOptions& opt) {
  XrayResult res;
  if (centers.empty()) return res;
  double rb = radius;
  for (const auto& c : centers) rb = std::max(rb, norm(c) + radius);
  double ares = opt.angular_res > 0.0 ? opt.angular_res : kPi / (4.0 * rb);
  const double r2 = radius * radius;
  auto chord_sum = [&](const Point& p, const Point& u) {
    double s = 0.0;
    for (const auto& c : centers) {
      Point d = c - p;
      double a = dot(d, u);
      double q = dot(d, d) - a * a;
      if (q < r2) s += 2.0 * std::sqrt(r2 - q);
    }
    return s;
  };
  auto dirs = n == 2 ? circle_dirs(ares) : hemisphere(ares);
  const double offs[5] = {-0.5, -0.25, 0.0, 0.25, 0.5};
  std::vector<std::pair<double, double>> proj(centers.size());
  for (const Point& u : dirs) {
    auto fr = orthonormal_complement(u, n);
    if (n == 2) {
      for (std::size_t i = 0; i < centers.size(); ++i) proj[i] = {dot(centers[i], fr[0]), 0.0};
      std::sort(proj.begin(), proj.end());
      for (std::size_t i = 0; i < proj.size(); ++i)
        for (double o : offs) {
          double s = proj[i].first + o * radius;
          auto lo = std::lower_bound(proj.begin(), proj.end(), std::make_pair(s - radius, -1e300));
          double acc = 0.0;
          for (auto it = lo; it != proj.end() && it->first < s + radius; ++it) {
            double d = it->first - s;
            acc += 2.0 * std::sqrt(std::max(0.0, r2 - d * d));
          }
          if (acc > res.value) {
            res.value = acc;
            res.line = {s * fr[0], u};
          }
        }
    } else {
      for (std::size_t i = 0; i < centers.size(); ++i) proj[i] = {dot(centers[i], fr[0]), dot(centers[i], fr[1])};
      std::sort(proj.begin(), proj.end());
      for (std::size_t i = 0; i < proj.size(); ++i)
        for (double oa : offs)
          for (double ob : offs) {
            double sa = proj[i].first + oa * radius, sb = proj[i].second + ob * radius;
            auto lo = std::lower_bound(proj.begin(), proj.end(), std::make_pair(sa - radius, -1e300));
            double acc = 0.0;
            for (auto it = lo; it != proj.end() && it->first < sa + radius; ++it) {
              double da = it->first - sa, db = it->second - sb;
              double q = da * da + db * db;
              if (q < r2) acc += 2.0 * std::sqrt(r2 - q);
            }
            if (acc > res.value) {
              res.value = acc;
              res.line = {sa * fr[0] + sb * fr[1], u};
            }
          }
    }
  }
  res.coarse_value = res.value;
  if (opt.refine) refine_line(n, ares, radius, false, res.line, res.value, chord_sum);
  return res;
}

double tube_line_sup(const Weight& w, const Tube& t, double offset_res) {
  const int n = w.grid.n;
  std::vector<CellMass> cells;
  const double vol = w.grid.cell_volume();
  for_each_in_box(w.grid, tube_box(w.grid, t), [&](std::size_t k, const Point& x) {
    if (w.samples[k] != 0.0 && t.contains(x)) cells.push_back({x - t.anchor, w.samples[k] * vol});
  });
  return project_best(cells, t.direction, n, offset_res).value;
}

double tube_mass(const Weight& w, const Tube& t) {
  double s = 0.0;
  for_each_in_box(w.grid, tube_box(w.grid, t), [&](std::size_t k, const Point& x) {
    if (t.contains(x)) s += w.samples[k];
  });
  return s * w.grid.cell_volume();
}

std::vector<Point> perp_directions(const SurfacePatch& patch, const std::vector<Cap>& E, double lattice_spacing) {
  if (E.empty()) throw ArgumentError("the cap set E is empty");
  const int m = patch.dim() - 1;
  std::set<std::array<long, 2>> keys;
  for (const Cap& c : E) {
    long lo0 = static_cast<long>(std::floor((c.center[0] - c.radius) / lattice_spacing));
    long hi0 = static_cast<long>(std::ceil((c.center[0] + c.radius) / lattice_spacing));
    long lo1 = m == 2 ? static_cast<long>(std::floor((c.center[1] - c.radius) / lattice_spacing)) : 0;
    long hi1 = m == 2 ? static_cast<long>(std::ceil((c.center[1] + c.radius) / lattice_spacing)) : 0;
    for (long i = lo0; i <= hi0; ++i)
      for (long j = lo1; j <= hi1; ++j) {
        Omega w{i * lattice_spacing, j * lattice_spacing};
        if (c.contains(w) && patch.in_domain(w)) keys.insert({i, j});
      }
  }
  std::vector<Point> dirs;
  for (const auto& k : keys) dirs.push_back(normal(patch, {k[0] * lattice_spacing, k[1] * lattice_spacing}).direction);
  if (dirs.empty())
    for (const Cap& c : E) {
      Omega w = c.center;
      if (patch.in_domain(w)) dirs.push_back(normal(patch, w).direction);
    }
  if (dirs.empty()) throw ArgumentError("no cap of E meets the patch domain");
  return dirs;
}

namespace {

// Bin lattice attached to one tube direction: lateral coordinates along the
// orthonormal complement of u and an axial coordinate along u.
struct DirectionBins {
  int n = 2;
  Point u{};
  std::array<Point, 2> frame{};
  double bl = 1.0, ba = 1.0;
  std::array<long, 3> lo{0, 0, 0};  // lateral0, lateral1, axial
  std::array<long, 3> cnt{1, 1, 1};

  std::array<long, 3> bin(const Point& x) const {
    std::array<long, 3> b{0, 0, 0};
    b[0] = static_cast<long>(bin_of(dot(x, frame[0]), bl));
    if (n == 3) b[1] = static_cast<long>(bin_of(dot(x, frame[1]), bl));
    b[2] = static_cast<long>(bin_of(dot(x, u), ba));
    return b;
  }
  std::size_t flat(long i0, long i1, long i2) const {
    return (static_cast<std::size_t>(i0 - lo[0]) * cnt[1] + (i1 - lo[1])) * cnt[2] + (i2 - lo[2]);
  }
};

DirectionBins make_bins(const std::vector<CellMass>& cells, const Point& u, int n, double bl, double ba) {
  DirectionBins B;
  B.n = n;
  B.u = u;
  B.frame = orthonormal_complement(u, n);
  B.bl = bl;
  B.ba = ba;
  std::array<long, 3> mn{0, 0, 0}, mx{0, 0, 0};
  bool first = true;
  for (const auto& c : cells) {
    auto b = B.bin(c.x);
    for (int a = 0; a < 3; ++a) {
      mn[a] = first ? b[a] : std::min(mn[a], b[a]);
      mx[a] = first ? b[a] : std::max(mx[a], b[a]);
    }
    first = false;
  }
  for (int a = 0; a < 3; ++a) {
    B.lo[a] = mn[a];
    B.cnt[a] = mx[a] - mn[a] + 1;
  }
  return B;
}

// Prefix sums over a 3-index box (the middle index collapses to size 1 for n = 2).
struct Prefix3 {
  std::array<long, 3> cnt{};
  std::vector<double> s;
  explicit Prefix3(const std::array<long, 3>& c, const std::vector<double>& v) : cnt(c) {
    s.assign(static_cast<std::size_t>((c[0] + 1) * (c[1] + 1) * (c[2] + 1)), 0.0);
    for (long i = 0; i < c[0]; ++i)
      for (long j = 0; j < c[1]; ++j)
        for (long k = 0; k < c[2]; ++k)
          at(i + 1, j + 1, k + 1) = v[(static_cast<std::size_t>(i) * c[1] + j) * c[2] + k] + at(i, j + 1, k + 1) +
                                    at(i + 1, j, k + 1) + at(i + 1, j + 1, k) - at(i, j, k + 1) - at(i, j + 1, k) -
                                    at(i + 1, j, k) + at(i, j, k);
  }
  double& at(long i, long j, long k) { return s[(static_cast<std::size_t>(i) * (cnt[1] + 1) + j) * (cnt[2] + 1) + k]; }
  double get(long i, long j, long k) const {
    i = std::clamp(i, 0L, cnt[0]);
    j = std::clamp(j, 0L, cnt[1]);
    k = std::clamp(k, 0L, cnt[2]);
    return s[(static_cast<std::size_t>(i) * (cnt[1] + 1) + j) * (cnt[2] + 1) + k];
  }
  // Sum over the half-open local box [a0,b0) x [a1,b1) x [a2,b2).
  double box(long a0, long b0, long a1, long b1, long a2, long b2) const {
    return get(b0, b1, b2) - get(a0, b1, b2) - get(b0, a1, b2) - get(b0, b1, a2) + get(a0, a1, b2) + get(a0, b1, a2) +
           get(b0, a1, a2) - get(a0, a1, a2);
  }
};

struct TubeWindowFamily {
  long nl = 1, na = 1;  // tube size in bins
  long sl = 1, sa = 1;  // window step in bins
};

TubeWindowFamily window_family(double R, double bl, double ba) {
  TubeWindowFamily f;
  f.nl = std::max<long>(1, std::lround(2.0 * std::sqrt(R) / bl));
  f.na = std::max<long>(1, std::lround(R / ba));
  f.sl = std::max<long>(1, std::lround(0.5 * std::sqrt(R) / bl));
  f.sa = std::max<long>(1, std::lround(0.5 * std::sqrt(R) / ba));
  return f;
}

long floor_to_step(long v, long step) {
  long q = v >= 0 ? v / step : -((-v + step - 1) / step);
  return q * step;
}

// Enumerates bin-aligned tube windows (global bin coordinates of their first bin)
// whose axis meets B_R, in lexicographic order of (lateral0, lateral1, axial).
template <class F>
void for_each_window(const DirectionBins& B, const TubeWindowFamily& fam, double R, F&& f) {
  const int n = B.n;
  long l0a = floor_to_step(B.lo[0] - fam.nl + 1, fam.sl), l0b = B.lo[0] + B.cnt[0] - 1;
  long l1a = n == 3 ? floor_to_step(B.lo[1] - fam.nl + 1, fam.sl) : 0, l1b = n == 3 ? B.lo[1] + B.cnt[1] - 1 : 0;
  long aa = floor_to_step(B.lo[2] - fam.na + 1, fam.sa), ab = B.lo[2] + B.cnt[2] - 1;
  const double reach = R + std::sqrt(R);
  for (long l0 = l0a; l0 <= l0b; l0 += fam.sl)
    for (long l1 = l1a; l1 <= l1b; l1 += (n == 3 ? fam.sl : 1))
      for (long a = aa; a <= ab; a += fam.sa) {
        double c0 = (l0 + 0.5 * fam.nl) * B.bl;
        double c1 = n == 3 ? (l1 + 0.5 * fam.nl) * B.bl : 0.0;
        double ca = (a + 0.5 * fam.na) * B.ba;
        double lat = std::sqrt(c0 * c0 + c1 * c1);
        double ax = std::max(0.0, std::abs(ca) - 0.5 * fam.na * B.ba);
        if (std::sqrt(lat * lat + ax * ax) > reach) continue;
        f(l0, l1, a);
      }
}

Tube window_tube(const DirectionBins& B, const TubeWindowFamily& fam, long l0, long l1, long a) {
  Point c = ((l0 + 0.5 * fam.nl) * B.bl) * B.frame[0] + ((a + 0.5 * fam.na) * B.ba) * B.u;
  if (B.n == 3) c = c + ((l1 + 0.5 * fam.nl) * B.bl) * B.frame[1];
  return Tube{c, B.u, 0.5 * fam.nl * B.bl, fam.na * B.ba};
}

}  // namespace

AmalgamResult a_functional(const Weight& w, double rho, double R, const std::vector<Cap>& E, const SurfacePatch& patch) {
  if (E.empty()) throw ArgumentError("the cap set E is empty");
  if (!(rho >= 1.0 - 1e-12) || rho > R * (1 + 1e-12)) throw ArgumentError("rho must satisfy 1 <= rho <= R");
  const int n = w.grid.n;
  const double p = 0.5 * (n + 1);
  const double sp = w.grid.spacing;
  AmalgamResult res;
  res.cell_mode = std::sqrt(rho) <= sp * (1 + 1e-12) && rho <= sp * (1 + 1e-12);
  const double bl = res.cell_mode ? sp : std::sqrt(rho);
  const double ba = res.cell_mode ? sp : rho;
  const double seg_vol = std::pow(rho, 0.5 * (n + 1));
  const double norm_factor = std::pow(rho, 0.5 * (n - 1));
  const double cell_vol = w.grid.cell_volume();
  const double bin_vol = std::pow(bl, n - 1) * ba;
  auto cells = nonzero_cells(w);
  auto dirs = perp_directions(patch, E, 1.0 / std::sqrt(R));
  // Reported argmax for an all-zero weight: the first admissible tube through the origin.
  res.argmax = Tube{{0, 0, 0}, dirs.front(), std::sqrt(R), R};
  if (cells.empty()) return res;
  auto fam = window_family(R, bl, ba);
  double best = -1.0, best_mass = 0.0, best_density = 0.0;
  for (const Point& u : dirs) {
    auto B = make_bins(cells, u, n, bl, ba);
    std::vector<double> m1(static_cast<std::size_t>(B.cnt[0] * B.cnt[1] * B.cnt[2]), 0.0), mp(m1.size(), 0.0);
    for (const auto& c : cells) {
      auto b = B.bin(c.x);
      std::size_t k = B.flat(b[0], b[1], b[2]);
      m1[k] += c.m;
      // A cell of volume vol holds vol/|S| segments of mass (w |S|) each.
      mp[k] += cell_vol / seg_vol * std::pow(c.m / cell_vol * seg_vol, p);
    }
    std::vector<double> v(m1.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
      v[k] = res.cell_mode ? mp[k] : std::pow(m1[k], p);
      best_density = std::max(best_density, m1[k] / bin_vol);
    }
    Prefix3 pv(B.cnt, v), pm(B.cnt, m1);
    for_each_window(B, fam, R, [&](long l0, long l1, long a) {
      long a0 = l0 - B.lo[0], a1 = (n == 3 ? l1 - B.lo[1] : 0), a2 = a - B.lo[2];
      long b1 = n == 3 ? a1 + fam.nl : 1;
      double s = pv.box(a0, a0 + fam.nl, a1, b1, a2, a2 + fam.na);
      double mass = pm.box(a0, a0 + fam.nl, a1, b1, a2, a2 + fam.na);
      ++res.tubes;
      best_mass = std::max(best_mass, mass);
      if (s > best) {
        best = s;
        res.argmax = window_tube(B, fam, l0, l1, a);
      }
    });
  }
  res.value = std::pow(std::max(best, 0.0), 1.0 / p) / norm_factor;
  res.sup_tube_mass = best_mass;
  res.sup_segment_density = best_density;
  res.comparison_bound = std::pow(best_density, (n - 1.0) / (n + 1.0)) * std::pow(best_mass, 2.0 / (n + 1.0));
  return res;
}

double tube_mass_functional(const Weight& w, double R, const std::vector<Cap>& E, const SurfacePatch& patch) {
  const int n = w.grid.n;
  const double p = 0.5 * (n + 1);
  const double sp = w.grid.spacing;
  const double vol = w.grid.cell_volume();
  std::vector<CellMass> cells;
  for (std::size_t k = 0; k < w.samples.size(); ++k)
    if (w.samples[k] != 0.0) cells.push_back({w.grid.point(k), std::pow(w.samples[k], p) * vol});
  if (cells.empty()) return 0.0;
  auto dirs = perp_directions(patch, E, 1.0 / std::sqrt(R));
  auto fam = window_family(R, sp, sp);
  double best = 0.0;
  for (const Point& u : dirs) {
    auto B = make_bins(cells, u, n, sp, sp);
    std::vector<double> v(static_cast<std::size_t>(B.cnt[0] * B.cnt[1] * B.cnt[2]), 0.0);
    for (const auto& c : cells) {
      auto b = B.bin(c.x);
      v[B.flat(b[0], b[1], b[2])] += c.m;
    }
    Prefix3 pv(B.cnt, v);
    for_each_window(B, fam, R, [&](long l0, long l1, long a) {
      long a0 = l0 - B.lo[0], a1 = (n == 3 ? l1 - B.lo[1] : 0), a2 = a - B.lo[2];
      best = std::max(best, pv.box(a0, a0 + fam.nl, a1, n == 3 ? a1 + fam.nl : 1, a2, a2 + fam.na));
    });
  }
  return std::pow(best, 1.0 / p);
}

double tube_mass_functional_direct(const Weight& w, double R, const std::vector<Cap>& E, const SurfacePatch& patch) {
  const int n = w.grid.n;
  const double p = 0.5 * (n + 1);
  const double sp = w.grid.spacing;
  const double vol = w.grid.cell_volume();
  std::vector<CellMass> cells;
  for (std::size_t k = 0; k < w.samples.size(); ++k)
    if (w.samples[k] != 0.0) cells.push_back({w.grid.point(k), w.samples[k]});
  if (cells.empty()) return 0.0;
  auto dirs = perp_directions(patch, E, 1.0 / std::sqrt(R));
  auto fam = window_family(R, sp, sp);
  double best = 0.0;
  for (const Point& u : dirs) {
    auto B = make_bins(cells, u, n, sp, sp);
    for_each_window(B, fam, R, [&](long l0, long l1, long a) {
      double s = 0.0;
      for (const auto& c : cells) {
        auto b = B.bin(c.x);
        bool in = b[0] >= l0 && b[0] < l0 + fam.nl && b[2] >= a && b[2] < a + fam.na;
        if (n == 3) in = in && b[1] >= l1 && b[1] < l1 + fam.nl;
        if (in) s += std::pow(c.m, p) * vol;
      }
      best = std::max(best, s);
    });
  }
  return std::pow(best, 1.0 / p);
}

double a_functional_direct(const Weight& w, double rho, double R, const std::vector<Cap>& E,
                           const SurfacePatch& patch) {
  if (E.empty()) throw ArgumentError("the cap set E is empty");
  const int n = w.grid.n;
  const double p = 0.5 * (n + 1);
  const double sp = w.grid.spacing;
  const double vol = w.grid.cell_volume();
  const bool cell_mode = std::sqrt(rho) <= sp * (1 + 1e-12) && rho <= sp * (1 + 1e-12);
  const double bl = cell_mode ? sp : std::sqrt(rho), ba = cell_mode ? sp : rho;
  const double seg_vol = std::pow(rho, 0.5 * (n + 1));
  std::vector<CellMass> cells;
  for (std::size_t k = 0; k < w.samples.size(); ++k)
    if (w.samples[k] != 0.0) cells.push_back({w.grid.point(k), w.samples[k]});
  if (cells.empty()) return 0.0;
  auto dirs = perp_directions(patch, E, 1.0 / std::sqrt(R));
  auto fam = window_family(R, bl, ba);
  double best = 0.0;
  for (const Point& u : dirs) {
    auto B = make_bins(cells, u, n, bl, ba);
    for_each_window(B, fam, R, [&](long l0, long l1, long a) {
      std::map<std::array<long, 3>, double> seg;
      double cellsum = 0.0;
      for (const auto& c : cells) {
        auto b = B.bin(c.x);
        bool in = b[0] >= l0 && b[0] < l0 + fam.nl && b[2] >= a && b[2] < a + fam.na;
        if (n == 3) in = in && b[1] >= l1 && b[1] < l1 + fam.nl;
        if (!in) continue;
        if (cell_mode)
          cellsum += vol / seg_vol * std::pow(c.m * seg_vol, p);
        else
          seg[b] += c.m * vol;
      }
      for (const auto& [k, m] : seg) cellsum += std::pow(m, p);
      best = std::max(best, cellsum);
    });
  }
  return std::pow(best, 1.0 / p) / std::pow(rho, 0.5 * (n - 1));
}

double tessellation_ratio(const Weight& w, const Point& direction, double rho, double lambda) {
  const int n = w.grid.n;
  const double p = 0.5 * (n + 1);
  auto cells = nonzero_cells(w);
  if (cells.empty()) return 0.0;
  auto fine = make_bins(cells, direction, n, std::sqrt(rho), rho);
  auto coarse = make_bins(cells, direction, n, std::sqrt(lambda * rho), lambda * rho);
  std::map<std::array<long, 3>, double> mf, mc;
  for (const auto& c : cells) {
    mf[fine.bin(c.x)] += c.m;
    mc[coarse.bin(c.x)] += c.m;
  }
  const double sf = std::pow(rho, 0.5 * (n + 1)), sc = std::pow(lambda * rho, 0.5 * (n + 1));
  double worst = 0.0;
  for (const auto& [cb, mass] : mc) {
    double lhs = std::pow(mass / sc, p) * sc;
    // Fine bins meeting the coarse block.
    std::array<long, 3> lo{}, hi{};
    for (int a = 0; a < 3; ++a) {
      if (a == 1 && n == 2) {
        lo[1] = hi[1] = 0;
        continue;
      }
      double wc = a == 2 ? coarse.ba : coarse.bl, wf = a == 2 ? fine.ba : fine.bl;
      lo[a] = static_cast<long>(std::floor(cb[a] * wc / wf + 1e-9));
      hi[a] = static_cast<long>(std::ceil((cb[a] + 1) * wc / wf - 1e-9)) - 1;
    }
    double rhs = 0.0;
    for (long i = lo[0]; i <= hi[0]; ++i)
      for (long j = lo[1]; j <= hi[1]; ++j)
        for (long k = lo[2]; k <= hi[2]; ++k) {
          auto it = mf.find({i, j, k});
          if (it != mf.end()) rhs += std::pow(it->second / sf, p) * sf;
        }
    if (rhs > 0.0) worst = std::max(worst, lhs / rhs);
  }
  return worst;
}

}  // namespace mtlab
