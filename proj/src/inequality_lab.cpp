#include "mtlab/inequality_lab.hpp"

#include <cstdio>
#include <map>
#include <random>
#include <set>

namespace mtlab {

std::vector<Cap> support_caps(const Density& g, double radius) {
  const SurfacePatch& patch = g.patch();
  auto cover = cap_cover(patch, radius);
  const int m = patch.dim() - 1;
  std::map<std::array<long, 2>, std::size_t> by_index;
  for (std::size_t i = 0; i < cover.size(); ++i)
    by_index[{std::lround(cover[i].center[0] / radius), std::lround(cover[i].center[1] / radius)}] = i;
  std::vector<char> used(cover.size(), 0);
  auto e = g.extent();
  for (int a = 0; a < e[0]; ++a)
    for (int b = 0; b < e[1]; ++b) {
      if (g.at(a, b) == cd{}) continue;
      Omega w = g.node(a, b);
      long i0 = static_cast<long>(std::floor(w[0] / radius)), j0 = static_cast<long>(std::floor(w[1] / radius));
      for (long i = i0 - 1; i <= i0 + 2; ++i)
        for (long j = (m == 2 ? j0 - 1 : 0); j <= (m == 2 ? j0 + 2 : 0); ++j) {
          auto it = by_index.find({i, j});
          if (it != by_index.end() && cover[it->second].contains(w)) used[it->second] = 1;
        }
    }
  std::vector<Cap> out;
  for (std::size_t i = 0; i < cover.size(); ++i)
    if (used[i]) out.push_back(cover[i]);
  return out;
}

Field field_for_weight(const Density& g, const Weight& w, double R) {
  const int n = g.patch().dim();
  if (w.grid.n != n || !w.grid.same_geometry(SpatialGrid::centered(n, R, w.grid.spacing)))
    throw GeometryError("weight grid is not the centred grid of B_R");
  FastOptions fo;
  fo.spacing = w.grid.spacing;
  return extend_fast_grid(g, R, fo);
}

MTReport mt_report(const Density& g, const Weight& w, double R, double rho, const MTOptions& opt) {
  return mt_report(g, field_for_weight(g, w, R), w, R, rho, opt);
}

MTReport mt_report(const Density& g, const Field& Eg, const Weight& w, double R, double rho, const MTOptions& opt) {
  const SurfacePatch& patch = g.patch();
  MTReport rep;
  rep.n = patch.dim();
  rep.R = R;
  rep.rho = rho;
  rep.lhs = weighted_l2(Eg, w, R);
  rep.g_norm_sq = g.l2_norm_sq();
  const double gn = rep.g_norm_sq;
  const double a = 1.0 / std::sqrt(R);
  std::vector<Cap> E = g.is_zero() ? std::vector<Cap>{} : support_caps(g, a);

  double x_full = 0.0;
  if (opt.xray) x_full = xray_sup(w, opt.xray_options).value;
  if (opt.xray_perp) {
    double xp = 0.0;
    if (!E.empty()) {
      std::vector<Omega> pts;
      for (const auto& c : E) pts.push_back(c.center);
      double ares = opt.xray_options.angular_res > 0.0 ? opt.xray_options.angular_res : kPi / (4.0 * R);
      double tol = a * (1.0 + patch.hess_bound());
      xp = xray_sup_directions(w, directions_near_normals(patch, pts, tol, ares), opt.xray_options).value;
    }
    rep.rhs["xray_perp"] = xp * gn;
    // Both values are attained on actual lines, so the full supremum is at least the restricted one.
    x_full = std::max(x_full, xp);
  }
  if (opt.xray) rep.rhs["xray"] = x_full * gn;
  if (opt.tube_mass) rep.rhs["tube_mass"] = E.empty() ? 0.0 : tube_mass_functional(w, R, E, patch) * gn;
  if (opt.a_rho) {
    if (E.empty()) {
      rep.rhs["a_rho"] = 0.0;
    } else {
      auto af = a_functional(w, rho, R, E, patch);
      rep.rhs["a_rho"] = af.value * gn;
      rep.argmax_tube = af.argmax;
    }
  }
  if (opt.stein) {
    std::vector<Cap> caps;
    auto pieces = partition_by_caps(g, a, &caps);
    double s = 0.0;
    XrayOptions xo = opt.xray_options;
    for (std::size_t i = 0; i < pieces.size(); ++i) {
      double m = pieces[i].l2_norm_sq();
      if (m == 0.0) continue;
      Point N = normal(patch, caps[i].center).direction;
      s += m * xray_sup_directions(w, {N}, xo).value;
    }
    rep.rhs["stein"] = s;
  }
  for (const auto& [k, v] : rep.rhs) rep.ratios[k] = v > 0.0 ? rep.lhs / v : 0.0;
  return rep;
}

FocusingPair focusing_pair(const SurfacePatch& patch, double R) {
  const int n = patch.dim();
  Cap cap{{0.0, 0.0}, 1.0 / std::sqrt(R)};
  Density g = cap_indicator(patch, R, cap);
  Tube t = Tube::make({0, 0, 0}, normal(patch, cap.center).direction, std::sqrt(R), R);
  Weight w = make_tube_weight(SpatialGrid::centered(n, R, 1.0), t);
  return {std::move(g), std::move(w), t};
}

bool ball_meets_tube(const Point& center, double radius, const Tube& t) {
  double da = std::max(0.0, std::abs(t.axial(center)) - 0.5 * t.length);
  double dr = std::max(0.0, t.radial(center) - t.radius);
  return da * da + dr * dr <= radius * radius;
}

namespace {

struct BallLattice {
  int n = 2;
  double step = 1.0;
  long kmax = 0;
  std::map<std::array<long, 3>, std::size_t> index;
  std::vector<Point> centers;
  std::vector<std::array<long, 3>> keys;
};

BallLattice ball_lattice(double R, int n) {
  BallLattice L;
  L.n = n;
  L.step = std::sqrt(R);
  L.kmax = static_cast<long>(std::ceil(R / L.step)) + 1;
  const double reach = R + 0.5 * L.step * std::sqrt(static_cast<double>(n));
  for (long i = -L.kmax; i <= L.kmax; ++i)
    for (long j = -L.kmax; j <= L.kmax; ++j)
      for (long k = (n == 3 ? -L.kmax : 0); k <= (n == 3 ? L.kmax : 0); ++k) {
        Point c{i * L.step, j * L.step, k * L.step};
        if (norm(c) > reach) continue;
        L.index[{i, j, k}] = L.centers.size();
        L.centers.push_back(c);
        L.keys.push_back({i, j, k});
      }
  return L;
}

int level_of(int count) {
  int j = 0;
  while ((2 << j) <= count) ++j;
  return j;
}

}  // namespace

RichnessPartition richness_partition(const std::vector<Tube>& tubes, double R, int n) {
  RichnessPartition P;
  P.R = R;
  auto L = ball_lattice(R, n);
  P.ball_radius = L.step;
  P.centers = L.centers;
  P.counts.assign(L.centers.size(), 0);
  for (std::size_t b = 0; b < L.centers.size(); ++b) {
    for (const auto& t : tubes)
      if (ball_meets_tube(L.centers[b], P.ball_radius, t)) ++P.counts[b];
    P.ball_wise_total += P.counts[b];
    if (P.counts[b] > 0) P.levels[level_of(P.counts[b])].push_back(b);
  }
  // Tube-wise pass: enumerate lattice balls inside each tube's bounding box.
  for (const auto& t : tubes) {
    double e = 0.5 * t.length + t.radius + P.ball_radius;
    std::array<long, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int a = 0; a < n; ++a) {
      lo[a] = static_cast<long>(std::floor((t.anchor[a] - e) / L.step));
      hi[a] = static_cast<long>(std::ceil((t.anchor[a] + e) / L.step));
    }
    for (long i = lo[0]; i <= hi[0]; ++i)
      for (long j = lo[1]; j <= hi[1]; ++j)
        for (long k = lo[2]; k <= hi[2]; ++k) {
          auto it = L.index.find({i, j, k});
          if (it != L.index.end() && ball_meets_tube(L.centers[it->second], P.ball_radius, t)) ++P.tube_wise_total;
        }
  }
  return P;
}

RefinedDecouplingReport refined_decoupling_check(const PacketSet& pset, const Density& like, double R) {
  RefinedDecouplingReport rep;
  if (pset.empty()) return rep;
  const SurfacePatch& patch = like.patch();
  const int n = patch.dim();
  const double p = 2.0 * (n + 1) / (n - 1);
  double top = 0.0;
  for (const auto& pk : pset.packets) top = std::max(top, pk.norm_sq);
  std::vector<std::size_t> keep;
  std::vector<Tube> tubes;
  for (std::size_t i = 0; i < pset.packets.size(); ++i)
    if (pset.packets[i].norm_sq >= 0.25 * top) {
      keep.push_back(i);
      tubes.push_back(tube_of(pset.packets[i].index, patch, R, pset.delta));
    }
  rep.tubes = keep.size();
  Density gT = pset.sum_of(like, keep);
  rep.g_norm = std::sqrt(gT.l2_norm_sq());
  auto part = richness_partition(tubes, R, n);
  rep.ball_wise_total = part.ball_wise_total;
  rep.tube_wise_total = part.tube_wise_total;
  std::vector<int> level_of_ball(part.centers.size(), -1);
  for (const auto& [j, balls] : part.levels)
    for (auto b : balls) level_of_ball[b] = j;
  auto L = ball_lattice(R, n);

  Field f = extend_fast_grid(gT, R);
  const int maxlev = 32;
  std::vector<double> acc(maxlev, 0.0);
  std::vector<char> seen(maxlev, 0);
  for (std::size_t q = 0; q < f.samples.size(); ++q) {
    Point x = f.grid.point(q);
    unsigned mask = 0;
    long c0 = std::lround(x[0] / L.step), c1 = std::lround(x[1] / L.step), c2 = std::lround(x[2] / L.step);
    for (long i = c0 - 1; i <= c0 + 1; ++i)
      for (long j = c1 - 1; j <= c1 + 1; ++j)
        for (long k = (n == 3 ? c2 - 1 : 0); k <= (n == 3 ? c2 + 1 : 0); ++k) {
          auto it = L.index.find({i, j, k});
          if (it == L.index.end()) continue;
          int lev = level_of_ball[it->second];
          if (lev >= 0 && norm(x - L.centers[it->second]) <= L.step) mask |= 1u << lev;
        }
    if (!mask) continue;
    double v = std::pow(std::abs(f.samples[q]), p) * f.grid.cell_volume();
    for (int j = 0; j < maxlev; ++j)
      if (mask & (1u << j)) {
        acc[j] += v;
        seen[j] = 1;
      }
  }
  for (const auto& [j, balls] : part.levels) {
    if (!seen[j]) continue;
    RefinedDecouplingLevel lv;
    lv.j = j;
    lv.balls = balls.size();
    double s = 0.0;
    for (auto b : balls) s += part.counts[b];
    lv.k = s / balls.size();
    lv.lhs = std::pow(acc[j], 1.0 / p);
    double denom = std::pow(lv.k / static_cast<double>(rep.tubes), 1.0 / (n + 1)) * rep.g_norm;
    lv.ratio = denom > 0.0 ? lv.lhs / denom : 0.0;
    rep.max_ratio = std::max(rep.max_ratio, lv.ratio);
    rep.levels.push_back(lv);
  }
  return rep;
}

std::vector<Density> partition_by_caps(const Density& g, double radius, std::vector<Cap>* caps) {
  const int m = g.param_dim();
  const double side = 2.0 * radius / std::sqrt(static_cast<double>(m));
  std::map<std::array<long, 2>, std::vector<std::pair<int, int>>> cells;
  auto e = g.extent();
  for (int a = 0; a < e[0]; ++a)
    for (int b = 0; b < e[1]; ++b) {
      if (!g.in_domain(a, b)) continue;
      Omega w = g.node(a, b);
      cells[{std::lround(w[0] / side), m == 2 ? std::lround(w[1] / side) : 0L}].push_back({a, b});
    }
  std::vector<Density> out;
  if (caps) caps->clear();
  for (const auto& [key, members] : cells) {
    std::array<int, 2> lo{e[0], e[1]}, hi{-1, -1};
    for (auto [a, b] : members) {
      lo = {std::min(lo[0], a), std::min(lo[1], b)};
      hi = {std::max(hi[0], a), std::max(hi[1], b)};
    }
    std::array<int, 2> glo{g.lo()[0] + lo[0], g.lo()[1] + lo[1]};
    Density piece = g.window(glo, {hi[0] - lo[0] + 1, hi[1] - lo[1] + 1});
    for (auto& v : piece.samples()) v = cd{};
    for (auto [a, b] : members) piece.at(a - lo[0], b - lo[1]) = g.at(a, b);
    out.push_back(std::move(piece));
    if (caps) caps->push_back(Cap{{key[0] * side, key[1] * side}, radius});
  }
  return out;
}

SlabDecouplingReport slab_decoupling_check(const Density& g, const std::vector<Slab>& slabs,
                                           const std::vector<double>& coeffs, double rho, CapScale scale, double R,
                                           double spacing) {
  const SurfacePatch& patch = g.patch();
  const int n = patch.dim();
  auto grid = SpatialGrid::centered(n, R, spacing);
  Weight w = make_slab_weight(grid, slabs, coeffs, true);
  Weight ws = make_slab_companion(grid, slabs, coeffs, 3.0);
  const double r = scale == CapScale::InverseSqrtRho ? std::pow(rho, -0.5) : std::pow(rho, -0.25);
  SlabDecouplingReport rep;
  rep.nu = 0.5 * kPi;
  for (const auto& s : slabs) rep.nu = std::min(rep.nu, slab_parallelism(s, patch));
  FastOptions fo;
  fo.spacing = spacing;
  rep.lhs = weighted_l2(extend_fast_grid(g, R, fo), w, R);
  auto pieces = partition_by_caps(g, r);
  for (const auto& piece : pieces) {
    if (piece.is_zero()) continue;
    ++rep.caps;
    rep.rhs += weighted_l2(extend_fast_grid(piece, R, fo), ws, R);
  }
  rep.ratio = rep.rhs > 0.0 ? rep.lhs / rep.rhs : 0.0;
  return rep;
}

std::vector<Slab> random_slabs(int n, double R, double rho, const Point& normal, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double r = std::sqrt(rho);
  const double reach = R - r - 1.0;
  if (reach <= 0.0) throw ScaleError("slabs of radius rho^{1/2} do not fit in B_R");
  std::uniform_int_distribution<long> U(-static_cast<long>(reach), static_cast<long>(reach));
  std::vector<Slab> out;
  for (int attempt = 0; attempt < 200 * count && static_cast<int>(out.size()) < count; ++attempt) {
    Point c{static_cast<double>(U(rng)), static_cast<double>(U(rng)), n == 3 ? static_cast<double>(U(rng)) : 0.0};
    if (norm(c) > reach) continue;
    bool clash = false;
    for (const auto& s : out) {
      Point d = c - s.center;
      double t = dot(d, normal);
      if (std::abs(t) < 1.0 + 1e-9 && norm(d - t * normal) < 2.0 * r + 1e-9) {
        clash = true;
        break;
      }
    }
    if (!clash) out.push_back(Slab{c, normal, 0.5, r});
  }
  return out;
}

MTReport flake_mt_check(const Density& g, const std::vector<Flake>& flakes, const std::vector<double>& coeffs,
                        double R, double delta) {
  const SurfacePatch& patch = g.patch();
  const int n = patch.dim();
  Weight w = make_flake_weight(SpatialGrid::centered(n, R, 1.0), flakes, coeffs, true);
  MTOptions opt;
  opt.a_rho = false;
  MTReport rep = mt_report(g, w, R, 1.0, opt);
  double packet = 0.0;
  if (!g.is_zero()) {
    auto ps = decompose(g, R, delta);
    for (const auto& pk : ps.packets) packet += tube_line_sup(w, tube_of(pk.index, patch, R, delta)) * pk.norm_sq;
  }
  rep.rhs["packet"] = packet;
  rep.ratios["packet"] = packet > 0.0 ? rep.lhs / packet : 0.0;
  return rep;
}

FitResult fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size()) throw FitError("x and y differ in length");
  if (x.size() < 3) throw FitError("at least three points are needed for a fit");
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0)) throw FitError("log-log fit needs positive values");
    lx.push_back(std::log(x[i]));
    ly.push_back(std::log(y[i]));
  }
  const double m = static_cast<double>(lx.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sx += lx[i];
    sy += ly[i];
    sxx += lx[i] * lx[i];
    sxy += lx[i] * ly[i];
  }
  double den = m * sxx - sx * sx;
  if (den <= 0.0) throw FitError("x values are all equal");
  FitResult f;
  f.slope = (m * sxy - sx * sy) / den;
  f.intercept = (sy - f.slope * sx) / m;
  for (std::size_t i = 0; i < lx.size(); ++i) f.residuals.push_back(ly[i] - (f.intercept + f.slope * lx[i]));
  return f;
}

std::vector<MTReport> sweep(const std::vector<double>& R_list, const std::function<MTReport(double)>& scenario) {
  if (R_list.size() < 3) throw FitError("a sweep needs at least three R values");
  std::vector<MTReport> out;
  for (double R : R_list) out.push_back(scenario(R));
  return out;
}

std::map<std::string, FitResult> fit_variants(const std::vector<MTReport>& reports) {
  std::set<std::string> keys;
  for (const auto& r : reports)
    for (const auto& [k, v] : r.ratios) keys.insert(k);
  std::map<std::string, FitResult> out;
  for (const auto& k : keys) {
    std::vector<double> xs, ys;
    bool ok = true;
    for (const auto& r : reports) {
      auto it = r.ratios.find(k);
      if (it == r.ratios.end() || !(it->second > 0.0)) {
        ok = false;
        break;
      }
      xs.push_back(r.R);
      ys.push_back(it->second);
    }
    if (ok && xs.size() >= 3) out[k] = fit_loglog(xs, ys);
  }
  return out;
}

void write_reports_csv(const std::string& path, const std::vector<MTReport>& reports) {
  std::set<std::string> keys;
  for (const auto& r : reports)
    for (const auto& [k, v] : r.rhs) keys.insert(k);
  FILE* fp = std::fopen(path.c_str(), "w");
  if (!fp) throw Error("cannot open " + path);
  std::fprintf(fp, "scenario,n,R,rho,lhs,g_norm_sq");
  for (const auto& k : keys) std::fprintf(fp, ",rhs_%s", k.c_str());
  for (const auto& k : keys) std::fprintf(fp, ",ratio_%s", k.c_str());
  std::fprintf(fp, "\n");
  for (const auto& r : reports) {
    std::fprintf(fp, "%s,%d,%.17g,%.17g,%.17g,%.17g", r.scenario.c_str(), r.n, r.R, r.rho, r.lhs, r.g_norm_sq);
    for (const auto* m : {&r.rhs, &r.ratios})
      for (const auto& k : keys) {
        auto it = m->find(k);
        if (it == m->end())
          std::fprintf(fp, ",");
        else
          std::fprintf(fp, ",%.17g", it->second);
      }
    std::fprintf(fp, "\n");
  }
  std::fclose(fp);
}

}  // namespace mtlab
