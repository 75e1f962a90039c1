#include <cstdio>
#include <random>

#include "doctest.h"
#include "mtlab/extension.hpp"

using namespace mtlab;

namespace {

std::vector<Point> grid_points(const SpatialGrid& g) {
  std::vector<Point> pts(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) pts[k] = g.point(k);
  return pts;
}

double max_abs_diff(const std::vector<cd>& a, const std::vector<cd>& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace

TEST_CASE("density lattice respects the resolution rule") {
  auto patch = SurfacePatch::paraboloid(2, 1.0, 0.5);
  for (double R : {4.0, 16.0, 100.0, 512.0}) {
    Density g(patch, R);
    CHECK(g.spacing() <= 1.0 / (8.0 * R * (1.0 + patch.max_grad())));
    CHECK(g.spacing() > 0.5 / (8.0 * R * (1.0 + patch.max_grad())));
    CHECK(g.admits(R));
    CHECK_FALSE(g.admits(2 * R));
  }
}

TEST_CASE("zero density gives zero fields") {
  auto patch = SurfacePatch::paraboloid(2, 1.0, 0.5);
  Density g(patch, 16);
  auto f = extend_fast_grid(g, 16);
  for (auto v : f.samples) CHECK(v == cd{});
  auto d = extend_direct(g, {{1.0, 2.0, 0.0}, {-3.0, 0.5, 0.0}});
  CHECK(d[0] == cd{});
  CHECK(d[1] == cd{});
}

TEST_CASE("single-cell density has constant modulus") {
  auto patch = SurfacePatch::paraboloid(2, 1.0, 0.5);
  Density g = single_cell(patch, 16, {0.2, 0.0}, 1.0);
  auto f = extend_fast_grid(g, 16);
  for (auto v : f.samples) CHECK(std::abs(v) == doctest::Approx(1.0).epsilon(1e-12));
  // Phase matches e^{2 pi i <x, Sigma(w0)>} at the cell centre.
  Omega w0{};
  for (int a = 0; a < g.extent()[0]; ++a)
    if (g.at(a, 0) != cd{}) w0 = g.node(a, 0);
  Point s = surface_point(patch, w0);
  for (std::size_t k = 0; k < f.samples.size(); k += 37) {
    Point x = f.grid.point(k);
    CHECK(std::abs(f.samples[k] - expi(kTwoPi * dot(x, s))) < 1e-9);
  }
}

TEST_CASE("direct quadrature matches a refinement-64 oracle") {
  auto patch = SurfacePatch::paraboloid(2, 1.0, 0.5);
  Density g = density_from_function(patch, 512, [](const Omega&) { return cd{1.0}; });
  std::vector<Point> x{{0.0, 4.0, 0.0}};
  auto v = extend_direct(g, x);
  QuadratureSpec fine;
  fine.refinement = 64;
  auto o = extend_direct(g, x, fine);
  CHECK(std::abs(v[0] - o[0]) / std::abs(o[0]) <= 1e-6);
  // The trapezoid rule converges to the same value.
  QuadratureSpec trap;
  trap.rule = QuadratureSpec::Rule::Trapezoid;
  trap.refinement = 64;
  auto t = extend_direct(g, x, trap);
  CHECK(std::abs(t[0] - o[0]) / std::abs(o[0]) <= 1e-6);
}

TEST_CASE("direct evaluation refuses points beyond the resolution radius") {
  auto patch = SurfacePatch::paraboloid(2, 1.0, 0.5);
  Density g(patch, 8);
  CHECK_THROWS_AS(extend_direct(g, {{100.0, 0.0, 0.0}}), ResolutionError);
  CHECK_THROWS_AS(extend_fast_grid(g, 64), ResolutionError);
}

TEST_CASE("fast grid agrees with direct evaluation, n = 2") {
  auto patch = SurfacePatch::paraboloid(2, 1.0, 0.5);
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    Density g = random_density(patch, 16, seed, 4.0);
    Field f = extend_fast_grid(g, 16);
    auto direct = extend_direct(g, grid_points(f.grid));
    CHECK(max_abs_diff(f.samples, direct) <= 1e-9);
  }
}

TEST_CASE("fast grid agrees with direct evaluation at half spacing and n = 3") {
  auto patch2 = SurfacePatch::sphere_cap(2, 0.5);
  Density g2 = random_density(patch2, 8, 9, 2.0);
  FastOptions half;
  half.spacing = 0.5;
  Field f2 = extend_fast_grid(g2, 8, half);
  CHECK(max_abs_diff(f2.samples, extend_direct(g2, grid_points(f2.grid))) <= 1e-9);

  auto patch3 = SurfacePatch::paraboloid(3, 1.0, 0.5);
  Density g3 = random_density(patch3, 4, 4, 1.0);
  Field f3 = extend_fast_grid(g3, 4);
  CHECK(max_abs_diff(f3.samples, extend_direct(g3, grid_points(f3.grid))) <= 1e-9);
}

TEST_CASE("budget error reports the required bytes") {
  auto patch = SurfacePatch::paraboloid(2, 1.0, 0.5);
  Density g(patch, 64);
  FastOptions tiny;
  tiny.budget_bytes = 1000;
  try {
    extend_fast_grid(g, 64, tiny);
    FAIL("expected a budget error");
  } catch (const BudgetError& e) {
    CHECK(e.required_bytes == fast_grid_bytes(g, 64, tiny));
    CHECK(e.required_bytes > 1000);
  }
}

TEST_CASE("slice Plancherel on random densities") {
  auto patch = SurfacePatch::paraboloid(2, 1.0, 0.5);
  for (std::uint64_t seed = 0; seed < 4; ++seed) {
    Density g = random_density(patch, 32, seed, 8.0);
    double n2 = g.l2_norm_sq();
    Field f = extend_fast_grid(g, 32);
    for (double s : slice_l2(f)) CHECK(std::abs(s - n2) / n2 <= 1e-3);
  }
  auto patch3 = SurfacePatch::paraboloid(3, 1.0, 0.5);
  Density g3 = random_density(patch3, 16, 1, 4.0);
  Field f3 = extend_fast_grid(g3, 16);
  for (double s : slice_l2(f3)) CHECK(std::abs(s - g3.l2_norm_sq()) / g3.l2_norm_sq() <= 1e-3);
}

TEST_CASE("linearity") {
  auto patch = SurfacePatch::paraboloid(2, 1.0, 0.5);
  Density a = random_density(patch, 16, 1, 4.0);
  Density b = random_density(patch, 16, 2, 4.0);
  cd alpha{0.3, -1.2}, beta{2.0, 0.5};
  Density c = a;
  for (std::size_t i = 0; i < c.size(); ++i) c.samples()[i] = alpha * a.samples()[i] + beta * b.samples()[i];
  Field fa = extend_fast_grid(a, 16), fb = extend_fast_grid(b, 16), fc = extend_fast_grid(c, 16);
  double m = 0.0;
  for (std::size_t k = 0; k < fc.samples.size(); ++k)
    m = std::max(m, std::abs(fc.samples[k] - alpha * fa.samples[k] - beta * fb.samples[k]));
  CHECK(m <= 1e-12);
}

TEST_CASE("modulation covariance translates the field") {
  auto patch = SurfacePatch::paraboloid(2, 1.0, 0.5);
  Density g = random_density(patch, 32, 7, 4.0);
  const Point y{3.0, -2.0, 0.0};
  Density gy = g;
  for (int a = 0; a < g.extent()[0]; ++a) {
    Point s = surface_point(patch, g.node(a, 0));
    gy.at(a, 0) *= expi(kTwoPi * dot(y, s));
  }
  Field f = extend_fast_grid(gy, 16);
  std::vector<Point> shifted;
  for (std::size_t k = 0; k < f.grid.size(); ++k) shifted.push_back(f.grid.point(k) + y);
  auto direct = extend_direct(g, shifted);
  CHECK(max_abs_diff(f.samples, direct) <= 1e-9);
}

TEST_CASE("weighted_l2 examples") {
  SpatialGrid grid = SpatialGrid::centered(2, 4.0);
  Field f(grid);
  for (auto& v : f.samples) v = 1.0;
  Weight w(grid);
  CHECK(weighted_l2(f, w, 4.0) == 0.0);
  w.samples[grid.index(4, 4)] = 1.0;
  CHECK(weighted_l2(f, w, 4.0) == doctest::Approx(grid.cell_volume()));

  SpatialGrid g3 = SpatialGrid::centered(3, 3.5, 1.0);
  g3.extent = {8, 8, 8};
  g3.origin = {-3.5, -3.5, -3.5};
  Field f3(g3);
  Weight w3(g3);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t k = 0; k < g3.size(); ++k) {
    f3.samples[k] = {u(rng), u(rng)};
    w3.samples[k] = u(rng);
  }
  double oracle = 0.0;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      for (int l = 0; l < 8; ++l) {
        Point x{-3.5 + i, -3.5 + j, -3.5 + l};
        if (x[0] * x[0] + x[1] * x[1] + x[2] * x[2] > 25.0) continue;
        std::size_t k = g3.index(i, j, l);
        oracle += std::norm(f3.samples[k]) * w3.samples[k];
      }
  CHECK(weighted_l2(f3, w3, 5.0) == oracle);
  Weight wrong(SpatialGrid::centered(3, 2.0));
  CHECK_THROWS_AS(weighted_l2(f3, wrong, 5.0), GeometryError);
}

TEST_CASE("binary and CSV export round trip") {
  SpatialGrid grid = SpatialGrid::centered(2, 3.0, 0.5);
  Field f(grid);
  Weight w(grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    f.samples[k] = {0.1 * k, -0.2 * k};
    w.samples[k] = 0.5 * k;
  }
  write_binary("rt_field.bin", f);
  write_binary("rt_weight.bin", w);
  Field f2 = read_field("rt_field.bin");
  Weight w2 = read_weight("rt_weight.bin");
  CHECK(f2.grid.same_geometry(grid));
  CHECK(f2.samples == f.samples);
  CHECK(w2.samples == w.samples);
  CHECK_THROWS_AS(read_field("rt_weight.bin"), ArgumentError);
  write_csv("rt_weight.csv", w);
  std::FILE* fp = std::fopen("rt_weight.csv", "r");
  REQUIRE(fp != nullptr);
  int lines = 0;
  for (int c = std::fgetc(fp); c != EOF; c = std::fgetc(fp)) lines += c == '\n';
  std::fclose(fp);
  CHECK(lines == static_cast<int>(grid.size()) + 1);
  std::remove("rt_field.bin");
  std::remove("rt_weight.bin");
  std::remove("rt_weight.csv");
}
