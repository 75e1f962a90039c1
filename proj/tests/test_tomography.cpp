#include <random>

#include "doctest.h"
#include "mtlab/tomography.hpp"

using namespace mtlab;

namespace {

Weight indicator(const SpatialGrid& g, const std::function<bool(const Point&)>& in) {
  Weight w(g);
  for (std::size_t k = 0; k < g.size(); ++k) w.samples[k] = in(g.point(k)) ? 1.0 : 0.0;
  return w;
}

Weight random_weight(const SpatialGrid& g, std::uint64_t seed, double zero_fraction = 0.3) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(0.0, 1.0);
  Weight w(g);
  for (auto& v : w.samples) v = U(rng) < zero_fraction ? 0.0 : U(rng) * 3.0;
  return w;
}

SpatialGrid grid16(int n) {
  SpatialGrid g;
  g.n = n;
  g.extent = {16, 16, n == 3 ? 16 : 1};
  g.origin = {-7.5, -7.5, n == 3 ? -7.5 : 0.0};
  return g;
}

XrayOptions fine_opts() {
  XrayOptions o;
  o.angular_res = 0.05;
  o.offset_res = 0.05;
  return o;
}

}  // namespace

TEST_CASE("x-ray of the unit disc is its diameter") {
  auto g = SpatialGrid::centered(2, 1.5, 1.0 / 32);
  auto w = indicator(g, [](const Point& x) { return norm(x) <= 1.0; });
  auto r = xray_sup(w, fine_opts());
  CHECK(r.value == doctest::Approx(2.0).epsilon(0.02));
  CHECK(r.value >= r.coarse_value);
}

TEST_CASE("x-ray of a 3 x 1 rectangle is its diagonal") {
  auto g = SpatialGrid::centered(2, 4, 1.0 / 32);
  auto w = indicator(g, [](const Point& x) { return x[0] >= 0 && x[0] < 3 && x[1] >= 0 && x[1] < 1; });
  auto r = xray_sup(w, fine_opts());
  CHECK(r.value == doctest::Approx(std::sqrt(10.0)).epsilon(0.02));
}

TEST_CASE("x-ray of two collinear discs at distance 10") {
  auto g = SpatialGrid::centered(2, 7, 1.0 / 16);
  Point a{-3.0, -4.0, 0.0}, b{3.0, 4.0, 0.0};
  auto w = indicator(g, [&](const Point& x) { return norm(x - a) <= 1.0 || norm(x - b) <= 1.0; });
  XrayOptions o;
  o.angular_res = 0.02;
  o.offset_res = 1.0 / 16;
  CHECK(xray_sup(w, o).value == doctest::Approx(4.0).epsilon(0.02));
  // The exact chord path agrees.
  CHECK(xray_sup_balls({a, b}, 1.0, 2).value == doctest::Approx(4.0).epsilon(1e-3));
}

TEST_CASE("x-ray in three dimensions") {
  auto g = SpatialGrid::centered(3, 1.5, 1.0 / 12);
  auto w = indicator(g, [](const Point& x) { return norm(x) <= 1.0; });
  XrayOptions o;
  o.angular_res = 0.1;
  o.offset_res = 1.0 / 12;
  CHECK(xray_sup(w, o).value == doctest::Approx(2.0).epsilon(0.03));
  std::vector<Point> c{{0, 0, 0}, {0, 0, 5}, {0, 0, -5}};
  CHECK(xray_sup_balls(c, 1.0, 3).value == doctest::Approx(6.0).epsilon(1e-3));
}

TEST_CASE("ball chord sums against a brute-force line scan") {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> U(-8.0, 8.0);
  std::vector<Point> c;
  for (int i = 0; i < 12; ++i) c.push_back({U(rng), U(rng), 0.0});
  auto fast = xray_sup_balls(c, 1.0, 2);
  double brute = 0.0;
  for (int k = 0; k < 2000; ++k) {
    Point u{std::cos(kPi * k / 2000), std::sin(kPi * k / 2000), 0.0};
    Point p{-u[1], u[0], 0.0};
    for (double s = -12; s <= 12; s += 0.01) {
      double acc = 0.0;
      for (const auto& x : c) {
        double d = dot(x, p) - s;
        if (std::abs(d) < 1.0) acc += 2.0 * std::sqrt(1.0 - d * d);
      }
      brute = std::max(brute, acc);
    }
  }
  CHECK(fast.value >= brute * (1 - 1e-3));
  CHECK(fast.value <= brute * (1 + 1e-2));
}

TEST_CASE("x-ray monotonicity and homogeneity") {
  auto g = SpatialGrid::centered(2, 8, 1.0);
  auto w1 = random_weight(g, 1);
  auto w2 = w1;
  std::mt19937_64 rng(9);
  for (auto& v : w2.samples) v += 0.5 * (rng() % 2);
  XrayOptions o;
  o.refine = false;
  o.exhaustive = true;
  double x1 = xray_sup(w1, o).value, x2 = xray_sup(w2, o).value;
  CHECK(x1 <= x2);
  auto w3 = w1;
  for (auto& v : w3.samples) v *= 2.5;
  CHECK(xray_sup(w3, o).value == doctest::Approx(2.5 * x1).epsilon(1e-12));
  CHECK(xray_sup(Weight(g), o).value == 0.0);
}

TEST_CASE("tube_mass examples and exact brute-force oracle") {
  auto g = SpatialGrid::centered(2, 40, 1.0);
  Weight one(g);
  for (auto& v : one.samples) v = 1.0;
  Tube t = Tube::make({1, 2, 0}, {0.6, 0.8, 0}, 4.0, 30.0);
  CHECK(tube_mass(one, t) == doctest::Approx(t.volume(2)).epsilon(0.05));
  auto gf = SpatialGrid::centered(2, 10, 1.0 / 16);
  auto ball = indicator(gf, [](const Point& x) { return norm(x - Point{1, 2, 0}) <= 2.0; });
  CHECK(tube_mass(ball, t) == doctest::Approx(4 * kPi).epsilon(0.05));

  for (int n : {2, 3}) {
    auto g16 = grid16(n);
    for (int s = 0; s < 10; ++s) {
      auto w = random_weight(g16, 100 + s);
      std::mt19937_64 rng(s);
      std::uniform_real_distribution<double> U(-1, 1);
      Point u{U(rng), U(rng), n == 3 ? U(rng) : 0.0};
      u = (1.0 / norm(u)) * u;
      Tube tt = Tube::make({U(rng) * 5, U(rng) * 5, n == 3 ? U(rng) * 5 : 0.0}, u, 2.5, 9.0);
      double brute = 0.0;
      for (std::size_t k = 0; k < g16.size(); ++k)
        if (tt.contains(g16.point(k))) brute += w.samples[k] * g16.cell_volume();
      CHECK(tube_mass(w, tt) == brute);
    }
  }
}

TEST_CASE("a_functional at rho = 1 matches the direct tube scan") {
  const auto patch = SurfacePatch::paraboloid(2);
  std::vector<Cap> E{{{0.0, 0.0}, 0.25}};
  for (int n : {2, 3}) {
    const auto p = SurfacePatch::paraboloid(n);
    std::vector<Cap> En{{{0.1, 0.0}, 0.2}};
    auto g = grid16(n);
    for (int s = 0; s < 5; ++s) {
      auto w = random_weight(g, 7 + s);
      auto a = a_functional(w, 1.0, 16, En, p);
      CHECK(a.cell_mode);
      double direct = tube_mass_functional_direct(w, 16, En, p);
      double fast = tube_mass_functional(w, 16, En, p);
      CHECK(a.value == doctest::Approx(direct).epsilon(1e-9));
      CHECK(fast == doctest::Approx(direct).epsilon(1e-9));
      for (double rho : {1.0, 4.0})
        CHECK(a_functional(w, rho, 16, En, p).value == doctest::Approx(a_functional_direct(w, rho, 16, En, p)).epsilon(1e-12));
    }
  }
  CHECK_THROWS_AS(a_functional(Weight(SpatialGrid::centered(2, 4)), 1.0, 16, {}, patch), ArgumentError);
  CHECK(a_functional(Weight(SpatialGrid::centered(2, 4)), 1.0, 16, E, patch).value == 0.0);
}

TEST_CASE("a_functional of a single aligned segment") {
  const auto patch = SurfacePatch::paraboloid(2);
  std::vector<Cap> E{{{0.0, 0.0}, 0.01}};
  const double rho = 16, R = 64;
  auto g = SpatialGrid::centered(2, 20, 0.25);
  // Vertical normal at w = 0; a rho^{1/2} x rho segment aligned with the bins.
  auto w = indicator(g, [](const Point& x) { return x[0] >= 0 && x[0] < 4 && x[1] > -16 && x[1] <= 0; });
  auto a = a_functional(w, rho, R, E, patch);
  CHECK_FALSE(a.cell_mode);
  CHECK(a.value == doctest::Approx(rho).epsilon(0.1));
}

TEST_CASE("a_functional comparison bound on random weights") {
  const auto patch = SurfacePatch::paraboloid(2);
  std::vector<Cap> E{{{0.0, 0.0}, 0.5}};
  auto g = SpatialGrid::centered(2, 32, 1.0);
  for (int s = 0; s < 20; ++s) {
    auto w = random_weight(g, 300 + s, 0.8);
    double rho = (s % 3 == 0) ? 1.0 : (s % 3 == 1 ? 4.0 : 16.0);
    auto a = a_functional(w, rho, 32, E, patch);
    CHECK(a.value <= a.comparison_bound * (1 + 1e-12));
  }
}

TEST_CASE("tessellation of running averages") {
  auto g = SpatialGrid::centered(2, 24, 0.5);
  for (int s = 0; s < 6; ++s) {
    auto w = random_weight(g, 50 + s, 0.6);
    Point u{std::sin(0.2 * s), -std::cos(0.2 * s), 0.0};
    for (double lambda : {2.0, 4.0}) CHECK(tessellation_ratio(w, u, 4.0, lambda) <= 4.0);
  }
}

TEST_CASE("slab weights and parallelism") {
  auto g = SpatialGrid::centered(2, 20, 0.25);
  Slab s{{0, 0, 0}, {0, 1, 0}, 0.5, 4.0};
  auto shallow = SurfacePatch::shallow(2);
  CHECK(slab_parallelism(s, shallow) >= 0.5 * kPi - 0.01);
  Slab vertical{{0, 0, 0}, {1, 0, 0}, 0.5, 4.0};
  CHECK(slab_parallelism(vertical, shallow) == doctest::Approx(0.0).epsilon(1e-12));

  Slab s2 = s;
  s2.center = {0, 1, 0};
  auto w = make_slab_weight(g, {s, s2}, {1.0, 2.0});
  CHECK(w.total_mass() > 0);
  Slab s3 = s;
  s3.center = {0, 0.5 - 1e-9, 0};
  CHECK_THROWS_AS(make_slab_weight(g, {s, s3}, {1.0, 1.0}), GeometryError);

  auto single = make_slab_weight(g, {s}, {1.0});
  auto star = make_slab_companion(g, {s}, {1.0});
  CHECK(star.total_mass() == doctest::Approx(3.0 * single.total_mass()).epsilon(0.1));

  auto g3 = SpatialGrid::centered(3, 10, 0.5);
  Slab t{{0, 0, 0}, {0, 0.6, 0.8}, 0.5, 3.0};
  auto w3 = make_slab_weight(g3, {t}, {1.0});
  CHECK(w3.total_mass() == doctest::Approx(kPi * 9.0).epsilon(0.1));
}

TEST_CASE("flake weights") {
  auto g = SpatialGrid::centered(2, 20, 0.25);
  Flake f;
  f.base_radius = 8;
  f.amplitude = 2;
  f.wavevector = {0.3, 0};
  CHECK(f.tangent_angle_min(2) >= kNearlyHorizontalAngle);
  auto w = make_flake_weight(g, {f}, {1.0});
  CHECK(w.total_mass() == doctest::Approx(16.0).epsilon(0.05));
  Flake steep = f;
  steep.slope = {100.0, 0};
  CHECK_THROWS_AS(make_flake_weight(g, {steep}, {1.0}), GeometryError);
  CHECK_NOTHROW(make_flake_weight(g, {steep}, {1.0}, false));
}

TEST_CASE("ball unions and tube weights") {
  auto g = SpatialGrid::centered(2, 10, 1.0 / 16);
  auto w = make_ball_union_weight(g, {{0, 0, 0}, {0.5, 0, 0}});
  for (double v : w.samples) CHECK(v <= 1.0);
  CHECK(w.total_mass() < 2 * kPi);
  CHECK(w.total_mass() > kPi);
  auto t = make_tube_weight(g, Tube::make({0, 0, 0}, {0, 1, 0}, 1.0, 8.0));
  CHECK(t.total_mass() == doctest::Approx(16.0).epsilon(0.05));
  CHECK(tube_line_sup(t, Tube::make({0, 0, 0}, {0, 1, 0}, 1.0, 8.0), 0.125) == doctest::Approx(8.0).epsilon(0.05));
  CHECK(xray_sup(t).value == doctest::Approx(8.0).epsilon(0.05));
}

TEST_CASE("directions near normals") {
  auto p = SurfacePatch::paraboloid(2);
  auto d = directions_near_normals(p, {{0.0, 0.0}}, 0.1, 0.01);
  CHECK(d.size() >= 19);
  for (const auto& u : d) CHECK(std::abs(u[0]) <= std::sin(0.1) + 1e-9);
  auto perp = perp_directions(p, {Cap{{0.0, 0.0}, 0.2}}, 0.1);
  CHECK(perp.size() == 5);
}
