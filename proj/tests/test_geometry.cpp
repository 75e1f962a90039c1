#include <random>

#include "doctest.h"
#include "mtlab/geometry.hpp"

using namespace mtlab;

TEST_CASE("surface_point on standard patches") {
  auto par2 = SurfacePatch::paraboloid(2, 1.0, 1.0);
  auto p0 = surface_point(par2, {0.0, 0.0});
  CHECK(p0[0] == 0.0);
  CHECK(p0[1] == 0.0);
  auto p1 = surface_point(par2, {0.5, 0.0});
  CHECK(p1[0] == doctest::Approx(0.5));
  CHECK(p1[1] == doctest::Approx(0.125));
  auto sph = SurfacePatch::sphere_cap(3, 0.5);
  auto s0 = surface_point(sph, {0.0, 0.0});
  CHECK(s0[2] == 0.0);
  CHECK_THROWS_AS(surface_point(par2, {1.5, 0.0}), DomainError);
}

TEST_CASE("normals") {
  auto par = SurfacePatch::paraboloid(2, 1.0, 1.0);
  auto n0 = normal(par, {0.0, 0.0});
  CHECK(n0.direction[0] == 0.0);
  CHECK(n0.direction[1] == -1.0);
  auto n1 = normal(par, {0.5, 0.0});
  CHECK(n1.direction[0] == doctest::Approx(0.5 / std::sqrt(1.25)).epsilon(1e-14));
  CHECK(n1.direction[1] == doctest::Approx(-1.0 / std::sqrt(1.25)).epsilon(1e-14));

  auto shallow = SurfacePatch::shallow(3);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int i = 0; i < 1000; ++i) {
    Omega w{u(rng), u(rng)};
    if (norm(w) > 1.0) continue;
    CHECK(normal(shallow, w).angle_to_vertical <= 0.01 + 1e-15);
  }
}

TEST_CASE("normal is orthogonal to the tangent basis") {
  for (int n : {2, 3}) {
    for (auto patch : {SurfacePatch::paraboloid(n, 1.0, 0.5), SurfacePatch::sphere_cap(n, 0.5)}) {
      std::mt19937_64 rng(11);
      std::uniform_real_distribution<double> u(-0.5, 0.5);
      for (int i = 0; i < 200; ++i) {
        Omega w{u(rng), n == 3 ? u(rng) : 0.0};
        if (norm(w) > 0.5) continue;
        Point nv = normal(patch, w).direction;
        Omega g = patch.grad(w);
        for (int a = 0; a < n - 1; ++a) {
          Point t{};
          t[a] = 1.0;
          t[n - 1] = g[a];
          CHECK(std::abs(dot(nv, t)) <= 1e-9);
        }
        CHECK(norm(nv) == doctest::Approx(1.0).epsilon(1e-14));
      }
    }
  }
}

TEST_CASE("patch certificates") {
  for (int n : {2, 3}) {
    for (auto patch : {SurfacePatch::paraboloid(n, 1.0, 0.5), SurfacePatch::sphere_cap(n, 0.5), SurfacePatch::shallow(n)}) {
      auto cert = validate_patch(patch, 7);
      CHECK(cert.gradient_consistent);
      CHECK(cert.convex);
    }
  }
  CHECK(validate_patch(SurfacePatch::shallow(2)).near_vertical);
  CHECK_FALSE(validate_patch(SurfacePatch::paraboloid(2, 1.0, 0.5)).near_vertical);
}

namespace {
int cover_count(const std::vector<Cap>& caps, const Omega& w) {
  int c = 0;
  for (const auto& cap : caps) c += cap.contains(w) ? 1 : 0;
  return c;
}

void check_cover(const SurfacePatch& patch, double radius, int samples) {
  auto caps = cap_cover(patch, radius);
  const int m = patch.dim() - 1;
  const int bound = m == 1 ? 3 : 9;
  std::mt19937_64 rng(42);
  const double rd = patch.domain_radius();
  std::uniform_real_distribution<double> u(-rd, rd);
  int done = 0;
  while (done < samples) {
    Omega w{u(rng), m == 2 ? u(rng) : 0.0};
    if (norm(w) > rd) continue;
    ++done;
    int c = cover_count(caps, w);
    REQUIRE(c >= 1);
    REQUIRE(c <= bound);
  }
  // Points on the domain boundary are covered too.
  for (int k = 0; k < 4000; ++k) {
    double a = kTwoPi * k / 4000.0;
    Omega w = m == 2 ? Omega{rd * std::cos(a), rd * std::sin(a)} : Omega{k % 2 ? rd : -rd, 0.0};
    int c = cover_count(caps, w);
    REQUIRE(c >= 1);
    REQUIRE(c <= bound);
  }
  for (const auto& cap : caps) {
    CHECK(norm(cap.center) <= rd * (1 + 1e-12));
    // Centres lie on the lattice radius * Z^{n-1}.
    for (int a = 0; a < m; ++a) {
      double k = cap.center[a] / radius;
      CHECK(std::abs(k - std::round(k)) <= 1e-9);
    }
  }
}
}  // namespace

TEST_CASE("cap_cover examples") {
  auto par2 = SurfacePatch::paraboloid(2, 1.0, 1.0);
  auto whole = cap_cover(par2, 2.0);
  REQUIRE(whole.size() == 1);
  CHECK(whole[0].contains({0.99, 0.0}));
  CHECK(whole[0].contains({-0.99, 0.0}));

  auto five = cap_cover(par2, 0.5);
  CHECK(five.size() == 5);
  check_cover(par2, 0.5, 10000);

  auto par3 = SurfacePatch::paraboloid(3, 1.0, 1.0);
  auto caps3 = cap_cover(par3, 0.25);
  CHECK(caps3.size() >= 8);
  CHECK(caps3.size() <= 81);
  check_cover(par3, 0.25, 10000);
}

TEST_CASE("cap_cover property over random radii") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.02, 0.9);
  for (int trial = 0; trial < 20; ++trial) {
    int n = trial % 2 ? 3 : 2;
    double rd = trial % 3 == 0 ? 1.0 : 0.5;
    auto patch = SurfacePatch::paraboloid(n, 1.0, rd);
    double r = u(rng) * rd;
    check_cover(patch, r, 2000);
  }
  CHECK_THROWS_AS(cap_cover(SurfacePatch::paraboloid(2, 1.0, 0.5), 1.5), ArgumentError);
}

TEST_CASE("tube construction and membership") {
  CHECK_THROWS_AS(Tube::make({0, 0, 0}, {1.0, 1.0, 0.0}, 1.0, 1.0), GeometryError);
  CHECK_THROWS_AS(Tube::make({0, 0, 0}, {1.0, 0.0, 0.0}, 0.0, 1.0), GeometryError);
  auto t = Tube::make({0, 0, 0}, {0.0, 1.0, 0.0}, 2.0, 10.0);
  CHECK(t.contains({1.9, 4.9, 0.0}));
  CHECK_FALSE(t.contains({2.1, 0.0, 0.0}));
  CHECK_FALSE(t.contains({0.0, 5.1, 0.0}));
  CHECK(t.volume(2) == doctest::Approx(40.0));
}

TEST_CASE("orthonormal complement") {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> g;
  for (int i = 0; i < 100; ++i) {
    Point u{g(rng), g(rng), g(rng)};
    u = (1.0 / norm(u)) * u;
    auto c = orthonormal_complement(u, 3);
    CHECK(std::abs(dot(c[0], u)) < 1e-12);
    CHECK(std::abs(dot(c[1], u)) < 1e-12);
    CHECK(std::abs(dot(c[0], c[1])) < 1e-12);
    CHECK(norm(c[0]) == doctest::Approx(1.0));
    CHECK(norm(c[1]) == doctest::Approx(1.0));
  }
}
