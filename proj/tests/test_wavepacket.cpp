#include <algorithm>
#include <random>

#include "doctest.h"
#include "mtlab/wavepacket.hpp"

using namespace mtlab;

namespace {
const SurfacePatch kPatch = SurfacePatch::paraboloid(2, 1.0, 0.5);
}

TEST_CASE("zero density decomposes to an empty set") {
  Density g(kPatch, 64);
  auto ps = decompose(g, 64, 0.05);
  CHECK(ps.empty());
  CHECK(check_reconstruction(g, ps) == 0.0);
}

TEST_CASE("argument and resolution errors") {
  Density g = random_density(kPatch, 16, 1, 2);
  CHECK_THROWS_AS(decompose(g, 16, 0.3), ArgumentError);
  CHECK_THROWS_AS(decompose(g, 64, 0.05), ResolutionError);
}

TEST_CASE("tube_of examples") {
  PacketIndex idx;
  idx.cap = Cap{{0.0, 0.0}, 1.0 / 16};
  auto t = tube_of(idx, kPatch, 256, 0.05);
  CHECK(t.direction[0] == 0.0);
  CHECK(t.direction[1] == -1.0);
  CHECK(t.length == 512.0);
  CHECK(t.radius == doctest::Approx(std::pow(256.0, 0.55)));
  idx.cap.center = {0.5, 0.0};
  idx.v = {10.0, 0.0};
  t = tube_of(idx, kPatch, 256, 0.05);
  CHECK(t.direction[0] / -t.direction[1] == doctest::Approx(0.5));
  CHECK(t.contains({10.0, 0.0, 0.0}));
}

TEST_CASE("reconstruction, support and near-orthogonality at moderate R") {
  const double R = 64;
  Density g = random_density(kPatch, R, 3, R / 4);
  auto ps = decompose(g, R, 0.05);
  REQUIRE_FALSE(ps.empty());
  double rec = check_reconstruction(g, ps);
  MESSAGE("reconstruction error " << rec << " packets " << ps.packets.size());
  CHECK(rec <= 1e-2);
  double upper = ps.total_norm_sq() / g.l2_norm_sq();
  MESSAGE("sum of packet norms / norm " << upper);
  CHECK(upper <= 4.0);
  CHECK(upper >= 0.25);
  // Every packet vanishes outside its dilated cap.
  for (const auto& p : ps.packets) {
    auto e = p.density.extent();
    for (int i = 0; i < e[0]; ++i)
      if (norm(p.density.node(i, 0) - p.index.cap.center) > 3.0 * p.index.cap.radius)
        CHECK(p.density.at(i, 0) == cd{});
  }
  CHECK(check_orthogonality(ps, g, {0}) == 1.0);
  CHECK(check_orthogonality(ps, g, {}) == 1.0);
  std::mt19937_64 rng(1);
  for (int t = 0; t < 10; ++t) {
    std::vector<std::size_t> sub;
    for (std::size_t i = 0; i < ps.packets.size(); ++i)
      if (rng() % 2) sub.push_back(i);
    double r = check_orthogonality(ps, g, sub);
    CHECK(r >= 0.25);
    CHECK(r <= 4.0);
  }
}

TEST_CASE("single-cap density is rebuilt from its own cap family") {
  const double R = 64;
  const double a = 1.0 / 8.0;
  Cap theta{{0.125, 0.0}, a};
  Density g = cap_bump(kPatch, R, theta);
  auto ps = decompose(g, R, 0.05);
  // Packets from caps whose support misses theta carry nothing.
  for (const auto& p : ps.packets) CHECK(norm(p.index.cap.center - theta.center) <= 2.0 * a + 1e-12);
  CHECK(check_reconstruction(g, ps) <= 1e-2);
}

TEST_CASE("bump on one cap concentrates on the v = 0 packets") {
  const double R = 256;
  const double a = 1.0 / 16.0;
  Cap theta{{0.0, 0.0}, a};
  Density g = cap_bump(kPatch, R, theta);
  auto ps = decompose(g, R, 0.05);
  double at_zero = 0.0, total = 0.0;
  for (const auto& p : ps.packets) {
    total += p.norm_sq;
    if (p.index.v_index == std::array<int, 2>{0, 0}) at_zero += p.norm_sq;
  }
  MESSAGE("v=0 share " << at_zero / total);
  CHECK(at_zero / total >= 0.8);
}

TEST_CASE("modulated bump selects the packet at its translation") {
  const double R = 256;
  const double a = 1.0 / 16.0;
  Cap theta{{0.1875, 0.0}, a};
  Density probe(kPatch, R);
  auto ps0 = decompose(random_density(kPatch, R, 1, 4), R, 0.05);
  const double s = ps0.v_spacing;
  for (int k : {-5, 2, 7}) {
    Omega v0{k * s, 0.0};
    Density g = cap_bump(kPatch, R, theta, v0);
    auto ps = decompose(g, R, 0.05);
    auto best = std::max_element(ps.packets.begin(), ps.packets.end(),
                                 [](const Packet& x, const Packet& y) { return x.norm_sq < y.norm_sq; });
    REQUIRE(best != ps.packets.end());
    CHECK(best->index.v_index[0] == k);
    CHECK(norm(best->index.cap.center - theta.center) <= 1e-12);
  }
}

TEST_CASE("packet fields decay away from their tubes") {
  const double R = 128;
  Density g = random_density(kPatch, R, 5, R / 4);
  auto ps = decompose(g, R, 0.05);
  std::mt19937_64 rng(2);
  for (int t = 0; t < 4; ++t) {
    const Packet& p = ps.packets[rng() % ps.packets.size()];
    auto rep = check_decay(p, kPatch, R, 0.05);
    CHECK(rep.ratio <= 0.05);
    CHECK(rep.mass_in_2T >= 0.95);
  }
}

TEST_CASE("local constancy") {
  const double R = 128, rho = 64;
  Cap tau{{0.25, 0.0}, 1.0 / 8.0};
  Density one = single_cell(kPatch, R, {0.25, 0.0});
  auto flat = local_constancy_check(one, tau, rho, R, 1, 20);
  CHECK(flat.max_ratio == doctest::Approx(1.0).epsilon(1e-6));
  Density b = cap_bump(kPatch, R, tau);
  auto rep = local_constancy_check(b, tau, rho, R, 2, 50);
  MESSAGE("local constancy max ratio " << rep.max_ratio);
  CHECK(rep.max_ratio <= 20.0);
  auto control = local_constancy_check(b, tau, rho, R, 2, 50, true);
  MESSAGE("orthogonal control " << control.max_ratio);
  CHECK_THROWS_AS(local_constancy_check(b, tau, 2.0, R, 1), ScaleError);
}
