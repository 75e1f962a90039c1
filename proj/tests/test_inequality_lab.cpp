#include <cstdio>
#include <fstream>

#include "doctest.h"
#include "mtlab/inequality_lab.hpp"

using namespace mtlab;

namespace {
const SurfacePatch kPara = SurfacePatch::paraboloid(2, 1.0, 0.5);
}

TEST_CASE("zero density gives a zero report") {
  Density g(kPara, 32);
  Weight w(SpatialGrid::centered(2, 32));
  for (auto& v : w.samples) v = 1.0;
  auto r = mt_report(g, w, 32, 4);
  CHECK(r.lhs == 0.0);
  for (const auto& [k, v] : r.ratios) CHECK(v == 0.0);
}

TEST_CASE("mismatched grids are rejected") {
  Density g = random_density(kPara, 32, 1, 4);
  Weight w(SpatialGrid::centered(2, 16));
  CHECK_THROWS_AS(mt_report(g, w, 32, 1), GeometryError);
}

TEST_CASE("focusing pair sits within the sharp range") {
  auto fp = focusing_pair(kPara, 64);
  MTOptions opt;
  opt.xray = opt.xray_perp = false;
  auto r = mt_report(fp.g, fp.w, 64, 1.0, opt);
  MESSAGE("focusing ratio " << r.ratios["tube_mass"]);
  CHECK(r.ratios["tube_mass"] >= 0.05);
  CHECK(r.ratios["tube_mass"] <= 1.0);
  CHECK(r.rhs["a_rho"] == doctest::Approx(r.rhs["tube_mass"]).epsilon(1e-9));
}

TEST_CASE("ball weight obeys the trivial R bound and rhs ordering holds") {
  const double R = 32;
  Density g = random_density(kPara, R, 2, R / 4);
  Weight w(SpatialGrid::centered(2, R));
  for (std::size_t k = 0; k < w.samples.size(); ++k) w.samples[k] = norm(w.grid.point(k)) <= R ? 1.0 : 0.0;
  MTOptions opt;
  opt.stein = true;
  auto r = mt_report(g, w, R, 4, opt);
  CHECK(r.lhs <= 5.0 * R * r.g_norm_sq);
  CHECK(r.rhs["xray_perp"] <= r.rhs["xray"]);
  CHECK(r.rhs["stein"] > 0.0);
  CHECK(r.argmax_tube.has_value());
}

TEST_CASE("richness of simple tube families") {
  const double R = 64;
  std::vector<Tube> one{Tube::make({0, 0, 0}, {0, 1, 0}, 8, 64)};
  auto p1 = richness_partition(one, R, 2);
  CHECK(p1.levels.size() == 1);
  CHECK(p1.levels.begin()->first == 0);
  std::vector<Tube> par;
  for (int i = -2; i <= 2; ++i) par.push_back(Tube::make({i * 40.0, 0, 0}, {0, 1, 0}, 2, 64));
  auto p2 = richness_partition(par, R, 2);
  for (std::size_t b = 0; b < p2.counts.size(); ++b) CHECK(p2.counts[b] <= 1);
  CHECK(p2.ball_wise_total == p2.tube_wise_total);
  CHECK(p2.ball_wise_total >= 5 * 8);
}

TEST_CASE("counting identity on a random packet family") {
  const double R = 64;
  Density g = random_density(kPara, R, 11, R / 4);
  auto ps = decompose(g, R, 0.05);
  std::vector<Tube> tubes;
  for (const auto& p : ps.packets) tubes.push_back(tube_of(p.index, kPara, R, 0.05));
  auto P = richness_partition(tubes, R, 2);
  CHECK(P.ball_wise_total == P.tube_wise_total);
  long long lv = 0;
  for (const auto& [j, balls] : P.levels)
    for (auto b : balls) {
      CHECK(P.counts[b] >= (1 << j));
      CHECK(P.counts[b] < (2 << j));
      lv += P.counts[b];
    }
  CHECK(lv == P.ball_wise_total);
}

TEST_CASE("refined decoupling on one packet and on a random density") {
  const double R = 64;
  Cap theta{{0.0, 0.0}, 0.125};
  Density b = cap_bump(kPara, R, theta);
  auto ps = decompose(b, R, 0.05);
  auto rep = refined_decoupling_check(ps, b, R);
  CHECK(rep.tubes >= 1);
  CHECK(std::isfinite(rep.max_ratio));
  CHECK(rep.max_ratio > 0.0);
  Density g = random_density(kPara, R, 4, R / 4);
  auto rep2 = refined_decoupling_check(decompose(g, R, 0.05), g, R);
  CHECK(rep2.ball_wise_total == rep2.tube_wise_total);
  for (const auto& lv : rep2.levels) CHECK(lv.ratio >= lv.lhs / rep2.g_norm * 0.999999);
}

TEST_CASE("slab decoupling") {
  const auto shallow = SurfacePatch::shallow(2);
  const double R = 64, rho = 16;
  auto slabs = random_slabs(2, R, rho, {0, 1, 0}, 30, 3);
  CHECK(slabs.size() == 30);
  std::vector<double> coeffs(slabs.size(), 1.0);
  // One cap only.
  Density gt = cap_bump(shallow, R, Cap{{0.0, 0.0}, 0.2});
  auto one = slab_decoupling_check(gt, slabs, coeffs, rho, CapScale::InverseQuarterRho, R);
  CHECK(one.caps == 1);
  CHECK(one.ratio <= 1.0 + 1e-6);
  Density g = random_density(shallow, R, 5, R / 4);
  auto rep = slab_decoupling_check(g, slabs, coeffs, rho, CapScale::InverseSqrtRho, R);
  MESSAGE("slab ratio " << rep.ratio << " caps " << rep.caps << " nu " << rep.nu);
  CHECK(rep.nu >= 0.3);
  CHECK(rep.ratio <= 10.0);
  auto vslabs = random_slabs(2, R, rho, {1, 0, 0}, 20, 3);
  auto control = slab_decoupling_check(g, vslabs, std::vector<double>(vslabs.size(), 1.0), rho,
                                       CapScale::InverseSqrtRho, R);
  MESSAGE("vertical control " << control.ratio);
  CHECK(control.nu < 0.3);
  std::vector<Slab> clash{slabs[0], slabs[0]};
  CHECK_THROWS_AS(slab_decoupling_check(g, clash, {1.0, 1.0}, rho, CapScale::InverseSqrtRho, R), GeometryError);
}

TEST_CASE("partition by caps sums back to g") {
  Density g = random_density(kPara, 64, 8, 8);
  std::vector<Cap> caps;
  auto pieces = partition_by_caps(g, 0.125, &caps);
  CHECK(pieces.size() == caps.size());
  Density sum(kPara, 64);
  for (const auto& p : pieces) p.add_to(sum);
  double err = 0.0;
  for (std::size_t k = 0; k < sum.size(); ++k) err = std::max(err, std::abs(sum.samples()[k] - g.samples()[k]));
  CHECK(err == 0.0);
}

TEST_CASE("flake checks") {
  const double R = 64;
  Density g = random_density(kPara, R, 6, R / 8);
  Flake plane;
  plane.base_radius = R;
  auto r = flake_mt_check(g, {plane}, {1.0}, R);
  MESSAGE("plane lhs / |g|^2 " << r.lhs / r.g_norm_sq);
  CHECK(r.lhs / r.g_norm_sq == doctest::Approx(1.0).epsilon(0.1));
  std::vector<Flake> stack;
  for (int i = 0; i < 8; ++i) {
    Flake f = plane;
    f.offset = -28.0 + 8.0 * i;
    stack.push_back(f);
  }
  auto rs = flake_mt_check(g, stack, std::vector<double>(stack.size(), 1.0), R);
  MESSAGE("stack lhs / packet rhs " << rs.ratios["packet"]);
  CHECK(rs.lhs <= 3.0 * rs.rhs["packet"]);
  Flake steep = plane;
  steep.slope = {80.0, 0.0};
  CHECK_THROWS_AS(flake_mt_check(g, {steep}, {1.0}, R), GeometryError);
  auto z = flake_mt_check(Density(kPara, R), {plane}, {1.0}, R);
  CHECK(z.lhs == 0.0);
  CHECK(z.rhs["packet"] == 0.0);
}

TEST_CASE("log-log fits") {
  std::vector<double> x{64, 128, 256, 512};
  auto c = fit_loglog(x, {3, 3, 3, 3});
  CHECK(std::abs(c.slope) <= 1e-9);
  auto l = fit_loglog(x, x);
  CHECK(l.slope == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_THROWS_AS(fit_loglog({1, 2}, {1, 2}), FitError);
  CHECK_THROWS_AS(fit_loglog({1, 2, 3}, {1, 0, 2}), FitError);
  CHECK_THROWS_AS(sweep({64, 128}, [](double) { return MTReport{}; }), FitError);
}

TEST_CASE("sweep and csv output") {
  auto reps = sweep({16, 32, 64}, [](double R) {
    MTReport r;
    r.scenario = "toy";
    r.R = R;
    r.lhs = R;
    r.rhs["a"] = 1.0;
    r.ratios["a"] = R;
    return r;
  });
  auto fits = fit_variants(reps);
  CHECK(fits["a"].slope == doctest::Approx(1.0));
  std::string path = "test_reports.csv";
  write_reports_csv(path, reps);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "scenario,n,R,rho,lhs,g_norm_sq,rhs_a,ratio_a");
  std::remove(path.c_str());
}
