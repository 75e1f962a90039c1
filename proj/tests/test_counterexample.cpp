#include <algorithm>
#include <set>

#include "doctest.h"
#include "mtlab/counterexample.hpp"

using namespace mtlab;

namespace {

// Two neighbouring caps near the vertex of the paraboloid, R = 64.
CexFamilies two_caps() { return build_families(64, 2, cex_patch(2), 1.5, {3, 4}); }

CexState bare_state(const CexFamilies& fam) {
  CexState st;
  st.phases.assign(fam.tubes.size(), cd{});
  st.assigned.assign(fam.tubes.size(), 0);
  return st;
}

}  // namespace

TEST_CASE("cap and tube families") {
  auto fam = build_families(64, 2, cex_patch(2));
  CHECK(fam.cap_diameter == 0.25);
  CHECK(fam.caps.size() == 8);
  CHECK(fam.radius == 4.0);
  CHECK(fam.length == 16.0);
  auto chk = check_families(fam, 3, 500);
  CHECK(chk.max_core_multiplicity == 1);
  CHECK(chk.uncovered == 0);
  CHECK(chk.max_support_multiplicity <= 4);
  CHECK(chk.max_direction_error <= 1e-12);
  for (std::size_t t = 0; t < fam.tubes.size(); t += 37) {
    const auto& T = fam.tubes[t];
    CHECK(fam.core_tube(T.cap, T.core.anchor) == t);
    CHECK(fam.phi(t, T.core.anchor) == 1.0);
  }
  auto fam3 = build_families(64, 3, cex_patch(3));
  CHECK(fam3.caps.size() > 1);
  CHECK(check_families(fam3, 4, 100).max_core_multiplicity == 1);
  CHECK_THROWS_AS(build_families(8, 2, cex_patch(2)), ScaleError);
  CHECK_THROWS_AS(build_families(64, 2, cex_patch(3)), ArgumentError);
}

TEST_CASE("occupancy certificate") {
  auto fam = build_families(64, 2, cex_patch(2));
  auto one = certify({{3, 4, 0}}, fam);
  CHECK(one.line_max == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(one.tube_max == 1.0);
  CHECK(one.passed);
  std::vector<Point> five{{0, 0, 0}, {5, 1, 0}, {-7, 3, 0}, {10, 2, 0}, {2, -9, 0}};
  double brute = occupancy_all_pairs(five, 2);
  CHECK(certify(five, fam).line_max == doctest::Approx(brute).epsilon(2e-3));
  auto w = build_low_occupancy_weight(fam);
  CHECK(w.certificate.passed);
  CHECK(w.centers.size() >= 32);
  CHECK(w.centers.size() <= 256);
  for (std::size_t i = 0; i < w.centers.size(); ++i) {
    CHECK(norm(w.centers[i]) <= 63.0);
    for (std::size_t j = i + 1; j < w.centers.size(); ++j) CHECK(norm(w.centers[i] - w.centers[j]) >= 2.0);
  }
}

TEST_CASE("greedy selection invariants") {
  auto fam = build_families(64, 2, cex_patch(2));
  auto w = build_low_occupancy_weight(fam);
  auto sel = select_balls(w.centers, fam);
  CHECK(sel.incidences == sel.incidences_tube_wise);
  CHECK(sel.balls.size() >= w.centers.size() / (64.0 * 36.0));
  std::set<std::size_t> seen;
  for (std::size_t j = 0; j < sel.balls.size(); ++j) {
    auto through = tubes_through(fam, w.centers[sel.balls[j]]);
    CHECK(2 * sel.richsets[j].size() >= fam.caps.size());
    for (auto t : sel.richsets[j]) {
      CHECK(std::find(through.begin(), through.end(), t) != through.end());
      // No tube of T_j passes through an earlier selected ball.
      for (std::size_t e = 0; e < j; ++e) {
        auto prev = tubes_through(fam, w.centers[sel.balls[e]]);
        CHECK(std::find(prev.begin(), prev.end(), t) == prev.end());
      }
      CHECK(seen.insert(t).second);
    }
  }
}

TEST_CASE("three balls on one tube against the exhaustive oracle") {
  auto fam = two_caps();
  REQUIRE(fam.caps.size() == 2);
  const Point u = fam.caps[0].axis;
  std::vector<Point> balls{-5.0 * u, Point{0, 0, 0}, 5.0 * u};
  for (const auto& b : balls) CHECK(tubes_through(fam, b).size() == 2);
  auto sel = select_balls(balls, fam);
  CHECK(sel.balls == select_balls_bruteforce(balls, fam));
  CHECK(sel.balls.front() == 0);
  // Far apart balls share no tube, so every ball is selected with all its tubes.
  std::vector<Point> apart{{-40, 0, 0}, {0, 0, 0}, {40, 0, 0}};
  auto sa = select_balls(apart, fam);
  CHECK(sa.balls == std::vector<std::size_t>{0, 1, 2});
  for (const auto& r : sa.richsets) CHECK(r.size() == 2);
  CHECK(select_balls_bruteforce(apart, fam) == sa.balls);
}

TEST_CASE("phases align the tubes through each selected ball") {
  auto fam = build_families(64, 2, cex_patch(2));
  std::vector<Point> one{{0, 0, 0}};
  auto st = assign_phases(one, select_balls(one, fam), fam);
  CHECK(st.signs == std::vector<int>{1});
  cd f = evaluate_F(st, fam, one[0]);
  const double amp = std::pow(64.0, -1.0 / 6.0);
  CHECK(f.real() == doctest::Approx(8 * amp).epsilon(1e-12));
  CHECK(std::abs(f.imag()) <= 1e-12);

  // A generic centre: the assigned terms alone are real and positive.
  std::vector<Point> gen{{3.3, -7.1, 0}};
  auto sg = assign_phases(gen, select_balls(gen, fam), fam);
  for (std::size_t t = 0; t < fam.tubes.size(); ++t)
    if (!sg.assigned[t]) sg.phases[t] = cd{};
  cd fg = evaluate_F(sg, fam, gen[0]);
  CHECK(fg.real() > 0.0);
  CHECK(std::abs(fg.imag()) <= 1e-12 * std::abs(fg));

  auto nul = bare_state(fam);
  CHECK(evaluate_F(nul, fam, {1, 2, 0}) == cd{});
}

TEST_CASE("second ball keeps the sign of the earlier contribution") {
  auto fam = build_families(64, 2, cex_patch(2));
  std::vector<Point> two{{0, 0, 0}, {2, 40, 0}};
  auto sel = select_balls(two, fam);
  auto st = assign_phases(two, sel, fam);
  for (std::size_t t = 0; t < fam.tubes.size(); ++t)
    if (!st.assigned[t]) st.phases[t] = cd{};
  REQUIRE(sel.balls.size() == 2);
  const double amp = std::pow(fam.cap_diameter, 0.5);
  double own = 0.0;
  for (auto t : sel.richsets[1]) own += fam.phi(t, two[1]) * amp;
  CHECK(std::abs(evaluate_F(st, fam, two[1]).real()) >= own * (1 - 1e-12));
  CHECK_THROWS_AS(evaluate_cex(bare_state(build_families(32, 2, cex_patch(2))), fam), StateError);
}

TEST_CASE("decoupling axioms on tubes with disjoint supports") {
  auto fam = two_caps();
  auto st = bare_state(fam);
  st.phases[fam.find_tube(0, {-4, 0, 0})] = 1.0;
  st.phases[fam.find_tube(1, {4, 0, 0})] = 1.0;
  auto ax = verify_decoupling_axioms(st, fam, 1, 20);
  CHECK(ax.da2_min == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(ax.da2_max == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(ax.da2_ok);
  CHECK(ax.da1_max <= 20.0);
}

TEST_CASE("state round trip and reproducibility") {
  OccupancyOptions occ;
  occ.seed = 5;
  auto a = run_cex(64, 2, occ);
  auto b = run_cex(64, 2, occ);
  CHECK(a.weight.centers == b.weight.centers);
  CHECK(a.result.ratio == b.result.ratio);
  CHECK(a.result.ratio > 0.0);
  CHECK(a.result.large_ok);
  auto text = state_to_json(a.state, a.families);
  auto back = state_from_json(text, a.families);
  CHECK(back.centers == a.state.centers);
  CHECK(back.selection.balls == a.state.selection.balls);
  CHECK(back.signs == a.state.signs);
  double err = 0.0;
  for (std::size_t t = 0; t < back.phases.size(); ++t) err = std::max(err, std::abs(back.phases[t] - a.state.phases[t]));
  CHECK(err <= 1e-12);
  CHECK_THROWS_AS(state_from_json(text, two_caps()), StateError);
}
