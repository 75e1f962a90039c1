#include "scenarios.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "mtlab/wavepacket.hpp"

namespace mtcli {

using namespace mtlab;

bool ScenarioResult::ok() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

void ScenarioResult::add(const std::string& name, bool passed, const std::string& detail) {
  checks.push_back({name, passed, detail});
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

std::uint64_t seed_of(const json& cfg) { return static_cast<std::uint64_t>(get_int(cfg, "seed")); }

std::string file(ScenarioResult& res, const std::string& out, const std::string& name) {
  std::string p = join_path(out, name);
  res.artifacts.push_back(p);
  return p;
}

std::vector<Point> grid_points(const SpatialGrid& g) {
  std::vector<Point> pts(g.size());
  for (std::size_t k = 0; k < g.size(); ++k) pts[k] = g.point(k);
  return pts;
}

CapScale cap_scale(const json& cfg) {
  auto s = get_string(cfg, "decouple.cap_scale");
  if (s == "inverse_sqrt_rho") return CapScale::InverseSqrtRho;
  if (s == "inverse_quarter_rho") return CapScale::InverseQuarterRho;
  throw UsageError("decouple.cap_scale must be inverse_sqrt_rho or inverse_quarter_rho");
}

MTOptions mt_options(const json& cfg) {
  MTOptions o;
  o.xray = cfg.at("mt").at("xray").get<bool>();
  o.xray_perp = cfg.at("mt").at("xray_perp").get<bool>();
  o.tube_mass = cfg.at("mt").at("tube_mass").get<bool>();
  o.a_rho = cfg.at("mt").at("a_rho").get<bool>();
  o.stein = cfg.at("mt").at("stein").get<bool>();
  o.xray_options = make_xray_options(cfg);
  return o;
}

MTReport mt_at(const json& cfg, double R) {
  const auto patch = make_patch(cfg);
  const double rho = get_double(cfg, "rho");
  MTReport r;
  if (get_string(cfg, "weight.kind") == "focusing") {
    auto fp = focusing_pair(patch, R);
    r = mt_report(fp.g, fp.w, R, rho, mt_options(cfg));
  } else {
    Density g = make_density(cfg, patch, R, seed_of(cfg));
    Weight w = make_weight(cfg, patch, R, seed_of(cfg));
    r = mt_report(g, w, R, rho, mt_options(cfg));
  }
  r.scenario = get_string(cfg, "scenario");
  return r;
}

struct CexRow {
  double R;
  std::uint64_t seed;
  CexRun run;
  double seconds;
};

CexRow cex_at(const json& cfg, double R, std::uint64_t seed) {
  auto t0 = std::chrono::steady_clock::now();
  CexRow row{R, seed, run_cex(R, get_int(cfg, "n"), make_occupancy(cfg, seed), make_cex_options(cfg)), 0.0};
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return row;
}

const std::vector<std::string> kCexColumns{"R",          "seed",        "caps",     "tubes",    "n_balls",
                                           "target",     "line_max",    "tube_max", "bound",    "certified",
                                           "selected",   "incidences",  "weighted", "total",    "xray",
                                           "ratio",      "large_fraction", "budget"};

void cex_csv_row(Csv& csv, const CexRow& r) {
  const auto& c = r.run.weight.certificate;
  const auto& s = r.run.state.selection;
  const auto& x = r.run.result;
  csv << r.R << static_cast<long long>(r.seed) << r.run.families.caps.size() << r.run.families.tubes.size()
      << c.n_balls << c.target << c.line_max << c.tube_max << c.bound << (c.passed ? 1 : 0) << s.balls.size()
      << s.incidences << x.weighted << x.total << x.xray << x.ratio << x.large_fraction << x.budget;
  csv.end_row();
}

void cex_row_checks(ScenarioResult& res, const CexRow& r, double budget_bound = 0.0) {
  std::string tag = "R=" + fmt(r.R) + " seed=" + std::to_string(r.seed);
  const auto& c = r.run.weight.certificate;
  res.add("occupancy certificate " + tag, c.passed,
          "line " + fmt(c.line_max) + " tube " + fmt(c.tube_max) + " bound " + fmt(c.bound));
  std::string why = check_selection(r.run.weight.centers, r.run.state.selection, r.run.families);
  res.add("selection invariants " + tag, why.empty(), why.empty() ? "P1, P2 and incidence count hold" : why);
  res.add("|F| large on selected balls " + tag, r.run.result.large_ok,
          "fraction " + fmt(r.run.result.large_fraction));
  if (budget_bound > 0.0 && r.run.families.n == 2 && r.R <= 512)
    res.add("L2 budget " + tag, r.run.result.budget <= budget_bound,
            "int |F|^2 / R^n = " + fmt(r.run.result.budget) + " (bound " + fmt(budget_bound) + ")");
}

// Wall-clock times live apart from the report files so that reruns stay byte-identical.
void timing_row(Csv& csv, const CexRow& r) {
  csv << r.R << static_cast<long long>(r.seed) << r.seconds;
  csv.end_row();
}

// ---------------------------------------------------------------- scenarios

ScenarioResult plancherel(const json& cfg, const std::string& out) {
  ScenarioResult res;
  const auto patch = make_patch(cfg);
  const double R = get_double(cfg, "R"), tol = get_double(cfg, "tolerances.plancherel");
  const int count = get_int(cfg, "density.count");
  Csv csv(file(res, out, "slices.csv"), {"density", "slice", "t", "slice_l2", "g_norm_sq", "rel_err"});
  double worst = 0.0;
  for (int d = 0; d < count; ++d) {
    Density g = make_density(cfg, patch, R, seed_of(cfg) + d);
    const double n2 = g.l2_norm_sq();
    Field f = extend_fast_grid(g, R);
    auto sl = slice_l2(f);
    for (std::size_t t = 0; t < sl.size(); ++t) {
      double err = n2 > 0 ? std::abs(sl[t] - n2) / n2 : std::abs(sl[t]);
      worst = std::max(worst, err);
      csv << d << t << f.grid.origin[f.grid.n - 1] + f.grid.spacing * static_cast<double>(t) << sl[t] << n2 << err;
      csv.end_row();
    }
  }
  res.add("slice Plancherel", worst <= tol, "max relative error " + fmt(worst) + " (tolerance " + fmt(tol) + ")");
  return res;
}

ScenarioResult fast_direct(const json& cfg, const std::string& out) {
  ScenarioResult res;
  const auto patch = make_patch(cfg);
  const double R = get_double(cfg, "R"), tol = get_double(cfg, "tolerances.fast_direct");
  Csv csv(file(res, out, "fast_direct.csv"), {"seed", "points", "max_abs_diff"});
  double worst = 0.0;
  for (auto seed : get_seeds(cfg)) {
    Density g = make_density(cfg, patch, R, seed);
    Field f = extend_fast_grid(g, R);
    auto direct = extend_direct(g, grid_points(f.grid));
    double m = 0.0;
    for (std::size_t k = 0; k < direct.size(); ++k) m = std::max(m, std::abs(direct[k] - f.samples[k]));
    worst = std::max(worst, m);
    csv << static_cast<long long>(seed) << direct.size() << m;
    csv.end_row();
  }
  res.add("fast grid equals direct quadrature", worst <= tol, "max |diff| " + fmt(worst));
  return res;
}

ScenarioResult oracles(const json& cfg, const std::string& out) {
  ScenarioResult res;
  const double tol = get_double(cfg, "tolerances.chord");
  Csv csv(file(res, out, "oracles.csv"), {"oracle", "n", "value", "expected", "abs_err"});
  auto indicator = [](const SpatialGrid& g, auto in) {
    Weight w(g);
    for (std::size_t k = 0; k < g.size(); ++k) w.samples[k] = in(g.point(k)) ? 1.0 : 0.0;
    return w;
  };
  XrayOptions fine;
  fine.angular_res = 0.05;
  fine.offset_res = 0.05;
  auto disc = indicator(SpatialGrid::centered(2, 1.5, 1.0 / 32), [](const Point& x) { return norm(x) <= 1.0; });
  double vd = xray_sup(disc, fine).value;
  csv << "disc_chord" << 2 << vd << 2.0 << std::abs(vd - 2.0);
  csv.end_row();
  res.add("unit disc chord", std::abs(vd - 2.0) <= tol * 2.0, fmt(vd) + " vs 2");
  const double a = 3.0;
  auto rect = indicator(SpatialGrid::centered(2, 4, 1.0 / 32),
                        [&](const Point& x) { return x[0] >= 0 && x[0] < a && x[1] >= 0 && x[1] < 1; });
  double vr = xray_sup(rect, fine).value, er = std::sqrt(a * a + 1);
  csv << "rectangle_diagonal" << 2 << vr << er << std::abs(vr - er);
  csv.end_row();
  res.add("rectangle diagonal", std::abs(vr - er) <= tol * er, fmt(vr) + " vs " + fmt(er));

  bool tubes_exact = true, afunc_exact = true;
  double afunc_worst = 0.0;
  for (int n : {2, 3}) {
    SpatialGrid g;
    g.n = n;
    g.extent = {16, 16, n == 3 ? 16 : 1};
    g.origin = {-7.5, -7.5, n == 3 ? -7.5 : 0.0};
    std::mt19937_64 rng(seed_of(cfg) + n);
    std::uniform_real_distribution<double> U(-1, 1), V(0, 3);
    for (int s = 0; s < 10; ++s) {
      Weight w(g);
      for (auto& v : w.samples) v = U(rng) < -0.4 ? 0.0 : V(rng);
      Point u{U(rng), U(rng), n == 3 ? U(rng) : 0.0};
      u = (1.0 / norm(u)) * u;
      Tube t = Tube::make({5 * U(rng), 5 * U(rng), n == 3 ? 5 * U(rng) : 0.0}, u, 2.5, 9.0);
      double brute = 0.0;
      for (std::size_t k = 0; k < g.size(); ++k)
        if (t.contains(g.point(k))) brute += w.samples[k] * g.cell_volume();
      double fast = tube_mass(w, t);
      tubes_exact = tubes_exact && fast == brute;
      csv << "tube_mass" << n << fast << brute << std::abs(fast - brute);
      csv.end_row();
      const auto patch = SurfacePatch::paraboloid(n);
      std::vector<Cap> E{{{0.1, 0.0}, 0.2}};
      for (double rho : {1.0, 4.0}) {
        double va = a_functional(w, rho, 16, E, patch).value, vb = a_functional_direct(w, rho, 16, E, patch);
        double rel = std::abs(va - vb) / std::max(1e-300, std::abs(vb));
        afunc_worst = std::max(afunc_worst, rel);
        afunc_exact = afunc_exact && rel <= 1e-12;
        csv << (rho == 1.0 ? "a_functional_rho1" : "a_functional_rho4") << n << va << vb << std::abs(va - vb);
        csv.end_row();
      }
    }
  }
  res.add("tube_mass equals the cell loop", tubes_exact, "20 random tubes on 16^n grids");
  res.add("a_functional equals the cell loop", afunc_exact, "max relative difference " + fmt(afunc_worst));
  return res;
}

ScenarioResult focusing_sweep(const json& cfg, const std::string& out) {
  ScenarioResult res;
  json c = cfg;
  c["weight"]["kind"] = "focusing";
  c["mt"]["xray"] = false;
  c["mt"]["xray_perp"] = false;
  auto reps = sweep(get_doubles(cfg, "R_list"), [&](double R) { return mt_at(c, R); });
  write_reports_csv(file(res, out, "reports.csv"), reps);
  const double lo = get_double(cfg, "tolerances.focusing_low"), hi = get_double(cfg, "tolerances.focusing_high");
  std::vector<double> xs, ys;
  for (const auto& r : reps) {
    double q = r.ratios.at("tube_mass");
    res.add("focusing ratio R=" + fmt(r.R), q >= lo && q <= hi, fmt(q));
    xs.push_back(r.R);
    ys.push_back(q);
  }
  auto fit = fit_loglog(xs, ys);
  const double st = get_double(cfg, "tolerances.focusing_slope");
  res.add("focusing ratio has no R-power", std::abs(fit.slope) <= st, "slope " + fmt(fit.slope));
  Csv csv(file(res, out, "fits.csv"), {"variant", "slope", "intercept", "points"});
  csv << "tube_mass" << fit.slope << fit.intercept << xs.size();
  csv.end_row();
  return res;
}

ScenarioResult richness(const json& cfg, const std::string& out) {
  ScenarioResult res;
  const auto patch = make_patch(cfg);
  const double R = get_double(cfg, "R"), delta = get_double(cfg, "delta");
  Csv csv(file(res, out, "richness.csv"), {"seed", "tubes", "balls", "levels", "ball_wise", "tube_wise"});
  for (auto seed : get_seeds(cfg)) {
    Density g = make_density(cfg, patch, R, seed);
    auto ps = decompose(g, R, delta);
    std::vector<Tube> tubes;
    for (const auto& p : ps.packets) tubes.push_back(tube_of(p.index, patch, R, delta));
    auto P = richness_partition(tubes, R, patch.dim());
    long long lv = 0;
    for (const auto& [j, balls] : P.levels)
      for (auto b : balls) lv += P.counts[b];
    csv << static_cast<long long>(seed) << tubes.size() << P.centers.size() << P.levels.size() << P.ball_wise_total
        << P.tube_wise_total;
    csv.end_row();
    res.add("counting identity seed=" + std::to_string(seed), P.ball_wise_total == P.tube_wise_total && lv == P.ball_wise_total,
            std::to_string(P.ball_wise_total) + " = " + std::to_string(P.tube_wise_total));
  }
  return res;
}

ScenarioResult refined(const json& cfg, const std::string& out) {
  ScenarioResult res;
  const auto patch = make_patch(cfg);
  const double R = get_double(cfg, "R"), delta = get_double(cfg, "delta");
  Csv csv(file(res, out, "refined.csv"), {"seed", "tubes", "levels", "max_ratio", "ball_wise", "tube_wise"});
  double lo = 1e300, hi = 0.0;
  for (auto seed : get_seeds(cfg)) {
    Density g = make_density(cfg, patch, R, seed);
    auto rep = refined_decoupling_check(decompose(g, R, delta), g, R);
    csv << static_cast<long long>(seed) << rep.tubes << rep.levels.size() << rep.max_ratio << rep.ball_wise_total
        << rep.tube_wise_total;
    csv.end_row();
    lo = std::min(lo, rep.max_ratio);
    hi = std::max(hi, rep.max_ratio);
  }
  const double spread = lo > 0 ? hi / lo : 1e300;
  res.add("refined decoupling stable across seeds", spread <= get_double(cfg, "tolerances.refined_spread"),
          "max/min " + fmt(spread) + " over [" + fmt(lo) + ", " + fmt(hi) + "]");
  return res;
}

ScenarioResult slab(const json& cfg, const std::string& out) {
  ScenarioResult res;
  const auto patch = make_patch(cfg);
  const int n = get_int(cfg, "n");
  const double R = get_double(cfg, "R"), rho = get_double(cfg, "rho"), bound = get_double(cfg, "tolerances.slab_ratio");
  auto nv = get_doubles(cfg, "weight.normal");
  Point nu{nv.at(0), nv.at(1), nv.size() > 2 ? nv[2] : 0.0};
  nu = (1.0 / norm(nu)) * nu;
  Csv csv(file(res, out, "slab.csv"), {"seed", "slabs", "caps", "nu", "lhs", "rhs", "ratio"});
  for (auto seed : get_seeds(cfg)) {
    auto slabs = random_slabs(n, R, rho, nu, get_int(cfg, "decouple.slab_count"), seed);
    Density g = make_density(cfg, patch, R, seed);
    auto rep = slab_decoupling_check(g, slabs, std::vector<double>(slabs.size(), 1.0), rho, cap_scale(cfg), R);
    csv << static_cast<long long>(seed) << slabs.size() << rep.caps << rep.nu << rep.lhs << rep.rhs << rep.ratio;
    csv.end_row();
    res.add("slab decoupling seed=" + std::to_string(seed), rep.ratio <= bound,
            "ratio " + fmt(rep.ratio) + " with " + std::to_string(rep.caps) + " caps, nu " + fmt(rep.nu));
  }
  return res;
}

ScenarioResult flakes(const json& cfg, const std::string& out) {
  ScenarioResult res;
  const auto patch = make_patch(cfg);
  const double R = get_double(cfg, "R");
  Density g = make_density(cfg, patch, R, seed_of(cfg));
  std::vector<Flake> fl;
  const int count = get_int(cfg, "weight.count");
  for (int i = 0; i < count; ++i) {
    Flake f;
    f.base_radius = R;
    f.offset = get_double(cfg, "weight.flake_spacing") * (i - 0.5 * (count - 1));
    fl.push_back(f);
  }
  auto r = flake_mt_check(g, fl, std::vector<double>(fl.size(), 1.0), R, get_double(cfg, "delta"));
  r.scenario = "flake-stack";
  write_reports_csv(file(res, out, "reports.csv"), {r});
  res.add("flake report is finite", std::isfinite(r.lhs) && std::isfinite(r.rhs.at("packet")),
          "lhs / packet rhs " + fmt(r.ratios.at("packet")));
  return res;
}

ScenarioResult cex_growth(const json& cfg, const std::string& out) {
  ScenarioResult res;
  auto Rs = get_doubles(cfg, "R_list");
  auto seeds = get_seeds(cfg);
  Csv csv(file(res, out, "cex.csv"), kCexColumns);
  Csv times(file(res, out, "timings.csv"), {"R", "seed", "seconds"});
  std::map<std::uint64_t, std::vector<double>> ratios;
  std::vector<double> xs, ys;
  double slowest = 0.0;
  for (auto seed : seeds)
    for (double R : Rs) {
      auto row = cex_at(cfg, R, seed);
      cex_csv_row(csv, row);
      timing_row(times, row);
      cex_row_checks(res, row, get_double(cfg, "tolerances.cex_budget"));
      ratios[seed].push_back(row.run.result.ratio);
      xs.push_back(R);
      ys.push_back(row.run.result.ratio);
      if (R == Rs.back()) slowest = std::max(slowest, row.seconds);
    }
  Csv fits(file(res, out, "fits.csv"), {"seed", "slope", "intercept", "points"});
  for (auto seed : seeds) {
    const auto& q = ratios[seed];
    bool inc = true;
    std::string trail;
    for (std::size_t i = 0; i < q.size(); ++i) {
      if (i > 0 && !(q[i] > q[i - 1])) inc = false;
      trail += (i ? " " : "") + fmt(q[i]);
    }
    res.add("ratio strictly increasing seed=" + std::to_string(seed), inc, trail);
    for (std::size_t i = 0; i < q.size(); ++i)
      for (std::size_t k = 0; k < q.size(); ++k)
        if (Rs[i] == 64 && Rs[k] == 256)
          res.add("ratio at 256 against 64 seed=" + std::to_string(seed), q[k] >= 0.5 * q[i] * std::pow(4.0, 0.2),
                  fmt(q[k]) + " >= " + fmt(0.5 * q[i] * std::pow(4.0, 0.2)));
    if (q.size() >= 3) {
      auto f = fit_loglog(Rs, q);
      fits << static_cast<long long>(seed) << f.slope << f.intercept << q.size();
      fits.end_row();
    }
  }
  if (xs.size() >= 3) {
    auto f = fit_loglog(xs, ys);
    fits << "all" << f.slope << f.intercept << xs.size();
    fits.end_row();
    const double bar = get_double(cfg, "tolerances.cex_slope");
    res.add("growth exponent", f.slope >= bar, "pooled slope " + fmt(f.slope) + " (bar " + fmt(bar) + ")");
  }
  res.add("runtime at largest R", slowest <= 1800.0, fmt(slowest) + " s per run at R=" + fmt(Rs.back()));
  return res;
}

ScenarioResult cex_greedy(const json& cfg, const std::string& out) {
  ScenarioResult res;
  const double C = get_double(cfg, "tolerances.claim_constant");
  Csv csv(file(res, out, "greedy.csv"), {"R", "seed", "n_balls", "certified", "selected", "required"});
  for (double R : get_doubles(cfg, "R_list"))
    for (auto seed : get_seeds(cfg)) {
      auto fam = build_families(R, get_int(cfg, "n"), cex_patch(get_int(cfg, "n")));
      auto w = build_low_occupancy_weight(fam, make_occupancy(cfg, seed));
      auto sel = select_balls(w.centers, fam);
      const double need = w.centers.size() / (C * std::log2(R) * std::log2(R));
      csv << R << static_cast<long long>(seed) << w.centers.size() << (w.certificate.passed ? 1 : 0)
          << sel.balls.size() << need;
      csv.end_row();
      std::string tag = "R=" + fmt(R) + " seed=" + std::to_string(seed);
      res.add("certified weight " + tag, w.certificate.passed, "line " + fmt(w.certificate.line_max));
      res.add("greedy count " + tag, sel.balls.size() >= need,
              "m " + std::to_string(sel.balls.size()) + " >= " + fmt(need));
    }
  // Three balls on one tube line of the first of two neighbouring caps.
  auto fam = build_families(64, 2, cex_patch(2), 1.5, {3, 4});
  const Point u = fam.caps[0].axis;
  std::vector<Point> balls{-5.0 * u, Point{0, 0, 0}, 5.0 * u};
  auto greedy = select_balls(balls, fam).balls;
  auto brute = select_balls_bruteforce(balls, fam);
  std::string g, b;
  for (auto i : greedy) g += std::to_string(i) + " ";
  for (auto i : brute) b += std::to_string(i) + " ";
  res.add("three-ball instance matches exhaustive search", greedy == brute, "greedy {" + g + "} brute {" + b + "}");
  return res;
}

ScenarioResult cex_axioms(const json& cfg, const std::string& out) {
  ScenarioResult res;
  const double R = get_double(cfg, "R");
  auto row = cex_at(cfg, R, seed_of(cfg));
  cex_row_checks(res, row);
  auto ax = verify_decoupling_axioms(row.run.state, row.run.families, seed_of(cfg), get_int(cfg, "cex.translates"),
                                     get_double(cfg, "cex.integral_spacing"), get_int(cfg, "threads"));
  Csv csv(file(res, out, "axioms.csv"), {"R", "seed", "da1_max", "da2_min", "da2_max"});
  csv << R << static_cast<long long>(seed_of(cfg)) << ax.da1_max << ax.da2_min << ax.da2_max;
  csv.end_row();
  const double c1 = get_double(cfg, "tolerances.da1"), c2 = get_double(cfg, "tolerances.da2");
  res.add("DA1", ax.da1_max <= c1, "max/mean " + fmt(ax.da1_max));
  res.add("DA2", ax.da2_min >= 1.0 / c2 && ax.da2_max <= c2, "range [" + fmt(ax.da2_min) + ", " + fmt(ax.da2_max) + "]");
  std::ofstream(file(res, out, "cex_state.json")) << state_to_json(row.run.state, row.run.families);
  return res;
}

}  // namespace

// ---------------------------------------------------------------- plain subcommands

ScenarioResult cmd_extend(const json& cfg, const std::string& out) {
  ScenarioResult res;
  const auto patch = make_patch(cfg);
  const double R = get_double(cfg, "R");
  Density g = make_density(cfg, patch, R, seed_of(cfg));
  FastOptions fo;
  fo.spacing = get_double(cfg, "weight.spacing");
  Field f = extend_fast_grid(g, R, fo);
  write_binary(file(res, out, "field.bin"), f);
  const double n2 = g.l2_norm_sq();
  Csv csv(file(res, out, "slices.csv"), {"density", "slice", "t", "slice_l2", "g_norm_sq", "rel_err"});
  double worst = 0.0;
  auto sl = slice_l2(f);
  for (std::size_t t = 0; t < sl.size(); ++t) {
    double err = n2 > 0 ? std::abs(sl[t] - n2) / n2 : std::abs(sl[t]);
    worst = std::max(worst, err);
    csv << 0 << t << f.grid.origin[f.grid.n - 1] + f.grid.spacing * static_cast<double>(t) << sl[t] << n2 << err;
    csv.end_row();
  }
  const double tol = get_double(cfg, "tolerances.plancherel");
  res.add("slice Plancherel", worst <= tol, "max relative error " + fmt(worst));
  return res;
}

ScenarioResult cmd_xray(const json& cfg, const std::string& out) {
  ScenarioResult res;
  const auto patch = make_patch(cfg);
  Weight w = make_weight(cfg, patch, get_double(cfg, "R"), seed_of(cfg));
  auto x = xray_sup(w, make_xray_options(cfg));
  Csv csv(file(res, out, "xray.csv"),
          {"value", "coarse_value", "point_x", "point_y", "point_z", "dir_x", "dir_y", "dir_z"});
  csv << x.value << x.coarse_value << x.line.point[0] << x.line.point[1] << x.line.point[2] << x.line.direction[0]
      << x.line.direction[1] << x.line.direction[2];
  csv.end_row();
  res.add("refined value dominates the coarse scan", x.value >= x.coarse_value * (1 - 1e-12), fmt(x.value));
  return res;
}

ScenarioResult cmd_afunc(const json& cfg, const std::string& out) {
  ScenarioResult res;
  const auto patch = make_patch(cfg);
  const double R = get_double(cfg, "R"), rho = get_double(cfg, "rho");
  Weight w = make_weight(cfg, patch, R, seed_of(cfg));
  Density g = make_density(cfg, patch, R, seed_of(cfg));
  auto E = support_caps(g, 1.0 / std::sqrt(R));
  auto a = a_functional(w, rho, R, E, patch);
  double tm = tube_mass_functional(w, R, E, patch);
  Csv csv(file(res, out, "afunc.csv"), {"R", "rho", "caps", "value", "tube_mass", "sup_segment_density", "sup_tube_mass",
                                         "comparison_bound", "cell_mode", "tubes"});
  csv << R << rho << E.size() << a.value << tm << a.sup_segment_density << a.sup_tube_mass << a.comparison_bound
      << (a.cell_mode ? 1 : 0) << a.tubes;
  csv.end_row();
  res.add("comparison bound", a.value <= a.comparison_bound * (1 + 1e-12), fmt(a.value) + " <= " + fmt(a.comparison_bound));
  return res;
}

ScenarioResult cmd_mt(const json& cfg, const std::string& out) {
  ScenarioResult res;
  auto r = mt_at(cfg, get_double(cfg, "R"));
  write_reports_csv(file(res, out, "reports.csv"), {r});
  res.add("finite report", std::isfinite(r.lhs), "lhs " + fmt(r.lhs));
  return res;
}

ScenarioResult cmd_wavepacket(const json& cfg, const std::string& out) {
  ScenarioResult res;
  const auto patch = make_patch(cfg);
  const double R = get_double(cfg, "R"), delta = get_double(cfg, "delta");
  Density g = make_density(cfg, patch, R, seed_of(cfg));
  auto ps = decompose(g, R, delta);
  write_packet_table(file(res, out, "packets.csv"), ps, patch);
  Csv csv(file(res, out, "wavepacket_checks.csv"), {"check", "index", "value", "bound"});
  const double t1 = get_double(cfg, "tolerances.wp_reconstruction"), t2 = get_double(cfg, "tolerances.wp_orthogonality"),
               t3 = get_double(cfg, "tolerances.wp_decay");
  double rec = check_reconstruction(g, ps);
  csv << "wp1" << 0 << rec << t1;
  csv.end_row();
  res.add("wp1 reconstruction", rec <= t1, "sup error / |g| " + fmt(rec));
  std::mt19937_64 rng(seed_of(cfg));
  double lo = 1e300, hi = 0.0;
  for (int s = 0; s < 20; ++s) {
    std::vector<std::size_t> sub;
    for (std::size_t i = 0; i < ps.packets.size(); ++i)
      if (rng() % 2) sub.push_back(i);
    double q = check_orthogonality(ps, g, sub);
    lo = std::min(lo, q);
    hi = std::max(hi, q);
    csv << "wp2" << s << q << t2;
    csv.end_row();
  }
  res.add("wp2 orthogonality", lo >= 1.0 / t2 && hi <= t2, "range [" + fmt(lo) + ", " + fmt(hi) + "]");
  double worst = 0.0;
  for (int s = 0; s < 10 && !ps.empty(); ++s) {
    const auto& p = ps.packets[rng() % ps.packets.size()];
    auto d = check_decay(p, patch, R, delta);
    worst = std::max(worst, d.ratio);
    csv << "wp3" << s << d.ratio << t3;
    csv.end_row();
  }
  res.add("wp3 decay off 2T", worst <= t3, "max off/on " + fmt(worst));
  return res;
}

ScenarioResult cmd_decouple(const json& cfg, const std::string& out) {
  const auto kind = get_string(cfg, "decouple.kind");
  if (kind == "refined") return refined(cfg, out);
  if (kind == "slab") return slab(cfg, out);
  throw UsageError("decouple.kind must be refined or slab");
}

ScenarioResult cmd_cex(const json& cfg, const std::string& out) {
  ScenarioResult res;
  const double R = get_double(cfg, "R");
  auto row = cex_at(cfg, R, seed_of(cfg));
  Csv csv(file(res, out, "cex.csv"), kCexColumns);
  cex_csv_row(csv, row);
  Csv times(file(res, out, "timings.csv"), {"R", "seed", "seconds"});
  timing_row(times, row);
  cex_row_checks(res, row, get_double(cfg, "tolerances.cex_budget"));
  std::ofstream(file(res, out, "cex_state.json")) << state_to_json(row.run.state, row.run.families);
  write_binary(file(res, out, "cex_weight.bin"),
               make_ball_union_weight(SpatialGrid::centered(get_int(cfg, "n"), R, 0.5), row.run.weight.centers));
  if (cfg.at("cex").at("axioms").get<bool>()) {
    auto ax = verify_decoupling_axioms(row.run.state, row.run.families, seed_of(cfg), get_int(cfg, "cex.translates"),
                                       get_double(cfg, "cex.integral_spacing"), get_int(cfg, "threads"));
    res.add("DA1", ax.da1_max <= get_double(cfg, "tolerances.da1"), fmt(ax.da1_max));
    const double c2 = get_double(cfg, "tolerances.da2");
    res.add("DA2", ax.da2_min >= 1.0 / c2 && ax.da2_max <= c2, "[" + fmt(ax.da2_min) + ", " + fmt(ax.da2_max) + "]");
  }
  return res;
}

ScenarioResult cmd_sweep(const json& cfg, const std::string& out) {
  if (get_string(cfg, "weight.kind") == "cex") return cex_growth(cfg, out);
  ScenarioResult res;
  auto reps = sweep(get_doubles(cfg, "R_list"), [&](double R) { return mt_at(cfg, R); });
  write_reports_csv(file(res, out, "reports.csv"), reps);
  Csv csv(file(res, out, "fits.csv"), {"variant", "slope", "intercept", "points"});
  for (const auto& [k, f] : fit_variants(reps)) {
    csv << k << f.slope << f.intercept << reps.size();
    csv.end_row();
  }
  res.add("sweep finished", true, std::to_string(reps.size()) + " radii");
  return res;
}

ScenarioResult cmd_fit(const std::string& csv_path, const std::string& out) {
  ScenarioResult res;
  std::ifstream in(csv_path);
  if (!in) throw UsageError("cannot open '" + csv_path + "'");
  std::string line;
  std::getline(in, line);
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string h;
    while (std::getline(ss, h, ',')) header.push_back(h);
  }
  int rcol = -1, gcol = -1;
  std::vector<int> ycols;
  for (int i = 0; i < static_cast<int>(header.size()); ++i) {
    if (header[i] == "R") rcol = i;
    if (header[i] == "seed") gcol = i;
    if (header[i] == "ratio" || header[i].rfind("ratio_", 0) == 0) ycols.push_back(i);
  }
  if (rcol < 0 || ycols.empty()) throw UsageError("fit needs an R column and at least one ratio column");
  std::map<std::pair<std::string, std::string>, std::pair<std::vector<double>, std::vector<double>>> data;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    if (cells.size() != header.size()) throw UsageError("ragged row in '" + csv_path + "'");
    const std::string group = gcol >= 0 ? cells[gcol] : "all";
    for (int y : ycols) {
      auto& d = data[{header[y], group}];
      d.first.push_back(std::stod(cells[rcol]));
      d.second.push_back(std::stod(cells[y]));
    }
  }
  Csv csv(file(res, out, "fits.csv"), {"variant", "group", "slope", "intercept", "points"});
  for (const auto& [key, d] : data) {
    try {
      auto f = fit_loglog(d.first, d.second);
      csv << key.first << key.second << f.slope << f.intercept << d.first.size();
      csv.end_row();
    } catch (const FitError& e) {
      res.add("fit " + key.first + " " + key.second, true, std::string("skipped: ") + e.what());
    }
  }
  res.add("fit finished", true, std::to_string(data.size()) + " series");
  return res;
}

// ---------------------------------------------------------------- catalog

const std::vector<Scenario>& catalog() {
  static const std::vector<Scenario> scenarios = {
      {"plancherel-slices",
       "Horizontal-slice L2 identity of the extension operator: every slice carries |g|_2^2.",
       json::parse(R"({"R": 128, "density": {"count": 10}})"), plancherel},
      {"fast-direct", "Fast slice-FFT field against direct quadrature on the whole grid.",
       json::parse(R"({"R": 16, "density": {"spread": 0.25}})"), fast_direct},
      {"wavepackets", "Wave packet decomposition: reconstruction, subset orthogonality and decay off 2T.",
       json::parse(R"({"R": 256, "delta": 0.05})"), [](const json& c, const std::string& o) { return cmd_wavepacket(c, o); }},
      {"tomography-oracles", "X-ray chords of a disc and a rectangle; tube masses and the amalgam functional on 16^n grids.",
       json::object(), oracles},
      {"focusing-sweep",
       "Sharpness pair (cap indicator density, dual tube weight): lhs over the tube-mass functional across R.",
       json::parse(R"({"R_list": [64, 128, 256], "rho": 1.0})"), focusing_sweep},
      {"richness", "Ball-wise and tube-wise incidence totals of a random packet family at the R^{1/2} ball scale.",
       json::parse(R"({"R": 256, "seeds": [1, 2, 3]})"), richness},
      {"refined-decoupling", "Max over richness levels of the refined decoupling ratio, compared across seeds.",
       json::parse(R"({"R": 256, "seeds": [1, 2, 3, 4, 5]})"), refined},
      {"slab-decoupling",
       "Decoupling for a sum of horizontal slabs against caps of radius rho^{-1/2} on a shallow patch.",
       json::parse(R"({"R": 256, "rho": 64, "seeds": [1, 2, 3, 4, 5],
                       "surface": {"name": "shallow", "domain_radius": 1.0},
                       "weight": {"normal": [0, 1, 0]}})"),
       slab},
      {"flake-stack", "Stacked horizontal flakes with the packet-resolved right-hand side.",
       json::parse(R"({"R": 64, "weight": {"count": 8, "flake_spacing": 8.0}, "density": {"spread": 0.125}})"), flakes},
      {"cex-growth",
       "Counterexample construction: low-occupancy ball weight, greedy selection, phase assignment and MT ratio growth.",
       json::parse(R"({"R_list": [64, 128, 256, 512, 1024], "seeds": [1, 2, 3]})"), cex_growth},
      {"cex-greedy", "Greedy ball selection count on certified weights and the three-ball exhaustive check.",
       json::parse(R"({"R_list": [64, 128], "seeds": [1, 2, 3]})"), cex_greedy},
      {"cex-axioms", "Decoupling axioms DA1 and DA2 on the full counterexample construction.",
       json::parse(R"({"R": 128})"), cex_axioms},
  };
  return scenarios;
}

const Scenario* find_scenario(const std::string& name) {
  for (const auto& s : catalog())
    if (s.name == name) return &s;
  return nullptr;
}

ScenarioResult run_scenario(const Scenario& s, const std::string& config_path, const std::vector<std::string>& overrides,
                            const std::string& out_dir) {
  json cfg = load_config(config_path, s.defaults, overrides);
  cfg["scenario"] = s.name;
  std::filesystem::create_directories(out_dir.empty() ? "." : out_dir);
  auto t0 = std::chrono::steady_clock::now();
  auto res = s.run(cfg, out_dir);
  res.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

std::string csv_documentation() {
  return R"(CSV outputs (one header row, doubles printed with 17 significant digits):
  slices.csv          density, slice, t, slice_l2, g_norm_sq, rel_err
  fast_direct.csv     seed, points, max_abs_diff
  oracles.csv         oracle, n, value, expected, abs_err
  xray.csv            value, coarse_value, point_x, point_y, point_z, dir_x, dir_y, dir_z
  afunc.csv           R, rho, caps, value, tube_mass, sup_segment_density, sup_tube_mass, comparison_bound, cell_mode, tubes
  reports.csv         scenario, n, R, rho, lhs, g_norm_sq, rhs_<variant>..., ratio_<variant>...
  fits.csv            variant|seed, [group,] slope, intercept, points  (log-log least squares)
  packets.csv         cap_id, theta0, theta1, v0, v1, norm, tube_anchor0..2, dir0..2, radius, length
  wavepacket_checks.csv  check (wp1|wp2|wp3), index, value, bound
  richness.csv        seed, tubes, balls, levels, ball_wise, tube_wise
  refined.csv         seed, tubes, levels, max_ratio, ball_wise, tube_wise
  slab.csv            seed, slabs, caps, nu, lhs, rhs, ratio
  cex.csv             R, seed, caps, tubes, n_balls, target, line_max, tube_max, bound, certified, selected,
                      incidences, weighted, total, xray, ratio, large_fraction, budget
  timings.csv         R, seed, seconds  (wall clock; the only output that differs between reruns)
  greedy.csv          R, seed, n_balls, certified, selected, required
  axioms.csv          R, seed, da1_max, da2_min, da2_max
JSON outputs: cex_state.json (ball centres, selected balls, rich sets, signs, per-tube phase angle and magnitude).
Binary outputs: field.bin, cex_weight.bin (flat MTLB format).)";
}

}  // namespace mtcli
