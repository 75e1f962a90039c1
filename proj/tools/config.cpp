#include "config.hpp"

#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>

namespace mtcli {

using namespace mtlab;

json default_config() {
  return json::parse(R"({
    "scenario": "",
    "n": 2,
    "R": 64,
    "R_list": [64, 128, 256],
    "seed": 1,
    "seeds": [1, 2, 3],
    "threads": 1,
    "rho": 1.0,
    "delta": 0.05,
    "surface": {"name": "paraboloid", "domain_radius": 0.5, "curvature": 1.0},
    "density": {"kind": "random", "spread": 0.25, "cap_center": [0.0, 0.0], "cap_radius": 0.0,
                "v0": [0.0, 0.0], "count": 10},
    "weight": {"kind": "ball", "spacing": 1.0, "center": [0.0, 0.0, 0.0], "direction": [0.0, 1.0, 0.0],
               "radius": 0.0, "length": 0.0, "count": 30, "normal": [0.0, 1.0, 0.0], "flake_spacing": 8.0,
               "centers": [], "path": ""},
    "mt": {"xray": true, "xray_perp": true, "tube_mass": true, "a_rho": true, "stein": false},
    "xray": {"angular_res": 0.0, "offset_res": 0.5, "refine": true},
    "decouple": {"kind": "refined", "cap_scale": "inverse_sqrt_rho", "slab_count": 60},
    "cex": {"balls_per_volume": 1.0, "line_cap": 6, "line_reach": 1.0, "candidates": 8, "c_occ": 8.0,
            "max_retries": 3, "integral_spacing": 0.5, "ball_stencil": 0.125, "c_f": 0.1, "axioms": false,
            "translates": 40},
    "tolerances": {"plancherel": 1e-3, "fast_direct": 1e-9, "wp_reconstruction": 1e-2, "wp_orthogonality": 4.0,
                   "wp_decay": 0.05, "chord": 0.02, "focusing_low": 0.05, "focusing_high": 1.0,
                   "focusing_slope": 0.1, "refined_spread": 1.5, "slab_ratio": 10.0, "cex_slope": 0.2, "cex_budget": 10.0,
                   "claim_constant": 64.0, "da1": 20.0, "da2": 4.0}
  })");
}

namespace {

json::json_pointer pointer_of(const std::string& dotted) {
  std::string p;
  std::stringstream ss(dotted);
  std::string part;
  while (std::getline(ss, part, '.')) {
    if (part.empty()) throw UsageError("empty key component in '" + dotted + "'");
    p += "/" + part;
  }
  return json::json_pointer(p);
}

const json& at(const json& cfg, const std::string& dotted) {
  auto ptr = pointer_of(dotted);
  if (!cfg.contains(ptr)) throw UsageError("missing configuration key '" + dotted + "'");
  return cfg.at(ptr);
}

template <class T>
T typed(const json& cfg, const std::string& dotted) {
  try {
    return at(cfg, dotted).get<T>();
  } catch (const json::exception& e) {
    throw UsageError("configuration key '" + dotted + "' has the wrong type: " + e.what());
  }
}

Point point3(const json& cfg, const std::string& dotted) {
  auto v = get_doubles(cfg, dotted);
  if (v.size() < 2 || v.size() > 3) throw UsageError("'" + dotted + "' must have 2 or 3 components");
  return {v[0], v[1], v.size() == 3 ? v[2] : 0.0};
}

Omega omega2(const json& cfg, const std::string& dotted) {
  auto v = get_doubles(cfg, dotted);
  if (v.empty() || v.size() > 2) throw UsageError("'" + dotted + "' must have 1 or 2 components");
  return {v[0], v.size() == 2 ? v[1] : 0.0};
}

}  // namespace

void apply_override(json& cfg, const std::string& assignment) {
  auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw UsageError("override must look like key=value: '" + assignment + "'");
  const std::string key = assignment.substr(0, eq), text = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(text);
  } catch (const json::parse_error&) {
    value = text;
  }
  auto ptr = pointer_of(key);
  if (!cfg.contains(ptr)) throw UsageError("unknown configuration key '" + key + "'");
  cfg[ptr] = value;
}

json load_config(const std::string& path, const json& scenario_defaults, const std::vector<std::string>& overrides) {
  json cfg = default_config();
  if (!scenario_defaults.is_null()) cfg.merge_patch(scenario_defaults);
  if (!path.empty()) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open config file '" + path + "'");
    json file;
    try {
      file = json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
      throw UsageError("malformed config file '" + path + "': " + e.what());
    }
    if (!file.is_object()) throw UsageError("config file must hold a JSON object");
    cfg.merge_patch(file);
  }
  for (const auto& o : overrides) apply_override(cfg, o);
  const int n = get_int(cfg, "n");
  if (n != 2 && n != 3) throw UsageError("n must be 2 or 3");
  if (get_double(cfg, "R") <= 0.0) throw UsageError("R must be positive");
  return cfg;
}

double get_double(const json& cfg, const std::string& dotted) { return typed<double>(cfg, dotted); }
int get_int(const json& cfg, const std::string& dotted) { return typed<int>(cfg, dotted); }
std::string get_string(const json& cfg, const std::string& dotted) { return typed<std::string>(cfg, dotted); }
std::vector<double> get_doubles(const json& cfg, const std::string& dotted) {
  return typed<std::vector<double>>(cfg, dotted);
}
std::vector<std::uint64_t> get_seeds(const json& cfg) { return typed<std::vector<std::uint64_t>>(cfg, "seeds"); }

SurfacePatch make_patch(const json& cfg) {
  try {
    return SurfacePatch::by_name(get_string(cfg, "surface.name"), get_int(cfg, "n"),
                                 get_double(cfg, "surface.domain_radius"), get_double(cfg, "surface.curvature"));
  } catch (const mtlab::ArgumentError& e) {
    throw UsageError(std::string("bad surface: ") + e.what());
  }
}

Density make_density(const json& cfg, const SurfacePatch& patch, double R, std::uint64_t seed) {
  const std::string kind = get_string(cfg, "density.kind");
  double radius = get_double(cfg, "density.cap_radius");
  if (radius <= 0.0) radius = 1.0 / std::sqrt(R);
  const Cap cap{omega2(cfg, "density.cap_center"), radius};
  if (kind == "random") return random_density(patch, R, seed, get_double(cfg, "density.spread") * R);
  if (kind == "cap_indicator") return cap_indicator(patch, R, cap);
  if (kind == "cap_bump") return cap_bump(patch, R, cap, omega2(cfg, "density.v0"));
  if (kind == "single_cell") return single_cell(patch, R, cap.center);
  throw UsageError("unknown density kind '" + kind + "' (random, cap_indicator, cap_bump, single_cell)");
}

Weight make_weight(const json& cfg, const SurfacePatch& patch, double R, std::uint64_t seed) {
  const int n = get_int(cfg, "n");
  const std::string kind = get_string(cfg, "weight.kind");
  if (kind == "import") {
    Weight w = read_weight(get_string(cfg, "weight.path"));
    if (!w.grid.same_geometry(SpatialGrid::centered(n, R, w.grid.spacing)))
      throw UsageError("imported weight is not centred on [-R, R]^n");
    return w;
  }
  const SpatialGrid grid = SpatialGrid::centered(n, R, get_double(cfg, "weight.spacing"));
  if (kind == "ball") {
    Weight w(grid);
    for (std::size_t k = 0; k < grid.size(); ++k) w.samples[k] = norm(grid.point(k)) <= R ? 1.0 : 0.0;
    return w;
  }
  if (kind == "tube") {
    double r = get_double(cfg, "weight.radius"), L = get_double(cfg, "weight.length");
    if (r <= 0.0) r = std::sqrt(R);
    if (L <= 0.0) L = R;
    Point u = point3(cfg, "weight.direction");
    double len = norm(u);
    if (len == 0.0) throw UsageError("weight.direction must be nonzero");
    return make_tube_weight(grid, Tube::make(point3(cfg, "weight.center"), (1.0 / len) * u, r, L));
  }
  if (kind == "slabs") {
    Point nu = point3(cfg, "weight.normal");
    auto slabs = random_slabs(n, R, get_double(cfg, "rho"), (1.0 / norm(nu)) * nu, get_int(cfg, "weight.count"), seed);
    return make_slab_weight(grid, slabs, std::vector<double>(slabs.size(), 1.0));
  }
  if (kind == "flakes") {
    std::vector<Flake> flakes;
    const double gap = get_double(cfg, "weight.flake_spacing");
    const int count = get_int(cfg, "weight.count");
    for (int i = 0; i < count; ++i) {
      Flake f;
      f.base_radius = R;
      f.offset = gap * (i - 0.5 * (count - 1));
      flakes.push_back(f);
    }
    return make_flake_weight(grid, flakes, std::vector<double>(flakes.size(), 1.0));
  }
  if (kind == "balls") {
    std::vector<Point> centers;
    for (const auto& c : at(cfg, "weight.centers")) {
      auto v = c.get<std::vector<double>>();
      centers.push_back({v.at(0), v.at(1), v.size() > 2 ? v[2] : 0.0});
    }
    if (centers.empty()) {
      std::mt19937_64 rng(seed);
      std::uniform_real_distribution<double> U(-R + 1, R - 1);
      while (static_cast<int>(centers.size()) < get_int(cfg, "weight.count")) {
        Point c{U(rng), U(rng), n == 3 ? U(rng) : 0.0};
        if (norm(c) <= R - 1) centers.push_back(c);
      }
    }
    return make_ball_union_weight(grid, centers);
  }
  (void)patch;
  throw UsageError("unknown weight kind '" + kind + "' (ball, tube, slabs, flakes, balls, import)");
}

XrayOptions make_xray_options(const json& cfg) {
  XrayOptions o;
  o.angular_res = get_double(cfg, "xray.angular_res");
  o.offset_res = get_double(cfg, "xray.offset_res");
  o.refine = typed<bool>(cfg, "xray.refine");
  return o;
}

OccupancyOptions make_occupancy(const json& cfg, std::uint64_t seed) {
  OccupancyOptions o;
  o.balls_per_volume = get_double(cfg, "cex.balls_per_volume");
  o.line_cap = get_int(cfg, "cex.line_cap");
  o.line_reach = get_double(cfg, "cex.line_reach");
  o.candidates = get_int(cfg, "cex.candidates");
  o.c_occ = get_double(cfg, "cex.c_occ");
  o.max_retries = get_int(cfg, "cex.max_retries");
  o.seed = seed;
  return o;
}

CexOptions make_cex_options(const json& cfg) {
  CexOptions o;
  o.integral_spacing = get_double(cfg, "cex.integral_spacing");
  o.ball_stencil = get_double(cfg, "cex.ball_stencil");
  o.c_f = get_double(cfg, "cex.c_f");
  o.threads = std::max(1, get_int(cfg, "threads"));
  return o;
}

Csv::Csv(const std::string& path, const std::vector<std::string>& header) {
  f_ = std::fopen(path.c_str(), "w");
  if (!f_) throw UsageError("cannot write '" + path + "'");
  owner_.reset(f_, [](std::FILE* f) { std::fclose(f); });
  for (const auto& h : header) *this << h;
  end_row();
}

void Csv::sep() {
  if (!first_) std::fputc(',', f_);
  first_ = false;
}

Csv& Csv::operator<<(double v) {
  sep();
  std::fprintf(f_, "%.17g", v);
  return *this;
}

Csv& Csv::operator<<(long long v) {
  sep();
  std::fprintf(f_, "%lld", v);
  return *this;
}

Csv& Csv::operator<<(const std::string& s) {
  sep();
  std::fputs(s.c_str(), f_);
  return *this;
}

void Csv::end_row() {
  std::fputc('\n', f_);
  first_ = true;
}

std::string join_path(const std::string& dir, const std::string& file) {
  if (dir.empty()) return file;
  return dir.back() == '/' ? dir + file : dir + "/" + file;
}

}  // namespace mtcli
