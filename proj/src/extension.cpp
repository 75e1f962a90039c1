#include "mtlab/extension.hpp"

#include <algorithm>
#include <random>

#include "mtlab/fft.hpp"

namespace mtlab {

namespace {

int pos_mod(long long a, long long m) {
  long long r = a % m;
  return static_cast<int>(r < 0 ? r + m : r);
}

}  // namespace

double Density::spacing_for(const SurfacePatch& patch, double r_max) {
  if (!(r_max > 0.0)) throw ArgumentError("r_max must be positive");
  double need = 8.0 * r_max * (1.0 + patch.max_grad());
  long long n = 1;
  while (static_cast<double>(n) < need) n <<= 1;
  return 1.0 / static_cast<double>(n);
}

Density::Density(const SurfacePatch& patch, double r_max)
    : patch_(std::make_shared<const SurfacePatch>(patch)), r_max_(r_max) {
  spacing_ = spacing_for(patch, r_max);
  lattice_n_ = static_cast<int>(std::llround(1.0 / spacing_));
  half_extent_ = static_cast<int>(std::ceil(patch.domain_radius() * lattice_n_ - 1e-9));
  lo_ = {0, 0};
  ext_ = {2 * half_extent_, param_dim() == 2 ? 2 * half_extent_ : 1};
  std::uint64_t bytes = static_cast<std::uint64_t>(ext_[0]) * ext_[1] * sizeof(cd);
  if (bytes > (8ull << 30)) throw BudgetError("density lattice too large", bytes);
  samples_.assign(static_cast<std::size_t>(ext_[0]) * ext_[1], cd{});
}

Omega Density::node(int i0, int i1) const {
  double w0 = (lattice_index(0, i0) + 0.5) * spacing_;
  double w1 = param_dim() == 2 ? (lattice_index(1, i1) + 0.5) * spacing_ : 0.0;
  return {w0, w1};
}

double Density::l2_norm_sq() const {
  double s = 0.0;
  for (const cd& v : samples_) s += std::norm(v);
  return s * cell_volume();
}

double Density::sup_norm() const {
  double s = 0.0;
  for (const cd& v : samples_) s = std::max(s, std::abs(v));
  return s;
}

bool Density::is_zero() const {
  return std::all_of(samples_.begin(), samples_.end(), [](const cd& v) { return v == cd{}; });
}

Density Density::window(std::array<int, 2> lo, std::array<int, 2> ext) const {
  Density out;
  out.patch_ = patch_;
  out.r_max_ = r_max_;
  out.spacing_ = spacing_;
  out.lattice_n_ = lattice_n_;
  out.half_extent_ = half_extent_;
  out.lo_ = lo;
  out.ext_ = ext;
  out.samples_.assign(static_cast<std::size_t>(ext[0]) * ext[1], cd{});
  for (int a = 0; a < ext[0]; ++a) {
    int s0 = lo[0] + a - lo_[0];
    if (s0 < 0 || s0 >= ext_[0]) continue;
    for (int b = 0; b < ext[1]; ++b) {
      int s1 = lo[1] + b - lo_[1];
      if (s1 < 0 || s1 >= ext_[1]) continue;
      out.samples_[out.index(a, b)] = samples_[index(s0, s1)];
    }
  }
  return out;
}

void Density::window_for(const Omega& c, double r, std::array<int, 2>& lo, std::array<int, 2>& ext) const {
  int full = 2 * half_extent_;
  for (int a = 0; a < 2; ++a) {
    if (a == 1 && param_dim() == 1) {
      lo[1] = 0;
      ext[1] = 1;
      continue;
    }
    long long k_lo = static_cast<long long>(std::floor((c[a] - r) / spacing_ - 0.5)) + half_extent_;
    long long k_hi = static_cast<long long>(std::ceil((c[a] + r) / spacing_ - 0.5)) + half_extent_;
    k_lo = std::max<long long>(k_lo, 0);
    k_hi = std::min<long long>(k_hi, full - 1);
    lo[a] = static_cast<int>(k_lo);
    ext[a] = static_cast<int>(std::max<long long>(k_hi - k_lo + 1, 0));
  }
}

Density Density::restricted(const Cap& cap) const {
  std::array<int, 2> lo{}, ext{};
  window_for(cap.center, cap.radius, lo, ext);
  Density out = window(lo, ext);
  for (int a = 0; a < ext[0]; ++a)
    for (int b = 0; b < ext[1]; ++b)
      if (!cap.contains(out.node(a, b))) out.samples_[out.index(a, b)] = cd{};
  return out;
}

Density Density::expanded() const {
  return window({0, 0}, {2 * half_extent_, param_dim() == 2 ? 2 * half_extent_ : 1});
}

void Density::add_to(Density& full, cd scale) const {
  if (full.spacing_ != spacing_ || !(full.patch() == patch())) throw GeometryError("density lattices differ");
  for (int a = 0; a < ext_[0]; ++a) {
    int t0 = lo_[0] + a - full.lo_[0];
    if (t0 < 0 || t0 >= full.ext_[0]) continue;
    for (int b = 0; b < ext_[1]; ++b) {
      int t1 = lo_[1] + b - full.lo_[1];
      if (t1 < 0 || t1 >= full.ext_[1]) continue;
      full.samples_[full.index(t0, t1)] += scale * samples_[index(a, b)];
    }
  }
}

Density density_from_function(const SurfacePatch& patch, double r_max, const std::function<cd(const Omega&)>& f) {
  Density g(patch, r_max);
  auto e = g.extent();
  for (int a = 0; a < e[0]; ++a)
    for (int b = 0; b < e[1]; ++b)
      if (g.in_domain(a, b)) g.at(a, b) = f(g.node(a, b));
  return g;
}

Density random_density(const SurfacePatch& patch, double r_max, std::uint64_t seed, double spread) {
  Density g(patch, r_max);
  const int m = g.param_dim();
  const int N = g.lattice_n();
  const int K0 = g.half_extent();
  const int kmax = std::max(0, static_cast<int>(std::floor(spread)));
  if (2 * kmax + 1 > N) throw ResolutionError("random density spread exceeds the lattice bandwidth");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  // Coefficients a_k e^{-pi i k/N} placed at k mod N, so that a length-N forward
  // DFT evaluated at K mod N gives sum_k a_k e^{-2 pi i k (K + 1/2)/N}.
  std::vector<int> dims(m, N);
  FftPlan plan(dims, -1);
  cd* buf = plan.data();
  std::fill(buf, buf + plan.size(), cd{});
  for (int k0 = -kmax; k0 <= kmax; ++k0) {
    for (int k1 = (m == 2 ? -kmax : 0); k1 <= (m == 2 ? kmax : 0); ++k1) {
      if (k0 * k0 + k1 * k1 > kmax * kmax) continue;
      cd a{gauss(rng), gauss(rng)};
      a *= expi(-kPi * (k0 + k1) / N);
      std::size_t slot = m == 1 ? pos_mod(k0, N) : static_cast<std::size_t>(pos_mod(k0, N)) * N + pos_mod(k1, N);
      buf[slot] += a;
    }
  }
  plan.execute();
  auto e = g.extent();
  const double rd = patch.domain_radius();
  for (int a = 0; a < e[0]; ++a) {
    int K = a - K0;
    for (int b = 0; b < e[1]; ++b) {
      if (!g.in_domain(a, b)) continue;
      double win = plateau(norm(g.node(a, b)) / rd, 0.5, 1.0);
      if (win == 0.0) continue;
      std::size_t slot = m == 1 ? pos_mod(K, N) : static_cast<std::size_t>(pos_mod(K, N)) * N + pos_mod(b - K0, N);
      g.at(a, b) = win * buf[slot];
    }
  }
  // Normalise to unit L2 norm so that tolerances are scale free.
  double n2 = g.l2_norm_sq();
  if (n2 > 0.0)
    for (auto& v : g.samples()) v /= std::sqrt(n2);
  return g;
}

Density cap_indicator(const SurfacePatch& patch, double r_max, const Cap& cap) {
  return density_from_function(patch, r_max, [&](const Omega& w) { return cap.contains(w) ? cd{1.0} : cd{}; });
}

Density cap_bump(const SurfacePatch& patch, double r_max, const Cap& cap, const Omega& v0) {
  return density_from_function(patch, r_max, [&](const Omega& w) {
    double b = bump(norm(w - cap.center) / cap.radius);
    return b == 0.0 ? cd{} : b * expi(-kTwoPi * dot(v0, w));
  });
}

Density single_cell(const SurfacePatch& patch, double r_max, const Omega& w0, double mass) {
  Density g(patch, r_max);
  const double d = g.spacing();
  int a = static_cast<int>(std::floor(w0[0] / d)) + g.half_extent();
  int b = g.param_dim() == 2 ? static_cast<int>(std::floor(w0[1] / d)) + g.half_extent() : 0;
  auto e = g.extent();
  if (a < 0 || a >= e[0] || b < 0 || b >= e[1] || !g.in_domain(a, b))
    throw DomainError("single-cell density outside the domain");
  g.at(a, b) = mass / g.cell_volume();
  return g;
}

std::vector<cd> extend_direct(const Density& g, const std::vector<Point>& points, const QuadratureSpec& q) {
  if (q.refinement < 1) throw ArgumentError("quadrature refinement must be >= 1");
  const SurfacePatch& patch = g.patch();
  const int n = patch.dim();
  const int m = n - 1;
  for (const Point& x : points) {
    double box = 0.0;
    for (int a = 0; a < n; ++a) box = std::max(box, std::abs(x[a]));
    if (!g.admits(box))
      throw ResolutionError("evaluation point beyond the resolution radius of the density");
  }
  // Quadrature nodes inside one cell, in units of the cell width, with weights.
  const int r = q.refinement;
  std::vector<double> off, wt;
  if (q.rule == QuadratureSpec::Rule::Midpoint) {
    for (int i = 0; i < r; ++i) {
      off.push_back((i + 0.5) / r - 0.5);
      wt.push_back(1.0 / r);
    }
  } else {
    for (int i = 0; i <= r; ++i) {
      off.push_back(static_cast<double>(i) / r - 0.5);
      wt.push_back((i == 0 || i == r) ? 0.5 / r : 1.0 / r);
    }
  }
  const double d = g.spacing();
  struct Node {
    Point s;
    cd c;
  };
  std::vector<Node> nodes;
  auto e = g.extent();
  for (int a = 0; a < e[0]; ++a)
    for (int b = 0; b < e[1]; ++b) {
      cd v = g.at(a, b);
      if (v == cd{}) continue;
      Omega c = g.node(a, b);
      for (std::size_t i = 0; i < off.size(); ++i)
        for (std::size_t j = 0; j < (m == 2 ? off.size() : 1); ++j) {
          Omega w{c[0] + off[i] * d, m == 2 ? c[1] + off[j] * d : 0.0};
          double wgt = wt[i] * (m == 2 ? wt[j] : 1.0) * g.cell_volume();
          if (q.surface_measure) wgt *= std::sqrt(1.0 + dot(patch.grad(w), patch.grad(w)));
          double h = patch.height(w);
          Point s = n == 2 ? Point{w[0], h, 0.0} : Point{w[0], w[1], h};
          nodes.push_back({s, v * wgt});
        }
    }
  std::vector<cd> out(points.size());
  for (std::size_t p = 0; p < points.size(); ++p) {
    cd acc{};
    for (const Node& nd : nodes) acc += nd.c * expi(kTwoPi * dot(points[p], nd.s));
    out[p] = acc;
  }
  return out;
}

std::uint64_t fast_grid_bytes(const Density& g, double R, const FastOptions& opt) {
  const int n = g.patch().dim();
  const long long q = std::llround(1.0 / opt.spacing);
  const long long L = q * g.lattice_n();
  const long long side = 2 * std::llround(R / opt.spacing) + 1;
  std::uint64_t field = sizeof(cd);
  for (int a = 0; a < n; ++a) field *= static_cast<std::uint64_t>(side);
  std::uint64_t fft = sizeof(cd) * static_cast<std::uint64_t>(n == 2 ? L : L * L);
  return field + fft + g.size() * (sizeof(cd) + sizeof(double));
}

Field extend_fast_grid(const Density& g, double R, const FastOptions& opt) {
  if (!g.admits(R)) throw ResolutionError("density resolution does not admit the requested R");
  const double inv = 1.0 / opt.spacing;
  const long long q = std::llround(inv);
  if (q < 1 || std::abs(inv - static_cast<double>(q)) > 1e-9)
    throw ArgumentError("fast grid spacing must be 1/q for an integer q");
  std::uint64_t need = fast_grid_bytes(g, R, opt);
  if (need > opt.budget_bytes) throw BudgetError("fast extension exceeds the memory budget", need);

  const SurfacePatch& patch = g.patch();
  const int n = patch.dim();
  const int m = n - 1;
  const long long L = q * g.lattice_n();
  if (L > (1ll << 26)) throw BudgetError("FFT length too large", static_cast<std::uint64_t>(L) * sizeof(cd));
  SpatialGrid grid = SpatialGrid::centered(n, R, opt.spacing);
  Field field(grid);
  const int M = (grid.extent[0] - 1) / 2;

  // Samples with their heights and folded FFT slots.
  struct Sample {
    std::size_t slot;
    double h;
    cd v;
  };
  std::vector<Sample> samples;
  auto e = g.extent();
  for (int a = 0; a < e[0]; ++a)
    for (int b = 0; b < e[1]; ++b) {
      cd v = g.at(a, b);
      if (v == cd{}) continue;
      Omega w = g.node(a, b);
      if (opt.surface_measure) v *= std::sqrt(1.0 + dot(patch.grad(w), patch.grad(w)));
      std::size_t s0 = pos_mod(g.lattice_index(0, a), L);
      std::size_t slot = m == 1 ? s0 : s0 * static_cast<std::size_t>(L) + pos_mod(g.lattice_index(1, b), L);
      samples.push_back({slot, patch.height(w), v});
    }

  // Output phase for the half-cell offset and the slot of each x' index j in [-M, M].
  std::vector<cd> half(2 * M + 1);
  std::vector<std::size_t> jslot(2 * M + 1);
  for (int j = -M; j <= M; ++j) {
    half[j + M] = expi(kPi * static_cast<double>(j) / static_cast<double>(L));
    jslot[j + M] = pos_mod(j, L);
  }
  const double vol = g.cell_volume();
  std::vector<int> dims(m, static_cast<int>(L));
  FftPlan plan(dims, +1);
  cd* buf = plan.data();
  const int side = 2 * M + 1;
  for (int it = 0; it < side; ++it) {
    const double t = (it - M) * opt.spacing;
    std::fill(buf, buf + plan.size(), cd{});
    for (const Sample& s : samples) buf[s.slot] += s.v * expi(kTwoPi * t * s.h);
    plan.execute();
    if (m == 1) {
      for (int j = 0; j < side; ++j) field.samples[grid.index(j, it)] = vol * half[j] * buf[jslot[j]];
    } else {
      for (int j0 = 0; j0 < side; ++j0)
        for (int j1 = 0; j1 < side; ++j1)
          field.samples[grid.index(j0, j1, it)] =
              vol * half[j0] * half[j1] * buf[jslot[j0] * static_cast<std::size_t>(L) + jslot[j1]];
    }
  }
  return field;
}

std::vector<double> slice_l2(const Field& f) {
  const auto& g = f.grid;
  const int vert = g.n - 1;
  std::vector<double> out(g.extent[vert], 0.0);
  for (std::size_t k = 0; k < f.samples.size(); ++k) out[g.unindex(k)[vert]] += std::norm(f.samples[k]);
  double area = g.n == 2 ? g.spacing : g.spacing * g.spacing;
  for (double& v : out) v *= area;
  return out;
}

double weighted_l2(const Field& f, const Weight& w, double R) {
  if (!f.grid.same_geometry(w.grid)) throw GeometryError("field and weight grids differ");
  double s = 0.0;
  const double r2 = R * R * (1.0 + 1e-12);
  for (std::size_t k = 0; k < f.samples.size(); ++k) {
    if (w.samples[k] == 0.0) continue;
    Point x = f.grid.point(k);
    if (dot(x, x) > r2) continue;
    s += std::norm(f.samples[k]) * w.samples[k];
  }
  return s * f.grid.cell_volume();
}

}  // namespace mtlab
