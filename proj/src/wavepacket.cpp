#include "mtlab/wavepacket.hpp"

#include <algorithm>
#include <cstdio>
#include <random>

#include "mtlab/fft.hpp"

namespace mtlab {

namespace {

int next_pow2(double x) {
  int p = 1;
  while (p < x) p <<= 1;
  return p;
}

// One-dimensional factor of the spatial partition: eta_v(x) = G(x - v) / sum_u G(x - u),
// with G(y) = exp(-pi y^2 / sigma^2) and u running over the lattice s * Z.
struct EtaTable {
  double s, sigma;
  double gauss(double y) const { return std::exp(-kPi * y * y / (sigma * sigma)); }
  double normaliser(double x) const {
    int lo = static_cast<int>(std::floor((x - 9 * sigma) / s));
    int hi = static_cast<int>(std::ceil((x + 9 * sigma) / s));
    double z = 0.0;
    for (int u = lo; u <= hi; ++u) z += gauss(x - u * s);
    return z;
  }
};

}  // namespace

Density PacketSet::reconstruct(const Density& like) const {
  std::vector<std::size_t> all(packets.size());
  for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
  return sum_of(like, all);
}

Density PacketSet::sum_of(const Density& like, const std::vector<std::size_t>& subset) const {
  Density out = like.expanded();
  std::fill(out.samples().begin(), out.samples().end(), cd{});
  for (std::size_t i : subset) packets.at(i).density.add_to(out);
  return out;
}

double PacketSet::total_norm_sq() const {
  double s = 0.0;
  for (const auto& p : packets) s += p.norm_sq;
  return s;
}

PacketSet decompose(const Density& g, double R, double delta, const DecomposeOptions& opt) {
  if (delta < 0.0 || delta > 0.2) throw ArgumentError("delta must lie in [0, 0.2]");
  if (!g.admits(R)) throw ResolutionError("density resolution does not admit R");
  const double a = 1.0 / std::sqrt(R);
  if (a / g.spacing() < 4.0) throw ResolutionError("lattice too coarse for R^{-1/2} caps");
  const SurfacePatch& patch = g.patch();
  const int m = g.param_dim();

  PacketSet pset;
  pset.R = R;
  pset.delta = delta;
  pset.v_spacing = std::pow(R, 0.5 * (1.0 + delta));
  pset.caps = cap_cover(patch, a);
  pset.input_norm_sq = g.l2_norm_sq();
  if (g.is_zero()) return pset;

  const Density full = g.expanded();
  const auto fe = full.extent();
  const double d = g.spacing();

  // Denominator of the frequency partition of unity.
  std::vector<double> den(full.size(), 0.0);
  for (const Cap& c : pset.caps) {
    std::array<int, 2> lo{}, ext{};
    full.window_for(c.center, a, lo, ext);
    for (int i = 0; i < ext[0]; ++i)
      for (int j = 0; j < ext[1]; ++j) {
        int i0 = lo[0] + i, i1 = lo[1] + j;
        den[full.index(i0, i1)] += bump(norm(full.node(i0, i1) - c.center) / a);
      }
  }

  const int P = next_pow2(opt.window * a / d);
  const std::size_t Pm = m == 1 ? static_cast<std::size_t>(P) : static_cast<std::size_t>(P) * P;
  const double inv_pm = 1.0 / static_cast<double>(Pm);
  std::vector<int> dims(m, P);
  FftPlan back(dims, +1), fwd(dims, -1);

  const double tube_radius = std::pow(R, 0.5 + delta);
  EtaTable eta{pset.v_spacing, opt.eta_width * pset.v_spacing};
  const double vmax = opt.v_reach * R;
  const int V = static_cast<int>(std::floor(vmax / pset.v_spacing));
  // x'-coordinates of the FFT output and the 1-d partition factors per v index.
  std::vector<double> xs(P);
  for (int j = 0; j < P; ++j) xs[j] = (j < P / 2 ? j : j - P) / (P * d);
  std::vector<std::vector<double>> eta1(2 * V + 1, std::vector<double>(P));
  {
    std::vector<double> z(P);
    for (int j = 0; j < P; ++j) z[j] = eta.normaliser(xs[j]);
    for (int v = -V; v <= V; ++v)
      for (int j = 0; j < P; ++j) eta1[v + V][j] = eta.gauss(xs[j] - v * pset.v_spacing) / z[j];
  }

  std::vector<cd> f(Pm);
  for (std::size_t cap_id = 0; cap_id < pset.caps.size(); ++cap_id) {
    const Cap& cap = pset.caps[cap_id];
    // Window start in full-lattice local coordinates.
    std::array<int, 2> wlo{0, 0};
    for (int ax = 0; ax < m; ++ax) {
      int kc = static_cast<int>(std::floor(cap.center[ax] / d)) + full.half_extent();
      wlo[ax] = kc - P / 2;
    }
    cd* buf = back.data();
    std::fill(buf, buf + Pm, cd{});
    double fmass = 0.0;
    for (int i = 0; i < P; ++i) {
      int i0 = wlo[0] + i;
      if (i0 < 0 || i0 >= fe[0]) continue;
      for (int j = 0; j < (m == 2 ? P : 1); ++j) {
        int i1 = m == 2 ? wlo[1] + j : 0;
        if (i1 < 0 || i1 >= fe[1]) continue;
        std::size_t k = full.index(i0, i1);
        if (den[k] <= 0.0 || full.samples()[k] == cd{}) continue;
        double psi = bump(norm(full.node(i0, i1) - cap.center) / a) / den[k];
        buf[m == 1 ? i : static_cast<std::size_t>(i) * P + j] = psi * full.samples()[k];
      }
    }
    back.execute();
    std::copy(buf, buf + Pm, f.begin());
    for (const cd& v : f) fmass += std::norm(v);
    if (fmass == 0.0) continue;

    Point axis = normal(patch, cap.center).direction;
    // Packet support window in full-lattice coordinates.
    std::array<int, 2> plo{}, pext{};
    full.window_for(cap.center, opt.tilde_outer * a, plo, pext);

    for (int v0 = -V; v0 <= V; ++v0) {
      for (int v1 = (m == 2 ? -V : 0); v1 <= (m == 2 ? V : 0); ++v1) {
        Omega v{v0 * pset.v_spacing, v1 * pset.v_spacing};
        if (norm(v) > vmax) continue;
        // Distance from the origin to the tube axis through (v, 0).
        Point anchor{v[0], m == 2 ? v[1] : 0.0, 0.0};
        Point along = dot(anchor, axis) * axis;
        if (norm(anchor - along) > R + tube_radius) continue;
        const auto& e0 = eta1[v0 + V];
        const auto& e1 = eta1[v1 + V];
        cd* out = fwd.data();
        double vmass = 0.0;
        for (int i = 0; i < P; ++i) {
          if (m == 1) {
            out[i] = e0[i] * f[i];
            vmass += std::norm(out[i]);
          } else {
            for (int j = 0; j < P; ++j) {
              std::size_t k = static_cast<std::size_t>(i) * P + j;
              out[k] = e0[i] * e1[j] * f[k];
              vmass += std::norm(out[k]);
            }
          }
        }
        if (vmass <= opt.drop_fraction * fmass) continue;
        fwd.execute();
        Density pd = full.window(plo, pext);
        for (int i = 0; i < pext[0]; ++i) {
          int wi = plo[0] + i - wlo[0];
          for (int j = 0; j < pext[1]; ++j) {
            int wj = m == 2 ? plo[1] + j - wlo[1] : 0;
            cd& dst = pd.at(i, j);
            dst = cd{};
            if (wi < 0 || wi >= P || wj < 0 || wj >= P) continue;
            Omega w = pd.node(i, j);
            if (!patch.in_domain(w)) continue;
            double tilde = plateau(norm(w - cap.center) / a, opt.tilde_inner, opt.tilde_outer);
            if (tilde == 0.0) continue;
            dst = tilde * inv_pm * out[m == 1 ? wi : static_cast<std::size_t>(wi) * P + wj];
          }
        }
        Packet pk;
        pk.index.cap_id = static_cast<int>(cap_id);
        pk.index.cap = cap;
        pk.index.v_index = {v0, v1};
        pk.index.v = v;
        pk.norm_sq = pd.l2_norm_sq();
        if (pk.norm_sq <= opt.drop_fraction * pset.input_norm_sq) continue;
        pk.density = std::move(pd);
        pset.packets.push_back(std::move(pk));
      }
    }
  }
  return pset;
}

Tube tube_of(const PacketIndex& idx, const SurfacePatch& patch, double R, double delta) {
  Point dir = normal(patch, idx.cap.center).direction;
  Point anchor = patch.dim() == 2 ? Point{idx.v[0], 0.0, 0.0} : Point{idx.v[0], idx.v[1], 0.0};
  return Tube::make(anchor, dir, std::pow(R, 0.5 + delta), 2.0 * R);
}

double check_reconstruction(const Density& g, const PacketSet& pset) {
  double n2 = g.l2_norm_sq();
  if (n2 == 0.0) return 0.0;
  Density sum = pset.reconstruct(g);
  Density gf = g.expanded();
  double err = 0.0;
  for (std::size_t k = 0; k < sum.size(); ++k) err = std::max(err, std::abs(gf.samples()[k] - sum.samples()[k]));
  return err / std::sqrt(n2);
}

double check_orthogonality(const PacketSet& pset, const Density& like, const std::vector<std::size_t>& subset) {
  if (subset.empty()) return 1.0;
  double denom = 0.0;
  for (std::size_t i : subset) denom += pset.packets.at(i).norm_sq;
  if (subset.size() == 1) return 1.0;
  return pset.sum_of(like, subset).l2_norm_sq() / denom;
}

DecayReport check_decay(const Packet& packet, const SurfacePatch& patch, double R, double delta) {
  Tube t = tube_of(packet.index, patch, R, delta);
  Tube t2 = t;
  t2.radius *= 2.0;
  t2.length *= 2.0;
  Field f = extend_fast_grid(packet.density, R);
  DecayReport rep;
  double total = 0.0, inside = 0.0;
  for (std::size_t k = 0; k < f.samples.size(); ++k) {
    Point x = f.grid.point(k);
    if (norm(x) > R) continue;
    double v = std::abs(f.samples[k]);
    total += v * v;
    if (t.contains(x)) rep.on_tube_max = std::max(rep.on_tube_max, v);
    if (t2.contains(x))
      inside += v * v;
    else
      rep.off_max = std::max(rep.off_max, v);
  }
  rep.ratio = rep.on_tube_max > 0.0 ? rep.off_max / rep.on_tube_max : 0.0;
  rep.mass_in_2T = total > 0.0 ? inside / total : 1.0;
  return rep;
}

LocalConstancyReport local_constancy_check(const Density& g_tau, const Cap& tau, double rho, double R,
                                           std::uint64_t seed, int tubes, bool orthogonal) {
  if (rho < 4.0) throw ScaleError("local constancy needs rho >= 4");
  const SurfacePatch& patch = g_tau.patch();
  const int n = patch.dim();
  Field f = extend_fast_grid(g_tau, R);
  const auto& grid = f.grid;
  Point u = normal(patch, tau.center).direction;
  if (orthogonal) u = orthonormal_complement(u, n)[0];
  const double r = std::sqrt(rho);
  const double L = rho;
  const double margin = L + 2.0 * r;
  if (margin >= R) throw ScaleError("tubes of length rho do not fit in the grid box");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-(R - margin), R - margin);
  LocalConstancyReport rep;
  for (int t = 0; t < tubes; ++t) {
    Point c{unif(rng), unif(rng), n == 3 ? unif(rng) : 0.0};
    Tube T{c, u, r, L};
    Tube T2{c, u, 2 * r, 2 * L};
    double sup = 0.0, sum = 0.0;
    long cnt = 0;
    std::array<int, 3> lo{0, 0, 0}, hi{0, 0, 0};
    for (int ax = 0; ax < n; ++ax) {
      double ext = L + 2 * r + 1;
      lo[ax] = std::max(0, static_cast<int>(std::floor((c[ax] - ext - grid.origin[ax]) / grid.spacing)));
      hi[ax] = std::min(grid.extent[ax] - 1, static_cast<int>(std::ceil((c[ax] + ext - grid.origin[ax]) / grid.spacing)));
    }
    for (int i0 = lo[0]; i0 <= hi[0]; ++i0)
      for (int i1 = lo[1]; i1 <= hi[1]; ++i1)
        for (int i2 = lo[2]; i2 <= hi[2]; ++i2) {
          std::size_t k = grid.index(i0, i1, i2);
          Point x = grid.point(k);
          if (!T2.contains(x)) continue;
          double v = std::norm(f.samples[k]);
          sum += v;
          ++cnt;
          if (T.contains(x)) sup = std::max(sup, v);
        }
    double avg = cnt ? sum / cnt : 0.0;
    double ratio = avg > 0.0 ? sup / avg : 1.0;
    rep.ratios.push_back(ratio);
    rep.max_ratio = std::max(rep.max_ratio, ratio);
  }
  return rep;
}

void write_packet_table(const std::string& path, const PacketSet& pset, const SurfacePatch& patch) {
  std::FILE* out = std::fopen(path.c_str(), "w");
  if (!out) throw ArgumentError("cannot open for writing: " + path);
  std::fprintf(out, "cap_id,theta0,theta1,v0,v1,norm,tube_anchor0,tube_anchor1,tube_anchor2,dir0,dir1,dir2,radius,length\n");
  for (const auto& p : pset.packets) {
    Tube t = tube_of(p.index, patch, pset.R, pset.delta);
    std::fprintf(out, "%d,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                 p.index.cap_id, p.index.cap.center[0], p.index.cap.center[1], p.index.v[0], p.index.v[1],
                 std::sqrt(p.norm_sq), t.anchor[0], t.anchor[1], t.anchor[2], t.direction[0], t.direction[1],
                 t.direction[2], t.radius, t.length);
  }
  std::fclose(out);
}

}  // namespace mtlab
