#include "mtlab/counterexample.hpp"

#include <algorithm>
#include <cstring>
#include <limits>
#include <map>
#include <random>
#include <thread>
#include <unordered_map>

#include <json.hpp>

namespace mtlab {

SurfacePatch cex_patch(int n) { return SurfacePatch::paraboloid(n, 1.0, 1.0); }

std::array<double, 3> CexFamilies::lattice_coords(std::size_t c, const Point& x) const {
  const CexCap& cp = caps[c];
  std::array<double, 3> q{dot(x, cp.lateral[0]) / (2.0 * radius), 0.0, dot(x, cp.axis) / length};
  if (n == 3) q[1] = dot(x, cp.lateral[1]) / (2.0 * radius);
  return q;
}

std::size_t CexFamilies::find_tube(std::size_t c, const std::array<int, 3>& idx) const {
  const CapLookup& L = lookup[c];
  std::size_t flat = 0;
  for (int a = 0; a < 3; ++a) {
    int o = idx[a] - L.lo[a];
    if (o < 0 || o >= L.cnt[a]) return npos;
    flat = flat * L.cnt[a] + o;
  }
  return L.slot[flat];
}

std::size_t CexFamilies::core_tube(std::size_t c, const Point& x) const {
  auto q = lattice_coords(c, x);
  std::array<int, 3> idx{static_cast<int>(std::floor(q[0] + 0.5)), n == 3 ? static_cast<int>(std::floor(q[1] + 0.5)) : 0,
                         static_cast<int>(std::floor(q[2] + 0.5))};
  return find_tube(c, idx);
}

double CexFamilies::phi(std::size_t t, const Point& x) const {
  const CexTube& T = tubes[t];
  auto q = lattice_coords(T.cap, x);
  // Distances to the core centre in units of the core half-widths.
  double sl = 2.0 * std::abs(q[0] - T.index[0]);
  if (n == 3) sl = std::max(sl, 2.0 * std::abs(q[1] - T.index[1]));
  double sa = 2.0 * std::abs(q[2] - T.index[2]);
  return plateau(sl, 1.0, support_dilation) * plateau(sa, 1.0, support_dilation);
}

CexFamilies build_families(double R, int n, const SurfacePatch& patch, double support_dilation,
                           const std::vector<std::size_t>& keep_caps) {
  if (n != 2 && n != 3) throw ArgumentError("n must be 2 or 3");
  if (patch.dim() != n) throw ArgumentError("patch dimension differs from n");
  if (R < 16.0) throw ScaleError("R must be at least 16 for the cap and tube scales to separate");
  if (support_dilation <= 1.0 || support_dilation > 3.0) throw ArgumentError("support dilation must lie in (1, 3]");
  CexFamilies F;
  F.R = R;
  F.n = n;
  F.support_dilation = support_dilation;
  const int q = static_cast<int>(std::lround(2.0 * std::pow(R, 1.0 / (n + 1))));
  F.cap_diameter = 2.0 / q;
  F.radius = 1.0 / F.cap_diameter;
  F.length = F.radius * F.radius;
  const double d = F.cap_diameter, rd = patch.domain_radius();

  std::vector<Omega> centers;
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < (n == 3 ? q : 1); ++j) {
      Omega c{-rd + d * (i + 0.5), n == 3 ? -rd + d * (j + 0.5) : 0.0};
      if (norm(c) <= rd) centers.push_back(c);
    }
  std::vector<std::size_t> keep = keep_caps;
  if (keep.empty())
    for (std::size_t i = 0; i < centers.size(); ++i) keep.push_back(i);

  const double r = F.radius, L = F.length;
  for (std::size_t ci : keep) {
    if (ci >= centers.size()) throw ArgumentError("cap index out of range");
    CexCap cp;
    cp.cap = Cap{centers[ci], 0.5 * d};
    cp.xi = surface_point(patch, centers[ci]);
    cp.axis = normal(patch, centers[ci]).direction;
    cp.lateral = orthonormal_complement(cp.axis, n);
    cp.first_tube = F.tubes.size();
    const int il = static_cast<int>(std::ceil(R / (2.0 * r))) + 1, ia = static_cast<int>(std::ceil(R / L)) + 1;
    CexFamilies::CapLookup look;
    look.lo = {-il, n == 3 ? -il : 0, -ia};
    look.cnt = {2 * il + 1, n == 3 ? 2 * il + 1 : 1, 2 * ia + 1};
    look.slot.assign(static_cast<std::size_t>(look.cnt[0]) * look.cnt[1] * look.cnt[2], CexFamilies::npos);
    for (int i = -il; i <= il; ++i)
      for (int j = (n == 3 ? -il : 0); j <= (n == 3 ? il : 0); ++j)
        for (int k = -ia; k <= ia; ++k) {
          // Distance from the origin to the core box.
          double dl0 = std::max(0.0, std::abs(2.0 * r * i) - r), dl1 = std::max(0.0, std::abs(2.0 * r * j) - r);
          double da = std::max(0.0, std::abs(L * k) - 0.5 * L);
          if (dl0 * dl0 + dl1 * dl1 + da * da > R * R) continue;
          CexTube t;
          t.cap = F.caps.size();
          t.index = {i, j, k};
          Point c = (2.0 * r * i) * cp.lateral[0] + (L * k) * cp.axis;
          if (n == 3) c = c + (2.0 * r * j) * cp.lateral[1];
          t.core = Tube{c, cp.axis, r, L};
          std::size_t flat = (static_cast<std::size_t>(i + il) * look.cnt[1] + (j - look.lo[1])) * look.cnt[2] + (k + ia);
          look.slot[flat] = F.tubes.size();
          F.tubes.push_back(t);
        }
    cp.tube_count = F.tubes.size() - cp.first_tube;
    F.caps.push_back(cp);
    F.lookup.push_back(std::move(look));
  }
  return F;
}

FamilyCheck check_families(const CexFamilies& fam, std::uint64_t seed, int samples) {
  FamilyCheck chk;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> U(-fam.R, fam.R);
  for (std::size_t c = 0; c < fam.caps.size(); ++c) {
    const auto& cp = fam.caps[c];
    for (std::size_t t = cp.first_tube; t < cp.first_tube + cp.tube_count; ++t)
      chk.max_direction_error = std::max(chk.max_direction_error, norm(fam.tubes[t].core.direction - cp.axis));
  }
  for (int s = 0; s < samples; ++s) {
    Point x{U(rng), U(rng), fam.n == 3 ? U(rng) : 0.0};
    if (norm(x) > fam.R) {
      --s;
      continue;
    }
    for (std::size_t c = 0; c < fam.caps.size(); ++c) {
      const auto& cp = fam.caps[c];
      auto q = fam.lattice_coords(c, x);
      std::size_t core = 0, supp = 0;
      // Brute force over every tube of the cap.
      for (std::size_t t = cp.first_tube; t < cp.first_tube + cp.tube_count; ++t) {
        const auto& T = fam.tubes[t];
        bool in = static_cast<int>(std::floor(q[0] + 0.5)) == T.index[0] &&
                  static_cast<int>(std::floor(q[2] + 0.5)) == T.index[2] &&
                  (fam.n == 2 || static_cast<int>(std::floor(q[1] + 0.5)) == T.index[1]);
        if (in) ++core;
        if (fam.phi(t, x) > 0.0) ++supp;
      }
      if (core == 0) ++chk.uncovered;
      chk.max_core_multiplicity = std::max(chk.max_core_multiplicity, core);
      chk.max_support_multiplicity = std::max(chk.max_support_multiplicity, supp);
    }
  }
  return chk;
}

namespace {

// Sampled line net used while placing balls: for each net direction, counts of
// ball centres within `reach` of each offset bin.
class LineNet {
 public:
  LineNet(int n, double R, double reach) : n_(n), reach_(reach) {
    if (n == 2) {
      dtheta_ = 1.0 / (2.0 * R);
      int M = static_cast<int>(std::ceil(kPi / dtheta_));
      for (int i = 0; i < M; ++i) {
        double th = kPi * i / M;
        frames_.push_back({Point{-std::sin(th), std::cos(th), 0.0}, Point{}});
      }
      h_ = 0.5;
    } else {
      double res = 4.0 / R;
      int A = static_cast<int>(std::ceil(0.5 * kPi / res));
      for (int a = 0; a <= A; ++a) {
        double pol = std::min(0.5 * kPi, a * res);
        int K = std::max(1, static_cast<int>(std::ceil(kTwoPi * std::sin(pol) / res)));
        for (int k = 0; k < K; ++k) {
          double az = kTwoPi * k / K;
          Point u{std::sin(pol) * std::cos(az), std::sin(pol) * std::sin(az), std::cos(pol)};
          auto fr = orthonormal_complement(u, 3);
          frames_.push_back({fr[0], fr[1]});
        }
      }
      h_ = 1.0;
    }
    half_ = static_cast<int>(std::ceil((R + reach + 2.0) / h_));
    width_ = 2 * half_ + 1;
    std::size_t per = n == 2 ? width_ : static_cast<std::size_t>(width_) * width_;
    counts_.assign(frames_.size() * per, 0);
  }

  int max_with(const Point& c) const {
    int m = 0;
    visit(c, [&](std::size_t k) { m = std::max<int>(m, counts_[k]); });
    return m;
  }
  void add(const Point& c) {
    visit(c, [&](std::size_t k) { if (counts_[k] < 255) ++counts_[k]; });
  }

 private:
  template <class F>
  void visit(const Point& c, F&& f) const {
    int span = static_cast<int>(std::ceil(reach_ / h_));
    std::size_t per = n_ == 2 ? width_ : static_cast<std::size_t>(width_) * width_;
    for (std::size_t d = 0; d < frames_.size(); ++d) {
      double s0 = dot(c, frames_[d][0]) / h_;
      int b0 = static_cast<int>(std::lround(s0));
      if (n_ == 2) {
        for (int b = b0 - span; b <= b0 + span; ++b)
          if (std::abs(b - s0) * h_ <= reach_) f(d * per + (b + half_));
      } else {
        double s1 = dot(c, frames_[d][1]) / h_;
        int b1 = static_cast<int>(std::lround(s1));
        for (int b = b0 - span; b <= b0 + span; ++b)
          for (int e = b1 - span; e <= b1 + span; ++e) {
            double da = (b - s0) * h_, db = (e - s1) * h_;
            if (da * da + db * db <= reach_ * reach_)
              f(d * per + static_cast<std::size_t>(b + half_) * width_ + (e + half_));
          }
      }
    }
  }

  int n_;
  double reach_;
  double dtheta_ = 0.0;
  double h_ = 0.5;
  int half_ = 0, width_ = 0;
  std::vector<std::array<Point, 2>> frames_;
  std::vector<std::uint8_t> counts_;
};

struct CellHash {
  std::size_t operator()(const std::array<long, 3>& k) const {
    return static_cast<std::size_t>(k[0] * 73856093L ^ k[1] * 19349663L ^ k[2] * 83492791L);
  }
};

// Runs f(i) for i in [lo, hi] on `threads` workers with a strided split.
template <class F>
void parallel_rows(long lo, long hi, int threads, F&& f) {
  const int T = std::max(1, threads);
  if (T == 1) {
    for (long i = lo; i <= hi; ++i) f(i);
    return;
  }
  std::vector<std::thread> pool;
  for (int t = 0; t < T; ++t)
    pool.emplace_back([&, t] {
      for (long i = lo + t; i <= hi; i += T) f(i);
    });
  for (auto& th : pool) th.join();
}

std::vector<std::size_t> tube_counts(const std::vector<Point>& centers, const CexFamilies& fam) {
  std::vector<std::size_t> cnt(fam.tubes.size(), 0);
  for (const auto& c : centers)
    for (std::size_t cap = 0; cap < fam.caps.size(); ++cap) {
      std::size_t t = fam.core_tube(cap, c);
      if (t != CexFamilies::npos) ++cnt[t];
    }
  return cnt;
}

}  // namespace

OccupancyCertificate certify(const std::vector<Point>& centers, const CexFamilies& fam, double c_occ) {
  OccupancyCertificate cert;
  cert.n_balls = centers.size();
  cert.bound = c_occ * std::log2(fam.R);
  XrayOptions xo;
  xo.angular_res = 1.0 / (2.0 * fam.R);
  cert.line_max = xray_sup_balls(centers, 1.0, fam.n, xo).value;
  auto cnt = tube_counts(centers, fam);
  for (auto v : cnt) cert.tube_max = std::max(cert.tube_max, static_cast<double>(v));
  cert.passed = cert.line_max <= cert.bound && cert.tube_max <= cert.bound;
  return cert;
}

LowOccupancyWeight build_low_occupancy_weight(const CexFamilies& fam, const OccupancyOptions& opt) {
  const int n = fam.n;
  const double R = fam.R;
  const std::size_t target = static_cast<std::size_t>(std::llround(opt.balls_per_volume * std::pow(R, n - 1)));
  const double bound = opt.c_occ * std::log2(R);
  LowOccupancyWeight best;
  for (int attempt = 0; attempt < std::max(1, opt.max_retries); ++attempt) {
    std::mt19937_64 rng(opt.seed * 1000003ULL + attempt);
    const long reach = static_cast<long>(std::floor(R - 1.0));
    std::uniform_int_distribution<long> U(-reach, reach);
    LineNet net(n, R, opt.line_reach);
    std::vector<std::size_t> tcount(fam.tubes.size(), 0);
    std::unordered_map<std::array<long, 3>, std::vector<std::size_t>, CellHash> cells;
    std::vector<Point> centers;
    auto key_of = [](const Point& c) {
      return std::array<long, 3>{static_cast<long>(std::floor(c[0] / 2)), static_cast<long>(std::floor(c[1] / 2)),
                                 static_cast<long>(std::floor(c[2] / 2))};
    };
    // Disjointness and tube occupancy; fills `through` on success.
    auto admissible = [&](const Point& c, std::vector<std::size_t>& through) {
      if (norm(c) > R - 1.0) return false;
      auto key = key_of(c);
      for (long a = -1; a <= 1; ++a)
        for (long b = -1; b <= 1; ++b)
          for (long e = (n == 3 ? -1 : 0); e <= (n == 3 ? 1 : 0); ++e) {
            auto it = cells.find({key[0] + a, key[1] + b, key[2] + e});
            if (it == cells.end()) continue;
            for (auto j : it->second)
              if (norm(centers[j] - c) < 2.0) return false;
          }
      through.clear();
      for (std::size_t cap = 0; cap < fam.caps.size(); ++cap) {
        std::size_t t = fam.core_tube(cap, c);
        if (t == CexFamilies::npos) continue;
        if (tcount[t] + 1 > bound) return false;
        through.push_back(t);
      }
      return true;
    };
    const std::size_t max_tries = 60 * target + 1000;
    const int K = std::max(1, opt.candidates);
    std::size_t tries = 0;
    std::vector<std::size_t> through, best_through;
    while (tries < max_tries && centers.size() < target) {
      // Best of K admissible candidates by current line-net occupancy.
      Point pick{};
      int pick_load = std::numeric_limits<int>::max();
      for (int k = 0; k < K && tries < max_tries; ++tries) {
        Point c{static_cast<double>(U(rng)), static_cast<double>(U(rng)), n == 3 ? static_cast<double>(U(rng)) : 0.0};
        if (!admissible(c, through)) continue;
        ++k;
        int load = net.max_with(c);
        if (load < pick_load) {
          pick_load = load;
          pick = c;
          best_through = through;
        }
      }
      if (pick_load == std::numeric_limits<int>::max() || pick_load + 1 > opt.line_cap) continue;
      net.add(pick);
      for (auto t : best_through) ++tcount[t];
      cells[key_of(pick)].push_back(centers.size());
      centers.push_back(pick);
    }
    OccupancyCertificate cert = certify(centers, fam, opt.c_occ);
    cert.target = target;
    cert.attempts = attempt + 1;
    bool better = best.centers.empty() || (cert.passed && !best.certificate.passed) ||
                  (cert.passed == best.certificate.passed && centers.size() > best.centers.size());
    if (better) {
      best.centers = std::move(centers);
      best.certificate = cert;
    }
    if (best.certificate.passed && best.centers.size() >= target) break;
  }
  return best;
}

double occupancy_all_pairs(const std::vector<Point>& centers, int n) {
  if (centers.empty()) return 0.0;
  auto chord_sum = [&](const Point& p, const Point& u) {
    double s = 0.0;
    for (const auto& c : centers) {
      Point d = c - p;
      double a = dot(d, u);
      double q = dot(d, d) - a * a;
      if (q < 1.0) s += 2.0 * std::sqrt(1.0 - q);
    }
    return s;
  };
  double best = 2.0;
  for (std::size_t i = 0; i < centers.size(); ++i)
    for (std::size_t j = i + 1; j < centers.size(); ++j) {
      Point u = centers[j] - centers[i];
      double len = norm(u);
      if (len == 0.0) continue;
      u = (1.0 / len) * u;
      best = std::max(best, chord_sum(centers[i], u));
      // Lines through the two balls at small offsets and tilts.
      auto fr = orthonormal_complement(u, n);
      for (int a = -20; a <= 20; ++a)
        for (int b = -20; b <= 20; ++b) {
          double off = 0.05 * a, tilt = 0.05 * b / std::max(1.0, len);
          Point v = u + tilt * fr[0];
          v = (1.0 / norm(v)) * v;
          best = std::max(best, chord_sum(centers[i] + off * fr[0], v));
        }
    }
  return best;
}

std::vector<std::size_t> tubes_through(const CexFamilies& fam, const Point& c) {
  std::vector<std::size_t> out;
  for (std::size_t cap = 0; cap < fam.caps.size(); ++cap) {
    std::size_t t = fam.core_tube(cap, c);
    if (t != CexFamilies::npos) out.push_back(t);
  }
  return out;
}

Selection select_balls(const std::vector<Point>& centers, const CexFamilies& fam) {
  Selection sel;
  const std::size_t D = fam.caps.size();
  std::vector<char> hit(fam.tubes.size(), 0);
  for (std::size_t b = 0; b < centers.size(); ++b) {
    auto through = tubes_through(fam, centers[b]);
    sel.incidences += static_cast<long long>(through.size());
    std::vector<std::size_t> fresh;
    for (auto t : through)
      if (!hit[t]) fresh.push_back(t);
    if (2 * fresh.size() >= D && !fresh.empty()) {
      sel.balls.push_back(b);
      sel.richsets.push_back(fresh);
      for (auto t : through) hit[t] = 1;
    }
  }
  // Tube-wise count of the same incidences.
  for (std::size_t t = 0; t < fam.tubes.size(); ++t) {
    const auto& T = fam.tubes[t];
    for (const auto& c : centers) {
      auto q = fam.lattice_coords(T.cap, c);
      bool in = static_cast<int>(std::floor(q[0] + 0.5)) == T.index[0] &&
                static_cast<int>(std::floor(q[2] + 0.5)) == T.index[2] &&
                (fam.n == 2 || static_cast<int>(std::floor(q[1] + 0.5)) == T.index[1]);
      if (in) ++sel.incidences_tube_wise;
    }
  }
  return sel;
}

std::vector<std::size_t> select_balls_bruteforce(const std::vector<Point>& centers, const CexFamilies& fam) {
  const std::size_t m = centers.size();
  if (m > 20) throw ArgumentError("exhaustive selection is limited to 20 balls");
  const std::size_t D = fam.caps.size();
  std::vector<std::vector<std::size_t>> through(m);
  for (std::size_t b = 0; b < m; ++b) through[b] = tubes_through(fam, centers[b]);
  std::vector<std::size_t> found;
  int matches = 0;
  for (std::uint64_t mask = 0; mask < (1ULL << m); ++mask) {
    bool ok = true;
    for (std::size_t b = 0; b < m && ok; ++b) {
      std::size_t fresh = 0;
      for (auto t : through[b]) {
        bool used = false;
        for (std::size_t e = 0; e < b; ++e)
          if ((mask >> e) & 1ULL)
            for (auto u : through[e])
              if (u == t) used = true;
        if (!used) ++fresh;
      }
      bool should = 2 * fresh >= D && fresh > 0;
      if (should != static_cast<bool>((mask >> b) & 1ULL)) ok = false;
    }
    if (ok) {
      ++matches;
      found.clear();
      for (std::size_t b = 0; b < m; ++b)
        if ((mask >> b) & 1ULL) found.push_back(b);
    }
  }
  if (matches != 1) throw StateError("greedy rule is not satisfied by a unique subset");
  return found;
}

std::string check_selection(const std::vector<Point>& centers, const Selection& sel, const CexFamilies& fam) {
  if (sel.incidences != sel.incidences_tube_wise) return "ball-wise and tube-wise incidence counts differ";
  if (sel.richsets.size() != sel.balls.size()) return "one rich set per selected ball is required";
  std::vector<char> used(fam.tubes.size(), 0);
  for (std::size_t j = 0; j < sel.balls.size(); ++j) {
    auto through = tubes_through(fam, centers[sel.balls[j]]);
    if (2 * sel.richsets[j].size() < fam.caps.size()) return "rich set below #D/2 (P1)";
    for (auto t : sel.richsets[j]) {
      if (std::find(through.begin(), through.end(), t) == through.end()) return "rich-set tube misses its ball (P1)";
      // `used` marks every tube through an earlier selected ball, which also rules out sharing.
      if (used[t]) return "rich-set tube meets an earlier selected ball (P2)";
    }
    for (auto t : through) used[t] = 1;
  }
  return {};
}

cd evaluate_F_tau(const CexState& st, const CexFamilies& fam, std::size_t cap, const Point& x) {
  auto q = fam.lattice_coords(cap, x);
  const int i0 = static_cast<int>(std::floor(q[0] + 0.5)), k0 = static_cast<int>(std::floor(q[2] + 0.5));
  const int j0 = fam.n == 3 ? static_cast<int>(std::floor(q[1] + 0.5)) : 0;
  const double dil = fam.support_dilation;
  cd acc{};
  for (int i = i0 - 1; i <= i0 + 1; ++i) {
    double sl0 = 2.0 * std::abs(q[0] - i);
    if (sl0 >= dil) continue;
    for (int j = (fam.n == 3 ? j0 - 1 : 0); j <= (fam.n == 3 ? j0 + 1 : 0); ++j) {
      double sl = fam.n == 3 ? std::max(sl0, 2.0 * std::abs(q[1] - j)) : sl0;
      if (sl >= dil) continue;
      for (int k = k0 - 1; k <= k0 + 1; ++k) {
        double sa = 2.0 * std::abs(q[2] - k);
        if (sa >= dil) continue;
        std::size_t t = fam.find_tube(cap, {i, j, k});
        if (t == CexFamilies::npos) continue;
        const cd c = st.phases[t];
        if (c == cd{}) continue;
        acc += c * (plateau(sl, 1.0, dil) * plateau(sa, 1.0, dil));
      }
    }
  }
  if (acc == cd{}) return acc;
  const double amp = std::pow(fam.cap_diameter, 0.5 * (fam.n - 1));
  return acc * expi(-kTwoPi * dot(x, fam.caps[cap].xi)) * amp;
}

cd evaluate_F(const CexState& st, const CexFamilies& fam, const Point& x) {
  cd s{};
  for (std::size_t c = 0; c < fam.caps.size(); ++c) s += evaluate_F_tau(st, fam, c, x);
  return s;
}

CexState assign_phases(const std::vector<Point>& centers, const Selection& sel, const CexFamilies& fam) {
  CexState st;
  st.centers = centers;
  st.selection = sel;
  st.phases.assign(fam.tubes.size(), cd{});
  st.assigned.assign(fam.tubes.size(), 0);
  for (std::size_t j = 0; j < sel.balls.size(); ++j) {
    const Point& x = centers[sel.balls[j]];
    // Unassigned tubes still carry c_T = 0, so this is F^1 at the ball centre.
    cd f1 = evaluate_F(st, fam, x);
    int sigma = f1.real() >= 0.0 ? 1 : -1;
    st.signs.push_back(sigma);
    for (auto t : sel.richsets[j]) {
      if (st.assigned[t]) throw StateError("tube assigned twice; property (P2) is violated");
      st.phases[t] = static_cast<double>(sigma) * expi(kTwoPi * dot(x, fam.caps[fam.tubes[t].cap].xi));
      st.assigned[t] = 1;
    }
  }
  for (std::size_t t = 0; t < fam.tubes.size(); ++t)
    if (!st.assigned[t]) st.phases[t] = 1.0;
  return st;
}

CexResult evaluate_cex(const CexState& st, const CexFamilies& fam, const CexOptions& opt) {
  if (st.phases.size() != fam.tubes.size()) throw StateError("phases have not been assigned for this family");
  const int n = fam.n;
  const double R = fam.R;
  CexResult res;
  // int_{B_R} |F|^2 on a lattice of the given spacing.
  const double h = opt.integral_spacing;
  const long M = static_cast<long>(std::floor(R / h));
  std::vector<double> rows(2 * M + 1, 0.0);
  parallel_rows(-M, M, opt.threads, [&](long i) {
    double acc = 0.0;
    for (long j = -M; j <= M; ++j)
      for (long k = (n == 3 ? -M : 0); k <= (n == 3 ? M : 0); ++k) {
        Point x{i * h, j * h, k * h};
        if (dot(x, x) > R * R) continue;
        acc += std::norm(evaluate_F(st, fam, x));
      }
    rows[i + M] = acc;
  });
  double total = 0.0;
  for (double v : rows) total += v;
  res.total = total * std::pow(h, n);
  res.budget = res.total / std::pow(R, n);

  // int |F|^2 w over the disjoint unit balls, on a fine stencil.
  const double hs = opt.ball_stencil;
  const int S = static_cast<int>(std::ceil(1.0 / hs));
  std::vector<Point> stencil;
  for (int a = -S; a <= S; ++a)
    for (int b = -S; b <= S; ++b)
      for (int c = (n == 3 ? -S : 0); c <= (n == 3 ? S : 0); ++c) {
        Point o{a * hs, b * hs, c * hs};
        if (norm(o) <= 1.0) stencil.push_back(o);
      }
  const double vol = std::pow(hs, n);
  const double threshold = opt.c_f * std::pow(R, 0.5 * (n - 1) / (n + 1));
  std::vector<char> selected(st.centers.size(), 0);
  for (auto b : st.selection.balls) selected[b] = 1;
  std::size_t big = 0, seen = 0;
  for (std::size_t b = 0; b < st.centers.size(); ++b)
    for (const auto& o : stencil) {
      cd f = evaluate_F(st, fam, st.centers[b] + o);
      res.weighted += std::norm(f) * vol;
      if (selected[b]) {
        ++seen;
        if (std::abs(f) >= threshold) ++big;
      }
    }
  res.large_fraction = seen ? static_cast<double>(big) / seen : 0.0;
  res.large_ok = seen == 0 || res.large_fraction >= 0.5;

  XrayOptions xo = opt.xray;
  if (xo.angular_res <= 0.0) xo.angular_res = 1.0 / (2.0 * R);
  res.xray = st.centers.empty() ? 0.0 : xray_sup_balls(st.centers, 1.0, n, xo).value;
  double denom = res.xray * res.total / R;
  res.ratio = denom > 0.0 ? res.weighted / denom : 0.0;
  return res;
}

DecouplingAxioms verify_decoupling_axioms(const CexState& st, const CexFamilies& fam, std::uint64_t seed,
                                          int translates, double spacing, int threads) {
  if (st.phases.size() != fam.tubes.size()) throw StateError("phases have not been assigned for this family");
  const int n = fam.n;
  const double R = fam.R, r = fam.radius, L = fam.length;
  const std::size_t D = fam.caps.size();
  DecouplingAxioms out;
  std::mt19937_64 rng(seed);
  // DA1: max/mean of |F_tau| over random translates of the dual box (r x L, axis N(tau)).
  const double inner = R - 0.5 * L - r * std::sqrt(static_cast<double>(n - 1));
  if (inner <= 0.0) throw ScaleError("dual boxes do not fit inside B_R");
  std::uniform_real_distribution<double> U(-inner, inner);
  const int G = 16;
  for (std::size_t c = 0; c < D; ++c) {
    const auto& cp = fam.caps[c];
    for (int t = 0; t < translates; ++t) {
      Point ctr{U(rng), U(rng), n == 3 ? U(rng) : 0.0};
      if (norm(ctr) > inner) {
        --t;
        continue;
      }
      double mx = 0.0, sum = 0.0;
      int cnt = 0;
      for (int a = 0; a < G; ++a)
        for (int b = 0; b < G; ++b)
          for (int e = 0; e < (n == 3 ? G : 1); ++e) {
            Point x = ctr + ((a + 0.5) / G - 0.5) * L * cp.axis + ((b + 0.5) / G - 0.5) * r * cp.lateral[0];
            if (n == 3) x = x + ((e + 0.5) / G - 0.5) * r * cp.lateral[1];
            double v = std::abs(evaluate_F_tau(st, fam, c, x));
            mx = std::max(mx, v);
            sum += v;
            ++cnt;
          }
      double mean = sum / cnt;
      if (mean > 0.0) out.da1_max = std::max(out.da1_max, mx / mean);
    }
  }
  // DA2: dyadic nesting of caps in index order, K = B_R.
  std::vector<std::vector<std::size_t>> groups;
  for (std::size_t size = 2; size / 2 < D; size *= 2)
    for (std::size_t s = 0; s + 1 < D; s += size) {
      std::vector<std::size_t> g;
      for (std::size_t c = s; c < std::min(D, s + size); ++c) g.push_back(c);
      if (g.size() >= 2) groups.push_back(g);
    }
  const long M = static_cast<long>(std::floor(R / spacing));
  const std::size_t G2 = groups.size();
  std::vector<double> row_num((2 * M + 1) * G2, 0.0), row_den((2 * M + 1) * G2, 0.0);
  parallel_rows(-M, M, threads, [&](long i) {
    std::vector<cd> ft(D);
    double* rn = &row_num[(i + M) * G2];
    double* rd = &row_den[(i + M) * G2];
    for (long j = -M; j <= M; ++j)
      for (long k = (n == 3 ? -M : 0); k <= (n == 3 ? M : 0); ++k) {
        Point x{i * spacing, j * spacing, k * spacing};
        if (dot(x, x) > R * R) continue;
        for (std::size_t c = 0; c < D; ++c) ft[c] = evaluate_F_tau(st, fam, c, x);
        for (std::size_t g = 0; g < G2; ++g) {
          cd sum{};
          double e = 0.0;
          for (auto c : groups[g]) {
            sum += ft[c];
            e += std::norm(ft[c]);
          }
          rn[g] += std::norm(sum);
          rd[g] += e;
        }
      }
  });
  std::vector<double> num(G2, 0.0), den(G2, 0.0);
  for (long r = 0; r < 2 * M + 1; ++r)
    for (std::size_t g = 0; g < G2; ++g) {
      num[g] += row_num[r * G2 + g];
      den[g] += row_den[r * G2 + g];
    }
  out.da2_min = 1e300;
  out.da2_max = 0.0;
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (den[g] == 0.0) continue;
    double q = num[g] / den[g];
    out.da2_min = std::min(out.da2_min, q);
    out.da2_max = std::max(out.da2_max, q);
  }
  if (out.da2_max == 0.0) out.da2_min = out.da2_max = 1.0;
  out.da1_ok = out.da1_max <= 20.0;
  out.da2_ok = out.da2_min >= 0.25 && out.da2_max <= 4.0;
  return out;
}

CexRun run_cex(double R, int n, const OccupancyOptions& occ, const CexOptions& opt) {
  CexRun run;
  run.families = build_families(R, n, cex_patch(n));
  run.weight = build_low_occupancy_weight(run.families, occ);
  Selection sel = select_balls(run.weight.centers, run.families);
  run.state = assign_phases(run.weight.centers, sel, run.families);
  run.result = evaluate_cex(run.state, run.families, opt);
  return run;
}

std::string state_to_json(const CexState& st, const CexFamilies& fam) {
  using nlohmann::json;
  json j;
  j["R"] = fam.R;
  j["n"] = fam.n;
  json balls = json::array();
  for (const auto& c : st.centers) balls.push_back({c[0], c[1], c[2]});
  j["balls"] = balls;
  j["selected"] = st.selection.balls;
  j["richsets"] = st.selection.richsets;
  j["signs"] = st.signs;
  json tubes = json::array();
  for (std::size_t t = 0; t < fam.tubes.size(); ++t) {
    const auto& T = fam.tubes[t];
    double mag = std::abs(st.phases[t]);
    tubes.push_back({{"cap", T.cap},
                     {"index", T.index},
                     {"magnitude", mag},
                     {"angle", mag > 0.0 ? std::arg(st.phases[t]) : 0.0},
                     {"assigned", static_cast<bool>(st.assigned[t])}});
  }
  j["tubes"] = tubes;
  return j.dump(1);
}

CexState state_from_json(const std::string& text, const CexFamilies& fam) {
  using nlohmann::json;
  json j = json::parse(text);
  if (j.at("tubes").size() != fam.tubes.size() || j.at("n").get<int>() != fam.n)
    throw StateError("serialized state does not match the tube family");
  CexState st;
  for (const auto& b : j.at("balls")) st.centers.push_back({b[0].get<double>(), b[1].get<double>(), b[2].get<double>()});
  st.selection.balls = j.at("selected").get<std::vector<std::size_t>>();
  st.selection.richsets = j.at("richsets").get<std::vector<std::vector<std::size_t>>>();
  st.signs = j.at("signs").get<std::vector<int>>();
  for (std::size_t t = 0; t < fam.tubes.size(); ++t) {
    const auto& e = j["tubes"][t];
    if (e.at("cap").get<std::size_t>() != fam.tubes[t].cap ||
        e.at("index").get<std::array<int, 3>>() != fam.tubes[t].index)
      throw StateError("serialized tube order does not match the family");
    st.phases.push_back(e.at("magnitude").get<double>() * expi(e.at("angle").get<double>()));
    st.assigned.push_back(e.at("assigned").get<bool>() ? 1 : 0);
  }
  return st;
}

}  // namespace mtlab
