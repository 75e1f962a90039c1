#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mtlab/geometry.hpp"
#include "mtlab/grid.hpp"
#include "mtlab/tomography.hpp"

namespace mtlab {

// Tube lattice of one cap. Core tiles are the cells
//   floor(<x, e_i> / (2r) + 1/2) = i,   floor(<x, u> / L + 1/2) = k
// with u = N(tau); they tile R^n exactly. phi_T equals 1 on the core and
// vanishes outside the core dilated by `support_dilation`.
struct CexCap {
  Cap cap;
  Point xi{};                   // Sigma(center)
  Point axis{};                 // N(center)
  std::array<Point, 2> lateral{};
  std::size_t first_tube = 0;   // offset into CexFamilies::tubes
  std::size_t tube_count = 0;
};

struct CexTube {
  std::size_t cap = 0;
  std::array<int, 3> index{0, 0, 0};  // lateral0, lateral1, axial
  Tube core;                          // centre, axis, radius r, length L
};

struct CexFamilies {
  double R = 0.0;
  int n = 2;
  double cap_diameter = 0.0;
  double radius = 0.0;  // r = 1/d
  double length = 0.0;  // L = 1/d^2
  double support_dilation = 1.5;
  std::vector<CexCap> caps;
  std::vector<CexTube> tubes;

  // Index of the tube of cap c whose core contains x, or npos when it is not in the family.
  std::size_t core_tube(std::size_t c, const Point& x) const;
  // phi_T(x) for tube t.
  double phi(std::size_t t, const Point& x) const;
  // Lattice coordinates of x relative to cap c, in units of (2r, 2r, L).
  std::array<double, 3> lattice_coords(std::size_t c, const Point& x) const;
  std::size_t find_tube(std::size_t c, const std::array<int, 3>& idx) const;

  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  struct CapLookup {
    std::array<int, 3> lo{0, 0, 0};
    std::array<int, 3> cnt{1, 1, 1};
    std::vector<std::size_t> slot;  // dense index box, npos where no tube
  };
  std::vector<CapLookup> lookup;
};

SurfacePatch cex_patch(int n);

// Caps of diameter d = 2 / floor(2 R^{1/(n+1)}) on a lattice of spacing d over the
// unit parameter ball. An empty `keep_caps` keeps every cap; otherwise only the listed ones.
CexFamilies build_families(double R, int n, const SurfacePatch& patch, double support_dilation = 1.5,
                           const std::vector<std::size_t>& keep_caps = {});

struct FamilyCheck {
  std::size_t max_core_multiplicity = 0;
  std::size_t max_support_multiplicity = 0;
  std::size_t uncovered = 0;
  double max_direction_error = 0.0;
};
FamilyCheck check_families(const CexFamilies& fam, std::uint64_t seed, int samples = 2000);

struct OccupancyOptions {
  double balls_per_volume = 1.0;  // target N_balls = factor * R^{n-1}
  int line_cap = 6;               // max balls per sampled net line
  double line_reach = 1.0;        // centres within this distance of a net line count towards it
  int candidates = 8;             // admissible draws per placement; the least loaded one is kept
  double c_occ = 8.0;
  int max_retries = 3;
  std::uint64_t seed = 1;
};

struct OccupancyCertificate {
  std::size_t n_balls = 0;
  std::size_t target = 0;
  double line_max = 0.0;  // exact sup of chord sums
  double tube_max = 0.0;  // max number of balls with centre in one core tile
  double bound = 0.0;     // c_occ * log2 R
  bool passed = false;
  int attempts = 0;
};

struct LowOccupancyWeight {
  std::vector<Point> centers;  // disjoint unit balls
  OccupancyCertificate certificate;
};

LowOccupancyWeight build_low_occupancy_weight(const CexFamilies& fam, const OccupancyOptions& opt = {});
// Exact chord-sum sup via pairs of balls (lines through centres and common tangents).
double occupancy_all_pairs(const std::vector<Point>& centers, int n);
OccupancyCertificate certify(const std::vector<Point>& centers, const CexFamilies& fam, double c_occ = 8.0);

struct Selection {
  std::vector<std::size_t> balls;                  // selected ball indices in order
  std::vector<std::vector<std::size_t>> richsets;  // T_j per selected ball
  long long incidences = 0;                        // I(P, T) ball-wise
  long long incidences_tube_wise = 0;
};

// Tubes (one per cap) whose core contains the ball centre.
std::vector<std::size_t> tubes_through(const CexFamilies& fam, const Point& c);
Selection select_balls(const std::vector<Point>& centers, const CexFamilies& fam);
// Exhaustive oracle: the unique subset consistent with the greedy rule, found by enumerating all subsets.
std::vector<std::size_t> select_balls_bruteforce(const std::vector<Point>& centers, const CexFamilies& fam);

struct CexState {
  std::vector<Point> centers;
  Selection selection;
  std::vector<cd> phases;   // c_T per family tube
  std::vector<char> assigned;
  std::vector<int> signs;   // sigma per selected ball
};

CexState assign_phases(const std::vector<Point>& centers, const Selection& sel, const CexFamilies& fam);

// F(x) evaluated directly from the tube lattice.
cd evaluate_F(const CexState& st, const CexFamilies& fam, const Point& x);
// Contribution of a single cap.
cd evaluate_F_tau(const CexState& st, const CexFamilies& fam, std::size_t cap, const Point& x);

struct CexOptions {
  double integral_spacing = 0.5;
  double ball_stencil = 0.125;
  double c_f = 0.1;
  int threads = 1;  // worker threads for the lattice integrals
  XrayOptions xray{};
};

struct CexResult {
  double weighted = 0.0;     // int_{B_R} |F|^2 w
  double total = 0.0;        // int_{B_R} |F|^2
  double xray = 0.0;         // ||Xw||_inf
  double ratio = 0.0;        // weighted / (xray * total / R)
  double large_fraction = 0.0;  // fraction of selected-ball stencil points with |F| >= c_F R^{(n-1)/(2(n+1))}
  bool large_ok = false;
  double budget = 0.0;       // total / R^n
};

CexResult evaluate_cex(const CexState& st, const CexFamilies& fam, const CexOptions& opt = {});

struct DecouplingAxioms {
  double da1_max = 0.0;
  double da2_min = 0.0;
  double da2_max = 0.0;
  bool da1_ok = false;
  bool da2_ok = false;
};
DecouplingAxioms verify_decoupling_axioms(const CexState& st, const CexFamilies& fam, std::uint64_t seed,
                                          int translates = 40, double spacing = 0.5, int threads = 1);

// (P1), (P2) and the incidence double count; returns an empty string when they hold, else the first violation.
std::string check_selection(const std::vector<Point>& centers, const Selection& sel, const CexFamilies& fam);

struct CexRun {
  CexFamilies families;
  LowOccupancyWeight weight;
  CexState state;
  CexResult result;
};
CexRun run_cex(double R, int n, const OccupancyOptions& occ, const CexOptions& opt = {});

std::string state_to_json(const CexState& st, const CexFamilies& fam);
CexState state_from_json(const std::string& text, const CexFamilies& fam);

}  // namespace mtlab
