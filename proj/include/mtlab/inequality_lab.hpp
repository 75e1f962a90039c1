#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "mtlab/extension.hpp"
#include "mtlab/tomography.hpp"
#include "mtlab/wavepacket.hpp"

namespace mtlab {

struct MTReport {
  std::string scenario;
  int n = 2;
  double R = 0.0;
  double rho = 1.0;
  double lhs = 0.0;
  double g_norm_sq = 0.0;
  std::map<std::string, double> rhs;
  std::map<std::string, double> ratios;
  std::optional<Tube> argmax_tube;
};

struct MTOptions {
  bool xray = true;
  bool xray_perp = true;
  bool tube_mass = true;
  bool a_rho = true;
  bool stein = false;
  XrayOptions xray_options{};
};

// Caps of radius `radius` from the canonical cover that contain a nonzero sample of g.
std::vector<Cap> support_caps(const Density& g, double radius);

// Evaluates Eg on the weight's grid (which must be SpatialGrid::centered(n, R, spacing)).
Field field_for_weight(const Density& g, const Weight& w, double R);

MTReport mt_report(const Density& g, const Weight& w, double R, double rho, const MTOptions& opt = {});
// Same report from a precomputed field on the weight's grid.
MTReport mt_report(const Density& g, const Field& Eg, const Weight& w, double R, double rho, const MTOptions& opt = {});

// The standard sharpness example: g the indicator of the R^{-1/2}-cap at the
// origin and w the indicator of the dual R^{1/2} x R tube.
struct FocusingPair {
  Density g;
  Weight w;
  Tube tube;
};
FocusingPair focusing_pair(const SurfacePatch& patch, double R);

struct RichnessPartition {
  double R = 0.0;
  double ball_radius = 0.0;
  std::vector<Point> centers;
  std::vector<int> counts;                          // tubes meeting each ball
  std::map<int, std::vector<std::size_t>> levels;   // j -> balls with count in [2^j, 2^{j+1})
  long long ball_wise_total = 0;                    // sum over balls of counts
  long long tube_wise_total = 0;                    // sum over tubes of balls met
};

// Solid-cylinder distance test used by both counting passes.
bool ball_meets_tube(const Point& center, double radius, const Tube& t);
RichnessPartition richness_partition(const std::vector<Tube>& tubes, double R, int n);

struct RefinedDecouplingLevel {
  int j = 0;
  double k = 0.0;  // mean incidence count of the level
  std::size_t balls = 0;
  double lhs = 0.0;
  double ratio = 0.0;
};
struct RefinedDecouplingReport {
  std::size_t tubes = 0;
  double g_norm = 0.0;
  std::vector<RefinedDecouplingLevel> levels;
  double max_ratio = 0.0;
  long long ball_wise_total = 0;
  long long tube_wise_total = 0;
};
// Keeps packets whose norm is within a factor 2 of the largest, then compares
// ||E g_T||_{L^p(U_k)} with (k/#T)^{1/(n+1)} ||g_T||_2 on each dyadic level.
RefinedDecouplingReport refined_decoupling_check(const PacketSet& pset, const Density& like, double R);

enum class CapScale { InverseSqrtRho, InverseQuarterRho };

struct SlabDecouplingReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
  std::size_t caps = 0;
  double nu = 0.0;
};
// Partition of g into pieces over a square lattice of cells of the given cap radius.
std::vector<Density> partition_by_caps(const Density& g, double radius, std::vector<Cap>* caps = nullptr);
SlabDecouplingReport slab_decoupling_check(const Density& g, const std::vector<Slab>& slabs,
                                           const std::vector<double>& coeffs, double rho, CapScale scale, double R,
                                           double spacing = 1.0);

// Random disjoint slabs with the given normal, radius rho^{1/2}, inside B_R.
std::vector<Slab> random_slabs(int n, double R, double rho, const Point& normal, int count, std::uint64_t seed);

// MT report for flake weights with the packet-resolved right-hand side
// sum_T sup_{l in T} Xw(l) ||g_T||^2 under the key "packet".
MTReport flake_mt_check(const Density& g, const std::vector<Flake>& flakes, const std::vector<double>& coeffs,
                        double R, double delta = 0.05);

struct FitResult {
  double slope = 0.0;
  double intercept = 0.0;
  std::vector<double> residuals;
};
FitResult fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

std::vector<MTReport> sweep(const std::vector<double>& R_list, const std::function<MTReport(double)>& scenario);
// Slope per ratio variant over a sweep; variants with a non-positive ratio are skipped.
std::map<std::string, FitResult> fit_variants(const std::vector<MTReport>& reports);

void write_reports_csv(const std::string& path, const std::vector<MTReport>& reports);

}  // namespace mtlab
