#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "mtlab/geometry.hpp"
#include "mtlab/grid.hpp"

namespace mtlab {

// Samples of a density g on the cell-centred lattice w_K = (K + 1/2) * spacing,
// K in [-K0, K0) per axis, restricted to |w| <= domain_radius. A Density may
// cover the whole lattice or a rectangular window of it; samples outside the
// window are zero by definition.
class Density {
 public:
  Density() = default;
  // Zero density on the full lattice. The spacing is 1/N with N the smallest
  // power of two with N >= 8 * r_max * (1 + max|grad h|).
  Density(const SurfacePatch& patch, double r_max);

  static double spacing_for(const SurfacePatch& patch, double r_max);

  const SurfacePatch& patch() const { return *patch_; }
  int param_dim() const { return patch_->dim() - 1; }
  double r_max() const { return r_max_; }
  double spacing() const { return spacing_; }
  int lattice_n() const { return lattice_n_; }      // N = 1/spacing
  int half_extent() const { return half_extent_; }  // K0
  bool admits(double R) const { return R <= r_max_ * (1.0 + 1e-12); }

  // Window in lattice coordinates: local index i maps to K = lo + i - K0.
  std::array<int, 2> lo() const { return lo_; }
  std::array<int, 2> extent() const { return ext_; }
  std::size_t size() const { return samples_.size(); }
  std::size_t index(int i0, int i1) const { return static_cast<std::size_t>(i0) * ext_[1] + i1; }
  // Lattice index K of a local window index along one axis.
  int lattice_index(int axis, int i) const { return lo_[axis] + i - half_extent_; }
  Omega node(int i0, int i1) const;
  bool in_domain(int i0, int i1) const { return patch_->in_domain(node(i0, i1)); }

  std::vector<cd>& samples() { return samples_; }
  const std::vector<cd>& samples() const { return samples_; }
  cd& at(int i0, int i1) { return samples_[index(i0, i1)]; }
  cd at(int i0, int i1) const { return samples_[index(i0, i1)]; }

  double cell_volume() const { return param_dim() == 1 ? spacing_ : spacing_ * spacing_; }
  double l2_norm_sq() const;
  double sup_norm() const;
  bool is_zero() const;

  // Same lattice, restricted to a rectangular window (lattice-local coordinates).
  Density window(std::array<int, 2> lo, std::array<int, 2> ext) const;
  // Window covering the cap's bounding box, samples outside the cap set to zero.
  Density restricted(const Cap& cap) const;
  // Full-lattice copy (window expanded back to the whole lattice).
  Density expanded() const;
  // Adds this (windowed) density into a full-lattice density with the same patch and spacing.
  void add_to(Density& full, cd scale = 1.0) const;
  // Lattice-local window [lo, lo+ext) that contains the ball of radius r around c, clipped.
  void window_for(const Omega& c, double r, std::array<int, 2>& lo, std::array<int, 2>& ext) const;

 private:
  std::shared_ptr<const SurfacePatch> patch_;
  double r_max_ = 0.0;
  double spacing_ = 1.0;
  int lattice_n_ = 1;
  int half_extent_ = 0;
  std::array<int, 2> lo_{0, 0};
  std::array<int, 2> ext_{1, 1};
  std::vector<cd> samples_;
};

Density density_from_function(const SurfacePatch& patch, double r_max, const std::function<cd(const Omega&)>& f);
// Band-limited random density: smooth window times a random trigonometric
// polynomial with integer frequencies |k| <= spread and Gaussian coefficients.
// For spread <= R/4 the field Eg is concentrated in |x'| <= R on |x_n| <= R.
Density random_density(const SurfacePatch& patch, double r_max, std::uint64_t seed, double spread);
Density cap_indicator(const SurfacePatch& patch, double r_max, const Cap& cap);
// b(|w - c| / r) * e^{-2 pi i <v0, w>}; its field concentrates along the tube through (v0, 0).
Density cap_bump(const SurfacePatch& patch, double r_max, const Cap& cap, const Omega& v0 = {0.0, 0.0});
// All mass on the single lattice cell nearest w0, with total integral `mass`.
Density single_cell(const SurfacePatch& patch, double r_max, const Omega& w0, double mass = 1.0);

struct QuadratureSpec {
  enum class Rule { Midpoint, Trapezoid };
  Rule rule = Rule::Midpoint;
  int refinement = 1;
  bool surface_measure = false;  // multiply by sqrt(1 + |grad h|^2)
};

std::vector<cd> extend_direct(const Density& g, const std::vector<Point>& points, const QuadratureSpec& q = {});

struct FastOptions {
  double spacing = 1.0;                    // field spacing; 1/spacing must be an integer
  std::uint64_t budget_bytes = 4ull << 30;
  bool surface_measure = false;
};
std::uint64_t fast_grid_bytes(const Density& g, double R, const FastOptions& opt = {});
Field extend_fast_grid(const Density& g, double R, const FastOptions& opt = {});

// Sum over x' of |Eg(x', t)|^2 * spacing^{n-1} for every slice t (index along the vertical axis).
std::vector<double> slice_l2(const Field& f);

double weighted_l2(const Field& f, const Weight& w, double R);

}  // namespace mtlab
