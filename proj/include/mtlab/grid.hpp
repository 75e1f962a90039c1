#pragma once

#include <string>
#include <vector>

#include "mtlab/core.hpp"

namespace mtlab {

// Regular grid in R^n. Axis n-1 is the vertical axis x_n. Samples are stored
// row-major with axis 0 slowest; for n = 2 extent[2] is 1.
struct SpatialGrid {
  int n = 2;
  double spacing = 1.0;
  std::array<int, 3> extent{1, 1, 1};
  Point origin{};  // position of index (0,0,0)

  // Symmetric grid covering [-R, R]^n with the given spacing (a lattice point sits at 0).
  static SpatialGrid centered(int n, double R, double spacing = 1.0);

  std::size_t size() const {
    return static_cast<std::size_t>(extent[0]) * extent[1] * extent[2];
  }
  std::size_t index(int i0, int i1, int i2 = 0) const {
    return (static_cast<std::size_t>(i0) * extent[1] + i1) * extent[2] + i2;
  }
  std::array<int, 3> unindex(std::size_t k) const {
    int i2 = static_cast<int>(k % extent[2]);
    k /= extent[2];
    int i1 = static_cast<int>(k % extent[1]);
    int i0 = static_cast<int>(k / extent[1]);
    return {i0, i1, i2};
  }
  Point point(std::size_t k) const {
    auto i = unindex(k);
    return {origin[0] + spacing * i[0], origin[1] + spacing * i[1], n == 3 ? origin[2] + spacing * i[2] : 0.0};
  }
  double cell_volume() const { return n == 2 ? spacing * spacing : spacing * spacing * spacing; }
  bool same_geometry(const SpatialGrid& o) const;
};

struct Field {
  SpatialGrid grid;
  std::vector<cd> samples;
  Field() = default;
  explicit Field(const SpatialGrid& g) : grid(g), samples(g.size(), cd{}) {}
};

struct Weight {
  SpatialGrid grid;
  std::vector<double> samples;
  Weight() = default;
  explicit Weight(const SpatialGrid& g) : grid(g), samples(g.size(), 0.0) {}
  double total_mass() const;
};

// Largest max/min ratio between face-adjacent samples that are both positive.
// Transitions between zero and positive samples are edges of the support and
// do not count against regularity.
double regularity_ratio(const Weight& w);

// Flat binary format: magic "MTLB", u32 version, u32 dtype (0 real f64, 1 complex f64),
// u32 n, u32 extent[3], f64 origin[3], f64 spacing, then the row-major samples.
void write_binary(const std::string& path, const Field& f);
void write_binary(const std::string& path, const Weight& w);
Field read_field(const std::string& path);
Weight read_weight(const std::string& path);
void write_csv(const std::string& path, const Field& f);
void write_csv(const std::string& path, const Weight& w);

}  // namespace mtlab
