#include "mtlab/grid.hpp"

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace mtlab {

SpatialGrid SpatialGrid::centered(int n, double R, double spacing) {
  if (n != 2 && n != 3) throw ArgumentError("grid dimension must be 2 or 3");
  if (!(spacing > 0.0) || !(R >= 0.0)) throw ArgumentError("grid needs positive spacing and R >= 0");
  SpatialGrid g;
  g.n = n;
  g.spacing = spacing;
  int m = static_cast<int>(std::llround(R / spacing));
  for (int a = 0; a < n; ++a) {
    g.extent[a] = 2 * m + 1;
    g.origin[a] = -m * spacing;
  }
  return g;
}

bool SpatialGrid::same_geometry(const SpatialGrid& o) const {
  return n == o.n && extent == o.extent && std::abs(spacing - o.spacing) <= 1e-12 * spacing &&
         std::abs(origin[0] - o.origin[0]) <= 1e-9 && std::abs(origin[1] - o.origin[1]) <= 1e-9 &&
         std::abs(origin[2] - o.origin[2]) <= 1e-9;
}

double Weight::total_mass() const {
  double s = 0.0;
  for (double v : samples) s += v;
  return s * grid.cell_volume();
}

double regularity_ratio(const Weight& w) {
  const auto& g = w.grid;
  double worst = 1.0;
  for (int i0 = 0; i0 < g.extent[0]; ++i0)
    for (int i1 = 0; i1 < g.extent[1]; ++i1)
      for (int i2 = 0; i2 < g.extent[2]; ++i2) {
        double a = w.samples[g.index(i0, i1, i2)];
        if (a <= 0.0) continue;
        std::array<std::array<int, 3>, 3> nb{{{i0 + 1, i1, i2}, {i0, i1 + 1, i2}, {i0, i1, i2 + 1}}};
        for (auto& q : nb) {
          if (q[0] >= g.extent[0] || q[1] >= g.extent[1] || q[2] >= g.extent[2]) continue;
          double b = w.samples[g.index(q[0], q[1], q[2])];
          if (b <= 0.0) continue;
          worst = std::max(worst, std::max(a, b) / std::min(a, b));
        }
      }
  return worst;
}

namespace {

struct Header {
  char magic[4];
  std::uint32_t version;
  std::uint32_t dtype;
  std::uint32_t n;
  std::uint32_t extent[3];
  double origin[3];
  double spacing;
};

Header make_header(const SpatialGrid& g, std::uint32_t dtype) {
  Header h{};
  std::memcpy(h.magic, "MTLB", 4);
  h.version = 1;
  h.dtype = dtype;
  h.n = static_cast<std::uint32_t>(g.n);
  for (int a = 0; a < 3; ++a) {
    h.extent[a] = static_cast<std::uint32_t>(g.extent[a]);
    h.origin[a] = g.origin[a];
  }
  h.spacing = g.spacing;
  return h;
}

void put_header(std::ofstream& out, const Header& h) {
  out.write(h.magic, 4);
  out.write(reinterpret_cast<const char*>(&h.version), 4);
  out.write(reinterpret_cast<const char*>(&h.dtype), 4);
  out.write(reinterpret_cast<const char*>(&h.n), 4);
  out.write(reinterpret_cast<const char*>(h.extent), 12);
  out.write(reinterpret_cast<const char*>(h.origin), 24);
  out.write(reinterpret_cast<const char*>(&h.spacing), 8);
}

Header get_header(std::ifstream& in, const std::string& path) {
  Header h{};
  in.read(h.magic, 4);
  in.read(reinterpret_cast<char*>(&h.version), 4);
  in.read(reinterpret_cast<char*>(&h.dtype), 4);
  in.read(reinterpret_cast<char*>(&h.n), 4);
  in.read(reinterpret_cast<char*>(h.extent), 12);
  in.read(reinterpret_cast<char*>(h.origin), 24);
  in.read(reinterpret_cast<char*>(&h.spacing), 8);
  if (!in || std::memcmp(h.magic, "MTLB", 4) != 0 || h.version != 1)
    throw ArgumentError("not a grid file: " + path);
  return h;
}

SpatialGrid grid_from(const Header& h) {
  SpatialGrid g;
  g.n = static_cast<int>(h.n);
  for (int a = 0; a < 3; ++a) {
    g.extent[a] = static_cast<int>(h.extent[a]);
    g.origin[a] = h.origin[a];
  }
  g.spacing = h.spacing;
  return g;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot open for writing: " + path);
  return out;
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open for reading: " + path);
  return in;
}

void csv_coords(std::FILE* f, const SpatialGrid& g, std::size_t k) {
  Point p = g.point(k);
  for (int a = 0; a < g.n; ++a) std::fprintf(f, "%.17g,", p[a]);
}

}  // namespace

void write_binary(const std::string& path, const Field& f) {
  auto out = open_out(path);
  put_header(out, make_header(f.grid, 1));
  out.write(reinterpret_cast<const char*>(f.samples.data()), static_cast<std::streamsize>(f.samples.size() * sizeof(cd)));
}

void write_binary(const std::string& path, const Weight& w) {
  auto out = open_out(path);
  put_header(out, make_header(w.grid, 0));
  out.write(reinterpret_cast<const char*>(w.samples.data()),
            static_cast<std::streamsize>(w.samples.size() * sizeof(double)));
}

Field read_field(const std::string& path) {
  auto in = open_in(path);
  Header h = get_header(in, path);
  if (h.dtype != 1) throw ArgumentError("grid file does not hold a complex field: " + path);
  Field f(grid_from(h));
  in.read(reinterpret_cast<char*>(f.samples.data()), static_cast<std::streamsize>(f.samples.size() * sizeof(cd)));
  if (!in) throw ArgumentError("truncated grid file: " + path);
  return f;
}

Weight read_weight(const std::string& path) {
  auto in = open_in(path);
  Header h = get_header(in, path);
  if (h.dtype != 0) throw ArgumentError("grid file does not hold a real weight: " + path);
  Weight w(grid_from(h));
  in.read(reinterpret_cast<char*>(w.samples.data()), static_cast<std::streamsize>(w.samples.size() * sizeof(double)));
  if (!in) throw ArgumentError("truncated grid file: " + path);
  for (double v : w.samples)
    if (!(v >= 0.0)) throw ArgumentError("weight file contains negative or NaN samples: " + path);
  return w;
}

void write_csv(const std::string& path, const Field& f) {
  std::FILE* out = std::fopen(path.c_str(), "w");
  if (!out) throw ArgumentError("cannot open for writing: " + path);
  std::fprintf(out, f.grid.n == 2 ? "x0,x1,re,im\n" : "x0,x1,x2,re,im\n");
  for (std::size_t k = 0; k < f.samples.size(); ++k) {
    csv_coords(out, f.grid, k);
    std::fprintf(out, "%.17g,%.17g\n", f.samples[k].real(), f.samples[k].imag());
  }
  std::fclose(out);
}

void write_csv(const std::string& path, const Weight& w) {
  std::FILE* out = std::fopen(path.c_str(), "w");
  if (!out) throw ArgumentError("cannot open for writing: " + path);
  std::fprintf(out, w.grid.n == 2 ? "x0,x1,w\n" : "x0,x1,x2,w\n");
  for (std::size_t k = 0; k < w.samples.size(); ++k) {
    csv_coords(out, w.grid, k);
    std::fprintf(out, "%.17g\n", w.samples[k]);
  }
  std::fclose(out);
}

}  // namespace mtlab
