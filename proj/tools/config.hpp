#pragma once

#include <cstdio>
#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "mtlab/counterexample.hpp"
#include "mtlab/extension.hpp"
#include "mtlab/inequality_lab.hpp"

namespace mtcli {

using nlohmann::json;

// Raised for malformed configurations and bad flags; the CLI maps it to exit code 2.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Built-in defaults for every key a run may read.
json default_config();

// defaults <- scenario defaults <- file <- overrides ("a.b=value", value parsed as JSON when possible).
json load_config(const std::string& path, const json& scenario_defaults, const std::vector<std::string>& overrides);
void apply_override(json& cfg, const std::string& assignment);

// Typed accessors that turn JSON type errors into UsageError.
double get_double(const json& cfg, const std::string& dotted);
int get_int(const json& cfg, const std::string& dotted);
std::string get_string(const json& cfg, const std::string& dotted);
std::vector<double> get_doubles(const json& cfg, const std::string& dotted);
std::vector<std::uint64_t> get_seeds(const json& cfg);

mtlab::SurfacePatch make_patch(const json& cfg);
mtlab::Density make_density(const json& cfg, const mtlab::SurfacePatch& patch, double R, std::uint64_t seed);
// Weight on SpatialGrid::centered(n, R, weight.spacing).
mtlab::Weight make_weight(const json& cfg, const mtlab::SurfacePatch& patch, double R, std::uint64_t seed);
mtlab::XrayOptions make_xray_options(const json& cfg);
mtlab::OccupancyOptions make_occupancy(const json& cfg, std::uint64_t seed);
mtlab::CexOptions make_cex_options(const json& cfg);

// Minimal CSV writer with round-trip precision for doubles.
class Csv {
 public:
  Csv(const std::string& path, const std::vector<std::string>& header);
  Csv& operator<<(double v);
  Csv& operator<<(long long v);
  Csv& operator<<(int v) { return *this << static_cast<long long>(v); }
  Csv& operator<<(std::size_t v) { return *this << static_cast<long long>(v); }
  Csv& operator<<(const std::string& s);
  Csv& operator<<(const char* s) { return *this << std::string(s); }
  void end_row();

 private:
  void sep();
  std::FILE* f_ = nullptr;
  bool first_ = true;
  std::shared_ptr<std::FILE> owner_;
};

std::string join_path(const std::string& dir, const std::string& file);

}  // namespace mtcli
