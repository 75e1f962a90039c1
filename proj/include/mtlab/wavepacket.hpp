#pragma once

#include <string>
#include <vector>

#include "mtlab/extension.hpp"

namespace mtlab {

struct PacketIndex {
  int cap_id = 0;
  Cap cap;
  std::array<int, 2> v_index{0, 0};  // v = v_spacing * v_index
  Omega v{};
};

struct Packet {
  PacketIndex index;
  Density density;  // windowed density supported in the dilated cap
  double norm_sq = 0.0;
};

// Tunable shape parameters of the bump kit.
struct DecomposeOptions {
  // Width of the Gaussian spatial partition, as a multiple of the v-lattice spacing.
  double eta_width = 1.0;
  // Radii of the frequency cut-off (plateau, support), in units of the cap radius.
  double tilde_inner = 2.0;
  double tilde_outer = 3.0;
  // Width of the local FFT window around each cap, in cap radii.
  double window = 8.0;
  // Packets are kept for |v| <= v_reach * R and only when their tube meets B_R.
  double v_reach = 2.0;
  // Packets whose squared norm is below this fraction of ||g||^2 are dropped.
  double drop_fraction = 1e-24;
};

class PacketSet {
 public:
  double R = 0.0;
  double delta = 0.0;
  double v_spacing = 0.0;
  double input_norm_sq = 0.0;
  std::vector<Cap> caps;
  std::vector<Packet> packets;

  bool empty() const { return packets.empty(); }
  // Sum of all packets on a full lattice like `like`.
  Density reconstruct(const Density& like) const;
  Density sum_of(const Density& like, const std::vector<std::size_t>& subset) const;
  double total_norm_sq() const;
};

PacketSet decompose(const Density& g, double R, double delta, const DecomposeOptions& opt = {});

Tube tube_of(const PacketIndex& idx, const SurfacePatch& patch, double R, double delta);

// (wp1): ||g - sum packets||_inf / ||g||_2 (0 for g = 0).
double check_reconstruction(const Density& g, const PacketSet& pset);
// (wp2): ||sum_W g_T||^2 / sum_W ||g_T||^2; 1 for an empty subset.
double check_orthogonality(const PacketSet& pset, const Density& like, const std::vector<std::size_t>& subset);

struct DecayReport {
  double on_tube_max = 0.0;
  double off_max = 0.0;       // max over B_R outside 2T
  double ratio = 0.0;         // off_max / on_tube_max
  double mass_in_2T = 0.0;    // fraction of the B_R mass of |Eg_T|^2 inside 2T
};
// (wp3): evaluates Eg_T on the unit grid of [-R, R]^n.
DecayReport check_decay(const Packet& packet, const SurfacePatch& patch, double R, double delta);

struct LocalConstancyReport {
  double max_ratio = 0.0;
  std::vector<double> ratios;
};
// Local constancy check: sup_T |Eg|^2 / avg_{2T} |Eg|^2 over random rho^{1/2} x rho tubes
// with direction N(tau), or orthogonal to it when `orthogonal` is set.
LocalConstancyReport local_constancy_check(const Density& g_tau, const Cap& tau, double rho, double R,
                                           std::uint64_t seed, int tubes = 50, bool orthogonal = false);

// CSV index table: cap centre, v, packet norm and tube parameters.
void write_packet_table(const std::string& path, const PacketSet& pset, const SurfacePatch& patch);

}  // namespace mtlab
