#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace snaprg {

// Coordinates on a hypercubic lattice. Unused trailing axes are fixed to 0,
// so 2D and 3D share one representation.
using Coord = std::array<int, 3>;

/// Hypercubic lattice with periodic boundaries and row-major site indexing
/// (x fastest). All side lengths are even so parity decimation masks retain
/// exactly half the sites.
class LatticeSpec {
 public:
  LatticeSpec() = default;

  int dimension() const { return dim_; }
  const std::vector<int>& lengths() const { return lengths_; }
  int length(int axis) const { return lengths_[static_cast<size_t>(axis)]; }
  int64_t n_sites() const { return n_sites_; }

  int64_t index_of(const Coord& c) const {
    int64_t idx = c[0];
    int64_t stride = lengths_[0];
    for (int a = 1; a < dim_; ++a) {
      idx += stride * c[static_cast<size_t>(a)];
      stride *= lengths_[static_cast<size_t>(a)];
    }
    return idx;
  }

  Coord coords_of(int64_t idx) const {
    Coord c{0, 0, 0};
    for (int a = 0; a < dim_; ++a) {
      c[static_cast<size_t>(a)] = static_cast<int>(idx % lengths_[static_cast<size_t>(a)]);
      idx /= lengths_[static_cast<size_t>(a)];
    }
    return c;
  }

  // Wraps arbitrary integer coordinates onto the torus.
  Coord wrap(Coord c) const {
    for (int a = 0; a < dim_; ++a) {
      const int l = lengths_[static_cast<size_t>(a)];
      int v = c[static_cast<size_t>(a)] % l;
      if (v < 0) v += l;
      c[static_cast<size_t>(a)] = v;
    }
    return c;
  }

  bool operator==(const LatticeSpec& o) const {
    return dim_ == o.dim_ && lengths_ == o.lengths_;
  }

 private:
  friend LatticeSpec build_lattice(int dimension, const std::vector<int>& lengths);

  int dim_ = 0;
  std::vector<int> lengths_;
  int64_t n_sites_ = 0;
};

/// Builds a lattice spec. dimension must be 2 or 3; every length must be
/// even and >= 4. Throws std::invalid_argument otherwise.
LatticeSpec build_lattice(int dimension, const std::vector<int>& lengths);

/// Forward-neighbor table: each unordered bond appears exactly once, attached
/// to the site at its +axis (order 1) or +diagonal (order 2) end.
/// Order 2 (next-nearest, diagonal) is defined for 2D only.
class NeighborTable {
 public:
  const LatticeSpec& lattice() const { return lattice_; }
  int order() const { return order_; }
  int forward_count() const { return forward_count_; }
  int64_t bond_count() const { return lattice_.n_sites() * forward_count_; }

  std::span<const int32_t> forward(int64_t site) const {
    return {forward_.data() + site * forward_count_, static_cast<size_t>(forward_count_)};
  }

  /// Full symmetric adjacency, 2*forward_count() entries per site. On L=2
  /// axes the same neighbor appears twice (doubled bond), which keeps the
  /// table degree-regular and bond sums exact.
  const std::vector<int32_t>& full_adjacency() const { return full_; }
  int full_degree() const { return 2 * forward_count_; }
  std::span<const int32_t> neighbors(int64_t site) const {
    return {full_.data() + site * full_degree(), static_cast<size_t>(full_degree())};
  }

 private:
  friend NeighborTable neighbor_table(const LatticeSpec&, int order);

  LatticeSpec lattice_;
  int order_ = 1;
  int forward_count_ = 0;
  std::vector<int32_t> forward_;
  std::vector<int32_t> full_;
};

NeighborTable neighbor_table(const LatticeSpec& lattice, int order);

/// Decimation mask of n composed RG steps. Step 1 retains sites with even
/// coordinate sum; every later step applies the same rule in the frame of
/// the current sublattice. frame() holds the primitive vectors of the
/// retained sublattice expressed in original-lattice coordinates (columns).
class SiteMask {
 public:
  using Frame = std::array<Coord, 3>;

  const LatticeSpec& lattice() const { return lattice_; }
  int n_steps() const { return n_steps_; }
  const std::vector<int32_t>& retained() const { return retained_; }
  int64_t retained_count() const { return static_cast<int64_t>(retained_.size()); }
  const Frame& frame() const { return frame_; }

 private:
  friend SiteMask decimation_mask(const LatticeSpec&, int n_steps);

  LatticeSpec lattice_;
  int n_steps_ = 0;
  std::vector<int32_t> retained_;
  Frame frame_{};
};

/// Builds the composed n-step decimation mask. Requires 2^n_steps | N and
/// n_steps <= floor(log2(min L_a)) + 1; additionally verifies that the mask
/// is consistent with periodic wraparound and retains exactly N/2^n sites.
SiteMask decimation_mask(const LatticeSpec& lattice, int n_steps);

/// Retained sites with their integer coordinates in the mask's current frame.
std::vector<std::pair<int32_t, Coord>> retained_coordinates(const SiteMask& mask);

}  // namespace snaprg
