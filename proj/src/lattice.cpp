#include "snaprg/lattice.hpp"

#include <bit>
#include <stdexcept>
#include <string>

namespace snaprg {

LatticeSpec build_lattice(int dimension, const std::vector<int>& lengths) {
  if (dimension != 2 && dimension != 3)
    throw std::invalid_argument("build_lattice: dimension must be 2 or 3, got " +
                                std::to_string(dimension));
  if (static_cast<int>(lengths.size()) != dimension)
    throw std::invalid_argument("build_lattice: expected " + std::to_string(dimension) +
                                " lengths, got " + std::to_string(lengths.size()));
  for (int l : lengths) {
    // Even is mandatory (parity masks); L = 2 is allowed for enumeration-scale
    // test systems, with doubled bonds handled by the neighbor tables.
    if (l < 2) throw std::invalid_argument("build_lattice: lengths must be >= 2, got " + std::to_string(l));
    if (l % 2 != 0)
      throw std::invalid_argument("build_lattice: odd length " + std::to_string(l) +
                                  " not allowed (parity masks undefined)");
  }
  LatticeSpec spec;
  spec.dim_ = dimension;
  spec.lengths_ = lengths;
  spec.n_sites_ = 1;
  for (int l : lengths) spec.n_sites_ *= l;
  return spec;
}

NeighborTable neighbor_table(const LatticeSpec& lattice, int order) {
  if (order != 1 && order != 2)
    throw std::invalid_argument("neighbor_table: order must be 1 or 2");
  if (order == 2 && lattice.dimension() != 2)
    throw std::invalid_argument("neighbor_table: order 2 (diagonal) is unsupported in 3D");

  const int dim = lattice.dimension();
  std::vector<Coord> dirs;
  if (order == 1) {
    for (int a = 0; a < dim; ++a) {
      Coord d{0, 0, 0};
      d[static_cast<size_t>(a)] = 1;
      dirs.push_back(d);
    }
  } else {
    dirs.push_back({1, 1, 0});
    dirs.push_back({1, -1, 0});
  }

  NeighborTable table;
  table.lattice_ = lattice;
  table.order_ = order;
  table.forward_count_ = static_cast<int>(dirs.size());

  const int64_t n = lattice.n_sites();
  table.forward_.resize(static_cast<size_t>(n) * dirs.size());
  table.full_.resize(static_cast<size_t>(n) * dirs.size() * 2);
  for (int64_t i = 0; i < n; ++i) {
    const Coord c = lattice.coords_of(i);
    for (size_t k = 0; k < dirs.size(); ++k) {
      Coord fwd = c, bwd = c;
      for (int a = 0; a < dim; ++a) {
        fwd[static_cast<size_t>(a)] += dirs[k][static_cast<size_t>(a)];
        bwd[static_cast<size_t>(a)] -= dirs[k][static_cast<size_t>(a)];
      }
      const auto fi = static_cast<int32_t>(lattice.index_of(lattice.wrap(fwd)));
      const auto bi = static_cast<int32_t>(lattice.index_of(lattice.wrap(bwd)));
      table.forward_[static_cast<size_t>(i) * dirs.size() + k] = fi;
      table.full_[static_cast<size_t>(i) * dirs.size() * 2 + k] = fi;
      table.full_[static_cast<size_t>(i) * dirs.size() * 2 + dirs.size() + k] = bi;
    }
  }
  return table;
}

namespace {

// One decimation step in the current frame: keep sites with even coordinate
// sum, then express the survivors in the frame of the retained sublattice.
// 2D: (u,v) -> ((u+v)/2, (u-v)/2); 3D: the analogous face-centered transform.
// Returns false if the site is dropped.
bool step_coords(int dim, Coord& c) {
  if (dim == 2) {
    const int u = c[0], v = c[1];
    if (((u + v) & 1) != 0) return false;
    c = {(u + v) / 2, (u - v) / 2, 0};
  } else {
    const int u = c[0], v = c[1], w = c[2];
    if (((u + v + w) & 1) != 0) return false;
    c = {(u + v - w) / 2, (u - v + w) / 2, (-u + v + w) / 2};
  }
  return true;
}

bool member_after_steps(int dim, Coord c, int n_steps, Coord* frame_coords = nullptr) {
  for (int s = 0; s < n_steps; ++s)
    if (!step_coords(dim, c)) return false;
  if (frame_coords) *frame_coords = c;
  return true;
}

// Frame update per step: columns e1' = e1 + e2, e2' = e1 - e2 (2D);
// e1' = e1+e2, e2' = e1+e3, e3' = e2+e3 (3D).
SiteMask::Frame advance_frame(int dim, const SiteMask::Frame& f) {
  SiteMask::Frame g{};
  if (dim == 2) {
    for (int r = 0; r < 2; ++r) {
      g[0][static_cast<size_t>(r)] = f[0][static_cast<size_t>(r)] + f[1][static_cast<size_t>(r)];
      g[1][static_cast<size_t>(r)] = f[0][static_cast<size_t>(r)] - f[1][static_cast<size_t>(r)];
    }
  } else {
    for (int r = 0; r < 3; ++r) {
      g[0][static_cast<size_t>(r)] = f[0][static_cast<size_t>(r)] + f[1][static_cast<size_t>(r)];
      g[1][static_cast<size_t>(r)] = f[0][static_cast<size_t>(r)] + f[2][static_cast<size_t>(r)];
      g[2][static_cast<size_t>(r)] = f[1][static_cast<size_t>(r)] + f[2][static_cast<size_t>(r)];
    }
  }
  return g;
}

int floor_log2(int64_t v) {
  return 63 - std::countl_zero(static_cast<uint64_t>(v));
}

}  // namespace

SiteMask decimation_mask(const LatticeSpec& lattice, int n_steps) {
  if (n_steps < 0) throw std::invalid_argument("decimation_mask: n_steps must be >= 0");
  const int dim = lattice.dimension();
  const int64_t n = lattice.n_sites();

  int min_l = lattice.length(0);
  for (int a = 1; a < dim; ++a) min_l = std::min(min_l, lattice.length(a));
  const int max_steps = floor_log2(min_l) + 1;
  if (n_steps > max_steps || (n_steps >= 63) || (n >> n_steps) << n_steps != n)
    throw std::invalid_argument("decimation_mask: n_steps=" + std::to_string(n_steps) +
                                " too large for lattice size");

  SiteMask mask;
  mask.lattice_ = lattice;
  mask.n_steps_ = n_steps;
  mask.frame_ = {Coord{1, 0, 0}, Coord{0, 1, 0}, Coord{0, 0, 1}};
  for (int s = 0; s < n_steps; ++s) mask.frame_ = advance_frame(dim, mask.frame_);

  mask.retained_.reserve(static_cast<size_t>(n >> n_steps));
  for (int64_t i = 0; i < n; ++i) {
    const Coord c = lattice.coords_of(i);
    if (member_after_steps(dim, c, n_steps)) mask.retained_.push_back(static_cast<int32_t>(i));
    // Membership must not depend on which torus image of the site we test;
    // otherwise the mask is not defined on the periodic lattice.
    for (int a = 0; a < dim; ++a) {
      Coord shifted = c;
      shifted[static_cast<size_t>(a)] += lattice.length(a);
      if (member_after_steps(dim, c, n_steps) != member_after_steps(dim, shifted, n_steps))
        throw std::invalid_argument("decimation_mask: n_steps=" + std::to_string(n_steps) +
                                    " too large for lattice size (mask not periodic)");
    }
  }
  if (mask.retained_count() != (n >> n_steps))
    throw std::invalid_argument("decimation_mask: n_steps=" + std::to_string(n_steps) +
                                " too large for lattice size (retained count mismatch)");
  return mask;
}

std::vector<std::pair<int32_t, Coord>> retained_coordinates(const SiteMask& mask) {
  std::vector<std::pair<int32_t, Coord>> out;
  out.reserve(mask.retained().size());
  const int dim = mask.lattice().dimension();
  for (int32_t idx : mask.retained()) {
    Coord c = mask.lattice().coords_of(idx);
    Coord fc{0, 0, 0};
    const bool ok = member_after_steps(dim, c, mask.n_steps(), &fc);
    (void)ok;  // retained sites survive by construction
    out.emplace_back(idx, fc);
  }
  return out;
}

}  // namespace snaprg
