#pragma once

#include <vector>

#include "snaprg/dataset.hpp"
#include "snaprg/lattice.hpp"

namespace snaprg {

/// Projects every snapshot onto the mask's retained sites. The mask must be
/// the (n_steps_applied + 1)-step mask of the dataset's lattice; output bits
/// are ordered by increasing original site index (the reduced lattice's own
/// row-major order on axis-aligned frames). Snapshot count is unchanged:
/// duplicates carry the marginal probability weight.
SnapshotDataset apply_rg(const SnapshotDataset& dataset, const SiteMask& mask,
                         int threads = 0);

/// Datasets at steps 0..n_max (relative to the input's current step), each a
/// one-step projection of the previous.
struct RgFlow {
  std::vector<SnapshotDataset> steps;
};

RgFlow rg_flow(const SnapshotDataset& dataset, int n_max, int threads = 0);

}  // namespace snaprg
