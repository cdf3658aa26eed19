#pragma once

#include <cstdint>
#include <vector>

#include "snaprg/dataset.hpp"

namespace snaprg {

/// Number of sites at which two equally sized snapshots differ.
int64_t hamming(const Snapshot& a, const Snapshot& b);

struct WfnOptions {
  bool cutoff_inclusive = false;  // connect at D <= R instead of the default D < R
  int block_rows = 256;           // rows per cache block of the pairwise scan
  int threads = 0;                // <= 0: all hardware threads
};

/// Degree data of the wave-function network over a deduplicated dataset.
/// No adjacency is materialized; only nearest-neighbor distances and degrees
/// are kept.
struct WfnResult {
  int64_t n_nodes = 0;
  std::vector<int32_t> r1;      // per-node nearest-neighbor Hamming distance
  uint64_t r1_sum = 0;
  double cutoff = 0.0;          // R = mean(r1), exactly r1_sum / n_nodes
  bool cutoff_inclusive = false;
  std::vector<int64_t> degrees; // per-node edge count under the cutoff rule
};

/// Blocked all-pairs scan: pass 1 collects per-node minima (r1), pass 2
/// counts pairs under the cutoff. Edge test D < R is done in exact integer
/// arithmetic (D * n < sum r1). Deterministic for any thread count.
WfnResult build_wfn(const DedupDataset& unique_set, const WfnOptions& options = {});

/// The degree multiset, in unique-snapshot order.
std::vector<int64_t> degree_samples(const WfnResult& result);

}  // namespace snaprg
