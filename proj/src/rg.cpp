#include "snaprg/rg.hpp"

#include <stdexcept>
#include <string>

#include "snaprg/kernels.hpp"
#include "snaprg/parallel.hpp"

namespace snaprg {

SnapshotDataset apply_rg(const SnapshotDataset& dataset, const SiteMask& mask, int threads) {
  if (!(mask.lattice() == dataset.lattice()))
    throw std::invalid_argument("apply_rg: mask built for a different lattice");
  if (mask.n_steps() != dataset.n_steps_applied() + 1)
    throw std::invalid_argument("apply_rg: frame mismatch: mask is step " +
                                std::to_string(mask.n_steps()) + ", dataset is at step " +
                                std::to_string(dataset.n_steps_applied()));

  // Bit positions of the surviving sites within the parent's packed order.
  const SiteMask parent = decimation_mask(dataset.lattice(), dataset.n_steps_applied());
  std::vector<int32_t> positions;
  positions.reserve(mask.retained().size());
  {
    const auto& par = parent.retained();
    const auto& sub = mask.retained();
    size_t p = 0;
    for (int32_t site : sub) {
      while (p < par.size() && par[p] < site) ++p;
      if (p == par.size() || par[p] != site)
        throw std::logic_error("apply_rg: retained set is not nested");  // cannot happen
      positions.push_back(static_cast<int32_t>(p));
    }
  }
  const kernels::GatherPlan plan = kernels::make_gather_plan(positions, dataset.n_bits());
  const auto& gather = kernels::gather_backend();

  DatasetMeta meta = dataset.meta();
  SnapshotDataset out(dataset.lattice(), mask.n_steps(), std::move(meta));
  out.resize(dataset.n_snapshots());
  parallel_for(dataset.n_snapshots(), threads, [&](int64_t i) {
    gather.fn(plan, dataset.snapshot(i).data(), out.snapshot_mut(i).data());
  });
  return out;
}

RgFlow rg_flow(const SnapshotDataset& dataset, int n_max, int threads) {
  if (n_max < 0) throw std::invalid_argument("rg_flow: n_max must be >= 0");
  RgFlow flow;
  flow.steps.reserve(static_cast<size_t>(n_max) + 1);
  flow.steps.push_back(dataset);
  for (int k = 1; k <= n_max; ++k) {
    const SiteMask mask =
        decimation_mask(dataset.lattice(), dataset.n_steps_applied() + k);
    flow.steps.push_back(apply_rg(flow.steps.back(), mask, threads));
  }
  return flow;
}

}  // namespace snaprg
