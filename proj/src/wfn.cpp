#include "snaprg/wfn.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>

#include "snaprg/kernels.hpp"
#include "snaprg/parallel.hpp"

namespace snaprg {

int64_t hamming(const Snapshot& a, const Snapshot& b) {
  if (a.n_bits != b.n_bits)
    throw std::invalid_argument("hamming: snapshots have different bit lengths");
  return static_cast<int64_t>(kernels::hamming_words(a.words.data(), b.words.data(), a.words.size()));
}

namespace {

struct BlockTask {
  int64_t i0, i1, j0, j1;  // row ranges; diagonal tasks have i0 == j0
};

// Runs visit(worker, i, j_begin, dists, count) for every unordered pair once,
// with dists[k] = D(i, j_begin + k).
template <typename Visit>
void pairwise_scan(const DedupDataset& uniq, const std::vector<BlockTask>& tasks, int threads,
                   std::vector<std::vector<uint32_t>>& buffers, Visit&& visit) {
  const size_t words = uniq.words_per;
  const uint64_t* base = uniq.words.data();
  const auto fn = kernels::hamming_backend().fn;
  parallel_for_indexed(static_cast<int64_t>(tasks.size()), threads, [&](int w, int64_t t) {
    const BlockTask& task = tasks[static_cast<size_t>(t)];
    auto& buf = buffers[static_cast<size_t>(w)];
    for (int64_t i = task.i0; i < task.i1; ++i) {
      const int64_t jb = task.i0 == task.j0 ? i + 1 : task.j0;
      const int64_t cnt = task.j1 - jb;
      if (cnt <= 0) continue;
      fn(base + static_cast<size_t>(i) * words, base + static_cast<size_t>(jb) * words,
         static_cast<size_t>(cnt), words, buf.data());
      visit(w, i, jb, buf.data(), cnt);
    }
  });
}

}  // namespace

WfnResult build_wfn(const DedupDataset& uniq, const WfnOptions& options) {
  const int64_t n = uniq.n_unique;
  if (n < 2) throw std::invalid_argument("build_wfn: need at least 2 unique snapshots");
  if (options.block_rows < 1) throw std::invalid_argument("build_wfn: block_rows must be >= 1");

  const int64_t block = options.block_rows;
  const int threads = static_cast<int>(std::max<int64_t>(
      1, std::min<int64_t>(resolve_threads(options.threads), (n + block - 1) / block)));
  std::vector<BlockTask> tasks;
  for (int64_t i0 = 0; i0 < n; i0 += block)
    for (int64_t j0 = i0; j0 < n; j0 += block)
      tasks.push_back({i0, std::min(i0 + block, n), j0, std::min(j0 + block, n)});
  std::vector<std::vector<uint32_t>> buffers(static_cast<size_t>(threads),
                                             std::vector<uint32_t>(static_cast<size_t>(block)));

  // Pass 1: per-node nearest-neighbor distances.
  std::vector<std::vector<uint32_t>> r1_local(
      static_cast<size_t>(threads),
      std::vector<uint32_t>(static_cast<size_t>(n), std::numeric_limits<uint32_t>::max()));
  pairwise_scan(uniq, tasks, threads,
                buffers, [&](int w, int64_t i, int64_t jb, const uint32_t* d, int64_t cnt) {
                  auto& r1 = r1_local[static_cast<size_t>(w)];
                  uint32_t best_i = r1[static_cast<size_t>(i)];
                  for (int64_t k = 0; k < cnt; ++k) {
                    best_i = std::min(best_i, d[k]);
                    auto& rj = r1[static_cast<size_t>(jb + k)];
                    rj = std::min(rj, d[k]);
                  }
                  r1[static_cast<size_t>(i)] = best_i;
                });

  WfnResult result;
  result.n_nodes = n;
  result.cutoff_inclusive = options.cutoff_inclusive;
  result.r1.assign(static_cast<size_t>(n), 0);
  for (int64_t i = 0; i < n; ++i) {
    uint32_t best = std::numeric_limits<uint32_t>::max();
    for (int w = 0; w < threads; ++w) best = std::min(best, r1_local[static_cast<size_t>(w)][static_cast<size_t>(i)]);
    result.r1[static_cast<size_t>(i)] = static_cast<int32_t>(best);
    result.r1_sum += best;
  }
  result.cutoff = static_cast<double>(result.r1_sum) / static_cast<double>(n);
  r1_local.clear();
  r1_local.shrink_to_fit();

  // Edge rule in exact integers: D < R  <=>  D <= (sum r1 - 1) / n.
  const uint64_t d_max = options.cutoff_inclusive
                             ? result.r1_sum / static_cast<uint64_t>(n)
                             : (result.r1_sum - 1) / static_cast<uint64_t>(n);

  // Pass 2: threshold counts.
  std::vector<std::vector<int64_t>> deg_local(static_cast<size_t>(threads),
                                              std::vector<int64_t>(static_cast<size_t>(n), 0));
  pairwise_scan(uniq, tasks, threads,
                buffers, [&](int w, int64_t i, int64_t jb, const uint32_t* d, int64_t cnt) {
                  auto& deg = deg_local[static_cast<size_t>(w)];
                  int64_t deg_i = 0;
                  for (int64_t k = 0; k < cnt; ++k) {
                    if (d[k] <= d_max) {
                      ++deg_i;
                      ++deg[static_cast<size_t>(jb + k)];
                    }
                  }
                  deg[static_cast<size_t>(i)] += deg_i;
                });

  result.degrees.assign(static_cast<size_t>(n), 0);
  for (int64_t i = 0; i < n; ++i) {
    int64_t sum = 0;
    for (int w = 0; w < threads; ++w) sum += deg_local[static_cast<size_t>(w)][static_cast<size_t>(i)];
    result.degrees[static_cast<size_t>(i)] = sum;
  }
  return result;
}

std::vector<int64_t> degree_samples(const WfnResult& result) { return result.degrees; }

}  // namespace snaprg
